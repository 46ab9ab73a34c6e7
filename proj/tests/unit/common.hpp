// common.hpp: small grids shared by the unit tests
#pragma once

#include <random>

#include "nelson/fock.hpp"
#include "nelson/modegrid.hpp"

namespace testing {

// Two log panels times two equatorial directions: 4 modes.
inline nelson::GridPtr grid4() {
  nelson::RadialSpec r;
  r.spacing = "log";
  r.count = 2;
  r.rmin = 0.2;
  nelson::AngularSpec a;
  a.product = 1;
  return nelson::build_grid(r, a, 0.0);
}

// Dyadic panels from 0.2: 4 panels times 6 axis directions, 24 modes.
inline nelson::GridPtr grid24() {
  nelson::RadialSpec r;
  r.rmin = 0.2;
  r.count = 4;
  return nelson::build_grid(r, nelson::AngularSpec{}, 0.0);
}

inline nelson::CVec random_vector(std::size_t n, std::uint64_t seed, double scale = 1.0) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> g;
  nelson::CVec v(n);
  for (auto& x : v) x = scale * nelson::cplx(g(rng), g(rng));
  return v;
}

}  // namespace testing
