// test_modegrid.cpp: grid construction, cutoff, form factors
#include <doctest.h>

#include "nelson/errors.hpp"
#include "nelson/modegrid.hpp"
#include "oracles/phase_oracle.hpp"

using namespace nelson;

namespace {

// 4π ∫_a^b χ(r)² r^n dr by adaptive Gauss–Kronrod.
double radial_oracle(double a, double b, double n, double kappa = 1, double eps0 = 0.1) {
  oracle::Integrator I;
  const double knee = (1 - eps0) * kappa;
  auto f = [&](double r) { return std::pow(cutoff_chi(r, kappa, eps0), 2) * std::pow(r, n); };
  double acc = 0;
  if (a < knee) acc += I.qag(f, a, std::min(b, knee), 0, 1e-13);
  if (b > knee) acc += I.qag(f, std::max(a, knee), b, 0, 1e-13);
  return 4 * M_PI * acc;
}

GridPtr gauss_grid(double sigma, int count = 24) {
  RadialSpec r;
  r.spacing = "gauss";
  r.count = count;
  r.shoulder_panels = 4;
  AngularSpec a;
  a.order = 14;
  return build_grid(r, a, sigma);
}

}  // namespace

TEST_CASE("default dyadic grid has 48 modes on eight panels") {
  const auto g = build_grid(GridSpec{});
  CHECK(g->mode_count() == 48);
  const std::vector<double> edges = {0.0125, 0.025, 0.05, 0.1, 0.2, 0.4, 0.8, 0.9, 1.0};
  REQUIRE(g->radial_edges.size() == edges.size());
  for (std::size_t i = 0; i < edges.size(); ++i) CHECK(g->radial_edges[i] == doctest::Approx(edges[i]));
  for (const auto& m : g->modes) CHECK(m.r > 0);
}

TEST_CASE("log spacing with 8 nodes and 6 directions gives 48 modes") {
  RadialSpec r;
  r.spacing = "log";
  r.count = 8;
  const auto g = build_grid(r, AngularSpec{}, 0.01);
  CHECK(g->mode_count() == 48);
}

TEST_CASE("grid rejects sigma at or above kappa") {
  CHECK_THROWS_AS(build_grid(RadialSpec{}, AngularSpec{}, 1.0), ConfigError);
}

TEST_CASE("cutoff is one on the core, zero beyond kappa, monotone on the shoulder") {
  CHECK(cutoff_chi(0.0) == 1.0);
  CHECK(cutoff_chi(0.9) == 1.0);
  CHECK(cutoff_chi(1.0) == 0.0);
  const double mid = cutoff_chi(0.95);
  CHECK(mid > 0);
  CHECK(mid < 1);
  double prev = 1;
  for (int i = 0; i <= 200; ++i) {
    const double v = cutoff_chi(0.9 + 0.1 * i / 200);
    CHECK(v <= prev);
    prev = v;
  }
  // all derivatives vanish at the knee: deviation below any power of the offset
  CHECK(1 - cutoff_chi(0.9 + 1e-3) < 1e-30);
}

TEST_CASE("form factor norm matches the radial oracle") {
  const double lambda = 0.3, sigma = 0.05;
  const auto g = gauss_grid(sigma);
  const auto v = form_factor(g, lambda);
  const double ref = lambda * lambda * radial_oracle(sigma, 1.0, 1.0) / 2;
  CHECK(std::abs(v.values.squaredNorm() - ref) / ref < 1e-8);
  CHECK(form_factor(g, 0.0).values.norm() == 0);
}

TEST_CASE("modes below the cutoff vanish in the form factor") {
  const auto g = build_grid(GridSpec{});
  const auto v = form_factor(g, 0.1, 0.05);
  for (std::size_t i = 0; i < g->mode_count(); ++i)
    if (g->modes[i].r < 0.05) CHECK(v.values[i] == cplx(0));
    else CHECK(std::abs(v.values[i]) > 0);
}

TEST_CASE("omega norm") {
  const auto g = gauss_grid(0.05);
  ModeFunction z{g, Eigen::VectorXcd::Zero(g->mode_count())};
  CHECK(omega_norm(z) == 0);
  const auto v = form_factor(g, 0.3);
  // ‖(1 + r^{-1/2}) v‖² = λ²/2 · 4π∫χ² r (1 + r^{-1/2})² dr
  oracle::Integrator I;
  auto f = [&](double r) { return std::pow(cutoff_chi(r) * (1 + 1 / std::sqrt(r)), 2) * r; };
  const double ref = 0.09 / 2 * 4 * M_PI * (I.qag(f, 0.05, 0.9, 0, 1e-13) + I.qag(f, 0.9, 1.0, 0, 1e-13));
  CHECK(std::abs(omega_norm(v) - std::sqrt(ref)) / std::sqrt(ref) < 1e-8);
  // one mode at |k| = 1 carrying value 1·√w
  const auto d = build_grid(GridSpec{});
  ModeFunction one{d, Eigen::VectorXcd::Zero(d->mode_count())};
  int last = 0;
  for (std::size_t i = 0; i < d->mode_count(); ++i)
    if (d->modes[i].r > d->modes[last].r) last = static_cast<int>(i);
  one.values[last] = std::sqrt(d->modes[last].weight);
  const double w = d->modes[last].weight, r = d->modes[last].r;
  CHECK(omega_norm(one) == doctest::Approx(std::sqrt(w) * (1 + 1 / std::sqrt(r))));
}

TEST_CASE("chi^2/(2|k|) integral converges to the oracle") {
  const auto g = gauss_grid(0.0, 32);
  double acc = 0;
  for (const auto& m : g->modes) acc += m.weight * std::pow(cutoff_chi(m.r), 2) / (2 * m.r);
  const double ref = radial_oracle(0, 1, 1) / 2;
  CHECK(std::abs(acc - ref) / ref < 1e-8);
}

TEST_CASE("angular rule has inversion symmetry and cubic permutations") {
  const auto g = build_grid(GridSpec{});
  for (std::size_t i = 0; i < g->angular.size(); ++i) {
    const int j = find_node(g->angular, -g->angular.nodes[i]);
    REQUIRE(j >= 0);
    CHECK(g->angular.weights[j] == doctest::Approx(g->angular.weights[i]));
  }
  for (const auto& R : cubic_group()) {
    const auto perm = g->permutation(R);
    REQUIRE(perm.size() == g->mode_count());
    for (std::size_t i = 0; i < perm.size(); ++i) CHECK((g->modes[perm[i]].k - R * g->modes[i].k).norm() < 1e-12);
  }
}

TEST_CASE("grid hash is stable and sensitive") {
  GridSpec a, b;
  CHECK(a.hash() == b.hash());
  b.sigma = 0.05;
  CHECK(a.hash() != b.hash());
  CHECK(a.hash().size() == 16);
}
