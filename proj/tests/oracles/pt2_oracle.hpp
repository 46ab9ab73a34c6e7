// pt2_oracle.hpp: second-order perturbation energy of the fiber ground state
#pragma once

#include "nelson/hamiltonian.hpp"

namespace oracle {

// Rayleigh–Schrödinger second order over one-photon intermediate states:
// p²/2 − Σ|v_i|²/(|k_i| + |k_i|²/2 − p·k_i).
inline double pt2_energy(const Eigen::Vector3d& p, const nelson::GridPtr& g, double lambda) {
  const auto v = nelson::form_factor(g, lambda);
  double e = 0.5 * p.squaredNorm();
  for (std::size_t i = 0; i < g->mode_count(); ++i) {
    const auto& m = g->modes[i];
    e -= std::norm(v.values[i]) / (m.r + 0.5 * m.r * m.r - p.dot(m.k));
  }
  return e;
}

}  // namespace oracle
