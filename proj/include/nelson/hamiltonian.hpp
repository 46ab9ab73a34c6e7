// hamiltonian.hpp: fiber Hamiltonians H_{p,σ} and their dressed normal form
#pragma once

#include <Eigen/Dense>

#include "nelson/fock.hpp"
#include "nelson/modegrid.hpp"

namespace nelson {

struct DressingData {
  GridPtr grid;
  Eigen::Vector3d p = Eigen::Vector3d::Zero();
  Eigen::Vector3d gradE = Eigen::Vector3d::Zero();
  double lambda = 0;
  double sigma_cut = 0;
  ModeFunction f;        // f_{p,σ} = v^σ/(|k| α)
  Eigen::VectorXd alpha;  // α(e_k) = 1 − e_k·∇E per mode
  double c_scalar = 0;   // ½p² − ½(p−∇E)² − Σ_i |v_i|²/(|k_i| α_i)
};

// ½(p − P_f)² + H_f + a*(v^σ) + a(v^σ), sparse.
FiberOperator assemble_fiber(const Eigen::Vector3d& p, const GridPtr& grid, double lambda, const BasisPtr& basis,
                             double sigma_cut = -1.0);

DressingData dressing_data(const Eigen::Vector3d& p, const GridPtr& grid, double lambda,
                           const Eigen::Vector3d& gradE, double sigma_cut = -1.0);

// ½Γ² + dΓ(α|k|) + c with Γ_i = ∇E_i − p_i + P_{f,i} − a*(k_i f) − a(k_i f) + ⟨f, k_i f⟩.
// Matrix-free. Γ² is compressed exactly onto the truncated space: the part of
// Γψ pushed above the cap comes back through a(k_i f), which adds
// (a*(k_i f) a(k_i f) + ‖k_i f‖²) on the top sector.
FiberOperator assemble_dressed(const DressingData& d, const BasisPtr& basis);

// Dense W(f) H W(f)* with W applied column by column. Small bases only.
FiberOperator conjugation_oracle(const Eigen::Vector3d& p, const GridPtr& grid, double lambda,
                                 const Eigen::Vector3d& gradE, const BasisPtr& basis, double sigma_cut = -1.0,
                                 std::size_t dim_cap = 500);

// Per-state eigenvalue of P_f.
Eigen::Matrix<double, Eigen::Dynamic, 3> field_momentum_diagonal(const FockBasis& b, const ModeGrid& grid);

// ⟨φ, P_f φ⟩
Eigen::Vector3d expect_field_momentum(const FockBasis& b, const ModeGrid& grid, const CVec& phi);

// Per-state eigenvalue of H_f.
Eigen::VectorXd field_energy_diagonal(const FockBasis& b, const ModeGrid& grid);

}  // namespace nelson
