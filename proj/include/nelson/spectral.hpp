// spectral.hpp: ground states, energy landscape, σ-scaling and envelope checks
#pragma once

#include <Eigen/Dense>
#include <array>
#include <optional>
#include <string>
#include <vector>

#include "nelson/fock.hpp"
#include "nelson/hamiltonian.hpp"

namespace nelson {

struct Eigenpair {
  double energy = 0;
  CVec phi;
  double residual = 0;
  int iterations = 0;
};

enum class EigenMethod { automatic, lanczos, davidson };

// Lowest eigenpair. Lanczos uses full reorthogonalization and explicit
// restarts; Davidson preconditions with the operator diagonal and needs far
// fewer products when the spectral gap is small against the spectral width.
// automatic picks Davidson whenever a diagonal is available. Start vector in
// both cases: Ω plus a small deterministic perturbation.
Eigenpair ground_state(const FiberOperator& op, double tol = 1e-9, int max_iter = 4000,
                       EigenMethod method = EigenMethod::automatic);

// Reference solver on the dense matrix.
Eigenpair dense_ground_state(const FiberOperator& op);

// Make ⟨Ω, φ⟩ real and non-negative; if |⟨Ω, φ⟩| < 1e-12 the largest
// component is made real and positive instead.
void fix_phase(CVec& phi);

struct GroundStateRecord {
  Eigen::Vector3d p = Eigen::Vector3d::Zero();
  double sigma = 0;
  double lambda = 0;
  std::string grid_hash;
  std::string basis_hash;
  int n_max = 0;
  double energy = 0;            // dressed ground energy
  double energy_undressed = 0;  // ground energy of H_{p,σ}
  Eigen::Vector3d gradE = Eigen::Vector3d::Zero();     // finite differences
  Eigen::Vector3d gradE_hf = Eigen::Vector3d::Zero();  // p − ⟨φ̃, P_f φ̃⟩
  Eigen::Matrix3d hessian = Eigen::Matrix3d::Zero();
  CVec phi;  // dressed ground state, phase fixed
  double residual = 0;
  int iterations = 0;  // self-consistency sweeps
};

struct SolveOptions {
  double tol = 1e-9;       // Lanczos residual
  double fd_step = 1e-3;   // gradient step
  double hess_step = 5e-3;
  double grad_tol = 1e-7;  // fixed-point tolerance on ∇E
  int max_iter = 8;
  double sigma_cut = -1;   // < 0: grid σ
  bool hessian = false;
};

// Undressed solve: E and Hellmann–Feynman gradient.
struct UndressedResult {
  double energy = 0;
  Eigen::Vector3d gradE_hf = Eigen::Vector3d::Zero();
  CVec phi;
  double residual = 0;
};
UndressedResult undressed_ground_state(const Eigen::Vector3d& p, const GridPtr& grid, double lambda,
                                       const BasisPtr& basis, double sigma_cut = -1, double tol = 1e-9);

// Dressed ground state for a prescribed ∇E.
Eigenpair dressed_ground_state(const Eigen::Vector3d& p, const GridPtr& grid, double lambda,
                               const Eigen::Vector3d& gradE, const BasisPtr& basis, double sigma_cut = -1,
                               double tol = 1e-9);

// Fixed point of ∇E ← FD gradient of the dressed ground energy, started from
// the Hellmann–Feynman gradient of the undressed problem.
GroundStateRecord self_consistent_dressed(const Eigen::Vector3d& p, const GridPtr& grid, double lambda,
                                          const BasisPtr& basis, const SolveOptions& opt = {});

struct LandscapeRow {
  Eigen::Vector3d p;
  double energy = 0;
  Eigen::Vector3d grad_fd, grad_hf;
  Eigen::Matrix3d hessian;
  double min_hessian_eig = 0;
};

struct Landscape {
  std::vector<LandscapeRow> rows;
  double max_grad = 0;
  double min_hessian_eig = 0;
  double max_hf_fd_reldiff = 0;
};

Landscape energy_landscape(const std::vector<Eigen::Vector3d>& samples, const GridPtr& grid, double lambda,
                           const BasisPtr& basis, double sigma_cut = -1, double fd_step = 1e-3,
                           double hess_step = 5e-3, int threads = 1);

struct SlopeFit {
  double slope = 0;
  double intercept = 0;
  double stderr_slope = 0;
  double residual = 0;  // rms of log residuals
  int points = 0;
};

// Least squares of log y on log x over entries with y > 0.
SlopeFit fit_loglog(const std::vector<double>& x, const std::vector<double>& y);

struct ScalingRow {
  double sigma = 0;
  double dE = 0;
  double dgrad = 0;
  double dphi = 0;          // raw ‖φ − φ_σ‖
  double dphi_aligned = 0;  // min over phases
  std::array<double, 3> hf{};  // ‖H_f^ℓ(φ − φ_σ)‖ aligned, ℓ = 0,1,2
};

struct ScalingReport {
  std::vector<double> ladder;
  double sigma_ref = 0;
  std::vector<ScalingRow> rows;
  SlopeFit energy, gradient, vector, vector_aligned;
  std::array<SlopeFit, 3> hf;
  std::vector<GroundStateRecord> records;  // ladder order, reference last
};

// All solves share the grid (built at or below σ_ref) and differ only in the
// form-factor cutoff, so every φ_σ lives on the same Fock space.
ScalingReport sigma_scaling_study(const Eigen::Vector3d& p, double lambda, const std::vector<double>& ladder,
                                  double sigma_ref, const GridPtr& grid, const BasisPtr& basis,
                                  const SolveOptions& opt = {});

struct EnvelopeReport {
  std::array<double, 4> max_ratio{};  // n = 0..3 (entry 0 unused); envelope constant 1
  double fitted_c = 0;                // n = 1 value
  double vacuum_distance = 0;         // ‖φ − Ω‖
};

// Divides the n-photon wavefunction of φ by (1/√n!) Π λ χ_{[σ,κ*)}(k_i)/|k_i|^{3/2}.
EnvelopeReport wavefunction_envelope_check(const GroundStateRecord& rec, const GridPtr& grid,
                                           const BasisPtr& basis);

}  // namespace nelson
