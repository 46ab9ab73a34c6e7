// phases.hpp: dressing function f_p and the phase integrals γ, γ_int
#pragma once

#include <Eigen/Dense>
#include <array>
#include <functional>
#include <string>
#include <vector>

#include "nelson/spectral.hpp"

namespace nelson {

struct VelocityField {
  std::function<Eigen::Vector3d(const Eigen::Vector3d&)> gradE;
  std::string provenance;  // "model" or "coupled"
  Eigen::Vector3d operator()(const Eigen::Vector3d& p) const { return gradE(p); }
};

// ∇E = βp
VelocityField model_velocity(double beta);

// E(ρ) = c0 + c1ρ² + c2ρ⁴ + c3ρ⁶ by least squares; E depends on |p| only by
// rotation invariance, so a ray of solves determines ∇E = E'(|p|) p̂.
struct RadialEnergyFit {
  std::array<double, 4> c{};
  double rms = 0;
  double energy(double rho) const;
  double slope(double rho) const;  // dE/dρ
};
RadialEnergyFit fit_radial_energy(const std::vector<double>& rho, const std::vector<double>& energy);
VelocityField coupled_velocity(const RadialEnergyFit& fit);

struct PhaseSettings {
  double kappa = 1.0;
  double eps0 = 0.1;
  double tol = 1e-9;  // relative, on top of the round-off floor
  int lmax = 40;      // Legendre order of the angular series
  double c0 = 0.6;    // regime tags
  double c1 = 1.4;
};

// f_p(k) = λ χ_κ(k)/√(2|k|) · 1/(|k|(1 − e_k·∇E))
double f_p_eval(const Eigen::Vector3d& k, double lambda, const Eigen::Vector3d& gradE, double kappa = 1.0,
                double eps0 = 0.1);

// Legendre coefficients about `axis` of G_n(c) = ∫dφ α^{-n}, n = 1, 2, where
// α = 1 − e·∇E and c = e·axis.
struct AngularSeries {
  std::vector<double> g1, g2;
};
AngularSeries angular_series(const Eigen::Vector3d& gradE, const Eigen::Vector3d& axis, int lmax);

// Radial moments for one (|x|, t), with A_l(r) = 2(−i)^l e^{irt} j_l(r|x|):
//   qs_l = ∫χ²/(2r) Im A_l,  qc_l = ∫χ² Re A_l,  qm_l = ∫χ²/r (2δ_l0 − Re A_l).
// Panels are at most π/(|t| + |x|) wide with 8 Gauss points; `refine` halves
// them that many times. The abs_* arrays carry ∫|integrand| for round-off floors.
struct RadialMoments {
  double xnorm = 0, t = 0;
  std::vector<double> qs, qc, qm;
  std::vector<double> abs_s, abs_c, abs_m;
  std::size_t nodes = 0;
};
RadialMoments radial_moments(double xnorm, double t, int lmax, double kappa, double eps0, int refine = 0);

struct PhaseValues {
  double gamma = 0, gamma_int = 0, fm2 = 0;  // fm2 = ‖f_p m(t,x)‖₂²
  double err_gamma = 0, err_gamma_int = 0, err_fm2 = 0;
  double floor_gamma = 0, floor_gamma_int = 0, floor_fm2 = 0;  // round-off floors
};

// Evaluates the three integrals for many (∇E, x̂) at a fixed (|x|, t). The
// moments are computed at two resolutions; values come from the finer one and
// the difference is the error estimate. Throws ToleranceNotMet when an error
// exceeds max(tol·|value|, floor).
class PhaseEvaluator {
 public:
  PhaseEvaluator(double xnorm, double t, const PhaseSettings& s = {});
  PhaseValues operator()(const Eigen::Vector3d& xhat, double lambda, const Eigen::Vector3d& gradE) const;
  const RadialMoments& moments() const { return fine_; }

 private:
  PhaseSettings s_;
  RadialMoments coarse_, fine_;
};

PhaseValues phase_values(const Eigen::Vector3d& x, double t, double lambda, const Eigen::Vector3d& gradE,
                         const PhaseSettings& s = {});
double gamma(const Eigen::Vector3d& x, double t, double lambda, const Eigen::Vector3d& gradE,
             const PhaseSettings& s = {});
double gamma_int(const Eigen::Vector3d& x, double t, double lambda, const Eigen::Vector3d& gradE,
                 const PhaseSettings& s = {});

enum class Regime { inside_cone, near_cone, outside_cone };
const char* regime_name(Regime r);

struct PhaseSample {
  Eigen::Vector3d p, x;
  double t = 0;
  double gamma = 0, gamma_int = 0;
  double velocity_ratio = 0;
  Regime regime = Regime::inside_cone;
  double err_est = 0;
  std::string provenance;
};
PhaseSample phase_sample(const Eigen::Vector3d& p, const Eigen::Vector3d& x, double t, double lambda,
                         const VelocityField& v, const PhaseSettings& s = {});

struct DecayFit {
  std::vector<double> t, value, err;
  std::vector<bool> below_noise;  // |γ_int| under its round-off floor
  double slope = 0;
  double stderr_slope = 0;
  double log_coeff = 0;      // coefficient of log log t when requested
  bool noise_bound = false;  // slope is an upper bound through the noise floor
  int points = 0;
};

// |γ_int| along x = t·v for t on the ladder; slope of log|γ_int| against
// log t, optionally with a log log t term. Points below the noise floor are
// reported and left out; if fewer than two remain, the slope of the line
// from the last resolved point to the first floor is returned as a bound.
DecayFit decay_fit(const Eigen::Vector3d& p, const Eigen::Vector3d& velocity, const std::vector<double>& t_ladder,
                   double lambda, const VelocityField& v, bool log_correction, const PhaseSettings& s = {});

struct EnvelopeRow {
  double t = 0;
  Eigen::Vector3d x;
  double fm2 = 0, gamma_abs = 0, dgamma_abs = 0;
  double envelope = 0;  // λ²(1 + log(1 + t + |x|))
};
struct LogEnvelopeReport {
  std::vector<EnvelopeRow> rows;
  std::array<double, 3> first_decade_max{}, last_decade_max{};  // fm2, |γ|, |∂_pγ| ratios
  std::array<bool, 3> bounded{};                                // last ≤ 2 × first
};

// Samples are (x, t) pairs; decades are taken in 1 + t + |x|.
LogEnvelopeReport log_envelope_suite(const Eigen::Vector3d& p, double lambda, const VelocityField& v,
                                     const std::vector<std::pair<Eigen::Vector3d, double>>& samples,
                                     const PhaseSettings& s = {}, double fd_step = 1e-3);

struct FDiffNorms {
  std::array<double, 3> k_diff{};      // ‖k_i(f_{p,σ} − f_p)‖₂
  std::array<double, 3> inner_diff{};  // |⟨f_{p,σ}, k_i f_{p,σ}⟩ − ⟨f_p, k_i f_p⟩|
};
FDiffNorms f_diff_norms(double lambda, double sigma, const Eigen::Vector3d& gradE_sigma,
                        const Eigen::Vector3d& gradE_zero, double kappa = 1.0, double eps0 = 0.1);

}  // namespace nelson
