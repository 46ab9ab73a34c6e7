// wavepacket.hpp: infraparticle integrand, Cook profile and packet studies
#pragma once

#include <Eigen/Dense>
#include <functional>
#include <string>
#include <vector>

#include "nelson/phases.hpp"
#include "nelson/spectral.hpp"

namespace nelson {

// C∞ radial bump exp(1 − 1/(1 − s²)) for s = |p − center|/radius < 1.
double bump(double s);

struct PacketConfig {
  GridPtr grid;
  BasisPtr basis;
  double lambda = 0.1;
  double sigma_cut = -1;
  double h_radius = 0.25;
  Eigen::Vector3d h_center = Eigen::Vector3d::Zero();
  // spherical: Gauss radial nodes times a sphere rule, with the factor
  //            e^{i(p·x − E t)} h integrated exactly against the interpolant
  // tensor:    Gauss product rule on the cube around supp h, masked by h
  std::string p_rule = "spherical";
  int p_radial = 6;
  int p_angular = 14;
  int p_tensor = 12;
  int x_angular = 6;
  double x_extent_factor = 2.1;  // radial x range max(factor·|t|, x_min_extent)
  double x_min_extent = 60;
  double x_tol = 1e-2;  // relative, adaptive Gauss–Kronrod 7-15 in |x|
  int x_max_intervals = 32;
  std::string phase_source = "continuum";  // or "grid"
  PhaseSettings phase;
  SolveOptions solve;
  double weyl_tol = 0.5;  // tail tolerance per Weyl application
  double gamma_lambda = -1;  // ≥ 0 evaluates γ at this coupling instead (frozen-phase scaling tests)
};

struct PNode {
  Eigen::Vector3d p;
  double weight = 0;  // quadrature weight (spherical: sphere weight only)
  int radial = 0, angular = 0;
};
std::vector<PNode> p_nodes(const PacketConfig& cfg);

struct PacketState {
  Eigen::Vector3d p;
  double energy = 0;
  Eigen::Vector3d gradE;
  CVec phi;
  CVec f;  // grid amplitudes of f_{p,σ}
};

struct GroundStates {
  double lambda = 0;
  std::vector<PNode> nodes;
  std::vector<PacketState> states;  // one per node
  RadialEnergyFit fit;              // E(ρ) over the radial nodes
  int solved = 0;                   // solves actually run (orbit representatives)
};

using RecordSource = std::function<GroundStateRecord(const Eigen::Vector3d& p, double lambda)>;

// Solves the orbit representatives under the cubic group (when the grid and
// the p nodes allow it) and fills the orbits by mode permutations.
GroundStates prepare_ground_states(const PacketConfig& cfg, const RecordSource& source);

enum class IntegrandMode { psi, dpsi };

struct XSample {
  double r = 0;
  int direction = 0;  // orbit representative index
  double norm2 = 0;   // ‖F(x)‖² without the (2π)^{-3/2}
  double tail = 0;    // truncation tail of the Weyl applications, weighted
};

struct PacketField {
  double t = 0;
  IntegrandMode mode = IntegrandMode::psi;
  std::vector<XSample> samples;
  double norm = 0;         // (2π)^{-3/2} ‖F‖_{L²(dx)}
  double x_error = 0;      // Gauss–Kronrod estimate on norm
  double extent_tail = 0;  // contribution beyond the x range, on norm
  double max_tail = 0;     // largest truncation tail
  double phase_error = 0;  // largest phase quadrature estimate
  double extent = 0;
};

// F(x) = Σ_nodes Ŵ(x,t) e^{iγ} W(f_p m(t,x)) φ_p [· iγ_int], the bracket of
// the integrand without the (2π)^{-3/2}.
CVec packet_vector(const PacketConfig& cfg, const GroundStates& gs, const Eigen::Vector3d& x, double t,
                   IntegrandMode mode, double* tail = nullptr, double* phase_err = nullptr);

// ‖F‖_{L²} over |x| ≤ extent with an adaptive radial rule and a sphere rule
// reduced to cubic orbit representatives.
PacketField assemble_integrand(const PacketConfig& cfg, const GroundStates& gs, double t, IntegrandMode mode);

struct CookProfile {
  std::vector<PacketField> fields;
  SlopeFit fit;
  double ladder_integral = 0;  // trapezoid over the ladder
  double tail_integral = 0;    // ∫_{t_max}^∞ of the fitted power law (∞ if slope ≥ −1)
  double total = 0;
};
CookProfile cook_profile(const PacketConfig& cfg, const GroundStates& gs, const std::vector<double>& t_ladder);

struct NontrivialityRow {
  double lambda = 0;
  double D = 0;            // ‖ψ_0 − (F^{-1}h)Ω‖_{L²(Δ)}
  double ratio = 0;        // D/λ^{1/4}
  double free_norm = 0;    // ‖F^{-1}h‖_{L²(Δ)} on the packet quadrature
  double free_oracle = 0;  // same from the 1-D radial integral
  double tail = NAN;       // Cook integral, if requested
  double lower_bound = NAN;
};

// ψ_{t=0} against (F^{-1}h)Ω on the ball |x| ≤ delta_radius. The Cook integral
// is computed only for λ in `tail_lambdas`, on `tail_ladder`.
std::vector<NontrivialityRow> nontriviality_study(const PacketConfig& cfg,
                                                  const std::vector<GroundStates>& per_lambda,
                                                  double delta_radius, const std::vector<double>& tail_lambdas,
                                                  const std::vector<double>& tail_ladder);

// ‖F^{-1}h‖ on |x| ≤ R for the radial bump, by 1-D quadrature.
double free_packet_norm(double h_radius, double R);

struct DomainIdentity {
  double residual = 0;  // ‖LHS − RHS‖/‖RHS‖
  double lhs_norm = 0, rhs_norm = 0;
};

// (−i∂_{x_i} − P_{f,i})² Ψ_t(x) by central differences with `step` against the
// directly assembled Σ Ŵ e^{iγ} W(f_p m)(p_i − P^w_{f,i})² φ_p.
DomainIdentity domain_identity_check(const PacketConfig& cfg, const GroundStates& gs, double t,
                                     const Eigen::Vector3d& x, int component, double step);

struct StationaryRow {
  double t = 0;
  double sup_abs = 0;     // sup_x |u(x,t)|
  double inside_l2 = 0;   // ∫_{|x|≤c0 t} |u|²
  double outside_l2 = 0;  // ∫_{|x|>c0 t} |u|²
};
struct StationaryReport {
  std::vector<StationaryRow> rows;
  SlopeFit sup_fit, outside_fit;
  double inside_max_ratio = 0;  // max/min of inside_l2 over the ladder
  int outside_points = 0;       // above the round-off floor
};

// u(x,t) = (2π)^{-3/2} ∫d³p e^{i(p·x − E(|p|)t)} g(|p|) for the bump g of
// radius h_radius; radial reduction with j_0.
StationaryReport stationary_envelope_check(const std::function<double(double)>& energy,
                                           const std::function<double(double)>& slope, double h_radius,
                                           const std::vector<double>& t_ladder, double c0);

}  // namespace nelson
