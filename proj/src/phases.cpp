// phases.cpp: Legendre–Bessel evaluation of γ, γ_int and ‖f_p m‖²
#include "nelson/phases.hpp"

#include <fmt/format.h>

#include <cmath>
#include <limits>

#include "nelson/bessel.hpp"
#include "nelson/errors.hpp"
#include "nelson/quadrature.hpp"

namespace nelson {

namespace {
constexpr double kEps = std::numeric_limits<double>::epsilon();
constexpr double kPi = 3.14159265358979323846;
}  // namespace

VelocityField model_velocity(double beta) {
  return {[beta](const Eigen::Vector3d& p) -> Eigen::Vector3d { return beta * p; }, "model"};
}

double RadialEnergyFit::energy(double rho) const {
  const double r2 = rho * rho;
  return c[0] + r2 * (c[1] + r2 * (c[2] + r2 * c[3]));
}

double RadialEnergyFit::slope(double rho) const {
  const double r2 = rho * rho;
  return rho * (2 * c[1] + r2 * (4 * c[2] + r2 * 6 * c[3]));
}

RadialEnergyFit fit_radial_energy(const std::vector<double>& rho, const std::vector<double>& energy) {
  if (rho.size() != energy.size() || rho.empty()) throw ConfigError("fit_radial_energy: mismatched samples");
  const int terms = static_cast<int>(std::min<std::size_t>(4, rho.size()));
  Eigen::MatrixXd A(rho.size(), terms);
  Eigen::VectorXd b(rho.size());
  for (std::size_t i = 0; i < rho.size(); ++i) {
    double v = 1;
    for (int j = 0; j < terms; ++j, v *= rho[i] * rho[i]) A(i, j) = v;
    b[i] = energy[i];
  }
  const Eigen::VectorXd c = A.colPivHouseholderQr().solve(b);
  RadialEnergyFit f;
  for (int j = 0; j < terms; ++j) f.c[j] = c[j];
  f.rms = std::sqrt((A * c - b).squaredNorm() / rho.size());
  return f;
}

VelocityField coupled_velocity(const RadialEnergyFit& fit) {
  return {[fit](const Eigen::Vector3d& p) -> Eigen::Vector3d {
            const double r2 = p.squaredNorm();
            return (2 * fit.c[1] + r2 * (4 * fit.c[2] + r2 * 6 * fit.c[3])) * p;
          },
          "coupled"};
}

double f_p_eval(const Eigen::Vector3d& k, double lambda, const Eigen::Vector3d& gradE, double kappa, double eps0) {
  const double r = k.norm();
  return lambda * cutoff_chi(r, kappa, eps0) / std::sqrt(2 * r) / (r - k.dot(gradE));
}

AngularSeries angular_series(const Eigen::Vector3d& gradE, const Eigen::Vector3d& axis, int lmax) {
  const double gpar = gradE.dot(axis);
  const double gperp = (gradE - gpar * axis).norm();
  static const Rule1D rule = gauss_legendre(64, -1, 1);
  AngularSeries s;
  s.g1.assign(lmax + 1, 0.0);
  s.g2.assign(lmax + 1, 0.0);
  std::vector<double> P(lmax + 1);
  for (std::size_t i = 0; i < rule.size(); ++i) {
    const double c = rule.x[i];
    const double a = 1 - c * gpar, b = std::sqrt(std::max(0.0, 1 - c * c)) * gperp;
    const double d = a * a - b * b;
    const double G1 = 2 * kPi / std::sqrt(d), G2 = 2 * kPi * a / (d * std::sqrt(d));
    legendre_values(lmax, c, P.data());
    for (int l = 0; l <= lmax; ++l) {
      s.g1[l] += rule.w[i] * G1 * P[l];
      s.g2[l] += rule.w[i] * G2 * P[l];
    }
  }
  for (int l = 0; l <= lmax; ++l) {
    s.g1[l] *= (2 * l + 1) / 2.0;
    s.g2[l] *= (2 * l + 1) / 2.0;
  }
  return s;
}

RadialMoments radial_moments(double xnorm, double t, int lmax, double kappa, double eps0, int refine) {
  RadialMoments m;
  m.xnorm = xnorm;
  m.t = t;
  const int L = xnorm > 0 ? lmax : 0;
  for (auto* v : {&m.qs, &m.qc, &m.qm, &m.abs_s, &m.abs_c, &m.abs_m}) v->assign(lmax + 1, 0.0);
  const double omega = std::abs(t) + xnorm;
  const double wave = omega > 0 ? kPi / omega : INFINITY;
  const double scale = std::ldexp(1.0, -refine);
  const double knee = (1 - eps0) * kappa;
  auto edges = uniform_edges(0, knee, std::min(wave, 0.05 * kappa) * scale);
  const auto shoulder = uniform_edges(knee, kappa, std::min(wave, 0.005 * kappa) * scale);
  edges.insert(edges.end(), shoulder.begin() + 1, shoulder.end());
  const Rule1D rule = composite_gauss(edges, 8);
  m.nodes = rule.size();
  std::vector<double> jl(L + 1);
  for (std::size_t i = 0; i < rule.size(); ++i) {
    const double r = rule.x[i], w = rule.w[i];
    const double chi = cutoff_chi(r, kappa, eps0);
    const double c2 = w * chi * chi;
    if (c2 == 0) continue;
    spherical_bessel(L, r * xnorm, jl.data());
    const double co = std::cos(r * t), si = std::sin(r * t);
    for (int l = 0; l <= L; ++l) {
      double re, im;
      switch (l & 3) {
        case 0: re = co, im = si; break;
        case 1: re = si, im = -co; break;
        case 2: re = -co, im = -si; break;
        default: re = -si, im = co; break;
      }
      re *= 2 * jl[l];
      im *= 2 * jl[l];
      const double s = c2 / (2 * r) * im, c = c2 * re, q = c2 / r * ((l == 0 ? 2.0 : 0.0) - re);
      m.qs[l] += s;
      m.qc[l] += c;
      m.qm[l] += q;
      m.abs_s[l] += std::abs(s);
      m.abs_c[l] += std::abs(c);
      m.abs_m[l] += l == 0 ? c2 / r * (2 + std::abs(re)) : std::abs(q);
    }
  }
  return m;
}

PhaseEvaluator::PhaseEvaluator(double xnorm, double t, const PhaseSettings& s)
    : s_(s),
      coarse_(radial_moments(xnorm, t, s.lmax, s.kappa, s.eps0, 0)),
      fine_(radial_moments(xnorm, t, s.lmax, s.kappa, s.eps0, 1)) {}

PhaseValues PhaseEvaluator::operator()(const Eigen::Vector3d& xhat, double lambda,
                                       const Eigen::Vector3d& gradE) const {
  if (gradE.norm() > 0.5) throw GradientBound(fmt::format("phases: |gradE| = {:.6f} > 1/2", gradE.norm()));
  const Eigen::Vector3d axis = fine_.xnorm > 0 ? Eigen::Vector3d(xhat.normalized()) : Eigen::Vector3d::UnitZ();
  const auto a = angular_series(gradE, axis, s_.lmax);
  const int L = fine_.xnorm > 0 ? s_.lmax : 0;
  const double l2 = lambda * lambda;
  PhaseValues v;
  double cg = 0, cgi = 0, cfm = 0;
  for (int l = 0; l <= L; ++l) {
    v.gamma += a.g2[l] * fine_.qs[l];
    v.gamma_int += a.g1[l] * fine_.qc[l];
    v.fm2 += a.g2[l] * fine_.qm[l];
    cg += a.g2[l] * coarse_.qs[l];
    cgi += a.g1[l] * coarse_.qc[l];
    cfm += a.g2[l] * coarse_.qm[l];
    v.floor_gamma += std::abs(a.g2[l]) * fine_.abs_s[l];
    v.floor_gamma_int += std::abs(a.g1[l]) * fine_.abs_c[l];
    v.floor_fm2 += std::abs(a.g2[l]) * fine_.abs_m[l];
  }
  const double f = 1e4 * kEps * l2;  // Bessel recurrences lose up to ~1e-13 relative
  v.err_gamma = l2 * std::abs(v.gamma - cg);
  v.err_gamma_int = l2 * std::abs(v.gamma_int - cgi);
  v.err_fm2 = l2 * std::abs(v.fm2 - cfm);
  v.gamma *= l2;
  v.gamma_int *= l2;
  v.fm2 *= l2;
  v.floor_gamma *= f;
  v.floor_gamma_int *= f;
  v.floor_fm2 *= f;
  auto check = [&](const char* what, double val, double err, double floor) {
    if (err > std::max(s_.tol * std::abs(val), floor))
      throw ToleranceNotMet(fmt::format("{} at |x| = {}, t = {}: error {:.3e} for value {:.6e}", what, fine_.xnorm,
                                        fine_.t, err, val),
                            err);
  };
  check("gamma", v.gamma, v.err_gamma, v.floor_gamma);
  check("gamma_int", v.gamma_int, v.err_gamma_int, v.floor_gamma_int);
  check("fm2", v.fm2, v.err_fm2, v.floor_fm2);
  return v;
}

PhaseValues phase_values(const Eigen::Vector3d& x, double t, double lambda, const Eigen::Vector3d& gradE,
                         const PhaseSettings& s) {
  return PhaseEvaluator(x.norm(), t, s)(x, lambda, gradE);
}

double gamma(const Eigen::Vector3d& x, double t, double lambda, const Eigen::Vector3d& gradE,
             const PhaseSettings& s) {
  return phase_values(x, t, lambda, gradE, s).gamma;
}

double gamma_int(const Eigen::Vector3d& x, double t, double lambda, const Eigen::Vector3d& gradE,
                 const PhaseSettings& s) {
  return phase_values(x, t, lambda, gradE, s).gamma_int;
}

const char* regime_name(Regime r) {
  switch (r) {
    case Regime::inside_cone: return "inside_cone";
    case Regime::near_cone: return "near_cone";
    default: return "outside_cone";
  }
}

PhaseSample phase_sample(const Eigen::Vector3d& p, const Eigen::Vector3d& x, double t, double lambda,
                         const VelocityField& v, const PhaseSettings& s) {
  PhaseSample out;
  out.p = p;
  out.x = x;
  out.t = t;
  out.provenance = v.provenance;
  const auto val = phase_values(x, t, lambda, v(p), s);
  out.gamma = val.gamma;
  out.gamma_int = val.gamma_int;
  out.err_est = std::max(val.err_gamma, val.err_gamma_int);
  out.velocity_ratio = t != 0 ? x.norm() / std::abs(t) : INFINITY;
  out.regime = out.velocity_ratio <= s.c0 ? Regime::inside_cone
               : out.velocity_ratio >= s.c1 ? Regime::outside_cone
                                            : Regime::near_cone;
  return out;
}

DecayFit decay_fit(const Eigen::Vector3d& p, const Eigen::Vector3d& velocity, const std::vector<double>& t_ladder,
                   double lambda, const VelocityField& v, bool log_correction, const PhaseSettings& s) {
  if (t_ladder.size() < 4) throw ConfigError("decay_fit: need at least four times");
  DecayFit fit;
  const Eigen::Vector3d g = v(p);
  PhaseSettings loose = s;
  loose.tol = INFINITY;  // tiny values are judged against the noise floor below
  for (double t : t_ladder) {
    const Eigen::Vector3d x = t * velocity;
    const auto val = PhaseEvaluator(x.norm(), t, loose)(x, lambda, g);
    const double noise = std::max(val.err_gamma_int, val.floor_gamma_int);
    fit.t.push_back(t);
    fit.value.push_back(std::abs(val.gamma_int));
    fit.err.push_back(noise);
    fit.below_noise.push_back(std::abs(val.gamma_int) <= noise);
  }
  std::vector<double> lt, ly;
  for (std::size_t i = 0; i < fit.t.size(); ++i)
    if (!fit.below_noise[i]) lt.push_back(fit.t[i]), ly.push_back(fit.value[i]);
  fit.points = static_cast<int>(lt.size());
  if (fit.points < 2) {
    // bound through the first noise-limited point
    std::size_t hi = 0;
    while (hi < fit.t.size() && !fit.below_noise[hi]) ++hi;
    if (fit.points == 1 && hi < fit.t.size()) {
      fit.slope = std::log(fit.err[hi] / ly[0]) / std::log(fit.t[hi] / lt[0]);
      fit.noise_bound = true;
    } else {
      fit.slope = NAN;
    }
    return fit;
  }
  if (!log_correction || fit.points < 4) {
    const auto f = fit_loglog(lt, ly);
    fit.slope = f.slope;
    fit.stderr_slope = f.stderr_slope;
    return fit;
  }
  Eigen::MatrixXd A(fit.points, 3);
  Eigen::VectorXd b(fit.points);
  for (int i = 0; i < fit.points; ++i) {
    A(i, 0) = 1;
    A(i, 1) = std::log(lt[i]);
    A(i, 2) = std::log(std::log(lt[i]));
    b[i] = std::log(ly[i]);
  }
  const Eigen::VectorXd c = A.colPivHouseholderQr().solve(b);
  fit.slope = c[1];
  fit.log_coeff = c[2];
  if (fit.points > 3) {
    const double s2 = (A * c - b).squaredNorm() / (fit.points - 3);
    const Eigen::MatrixXd cov = s2 * (A.transpose() * A).inverse();
    fit.stderr_slope = std::sqrt(cov(1, 1));
  }
  return fit;
}

LogEnvelopeReport log_envelope_suite(const Eigen::Vector3d& p, double lambda, const VelocityField& v,
                                     const std::vector<std::pair<Eigen::Vector3d, double>>& samples,
                                     const PhaseSettings& s, double fd_step) {
  LogEnvelopeReport rep;
  std::vector<int> decade;
  for (const auto& [x, t] : samples) {
    const PhaseEvaluator ev(x.norm(), t, s);
    EnvelopeRow row;
    row.t = t;
    row.x = x;
    const auto val = ev(x, lambda, v(p));
    row.fm2 = val.fm2;
    row.gamma_abs = std::abs(val.gamma);
    Eigen::Vector3d d;
    for (int j = 0; j < 3; ++j) {
      const Eigen::Vector3d e = fd_step * Eigen::Vector3d::Unit(j);
      d[j] = (ev(x, lambda, v(p + e)).gamma - ev(x, lambda, v(p - e)).gamma) / (2 * fd_step);
    }
    row.dgamma_abs = d.norm();
    const double a = 1 + t + x.norm();
    row.envelope = lambda * lambda * (1 + std::log(a));
    decade.push_back(static_cast<int>(std::floor(std::log10(a))));
    rep.rows.push_back(row);
  }
  if (rep.rows.empty() || lambda == 0) return rep;
  const int lo = *std::min_element(decade.begin(), decade.end());
  const int hi = *std::max_element(decade.begin(), decade.end());
  for (std::size_t i = 0; i < rep.rows.size(); ++i) {
    const auto& r = rep.rows[i];
    const std::array<double, 3> ratio{r.fm2 / r.envelope, r.gamma_abs / r.envelope, r.dgamma_abs / r.envelope};
    for (int q = 0; q < 3; ++q) {
      if (decade[i] == lo) rep.first_decade_max[q] = std::max(rep.first_decade_max[q], ratio[q]);
      if (decade[i] == hi) rep.last_decade_max[q] = std::max(rep.last_decade_max[q], ratio[q]);
    }
  }
  for (int q = 0; q < 3; ++q) rep.bounded[q] = rep.last_decade_max[q] <= 2 * rep.first_decade_max[q];
  return rep;
}

FDiffNorms f_diff_norms(double lambda, double sigma, const Eigen::Vector3d& gradE_sigma,
                        const Eigen::Vector3d& gradE_zero, double kappa, double eps0) {
  const double knee = (1 - eps0) * kappa;
  std::vector<double> edges{0.0};
  if (sigma > 0 && sigma < knee) edges.push_back(sigma);
  for (double e : uniform_edges(0, knee, 0.1 * kappa))
    if (e > edges.back() * (1 + 1e-14) && e > 0) edges.push_back(e);
  if (edges.back() < knee) edges.push_back(knee);
  for (double e : uniform_edges(knee, kappa, 0.0125 * kappa))
    if (e > edges.back()) edges.push_back(e);
  if (sigma >= knee) {
    std::vector<double> cut;
    for (double e : edges)
      if (e < sigma) cut.push_back(e);
    cut.push_back(sigma);
    for (double e : edges)
      if (e > sigma) cut.push_back(e);
    edges = cut;
  }
  const Rule1D rr = composite_gauss(edges, 16);
  static const SphereRule sphere = product_sphere(24);
  FDiffNorms out;
  std::array<double, 3> kd{}, in_s{}, in_0{};
  for (std::size_t a = 0; a < rr.size(); ++a) {
    const double r = rr.x[a], chi = cutoff_chi(r, kappa, eps0);
    const double c2 = rr.w[a] * chi * chi;
    if (c2 == 0) continue;
    const bool above = r >= sigma;
    for (std::size_t b = 0; b < sphere.size(); ++b) {
      const auto& e = sphere.nodes[b];
      const double w = sphere.weights[b];
      const double as = 1 - e.dot(gradE_sigma), a0 = 1 - e.dot(gradE_zero);
      const double diff = (above ? 1 / as : 0.0) - 1 / a0;
      for (int i = 0; i < 3; ++i) {
        kd[i] += c2 * w * r * e[i] * e[i] * diff * diff;
        if (above) in_s[i] += c2 * w * e[i] / (as * as);
        in_0[i] += c2 * w * e[i] / (a0 * a0);
      }
    }
  }
  const double h = lambda * lambda / 2;
  for (int i = 0; i < 3; ++i) {
    out.k_diff[i] = std::sqrt(h * kd[i]);
    out.inner_diff[i] = h * std::abs(in_s[i] - in_0[i]);
  }
  return out;
}

}  // namespace nelson
