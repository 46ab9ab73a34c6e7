// stationary.cpp: scalar dispersion u(x,t) for the stationary-phase envelopes
#include <cmath>
#include <complex>

#include "nelson/quadrature.hpp"
#include "nelson/wavepacket.hpp"

namespace nelson {

namespace {
constexpr double kPi = 3.14159265358979323846;
}

StationaryReport stationary_envelope_check(const std::function<double(double)>& energy,
                                           const std::function<double(double)>& slope, double h_radius,
                                           const std::vector<double>& t_ladder, double c0) {
  StationaryReport rep;
  const double pref = std::pow(2 * kPi, -1.5) * 4 * kPi;
  double vmax = 0;
  for (int i = 0; i <= 64; ++i) vmax = std::max(vmax, std::abs(slope(h_radius * i / 64)));
  std::vector<double> ts, sups, outs;
  double floor_out = 0;
  for (double t : t_ladder) {
    // ρ panels resolve e^{−iE t} j_0(ρR) up to R_max
    const double Rmax = std::max(2 * vmax * t, c0 * t) + 60;
    const double omega = vmax * t + Rmax;
    const auto rho = composite_gauss(uniform_edges(0, h_radius, std::min(h_radius / 32, kPi / omega)), 8);
    std::vector<std::complex<double>> amp(rho.size());
    for (std::size_t k = 0; k < rho.size(); ++k) {
      const double r = rho.x[k];
      amp[k] = rho.w[k] * r * r * bump(r / h_radius) * std::exp(std::complex<double>(0, -energy(r) * t));
    }
    auto u = [&](double R) {
      std::complex<double> acc = 0;
      for (std::size_t k = 0; k < rho.size(); ++k) {
        const double x = rho.x[k] * R;
        acc += amp[k] * (x == 0 ? 1.0 : std::sin(x) / x);
      }
      return pref * acc;
    };
    const double cone = c0 * t;
    const double width = kPi / (2 * h_radius);
    StationaryRow row;
    row.t = t;
    auto integrate = [&](double a, double b, double& sup) {
      if (b <= a) return 0.0;
      const auto q = composite_gauss(uniform_edges(a, b, width), 8);
      double acc = 0;
      for (std::size_t i = 0; i < q.size(); ++i) {
        const double a2 = std::norm(u(q.x[i]));
        sup = std::max(sup, std::sqrt(a2));
        acc += q.w[i] * 4 * kPi * q.x[i] * q.x[i] * a2;
      }
      return acc;
    };
    double sup_out = 0;
    row.inside_l2 = integrate(0, cone, row.sup_abs);
    row.outside_l2 = integrate(cone, Rmax, sup_out);
    row.sup_abs = std::max(row.sup_abs, sup_out);
    row.sup_abs = std::max(row.sup_abs, std::abs(u(0)));
    // outside values below ~(1e-14 sup)² over the shell are round-off
    const double fl = std::pow(1e-14 * row.sup_abs, 2) * 4 * kPi / 3 * (std::pow(Rmax, 3) - std::pow(cone, 3));
    floor_out = std::max(floor_out, fl);
    rep.rows.push_back(row);
    ts.push_back(t);
    sups.push_back(row.sup_abs);
  }
  rep.sup_fit = fit_loglog(ts, sups);
  double lo = INFINITY, hi = 0;
  std::vector<double> to;
  for (const auto& r : rep.rows) {
    lo = std::min(lo, r.inside_l2);
    hi = std::max(hi, r.inside_l2);
    if (r.outside_l2 > floor_out) to.push_back(r.t), outs.push_back(r.outside_l2);
  }
  rep.inside_max_ratio = lo > 0 ? hi / lo : INFINITY;
  rep.outside_points = static_cast<int>(to.size());
  if (to.size() >= 2) {
    rep.outside_fit = fit_loglog(to, outs);
  } else {
    // decayed into round-off within the ladder: bound the slope by the floor
    const double t0 = rep.rows.front().t, t1 = rep.rows.back().t;
    const double y0 = std::max(rep.rows.front().outside_l2, floor_out);
    rep.outside_fit.slope = std::log(floor_out / y0) / std::log(t1 / t0);
    rep.outside_fit.points = static_cast<int>(to.size());
  }
  return rep;
}

}  // namespace nelson
