// wavepacket.cpp: packet integrand by product integration and Weyl applications
#include "nelson/wavepacket.hpp"

#include <fmt/format.h>
#include <gsl/gsl_errno.h>
#include <gsl/gsl_integration.h>
#include <spdlog/spdlog.h>

#include <cmath>
#include <complex>
#include <memory>

#include "nelson/bessel.hpp"
#include "nelson/errors.hpp"
#include "nelson/quadrature.hpp"

namespace nelson {

namespace {

constexpr double kPi = 3.14159265358979323846;
const double kNorm3 = std::pow(2 * kPi, -1.5);

bool centered(const PacketConfig& cfg) { return cfg.h_center.norm() == 0; }

int sphere_degree_l(const SphereRule& r) { return std::max(0, (r.degree - 1) / 2); }

// Adaptive Gauss–Kronrod 7-15 through GSL.
struct Quad {
  explicit Quad(std::size_t limit) : limit(limit), ws(gsl_integration_workspace_alloc(limit)) {
    gsl_set_error_handler_off();
  }
  ~Quad() { gsl_integration_workspace_free(ws); }
  Quad(const Quad&) = delete;
  Quad& operator=(const Quad&) = delete;

  double operator()(const std::function<double(double)>& f, double a, double b, double rel, double* err) {
    gsl_function F{[](double x, void* p) { return (*static_cast<const std::function<double(double)>*>(p))(x); },
                   const_cast<std::function<double(double)>*>(&f)};
    double r = 0, e = 0;
    gsl_integration_qag(&F, a, b, 0.0, rel, limit, GSL_INTEG_GAUSS15, ws, &r, &e);
    if (err) *err = e;
    return r;
  }
  std::size_t limit;
  gsl_integration_workspace* ws;
};

// Lagrange basis values ℓ_a(ρ) on the nodes.
void lagrange(const std::vector<double>& nodes, double x, std::vector<double>& out) {
  const std::size_t n = nodes.size();
  out.assign(n, 0.0);
  for (std::size_t a = 0; a < n; ++a) {
    double v = 1;
    for (std::size_t b = 0; b < n; ++b)
      if (b != a) v *= (x - nodes[b]) / (nodes[a] - nodes[b]);
    out[a] = v;
  }
}

struct Orbit {
  Eigen::Vector3d dir;
  double weight;
};

// Sphere-rule directions grouped into cubic orbits when `reduce` holds.
std::vector<Orbit> direction_orbits(const SphereRule& rule, bool reduce) {
  std::vector<Orbit> out;
  std::vector<bool> used(rule.size(), false);
  for (std::size_t i = 0; i < rule.size(); ++i) {
    if (used[i]) continue;
    double w = 0;
    if (reduce) {
      for (const auto& R : cubic_group()) {
        const int j = find_node(rule, R * rule.nodes[i], 1e-10);
        if (j >= 0 && !used[j]) used[j] = true, w += rule.weights[j];
      }
    } else {
      used[i] = true;
      w = rule.weights[i];
    }
    out.push_back({rule.nodes[i], w});
  }
  return out;
}

bool cubic_ok(const PacketConfig& cfg, const SphereRule* prule) {
  if (!centered(cfg) || !cfg.grid->angular.cubic) return false;
  return !prule || prule->cubic;
}

SphereRule p_sphere(const PacketConfig& cfg) { return lebedev(cfg.p_angular); }

}  // namespace

double bump(double s) {
  s = std::abs(s);
  if (s >= 1) return 0.0;
  return std::exp(1 - 1 / (1 - s * s));
}

std::vector<PNode> p_nodes(const PacketConfig& cfg) {
  if (cfg.h_radius <= 0) throw ConfigError("packet: h radius must be positive");
  if (cfg.h_center.norm() + cfg.h_radius >= 1.0 / 3)
    throw ConfigError("packet: supp h must lie inside |p| < 1/3");
  std::vector<PNode> out;
  if (cfg.p_rule == "spherical") {
    if (!centered(cfg)) throw ConfigError("packet: the spherical p rule needs h centered at 0");
    const auto rr = gauss_legendre(cfg.p_radial, 0, cfg.h_radius);
    const auto sr = p_sphere(cfg);
    for (std::size_t a = 0; a < rr.size(); ++a)
      for (std::size_t b = 0; b < sr.size(); ++b)
        out.push_back({rr.x[a] * sr.nodes[b], sr.weights[b], int(a), int(b)});
  } else if (cfg.p_rule == "tensor") {
    const auto r = gauss_legendre(cfg.p_tensor, -cfg.h_radius, cfg.h_radius);
    for (std::size_t i = 0; i < r.size(); ++i)
      for (std::size_t j = 0; j < r.size(); ++j)
        for (std::size_t k = 0; k < r.size(); ++k) {
          const Eigen::Vector3d q(r.x[i], r.x[j], r.x[k]);
          if (q.norm() >= cfg.h_radius) continue;
          out.push_back({cfg.h_center + q, r.w[i] * r.w[j] * r.w[k], int(i), int(j * r.size() + k)});
        }
  } else {
    throw ConfigError("packet: unknown p rule '" + cfg.p_rule + "'");
  }
  return out;
}

GroundStates prepare_ground_states(const PacketConfig& cfg, const RecordSource& source) {
  GroundStates gs;
  gs.lambda = cfg.lambda;
  gs.nodes = p_nodes(cfg);
  gs.states.resize(gs.nodes.size());
  const bool sym = cubic_ok(cfg, nullptr);
  struct Sym {
    Eigen::Matrix3d R;
    std::vector<int> modes;
    std::vector<std::uint32_t> states;
  };
  std::vector<Sym> group;
  if (sym)
    for (const auto& R : cubic_group()) {
      auto mp = cfg.grid->permutation(R);
      if (!mp.empty()) group.push_back({R, std::move(mp), {}});
    }
  std::vector<int> reps;
  for (std::size_t i = 0; i < gs.nodes.size(); ++i) {
    const Eigen::Vector3d& p = gs.nodes[i].p;
    bool found = false;
    for (int r : reps) {
      for (auto& g : group) {
        if ((g.R * gs.nodes[r].p - p).norm() > 1e-12) continue;
        if (g.states.empty()) g.states = cfg.basis->permutation(g.modes);
        const auto& src = gs.states[r];
        auto& dst = gs.states[i];
        dst.p = p;
        dst.energy = src.energy;
        dst.gradE = g.R * src.gradE;
        dst.phi.resize(src.phi.size());
        for (std::size_t s = 0; s < g.states.size(); ++s) dst.phi[g.states[s]] = src.phi[s];
        dst.f.resize(src.f.size());
        for (std::size_t j = 0; j < g.modes.size(); ++j) dst.f[g.modes[j]] = src.f[j];
        found = true;
        break;
      }
      if (found) break;
    }
    if (found) continue;
    const auto rec = source(p, cfg.lambda);
    if (rec.phi.size() != static_cast<Eigen::Index>(cfg.basis->dim()))
      throw MissingGroundState(fmt::format("packet: no ground state for p = ({}, {}, {})", p[0], p[1], p[2]));
    auto& st = gs.states[i];
    st.p = p;
    st.energy = rec.energy;
    st.gradE = rec.gradE;
    st.phi = rec.phi;
    st.f = dressing_data(p, cfg.grid, cfg.lambda, rec.gradE, cfg.sigma_cut).f.values;
    reps.push_back(static_cast<int>(i));
    ++gs.solved;
  }
  std::vector<double> rho, e;
  for (const auto& st : gs.states) {
    rho.push_back((st.p - cfg.h_center).norm());
    e.push_back(st.energy);
  }
  gs.fit = fit_radial_energy(rho, e);
  return gs;
}

namespace {

// Σ-weights of the p rule at (x, t): Ŵ_node with e^{i(p·x − E t)} h(p) folded in.
std::vector<cplx> node_weights(const PacketConfig& cfg, const GroundStates& gs, const Eigen::Vector3d& x, double t) {
  std::vector<cplx> w(gs.nodes.size());
  if (cfg.p_rule == "tensor") {
    for (std::size_t i = 0; i < gs.nodes.size(); ++i) {
      const auto& n = gs.nodes[i];
      const double h = bump((n.p - cfg.h_center).norm() / cfg.h_radius);
      w[i] = n.weight * h * std::exp(cplx(0, n.p.dot(x) - gs.states[i].energy * t));
    }
    return w;
  }
  const auto sr = p_sphere(cfg);
  const int L = sphere_degree_l(sr);
  const auto rr = gauss_legendre(cfg.p_radial, 0, cfg.h_radius);
  const double R = x.norm();
  // Ŵ_{a,l} = ∫ρ² e^{−iE(ρ)t} h(ρ) j_l(ρR) ℓ_a(ρ) dρ
  const double vmax = std::abs(gs.fit.slope(cfg.h_radius)) + 0.5;
  const double omega = vmax * std::abs(t) + R;
  const double width = std::min(cfg.h_radius / 32, omega > 0 ? kPi / omega : 1.0);
  const auto q = composite_gauss(uniform_edges(0, cfg.h_radius, width), 8);
  Eigen::MatrixXcd Wal = Eigen::MatrixXcd::Zero(rr.size(), L + 1);
  std::vector<double> jl(L + 1), la;
  for (std::size_t k = 0; k < q.size(); ++k) {
    const double rho = q.x[k];
    const cplx base = q.w[k] * rho * rho * bump(rho / cfg.h_radius) * std::exp(cplx(0, -gs.fit.energy(rho) * t));
    if (base == cplx(0)) continue;
    spherical_bessel(L, rho * R, jl.data());
    lagrange(rr.x, rho, la);
    for (std::size_t a = 0; a < rr.size(); ++a)
      for (int l = 0; l <= L; ++l) Wal(a, l) += base * la[a] * jl[l];
  }
  const Eigen::Vector3d xhat = R > 0 ? Eigen::Vector3d(x / R) : Eigen::Vector3d::UnitZ();
  std::vector<double> P(L + 1);
  std::vector<cplx> il(L + 1);
  for (int l = 0; l <= L; ++l) il[l] = std::pow(cplx(0, 1), l) * double(2 * l + 1);
  for (std::size_t i = 0; i < gs.nodes.size(); ++i) {
    const auto& n = gs.nodes[i];
    legendre_values(L, xhat.dot(sr.nodes[n.angular]), P.data());
    cplx acc = 0;
    for (int l = 0; l <= L; ++l) acc += il[l] * P[l] * Wal(n.radial, l);
    w[i] = n.weight * acc;
  }
  return w;
}

using Transform = std::function<CVec(const PacketState&)>;

CVec packet_vector_impl(const PacketConfig& cfg, const GroundStates& gs, const Eigen::Vector3d& x, double t,
                        IntegrandMode mode, double* tail, double* phase_err, cplx* free_part,
                        const Transform& transform) {
  const auto& grid = *cfg.grid;
  const std::size_t M = grid.mode_count();
  const auto w = node_weights(cfg, gs, x, t);
  if (free_part) {
    *free_part = 0;
    for (const auto& v : w) *free_part += v;
  }
  CVec F = CVec::Zero(cfg.basis->dim());
  if (tail) *tail = 0;
  if (phase_err) *phase_err = 0;
  if (mode == IntegrandMode::dpsi && cfg.lambda == 0) return F;
  CVec m(M);
  for (std::size_t j = 0; j < M; ++j)
    m[j] = std::exp(cplx(0, -grid.modes[j].r * t + grid.modes[j].k.dot(x))) - 1.0;
  std::unique_ptr<PhaseEvaluator> ev;
  const bool continuum = cfg.phase_source == "continuum";
  if (!continuum && cfg.phase_source != "grid")
    throw ConfigError("packet: unknown phase source '" + cfg.phase_source + "'");
  if (continuum && cfg.lambda != 0) {
    PhaseSettings ps = cfg.phase;
    ps.tol = INFINITY;  // errors are reported, tiny γ_int need no relative accuracy
    ev = std::make_unique<PhaseEvaluator>(x.norm(), t, ps);
  }
  double wsum = 0;
  for (const auto& v : w) wsum += std::abs(v);
  CVec g(M);
  for (std::size_t i = 0; i < gs.nodes.size(); ++i) {
    if (w[i] == cplx(0)) continue;
    const auto& st = gs.states[i];
    double gam = 0, gint = 0;
    if (cfg.lambda != 0) {
      if (continuum) {
        const auto v = (*ev)(x, cfg.lambda, st.gradE);
        gam = v.gamma;
        gint = v.gamma_int;
        if (phase_err) *phase_err = std::max(*phase_err, std::max(v.err_gamma, v.err_gamma_int));
      } else {
        for (std::size_t j = 0; j < M; ++j) {
          const auto& md = grid.modes[j];
          const double f2 = std::norm(st.f[j]), ph = md.r * t - md.k.dot(x);
          gam += f2 * std::sin(ph);
          gint += 2 * f2 * (md.r - md.k.dot(st.gradE)) * std::cos(ph);
        }
      }
      if (cfg.gamma_lambda >= 0) gam *= std::pow(cfg.gamma_lambda / cfg.lambda, 2);
    }
    cplx coef = w[i] * std::exp(cplx(0, gam));
    if (mode == IntegrandMode::dpsi) coef *= cplx(0, gint);
    if (coef == cplx(0)) continue;
    g = st.f.cwiseProduct(m);
    const auto r = transform ? weyl_apply(g, transform(st), *cfg.basis, INFINITY)
                             : weyl_apply(g, st.phi, *cfg.basis, cfg.weyl_tol);
    F += coef * r.vec;
    if (tail) *tail += std::abs(w[i]) / wsum * r.tail;
  }
  return F;
}

}  // namespace

CVec packet_vector(const PacketConfig& cfg, const GroundStates& gs, const Eigen::Vector3d& x, double t,
                   IntegrandMode mode, double* tail, double* phase_err) {
  return packet_vector_impl(cfg, gs, x, t, mode, tail, phase_err, nullptr, {});
}

namespace {

struct XRule {
  std::vector<Orbit> orbits;
};

XRule x_rule(const PacketConfig& cfg) {
  const auto sr = lebedev(cfg.x_angular);
  const SphereRule pr = cfg.p_rule == "spherical" ? p_sphere(cfg) : SphereRule{};
  const bool reduce = cubic_ok(cfg, cfg.p_rule == "spherical" ? &pr : nullptr) && sr.cubic;
  return {direction_orbits(sr, reduce)};
}

}  // namespace

PacketField assemble_integrand(const PacketConfig& cfg, const GroundStates& gs, double t, IntegrandMode mode) {
  PacketField out;
  out.t = t;
  out.mode = mode;
  out.extent = std::max(cfg.x_extent_factor * std::abs(t), cfg.x_min_extent);
  const auto xr = x_rule(cfg);
  auto f = [&](double R) {
    double acc = 0;
    for (std::size_t o = 0; o < xr.orbits.size(); ++o) {
      double tail = 0, perr = 0;
      const CVec F = packet_vector(cfg, gs, R * xr.orbits[o].dir, t, mode, &tail, &perr);
      const double n2 = F.squaredNorm();
      out.samples.push_back({R, int(o), n2, tail});
      out.max_tail = std::max(out.max_tail, tail);
      out.phase_error = std::max(out.phase_error, perr);
      acc += xr.orbits[o].weight * n2;
    }
    return R * R * acc;
  };
  Quad q(cfg.x_max_intervals);
  double err = 0, err2 = 0;
  const double I = q(f, 0, out.extent, cfg.x_tol, &err);
  Quad q2(4);
  const double beyond = q2(f, out.extent, 1.5 * out.extent, 0.1, &err2);
  out.norm = kNorm3 * std::sqrt(std::max(I, 0.0));
  out.x_error = I > 0 ? kNorm3 * err / (2 * std::sqrt(I)) : kNorm3 * std::sqrt(err);
  out.extent_tail = kNorm3 * (std::sqrt(std::max(I + beyond, 0.0)) - std::sqrt(std::max(I, 0.0)));
  spdlog::debug("assemble_integrand t={} mode={} norm={:.6e} x_err={:.2e} beyond={:.2e} evals={} tail={:.2e}", t,
                mode == IntegrandMode::psi ? "psi" : "dpsi", out.norm, out.x_error, out.extent_tail,
                out.samples.size(), out.max_tail);
  return out;
}

CookProfile cook_profile(const PacketConfig& cfg, const GroundStates& gs, const std::vector<double>& t_ladder) {
  CookProfile prof;
  std::vector<double> ts, ns;
  for (double t : t_ladder) {
    prof.fields.push_back(assemble_integrand(cfg, gs, t, IntegrandMode::dpsi));
    if (t > 0) ts.push_back(t), ns.push_back(prof.fields.back().norm);
  }
  prof.fit = fit_loglog(ts, ns);
  for (std::size_t i = 1; i < prof.fields.size(); ++i)
    prof.ladder_integral +=
        0.5 * (prof.fields[i].t - prof.fields[i - 1].t) * (prof.fields[i].norm + prof.fields[i - 1].norm);
  if (!prof.fields.empty()) {
    const auto& last = prof.fields.back();
    if (last.norm == 0) prof.tail_integral = 0;
    else if (prof.fit.points >= 2 && prof.fit.slope < -1)
      prof.tail_integral = last.norm * last.t / (-prof.fit.slope - 1);
    else
      prof.tail_integral = INFINITY;
  }
  prof.total = prof.ladder_integral + prof.tail_integral;
  return prof;
}

double free_packet_norm(double h_radius, double R) {
  auto amp = [&](double r) {
    const auto rho = composite_gauss(uniform_edges(0, h_radius, std::min(h_radius / 64, kPi / (2 * r))), 8);
    double acc = 0;
    for (std::size_t k = 0; k < rho.size(); ++k) {
      const double x = rho.x[k] * r;
      const double j0 = x == 0 ? 1.0 : std::sin(x) / x;
      acc += rho.w[k] * rho.x[k] * rho.x[k] * bump(rho.x[k] / h_radius) * j0;
    }
    return kNorm3 * 4 * kPi * acc;
  };
  Quad q(2000);
  std::function<double(double)> f = [&](double r) {
    const double a = amp(r);
    return 4 * kPi * r * r * a * a;
  };
  return std::sqrt(q(f, 0, R, 1e-12, nullptr));
}

std::vector<NontrivialityRow> nontriviality_study(const PacketConfig& cfg,
                                                  const std::vector<GroundStates>& per_lambda,
                                                  double delta_radius, const std::vector<double>& tail_lambdas,
                                                  const std::vector<double>& tail_ladder) {
  std::vector<NontrivialityRow> rows;
  const double oracle = free_packet_norm(cfg.h_radius, delta_radius);
  for (const auto& gs : per_lambda) {
    PacketConfig c = cfg;
    c.lambda = gs.lambda;
    const auto xr = x_rule(c);
    const CVec omega = vacuum(*c.basis);
    auto dfun = [&](double R) {
      double acc = 0;
      for (const auto& o : xr.orbits) {
        cplx h0;
        CVec F = packet_vector_impl(c, gs, R * o.dir, 0.0, IntegrandMode::psi, nullptr, nullptr, &h0, {});
        F -= h0 * omega;
        acc += o.weight * F.squaredNorm();
      }
      return R * R * acc;
    };
    auto ffun = [&](double R) {
      double acc = 0;
      for (const auto& o : xr.orbits) {
        const auto w = node_weights(c, gs, R * o.dir, 0.0);
        cplx h0 = 0;
        for (const auto& v : w) h0 += v;
        acc += o.weight * std::norm(h0);
      }
      return R * R * acc;
    };
    Quad q(c.x_max_intervals);
    NontrivialityRow row;
    row.lambda = gs.lambda;
    row.D = kNorm3 * std::sqrt(std::max(0.0, q(dfun, 0, delta_radius, c.x_tol, nullptr)));
    row.ratio = gs.lambda != 0 ? row.D / std::pow(std::abs(gs.lambda), 0.25) : 0.0;
    row.free_norm = kNorm3 * std::sqrt(std::max(0.0, q(ffun, 0, delta_radius, 1e-8, nullptr)));
    row.free_oracle = oracle;
    bool want = false;
    for (double l : tail_lambdas) want |= std::abs(l - gs.lambda) < 1e-12;
    if (want) {
      row.tail = cook_profile(c, gs, tail_ladder).total;
      row.lower_bound = std::min(row.free_norm, row.free_oracle) - row.D - row.tail;
    }
    rows.push_back(row);
  }
  return rows;
}

DomainIdentity domain_identity_check(const PacketConfig& cfg, const GroundStates& gs, double t,
                                     const Eigen::Vector3d& x, int component, double step) {
  const auto& grid = *cfg.grid;
  const auto& b = *cfg.basis;
  const Eigen::Vector3d e = step * Eigen::Vector3d::Unit(component);
  const CVec F0 = packet_vector(cfg, gs, x, t, IntegrandMode::psi);
  const CVec Fp = packet_vector(cfg, gs, x + e, t, IntegrandMode::psi);
  const CVec Fm = packet_vector(cfg, gs, x - e, t, IntegrandMode::psi);
  const auto P = field_momentum_diagonal(b, grid);
  const Eigen::VectorXd Pi = P.col(component);
  const CVec lhs = -(Fp - 2.0 * F0 + Fm) / (step * step) +
                   cplx(0, 1) * Pi.cast<cplx>().cwiseProduct(Fp - Fm) / step +
                   Pi.array().square().matrix().cast<cplx>().cwiseProduct(F0);
  Transform tr = [&](const PacketState& st) {
    CVec kf(grid.mode_count());
    for (std::size_t j = 0; j < grid.mode_count(); ++j) kf[j] = grid.modes[j].k[component] * st.f[j];
    const double shift = st.f.dot(kf).real();
    auto apply = [&](const CVec& v) {
      // (p_i − P^w_{f,i}) v with P^w = P_f − a*(k_i f) − a(k_i f) + ⟨f, k_i f⟩
      CVec out = (st.p[component] - shift - Pi.array()).matrix().cast<cplx>().cwiseProduct(v);
      add_create(b, kf, v, out);
      add_annihilate(b, kf, v, out);
      return out;
    };
    return apply(apply(st.phi));
  };
  const CVec rhs = packet_vector_impl(cfg, gs, x, t, IntegrandMode::psi, nullptr, nullptr, nullptr, tr);
  DomainIdentity out;
  out.lhs_norm = lhs.norm();
  out.rhs_norm = rhs.norm();
  out.residual = (lhs - rhs).norm() / std::max(out.rhs_norm, 1e-300);
  return out;
}

}  // namespace nelson
