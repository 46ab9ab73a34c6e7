// spectral.cpp: ground-state records, landscapes and σ studies
#include "nelson/spectral.hpp"

#include <fmt/format.h>
#include <spdlog/spdlog.h>

#include <cmath>

#include "nelson/errors.hpp"
#include "nelson/parallel.hpp"

namespace nelson {

UndressedResult undressed_ground_state(const Eigen::Vector3d& p, const GridPtr& grid, double lambda,
                                       const BasisPtr& basis, double sigma_cut, double tol) {
  const auto H = assemble_fiber(p, grid, lambda, basis, sigma_cut);
  auto gs = ground_state(H, tol);
  UndressedResult out;
  out.energy = gs.energy;
  out.gradE_hf = p - expect_field_momentum(*basis, *grid, gs.phi);
  out.residual = gs.residual;
  out.phi = std::move(gs.phi);
  return out;
}

Eigenpair dressed_ground_state(const Eigen::Vector3d& p, const GridPtr& grid, double lambda,
                               const Eigen::Vector3d& gradE, const BasisPtr& basis, double sigma_cut, double tol) {
  const auto d = dressing_data(p, grid, lambda, gradE, sigma_cut);
  return ground_state(assemble_dressed(d, basis), tol);
}

namespace {

Eigen::Vector3d unit(int j) { return Eigen::Vector3d::Unit(j); }

template <class EnergyFn>
Eigen::Vector3d fd_gradient(EnergyFn&& E, const Eigen::Vector3d& p, double h) {
  Eigen::Vector3d g;
  for (int j = 0; j < 3; ++j) g[j] = (E(p + h * unit(j)) - E(p - h * unit(j))) / (2 * h);
  return g;
}

template <class EnergyFn>
Eigen::Matrix3d fd_hessian(EnergyFn&& E, const Eigen::Vector3d& p, double h, double e0) {
  Eigen::Matrix3d H;
  for (int i = 0; i < 3; ++i) {
    H(i, i) = (E(p + h * unit(i)) - 2 * e0 + E(p - h * unit(i))) / (h * h);
    for (int j = 0; j < i; ++j) {
      const Eigen::Vector3d a = h * unit(i), b = h * unit(j);
      H(i, j) = H(j, i) = (E(p + a + b) - E(p + a - b) - E(p - a + b) + E(p - a - b)) / (4 * h * h);
    }
  }
  return H;
}

}  // namespace

GroundStateRecord self_consistent_dressed(const Eigen::Vector3d& p, const GridPtr& grid, double lambda,
                                          const BasisPtr& basis, const SolveOptions& opt) {
  GroundStateRecord rec;
  rec.p = p;
  rec.lambda = lambda;
  rec.sigma = opt.sigma_cut < 0 ? grid->sigma() : opt.sigma_cut;
  rec.grid_hash = grid->hash();
  rec.basis_hash = basis->hash();
  rec.n_max = basis->n_max();

  const auto und = undressed_ground_state(p, grid, lambda, basis, opt.sigma_cut, opt.tol);
  rec.energy_undressed = und.energy;
  rec.gradE_hf = und.gradE_hf;

  Eigen::Vector3d g = und.gradE_hf, prev = g;
  auto energy_at = [&](const Eigen::Vector3d& q) {
    return dressed_ground_state(q, grid, lambda, g, basis, opt.sigma_cut, opt.tol).energy;
  };
  bool done = false;
  for (int it = 1; it <= opt.max_iter && !done; ++it) {
    if (g.norm() > 0.5) throw GradientBound(fmt::format("self_consistent_dressed: |gradE| = {:.6f} > 1/2", g.norm()));
    const Eigen::Vector3d next = fd_gradient(energy_at, p, opt.fd_step);
    rec.iterations = it;
    done = (next - g).norm() <= opt.grad_tol;
    prev = g;
    g = next;
  }
  if (!done)
    throw NoConvergence(fmt::format("self_consistent_dressed: gradE did not settle; last ({:.10f}, {:.10f}, {:.10f}) "
                                    "vs ({:.10f}, {:.10f}, {:.10f})",
                                    prev[0], prev[1], prev[2], g[0], g[1], g[2]),
                        (g - prev).norm());
  if (g.norm() > 0.5) throw GradientBound(fmt::format("self_consistent_dressed: |gradE| = {:.6f} > 1/2", g.norm()));
  rec.gradE = g;
  auto gs = dressed_ground_state(p, grid, lambda, g, basis, opt.sigma_cut, opt.tol);
  rec.energy = gs.energy;
  rec.residual = gs.residual;
  rec.phi = std::move(gs.phi);
  if (opt.hessian) rec.hessian = fd_hessian(energy_at, p, opt.hess_step, rec.energy);
  return rec;
}

Landscape energy_landscape(const std::vector<Eigen::Vector3d>& samples, const GridPtr& grid, double lambda,
                           const BasisPtr& basis, double sigma_cut, double fd_step, double hess_step, int threads) {
  Landscape out;
  out.rows.resize(samples.size());
  parallel_for(samples.size(), threads, [&](std::size_t i) {
    const auto& p = samples[i];
    if (p.norm() >= 1.0 / 3) throw ConfigError(fmt::format("energy_landscape: |p| = {:.4f} outside S", p.norm()));
    auto E = [&](const Eigen::Vector3d& q) {
      return ground_state(assemble_fiber(q, grid, lambda, basis, sigma_cut)).energy;
    };
    const auto und = undressed_ground_state(p, grid, lambda, basis, sigma_cut);
    LandscapeRow& r = out.rows[i];
    r.p = p;
    r.energy = und.energy;
    r.grad_hf = und.gradE_hf;
    r.grad_fd = fd_gradient(E, p, fd_step);
    r.hessian = fd_hessian(E, p, hess_step, und.energy);
    r.min_hessian_eig = Eigen::SelfAdjointEigenSolver<Eigen::Matrix3d>(r.hessian).eigenvalues()[0];
  });
  out.min_hessian_eig = INFINITY;
  for (const auto& r : out.rows) {
    out.max_grad = std::max(out.max_grad, r.grad_fd.norm());
    out.min_hessian_eig = std::min(out.min_hessian_eig, r.min_hessian_eig);
    const double scale = r.grad_hf.norm();
    if (scale > 0) out.max_hf_fd_reldiff = std::max(out.max_hf_fd_reldiff, (r.grad_fd - r.grad_hf).norm() / scale);
  }
  return out;
}

SlopeFit fit_loglog(const std::vector<double>& x, const std::vector<double>& y) {
  std::vector<double> lx, ly;
  for (std::size_t i = 0; i < x.size() && i < y.size(); ++i)
    if (x[i] > 0 && y[i] > 0 && std::isfinite(y[i])) {
      lx.push_back(std::log(x[i]));
      ly.push_back(std::log(y[i]));
    }
  SlopeFit f;
  f.points = static_cast<int>(lx.size());
  if (f.points < 2) return f;
  const double n = f.points;
  double mx = 0, my = 0;
  for (int i = 0; i < f.points; ++i) mx += lx[i] / n, my += ly[i] / n;
  double sxx = 0, sxy = 0;
  for (int i = 0; i < f.points; ++i) sxx += (lx[i] - mx) * (lx[i] - mx), sxy += (lx[i] - mx) * (ly[i] - my);
  f.slope = sxy / sxx;
  f.intercept = my - f.slope * mx;
  double ss = 0;
  for (int i = 0; i < f.points; ++i) {
    const double r = ly[i] - f.intercept - f.slope * lx[i];
    ss += r * r;
  }
  f.residual = std::sqrt(ss / n);
  f.stderr_slope = f.points > 2 ? std::sqrt(ss / (n - 2) / sxx) : 0.0;
  return f;
}

ScalingReport sigma_scaling_study(const Eigen::Vector3d& p, double lambda, const std::vector<double>& ladder,
                                  double sigma_ref, const GridPtr& grid, const BasisPtr& basis,
                                  const SolveOptions& opt) {
  for (std::size_t i = 1; i < ladder.size(); ++i)
    if (!(ladder[i] < ladder[i - 1])) throw ConfigError("sigma_scaling_study: ladder must be strictly decreasing");
  if (ladder.empty() || !(sigma_ref < ladder.back()))
    throw ConfigError("sigma_scaling_study: reference sigma must lie below the ladder");
  double lowest = INFINITY;
  for (double r : grid->radial_nodes) lowest = std::min(lowest, r);
  if (!grid->radial_edges.empty()) lowest = std::min(lowest, grid->radial_edges.front());
  if (sigma_ref < lowest * (1 - 1e-12) || sigma_ref < grid->sigma())
    throw LadderTooDeep(fmt::format("sigma_scaling_study: reference sigma {} lies below the grid resolution {}",
                                    sigma_ref, lowest));
  std::vector<double> cuts = ladder;
  cuts.push_back(sigma_ref);
  for (std::size_t i = 0; i + 1 < cuts.size(); ++i) {
    bool hit = false;
    for (double r : grid->radial_nodes) hit |= (r >= cuts[i + 1] && r < cuts[i]);
    if (!hit)
      throw LadderTooDeep(fmt::format("sigma_scaling_study: no radial node in [{}, {})", cuts[i + 1], cuts[i]));
  }

  ScalingReport rep;
  rep.ladder = ladder;
  rep.sigma_ref = sigma_ref;
  for (double s : cuts) {
    SolveOptions o = opt;
    o.sigma_cut = s;
    spdlog::debug("sigma_scaling_study: solving sigma = {}", s);
    rep.records.push_back(self_consistent_dressed(p, grid, lambda, basis, o));
  }
  const auto& ref = rep.records.back();
  const Eigen::VectorXd hf = field_energy_diagonal(*basis, *grid);
  std::vector<double> dE, dg, dv, dva;
  std::array<std::vector<double>, 3> dh;
  for (std::size_t i = 0; i < ladder.size(); ++i) {
    const auto& r = rep.records[i];
    ScalingRow row;
    row.sigma = ladder[i];
    row.dE = std::abs(r.energy - ref.energy);
    row.dgrad = (r.gradE - ref.gradE).norm();
    row.dphi = (r.phi - ref.phi).norm();
    const cplx ov = r.phi.dot(ref.phi);
    const cplx phase = std::abs(ov) > 0 ? ov / std::abs(ov) : cplx(1);
    const CVec diff = ref.phi - phase * r.phi;
    row.dphi_aligned = diff.norm();
    Eigen::VectorXd hl = Eigen::VectorXd::Ones(hf.size());
    for (int l = 0; l < 3; ++l) {
      row.hf[l] = hl.cast<cplx>().cwiseProduct(diff).norm();
      hl = hl.cwiseProduct(hf);
    }
    dE.push_back(row.dE);
    dg.push_back(row.dgrad);
    dv.push_back(row.dphi);
    dva.push_back(row.dphi_aligned);
    for (int l = 0; l < 3; ++l) dh[l].push_back(row.hf[l]);
    rep.rows.push_back(row);
  }
  rep.energy = fit_loglog(ladder, dE);
  rep.gradient = fit_loglog(ladder, dg);
  rep.vector = fit_loglog(ladder, dv);
  rep.vector_aligned = fit_loglog(ladder, dva);
  for (int l = 0; l < 3; ++l) rep.hf[l] = fit_loglog(ladder, dh[l]);
  return rep;
}

EnvelopeReport wavefunction_envelope_check(const GroundStateRecord& rec, const GridPtr& grid,
                                           const BasisPtr& basis) {
  EnvelopeReport rep;
  const double kstar = grid->kappa() / (1 - grid->eps0());
  std::vector<double> env(grid->mode_count());
  for (std::size_t i = 0; i < grid->mode_count(); ++i) {
    const double r = grid->modes[i].r;
    env[i] = (r >= rec.sigma && r < kstar) ? std::abs(rec.lambda) / std::pow(r, 1.5) : 0.0;
  }
  const double norm = rec.phi.norm();
  rep.vacuum_distance = (rec.phi / norm - vacuum(*basis)).norm();
  const int top = std::min(3, basis->n_max());
  for (std::size_t s = 1; s < basis->dim(); ++s) {
    const int n = basis->total(s);
    if (n > top) break;
    const std::uint16_t* q = basis->quanta(s);
    // |f^n|·√n! = |c_s|·√(Π n_i!)/Π √w_i, compared against Π λχ/|k|^{3/2}
    double fact = 1, weights = 1, envelope = 1, soft = INFINITY;
    int run = 1;
    for (int j = 0; j < n; ++j) {
      if (j > 0 && q[j] == q[j - 1]) fact *= ++run;
      else run = 1;
      weights *= std::sqrt(grid->modes[q[j]].weight);
      envelope *= env[q[j]];
      if (env[q[j]] == 0) soft = std::min(soft, grid->modes[q[j]].r);
    }
    const double amp = std::abs(rec.phi[s]) / norm * std::sqrt(fact) / weights;
    // uncoupled photons: anything under residual/gap (gap ≥ |k|/2) is solver noise
    const double noise = std::max(1e-14, 2 * rec.residual / soft) * std::sqrt(fact) / weights;
    const double ratio = envelope > 0 ? amp / envelope : (amp > noise ? INFINITY : 0.0);
    rep.max_ratio[n] = std::max(rep.max_ratio[n], ratio);
  }
  rep.fitted_c = rep.max_ratio[1];
  return rep;
}

}  // namespace nelson
