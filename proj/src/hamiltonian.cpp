// hamiltonian.cpp: fiber and dressed operators
#include "nelson/hamiltonian.hpp"

#include <fmt/format.h>

#include <cmath>

#include "nelson/errors.hpp"

namespace nelson {

Eigen::Matrix<double, Eigen::Dynamic, 3> field_momentum_diagonal(const FockBasis& b, const ModeGrid& grid) {
  Eigen::Matrix<double, Eigen::Dynamic, 3> P(b.dim(), 3);
  for (std::size_t s = 0; s < b.dim(); ++s) {
    Eigen::Vector3d acc = Eigen::Vector3d::Zero();
    const std::uint16_t* q = b.quanta(s);
    for (int k = 0; k < b.total(s); ++k) acc += grid.modes[q[k]].k;
    P.row(s) = acc.transpose();
  }
  return P;
}

Eigen::VectorXd field_energy_diagonal(const FockBasis& b, const ModeGrid& grid) {
  Eigen::VectorXd h(grid.mode_count());
  for (std::size_t i = 0; i < grid.mode_count(); ++i) h[i] = grid.modes[i].r;
  return dgamma_diagonal(b, h);
}

Eigen::Vector3d expect_field_momentum(const FockBasis& b, const ModeGrid& grid, const CVec& phi) {
  Eigen::Vector3d acc = Eigen::Vector3d::Zero();
  for (std::size_t s = 0; s < b.dim(); ++s) {
    const double w = std::norm(phi[s]);
    if (w == 0) continue;
    const std::uint16_t* q = b.quanta(s);
    for (int k = 0; k < b.total(s); ++k) acc += w * grid.modes[q[k]].k;
  }
  return acc / phi.squaredNorm();
}

namespace {

void check_basis(const GridPtr& grid, const BasisPtr& basis) {
  if (static_cast<std::size_t>(basis->modes()) != grid->mode_count())
    throw ConfigError(fmt::format("basis has {} modes but grid has {}", basis->modes(), grid->mode_count()));
}

}  // namespace

FiberOperator assemble_fiber(const Eigen::Vector3d& p, const GridPtr& grid, double lambda, const BasisPtr& basis,
                             double sigma_cut) {
  check_basis(grid, basis);
  const auto v = form_factor(grid, lambda, sigma_cut);
  const auto P = field_momentum_diagonal(*basis, *grid);
  const auto Hf = field_energy_diagonal(*basis, *grid);
  std::vector<Eigen::Triplet<cplx>> t;
  t.reserve(basis->dim() * 7);
  for (std::size_t s = 0; s < basis->dim(); ++s) {
    const Eigen::Vector3d d = p - P.row(s).transpose();
    t.emplace_back(s, s, 0.5 * d.squaredNorm() + Hf[s]);
    for (auto l = basis->links_begin(s); l != basis->links_end(s); ++l) {
      const cplx x = v.values[l->mode] * l->amp;
      if (x == cplx(0)) continue;
      t.emplace_back(s, l->target, x);
      t.emplace_back(l->target, s, std::conj(x));
    }
  }
  SpMat m(basis->dim(), basis->dim());
  m.setFromTriplets(t.begin(), t.end());
  return FiberOperator(basis, std::move(m), true);
}

DressingData dressing_data(const Eigen::Vector3d& p, const GridPtr& grid, double lambda,
                           const Eigen::Vector3d& gradE, double sigma_cut) {
  if (gradE.norm() > 0.5) throw GradientBound(fmt::format("dressing_data: |gradE| = {:.6f} > 1/2", gradE.norm()));
  DressingData d;
  d.grid = grid;
  d.p = p;
  d.gradE = gradE;
  d.lambda = lambda;
  d.sigma_cut = sigma_cut < 0 ? grid->sigma() : sigma_cut;
  const auto v = form_factor(grid, lambda, d.sigma_cut);
  const std::size_t M = grid->mode_count();
  d.alpha.resize(M);
  d.f = ModeFunction{grid, CVec::Zero(M)};
  double integral = 0;
  for (std::size_t i = 0; i < M; ++i) {
    const auto& m = grid->modes[i];
    d.alpha[i] = 1 - m.k.dot(gradE) / m.r;
    d.f.values[i] = v.values[i] / (m.r * d.alpha[i]);
    integral += std::norm(v.values[i]) / (m.r * d.alpha[i]);
  }
  d.c_scalar = 0.5 * p.squaredNorm() - 0.5 * (p - gradE).squaredNorm() - integral;
  return d;
}

FiberOperator assemble_dressed(const DressingData& d, const BasisPtr& basis) {
  check_basis(d.grid, basis);
  const auto& grid = *d.grid;
  const std::size_t M = grid.mode_count();
  struct Component {
    CVec g;
    double shift;
    double g2;
  };
  auto comps = std::make_shared<std::vector<Component>>();
  for (int j = 0; j < 3; ++j) {
    Component c;
    c.g.resize(M);
    for (std::size_t i = 0; i < M; ++i) c.g[i] = grid.modes[i].k[j] * d.f.values[i];
    c.shift = d.gradE[j] - d.p[j] + d.f.values.dot(c.g).real();
    c.g2 = c.g.squaredNorm();
    comps->push_back(std::move(c));
  }
  auto P = std::make_shared<Eigen::Matrix<double, Eigen::Dynamic, 3>>(field_momentum_diagonal(*basis, grid));
  Eigen::VectorXd ak(M);
  for (std::size_t i = 0; i < M; ++i) ak[i] = d.alpha[i] * grid.modes[i].r;
  auto diag = std::make_shared<Eigen::VectorXd>(dgamma_diagonal(*basis, ak).array() + d.c_scalar);
  const std::size_t top = basis->sector_begin(basis->n_max());
  const FockBasis* b = basis.get();

  auto mv = [comps, P, diag, top, b](const CVec& x, CVec& y) {
    const std::size_t n = x.size();
    CVec u(n), w(n), xt = CVec::Zero(n);
    xt.tail(n - top) = x.tail(n - top);
    y = diag->cast<cplx>().cwiseProduct(x);
    for (int j = 0; j < 3; ++j) {
      const auto& c = (*comps)[j];
      const Eigen::VectorXd dj = P->col(j).array() + c.shift;
      u = dj.cast<cplx>().cwiseProduct(x);
      add_create(*b, c.g, x, u, -1.0);
      add_annihilate(*b, c.g, x, u, -1.0);
      w = dj.cast<cplx>().cwiseProduct(u);
      add_create(*b, c.g, u, w, -1.0);
      add_annihilate(*b, c.g, u, w, -1.0);
      // top-sector return of the part of Γψ above the cap
      CVec t = CVec::Zero(n);
      add_annihilate(*b, c.g, xt, t);
      add_create(*b, c.g, t, w);
      w += c.g2 * xt;
      y += 0.5 * w;
    }
  };
  FiberOperator op(basis, FiberOperator::Matvec(mv), true);
  // diagonal of ½Σ_j Γ_j² away from the cap: (P_j + shift_j)² + ‖g_j‖² + 2Σ_i |g_ji|² n_i
  Eigen::VectorXd pre = *diag;
  for (int j = 0; j < 3; ++j) {
    const auto& c = (*comps)[j];
    const Eigen::VectorXd dj = P->col(j).array() + c.shift;
    pre += 0.5 * (dj.array().square() + c.g2).matrix() + dgamma_diagonal(*basis, c.g.cwiseAbs2());
  }
  op.set_diagonal(std::move(pre));
  return op;
}

FiberOperator conjugation_oracle(const Eigen::Vector3d& p, const GridPtr& grid, double lambda,
                                 const Eigen::Vector3d& gradE, const BasisPtr& basis, double sigma_cut,
                                 std::size_t dim_cap) {
  if (basis->dim() > dim_cap)
    throw DimensionCap(fmt::format("conjugation_oracle: dimension {} exceeds {}", basis->dim(), dim_cap));
  const auto d = dressing_data(p, grid, lambda, gradE, sigma_cut);
  const auto H = assemble_fiber(p, grid, lambda, basis, sigma_cut).dense();
  const std::size_t n = basis->dim();
  Eigen::MatrixXcd W(n, n);
  CVec e = CVec::Zero(n);
  for (std::size_t j = 0; j < n; ++j) {
    e[j] = 1;
    W.col(j) = weyl_apply(d.f, e, *basis, 1.0).vec;
    e[j] = 0;
  }
  Eigen::MatrixXcd C = W * H * W.adjoint();
  C = 0.5 * (C + C.adjoint()).eval();
  SpMat m = C.sparseView(1e-300);
  return FiberOperator(basis, std::move(m), true);
}

}  // namespace nelson
