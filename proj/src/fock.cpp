// fock.cpp: occupation basis, ladder operators, coherent states and Weyl operators
#include "nelson/fock.hpp"

#include <boost/math/special_functions/gamma.hpp>
#include <fmt/format.h>

#include <algorithm>
#include <cmath>
#include <random>

#include "nelson/errors.hpp"

namespace nelson {

std::size_t FockBasis::dimension(int modes, int n_max) {
  // Σ_{n≤n_max} C(M+n−1, n) = C(M+n_max, n_max)
  double d = 1;
  for (int j = 1; j <= n_max; ++j) d = d * (modes + j) / j;
  return d > 1e18 ? std::size_t(-1) : static_cast<std::size_t>(std::llround(d));
}

FockBasis::FockBasis(int modes, int n_max, std::size_t dim_cap) : modes_(modes), n_max_(n_max) {
  if (modes < 1 || modes > 65535) throw ConfigError("build_basis: mode count out of range");
  if (n_max < 0) throw ConfigError("build_basis: n_max must be non-negative");
  const std::size_t d = dimension(modes, n_max);
  if (d > dim_cap) throw DimensionCap(fmt::format("build_basis: dimension {} exceeds cap {}", d, dim_cap));

  const int w = std::max(n_max, 1);
  quanta_.reserve(d * w);
  total_.reserve(d);
  std::vector<std::uint16_t> q;
  for (int n = 0; n <= n_max; ++n) {
    sector_.push_back(total_.size());
    q.assign(n, 0);
    while (true) {
      for (int k = 0; k < w; ++k) quanta_.push_back(k < n ? q[k] : 0);
      total_.push_back(n);
      // next non-decreasing sequence in lexicographic order
      int k = n - 1;
      while (k >= 0 && q[k] == modes - 1) --k;
      if (k < 0) break;
      ++q[k];
      for (int j = k + 1; j < n; ++j) q[j] = q[k];
    }
  }
  sector_.push_back(total_.size());
  stride_ = w;

  index_.reserve(total_.size());
  for (std::size_t s = 0; s < total_.size(); ++s) {
    const std::uint16_t* p = &quanta_[s * w];
    index_.emplace(std::u16string(reinterpret_cast<const char16_t*>(p), total_[s]), s);
  }

  offsets_.assign(total_.size() + 1, 0);
  std::vector<std::uint16_t> tmp;
  for (std::size_t s = 0; s < total_.size(); ++s) {
    const std::uint16_t* p = &quanta_[s * w];
    const int n = total_[s];
    for (int k = 0; k < n;) {
      int c = 1;
      while (k + c < n && p[k + c] == p[k]) ++c;
      tmp.assign(p, p + n);
      tmp.erase(tmp.begin() + k);
      auto t = index_of_quanta(tmp.data(), n - 1);
      links_.push_back(Link{p[k], static_cast<std::uint32_t>(*t), std::sqrt(double(c))});
      k += c;
    }
    offsets_[s + 1] = links_.size();
  }
  hash_ = fnv1a_hex(fmt::format("fock-basis v1 modes={} n_max={}", modes, n_max));
}

std::vector<int> FockBasis::occupation(std::size_t s) const {
  std::vector<int> occ(modes_, 0);
  const std::uint16_t* p = quanta(s);
  for (int k = 0; k < total_[s]; ++k) ++occ[p[k]];
  return occ;
}

std::optional<std::size_t> FockBasis::index_of_quanta(const std::uint16_t* sorted, int n) const {
  auto it = index_.find(std::u16string(reinterpret_cast<const char16_t*>(sorted), n));
  if (it == index_.end()) return std::nullopt;
  return it->second;
}

std::optional<std::size_t> FockBasis::index_of(const std::vector<int>& occupation) const {
  if (static_cast<int>(occupation.size()) != modes_) return std::nullopt;
  std::vector<std::uint16_t> q;
  for (int i = 0; i < modes_; ++i) {
    if (occupation[i] < 0) return std::nullopt;
    q.insert(q.end(), occupation[i], static_cast<std::uint16_t>(i));
  }
  if (static_cast<int>(q.size()) > n_max_) return std::nullopt;
  return index_of_quanta(q.data(), static_cast<int>(q.size()));
}

std::vector<std::uint32_t> FockBasis::permutation(const std::vector<int>& mode_perm) const {
  std::vector<std::uint32_t> out(dim());
  std::vector<std::uint16_t> q;
  for (std::size_t s = 0; s < dim(); ++s) {
    const std::uint16_t* p = quanta(s);
    q.assign(p, p + total_[s]);
    for (auto& x : q) x = static_cast<std::uint16_t>(mode_perm[x]);
    std::sort(q.begin(), q.end());
    out[s] = static_cast<std::uint32_t>(*index_of_quanta(q.data(), total_[s]));
  }
  return out;
}

namespace {

// Targets s in [s0, s1).
void create_range(const FockBasis& b, const CVec& g, const CVec& psi, CVec& out, cplx scale, std::size_t s0,
                  std::size_t s1) {
  for (std::size_t s = s0; s < s1; ++s) {
    cplx acc = 0;
    for (auto l = b.links_begin(s); l != b.links_end(s); ++l) acc += g[l->mode] * (l->amp * psi[l->target]);
    out[s] += scale * acc;
  }
}

// Sources s in [s0, s1).
void annihilate_range(const FockBasis& b, const CVec& g, const CVec& psi, CVec& out, cplx scale, std::size_t s0,
                      std::size_t s1) {
  for (std::size_t s = s0; s < s1; ++s) {
    const cplx x = scale * psi[s];
    if (x == cplx(0)) continue;
    for (auto l = b.links_begin(s); l != b.links_end(s); ++l) out[l->target] += std::conj(g[l->mode]) * (l->amp * x);
  }
}

}  // namespace

void add_create(const FockBasis& b, const CVec& g, const CVec& psi, CVec& out, cplx scale) {
  create_range(b, g, psi, out, scale, 0, b.dim());
}

void add_annihilate(const FockBasis& b, const CVec& g, const CVec& psi, CVec& out, cplx scale) {
  annihilate_range(b, g, psi, out, scale, 0, b.dim());
}

Eigen::VectorXd dgamma_diagonal(const FockBasis& b, const Eigen::VectorXd& h) {
  Eigen::VectorXd d(b.dim());
  for (std::size_t s = 0; s < b.dim(); ++s) {
    double acc = 0;
    const std::uint16_t* p = b.quanta(s);
    for (int k = 0; k < b.total(s); ++k) acc += h[p[k]];
    d[s] = acc;
  }
  return d;
}

FiberOperator::FiberOperator(BasisPtr basis, SpMat m, bool hermitian)
    : basis_(std::move(basis)), sparse_(std::move(m)), hermitian_(hermitian) {}

FiberOperator::FiberOperator(BasisPtr basis, Matvec mv, bool hermitian)
    : basis_(std::move(basis)), mv_(std::move(mv)), hermitian_(hermitian) {}

void FiberOperator::apply(const CVec& x, CVec& y) const {
  if (sparse_) {
    y.noalias() = *sparse_ * x;
  } else {
    y.setZero(x.size());
    mv_(x, y);
  }
}

Eigen::VectorXd FiberOperator::diagonal() const {
  if (sparse_) return sparse_->diagonal().real();
  return diag_ ? *diag_ : Eigen::VectorXd();
}

CVec FiberOperator::operator*(const CVec& x) const {
  CVec y(x.size());
  apply(x, y);
  return y;
}

Eigen::MatrixXcd FiberOperator::dense(std::size_t cap) const {
  if (dim() > cap) throw DimensionCap(fmt::format("dense: dimension {} exceeds cap {}", dim(), cap));
  if (sparse_) return Eigen::MatrixXcd(*sparse_);
  Eigen::MatrixXcd m(dim(), dim());
  CVec e = CVec::Zero(dim()), y(dim());
  for (std::size_t j = 0; j < dim(); ++j) {
    e[j] = 1;
    apply(e, y);
    m.col(j) = y;
    e[j] = 0;
  }
  return m;
}

FiberOperator FiberOperator::adjoint() const {
  if (!sparse_) throw Error("adjoint: matrix-free operator");
  return FiberOperator(basis_, SpMat(sparse_->adjoint()), hermitian_);
}

double FiberOperator::hermiticity_defect() const {
  if (dim() <= 1500) {
    auto m = dense();
    return (m - m.adjoint()).cwiseAbs().maxCoeff();
  }
  std::mt19937_64 rng(12345);
  std::normal_distribution<double> nd;
  double worst = 0;
  for (int trial = 0; trial < 4; ++trial) {
    CVec x(dim()), y(dim());
    for (std::size_t i = 0; i < dim(); ++i) {
      x[i] = cplx(nd(rng), nd(rng));
      y[i] = cplx(nd(rng), nd(rng));
    }
    x.normalize();
    y.normalize();
    const cplx a = x.dot(*this * y), b = (*this * x).dot(y);
    worst = std::max(worst, std::abs(a - b));
  }
  return worst;
}

FiberOperator annihilate(int mode, const BasisPtr& basis) {
  std::vector<Eigen::Triplet<cplx>> t;
  for (std::size_t s = 0; s < basis->dim(); ++s)
    for (auto l = basis->links_begin(s); l != basis->links_end(s); ++l)
      if (static_cast<int>(l->mode) == mode) t.emplace_back(l->target, s, l->amp);
  SpMat m(basis->dim(), basis->dim());
  m.setFromTriplets(t.begin(), t.end());
  return FiberOperator(basis, std::move(m), false);
}

FiberOperator create(int mode, const BasisPtr& basis) { return annihilate(mode, basis).adjoint(); }

FiberOperator dgamma(const Eigen::VectorXd& h, const BasisPtr& basis) {
  auto d = dgamma_diagonal(*basis, h);
  SpMat m(basis->dim(), basis->dim());
  std::vector<Eigen::Triplet<cplx>> t;
  for (std::size_t s = 0; s < basis->dim(); ++s)
    if (d[s] != 0) t.emplace_back(s, s, d[s]);
  m.setFromTriplets(t.begin(), t.end());
  return FiberOperator(basis, std::move(m), true);
}

CVec vacuum(const FockBasis& b) {
  CVec v = CVec::Zero(b.dim());
  v[0] = 1;
  return v;
}

TailedVector coherent_vector(const ModeFunction& g, const FockBasis& b, double tol) {
  const double mu = g.values.squaredNorm();
  TailedVector out;
  out.vec.resize(b.dim());
  const double pre = std::exp(-mu / 2);
  for (std::size_t s = 0; s < b.dim(); ++s) {
    cplx amp = pre;
    const std::uint16_t* p = b.quanta(s);
    for (int k = 0; k < b.total(s);) {
      int c = 1;
      while (k + c < b.total(s) && p[k + c] == p[k]) ++c;
      amp *= std::pow(g.values[p[k]], c) / std::sqrt(std::tgamma(c + 1.0));
      k += c;
    }
    out.vec[s] = amp;
  }
  out.tail = mu > 0 ? boost::math::gamma_p(b.n_max() + 1.0, mu) : 0.0;
  if (out.tail > tol) throw TruncationTail(fmt::format("coherent_vector: tail {:.3e} > {:.3e}", out.tail, tol), out.tail);
  return out;
}

TailedVector weyl_apply(const CVec& g, const CVec& psi, const FockBasis& b, double tol) {
  const int nm = b.n_max();
  // e^{-a(g)} psi; the j-th term lives in sectors ≤ n_max − j
  CVec y = psi, term = psi, next(psi.size());
  for (int j = 1; j <= nm; ++j) {
    next.setZero();
    annihilate_range(b, g, term, next, -1.0 / j, b.sector_begin(1), b.sector_begin(nm - j + 2));
    term.swap(next);
    y += term;
  }
  // e^{a*(g)} y; the j-th term lives in sectors ≥ j
  CVec z = y;
  term = y;
  for (int j = 1; j <= nm; ++j) {
    next.setZero();
    create_range(b, g, term, next, 1.0 / j, b.sector_begin(j), b.dim());
    term.swap(next);
    z += term;
  }
  z *= std::exp(-g.squaredNorm() / 2);
  TailedVector out{std::move(z), 0.0};
  out.tail = std::max(0.0, psi.squaredNorm() - out.vec.squaredNorm());
  if (out.tail > tol) throw TruncationTail(fmt::format("weyl_apply: tail {:.3e} > {:.3e}", out.tail, tol), out.tail);
  return out;
}

TailedVector weyl_apply(const ModeFunction& g, const CVec& psi, const FockBasis& b, double tol) {
  return weyl_apply(g.values, psi, b, tol);
}

namespace {

// exp(−i τ B) x for hermitian B = i(a*(g) − a(g)) restricted to the basis.
CVec krylov_step(const CVec& g, const CVec& x, const FockBasis& b, double tau) {
  const double nx = x.norm();
  if (nx == 0) return x;
  auto applyB = [&](const CVec& v) {
    CVec y = CVec::Zero(v.size());
    add_create(b, g, v, y, cplx(0, 1));
    add_annihilate(b, g, v, y, cplx(0, -1));
    return y;
  };
  const int m = static_cast<int>(std::min<std::size_t>(b.dim(), 40));
  std::vector<CVec> V;
  std::vector<double> alpha, beta;
  V.push_back(x / nx);
  for (int j = 0; j < m; ++j) {
    CVec w = applyB(V[j]);
    const double a = V[j].dot(w).real();
    alpha.push_back(a);
    for (const auto& v : V) w -= v * v.dot(w);  // full reorthogonalization
    for (const auto& v : V) w -= v * v.dot(w);
    const double bn = w.norm();
    if (j + 1 == m || bn < 1e-14) break;
    beta.push_back(bn);
    V.push_back(w / bn);
  }
  const int k = static_cast<int>(alpha.size());
  Eigen::MatrixXd T = Eigen::MatrixXd::Zero(k, k);
  for (int i = 0; i < k; ++i) T(i, i) = alpha[i];
  for (int i = 0; i + 1 < k; ++i) T(i, i + 1) = T(i + 1, i) = beta[i];
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(T);
  Eigen::VectorXcd c(k);
  for (int i = 0; i < k; ++i) c[i] = std::exp(cplx(0, -tau * es.eigenvalues()[i])) * es.eigenvectors()(0, i);
  Eigen::VectorXcd coef = es.eigenvectors().cast<cplx>() * c;
  CVec out = CVec::Zero(x.size());
  for (int i = 0; i < k; ++i) out += coef[i] * V[i];
  return out * nx;
}

}  // namespace

CVec weyl_apply_krylov(const CVec& g, const CVec& psi, const FockBasis& b, double tol) {
  CVec prev;
  for (int steps = 1; steps <= 1024; steps *= 2) {
    CVec x = psi;
    for (int s = 0; s < steps; ++s) x = krylov_step(g, x, b, 1.0 / steps);
    if (prev.size() && (x - prev).norm() <= tol) return x;
    prev = x;
  }
  throw NoConvergence("weyl_apply_krylov: step halving did not converge", 0.0);
}

double weyl_derivative_check(const WeylPath& path, double s, double h, const CVec& psi, const FockBasis& b) {
  const double big = 1.0;
  CVec fd = (weyl_apply(path.F(s + h), psi, b, big).vec - weyl_apply(path.F(s - h), psi, b, big).vec) / (2 * h);
  const CVec F = path.F(s), dF = path.dF(s);
  CVec v = CVec::Zero(psi.size());
  add_create(b, dF, psi, v);
  add_annihilate(b, dF, psi, v, -1.0);
  v += cplx(0, F.dot(dF).imag()) * psi;
  return (fd - weyl_apply(F, v, b, big).vec).norm();
}

namespace {

double power_norm(const std::function<CVec(const CVec&)>& BtB, std::size_t dim, int iterations) {
  CVec x(dim);
  for (std::size_t i = 0; i < dim; ++i) x[i] = cplx(1.0 + 0.1 * std::sin(1.0 + i), 0.05 * std::cos(2.0 + i));
  x.normalize();
  double lam = 0;
  for (int it = 0; it < iterations; ++it) {
    CVec y = BtB(x);
    const double l = x.dot(y).real();
    const double ny = y.norm();
    if (ny == 0) return 0;
    x = y / ny;
    if (it > 10 && std::abs(l - lam) <= 1e-13 * std::abs(l)) {
      lam = l;
      break;
    }
    lam = l;
  }
  return std::sqrt(std::max(0.0, lam));
}

}  // namespace

BoundRatios operator_bound_ratios(const ModeFunction& f, const FockBasis& b, int iterations) {
  Eigen::VectorXd kabs(f.grid->mode_count()), ones = Eigen::VectorXd::Ones(f.grid->mode_count());
  for (std::size_t i = 0; i < f.grid->mode_count(); ++i) kabs[i] = f.grid->modes[i].r;
  const Eigen::VectorXd De = (1.0 + dgamma_diagonal(b, kabs).array()).rsqrt();
  const Eigen::VectorXd Dn = (1.0 + dgamma_diagonal(b, ones).array()).rsqrt();
  const CVec& g = f.values;
  auto ann = [&](const Eigen::VectorXd& D) {
    return [&, D](const CVec& x) {
      CVec u = D.cast<cplx>().cwiseProduct(x), v = CVec::Zero(x.size()), w = CVec::Zero(x.size());
      add_annihilate(b, g, u, v);
      add_create(b, g, v, w);
      return CVec(D.cast<cplx>().cwiseProduct(w));
    };
  };
  auto cre = [&](const Eigen::VectorXd& D) {
    return [&, D](const CVec& x) {
      CVec u = D.cast<cplx>().cwiseProduct(x), v = CVec::Zero(x.size()), w = CVec::Zero(x.size());
      add_create(b, g, u, v);
      add_annihilate(b, g, v, w);
      return CVec(D.cast<cplx>().cwiseProduct(w));
    };
  };
  const double om = omega_norm(f), l2 = f.norm();
  BoundRatios r{};
  r.energy_annihilate = power_norm(ann(De), b.dim(), iterations) / om;
  r.energy_create = power_norm(cre(De), b.dim(), iterations) / om;
  r.number_annihilate = power_norm(ann(Dn), b.dim(), iterations) / l2;
  r.number_create = power_norm(cre(Dn), b.dim(), iterations) / l2;
  return r;
}

}  // namespace nelson
