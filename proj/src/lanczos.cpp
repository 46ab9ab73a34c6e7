// lanczos.cpp: Lanczos and Davidson solvers for the lowest eigenpair
#include <fmt/format.h>

#include <cmath>

#include "nelson/errors.hpp"
#include "nelson/spectral.hpp"

namespace nelson {

void fix_phase(CVec& phi) {
  if (phi.size() == 0) return;
  Eigen::Index k = 0;
  if (std::abs(phi[0]) < 1e-12) phi.cwiseAbs().maxCoeff(&k);
  const cplx z = phi[k];
  if (std::abs(z) > 0) phi *= std::conj(z) / std::abs(z);
  phi[k] = cplx(phi[k].real(), 0.0);
}

Eigenpair dense_ground_state(const FiberOperator& op) {
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXcd> es(op.dense());
  Eigenpair out;
  out.energy = es.eigenvalues()[0];
  out.phi = es.eigenvectors().col(0);
  fix_phase(out.phi);
  out.residual = (op * out.phi - out.energy * out.phi).norm();
  return out;
}

namespace {

void orthogonalize(const std::vector<CVec>& V, CVec& w) {
  for (int pass = 0; pass < 2; ++pass)
    for (const auto& v : V) w -= v * v.dot(w);
}

CVec start_vector(std::size_t n) {
  CVec x(n);
  for (std::size_t i = 0; i < n; ++i) x[i] = 1e-3 * std::sin(1.7 * i + 0.3) / std::sqrt(double(n));
  x[0] += 1.0;
  return x.normalized();
}

Eigenpair lanczos(const FiberOperator& op, double tol, int max_iter) {
  const std::size_t n = op.dim();
  Eigenpair out;
  CVec x = start_vector(n);

  const int m = static_cast<int>(std::min<std::size_t>(n, 120));
  int total = 0;
  double last_res = INFINITY;
  CVec w(n);
  while (total < max_iter) {
    std::vector<CVec> V;
    std::vector<double> alpha, beta;
    V.push_back(x.normalized());
    for (int j = 0; j < m && total < max_iter; ++j, ++total) {
      op.apply(V[j], w);
      alpha.push_back(V[j].dot(w).real());
      orthogonalize(V, w);
      const double b = w.norm();
      const int k = j + 1;
      const bool check = (k % 5 == 0) || k == m || b < 1e-12;
      if (check) {
        Eigen::MatrixXd T = Eigen::MatrixXd::Zero(k, k);
        for (int i = 0; i < k; ++i) T(i, i) = alpha[i];
        for (int i = 0; i + 1 < k; ++i) T(i, i + 1) = T(i + 1, i) = beta[i];
        Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(T);
        const Eigen::VectorXd s = es.eigenvectors().col(0);
        const double ritz_res = b * std::abs(s[k - 1]);
        if (ritz_res <= 0.5 * tol || b < 1e-12 || k == m) {
          CVec y = CVec::Zero(n);
          for (int i = 0; i < k; ++i) y += s[i] * V[i];
          y.normalize();
          CVec r = op * y;
          const double e = y.dot(r).real();
          last_res = (r - e * y).norm();
          if (last_res <= tol) {
            out.energy = e;
            out.phi = y;
            fix_phase(out.phi);
            out.residual = last_res;
            out.iterations = total + 1;
            return out;
          }
          x = y;  // restart from the Ritz vector
          ++total;
          break;
        }
      }
      beta.push_back(b);
      w /= b;
      V.push_back(w);
    }
  }
  throw NoConvergence(fmt::format("lanczos: residual {:.3e} after {} iterations", last_res, total), last_res);
}

Eigenpair davidson(const FiberOperator& op, const Eigen::VectorXd& diag, double tol, int max_iter) {
  const Eigen::Index n = static_cast<Eigen::Index>(op.dim());
  const Eigen::Index mmax = std::min<Eigen::Index>(n, 32), keep = std::min<Eigen::Index>(n, 6);
  Eigen::MatrixXcd V(n, mmax), AV(n, mmax), S = Eigen::MatrixXcd::Zero(mmax, mmax);
  Eigen::Index k = 0;
  CVec y(n);
  auto add = [&](CVec v) {
    for (int pass = 0; pass < 2 && k > 0; ++pass) v -= V.leftCols(k) * (V.leftCols(k).adjoint() * v);
    const double nv = v.norm();
    if (nv < 1e-14) return false;
    V.col(k) = v / nv;
    op.apply(V.col(k), y);
    AV.col(k) = y;
    S.block(0, k, k + 1, 1) = V.leftCols(k + 1).adjoint() * y;
    S.block(k, 0, 1, k) = S.block(0, k, k, 1).adjoint();
    S(k, k) = S(k, k).real();
    ++k;
    return true;
  };
  add(start_vector(n));
  double res = INFINITY;
  for (int it = 1; it <= max_iter; ++it) {
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXcd> es(S.topLeftCorner(k, k));
    const double theta = es.eigenvalues()[0];
    const CVec s = es.eigenvectors().col(0);
    CVec x = V.leftCols(k) * s;
    CVec r = AV.leftCols(k) * s - theta * x;
    res = r.norm();
    if (res <= tol) {
      Eigenpair out;
      x.normalize();
      out.phi = x;
      fix_phase(out.phi);
      out.energy = theta;
      out.residual = res;
      out.iterations = it;
      return out;
    }
    if (k == mmax) {
      const Eigen::Index m = std::min(keep, k);
      const Eigen::MatrixXcd Y = es.eigenvectors().leftCols(m);
      V.leftCols(m) = (V.leftCols(k) * Y).eval();
      AV.leftCols(m) = (AV.leftCols(k) * Y).eval();
      S.setZero();
      for (Eigen::Index i = 0; i < m; ++i) S(i, i) = es.eigenvalues()[i];
      k = m;
    }
    for (Eigen::Index i = 0; i < n; ++i) {
      double den = diag[i] - theta;
      if (std::abs(den) < 1e-4) den = den < 0 ? -1e-4 : 1e-4;
      r[i] /= den;
    }
    if (!add(r) && !add(r + 1e-3 * start_vector(n))) break;
  }
  throw NoConvergence(fmt::format("davidson: residual {:.3e} after {} iterations", res, max_iter), res);
}

}  // namespace

Eigenpair ground_state(const FiberOperator& op, double tol, int max_iter, EigenMethod method) {
  if (op.dim() == 1) {
    Eigenpair out;
    out.phi = CVec::Ones(1);
    out.energy = (op * out.phi)[0].real();
    return out;
  }
  Eigen::VectorXd d;
  if (method != EigenMethod::lanczos) d = op.diagonal();
  if (method == EigenMethod::davidson && d.size() == 0) throw Error("ground_state: Davidson needs a diagonal");
  if (d.size() == 0) return lanczos(op, tol, max_iter);
  return davidson(op, d, tol, max_iter);
}

}  // namespace nelson
