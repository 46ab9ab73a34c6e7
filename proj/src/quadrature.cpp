// quadrature.cpp: Gauss–Legendre tables and Lebedev-type sphere rules
#include "nelson/quadrature.hpp"

#include <gsl/gsl_integration.h>

#include <algorithm>
#include <cmath>
#include <map>
#include <memory>
#include <mutex>
#include <numbers>
#include <stdexcept>

namespace nelson {

namespace {

struct TableDeleter {
  void operator()(gsl_integration_glfixed_table* t) const { gsl_integration_glfixed_table_free(t); }
};

const gsl_integration_glfixed_table* gl_table(int n) {
  static std::mutex mu;
  static std::map<int, std::unique_ptr<gsl_integration_glfixed_table, TableDeleter>> tables;
  std::lock_guard lock(mu);
  auto& slot = tables[n];
  if (!slot) slot.reset(gsl_integration_glfixed_table_alloc(static_cast<std::size_t>(n)));
  return slot.get();
}

void add_orbit(SphereRule& r, double w, const std::vector<Eigen::Vector3d>& pts) {
  for (const auto& p : pts) {
    r.nodes.push_back(p.normalized());
    r.weights.push_back(4.0 * std::numbers::pi * w);
  }
}

// All sign and coordinate permutations of (a, b, c), duplicates removed.
std::vector<Eigen::Vector3d> orbit(double a, double b, double c) {
  std::vector<Eigen::Vector3d> out;
  std::array<int, 3> perm{0, 1, 2};
  const double v[3] = {a, b, c};
  do {
    for (int s = 0; s < 8; ++s) {
      Eigen::Vector3d p(v[perm[0]], v[perm[1]], v[perm[2]]);
      for (int k = 0; k < 3; ++k)
        if (s & (1 << k)) p[k] = -p[k];
      bool dup = false;
      for (const auto& q : out) dup = dup || (q - p).norm() < 1e-14;
      if (!dup) out.push_back(p);
    }
  } while (std::next_permutation(perm.begin(), perm.end()));
  return out;
}

}  // namespace

Rule1D gauss_legendre(int n, double a, double b) {
  if (n < 1) throw std::invalid_argument("gauss_legendre: n < 1");
  const auto* t = gl_table(n);
  Rule1D r;
  r.x.resize(n);
  r.w.resize(n);
  for (int i = 0; i < n; ++i) gsl_integration_glfixed_point(a, b, i, &r.x[i], &r.w[i], t);
  // GSL orders nodes symmetrically around the midpoint; callers want them ascending.
  std::vector<std::size_t> idx(n);
  for (int i = 0; i < n; ++i) idx[i] = i;
  std::sort(idx.begin(), idx.end(), [&](auto i, auto j) { return r.x[i] < r.x[j]; });
  Rule1D s;
  for (auto i : idx) {
    s.x.push_back(r.x[i]);
    s.w.push_back(r.w[i]);
  }
  return s;
}

Rule1D composite_gauss(const std::vector<double>& edges, int n) {
  Rule1D out;
  for (std::size_t i = 0; i + 1 < edges.size(); ++i) {
    if (!(edges[i + 1] > edges[i])) continue;
    auto r = gauss_legendre(n, edges[i], edges[i + 1]);
    out.x.insert(out.x.end(), r.x.begin(), r.x.end());
    out.w.insert(out.w.end(), r.w.begin(), r.w.end());
  }
  return out;
}

std::vector<double> uniform_edges(double a, double b, double h) {
  const int n = std::max(1, static_cast<int>(std::ceil((b - a) / h - 1e-12)));
  std::vector<double> e(n + 1);
  for (int i = 0; i <= n; ++i) e[i] = a + (b - a) * i / n;
  e[n] = b;
  return e;
}

SphereRule lebedev(int points) {
  SphereRule r;
  r.cubic = true;
  const double s2 = 1.0 / std::sqrt(2.0), s3 = 1.0 / std::sqrt(3.0);
  switch (points) {
    case 6:
      r.degree = 3;
      add_orbit(r, 1.0 / 6.0, orbit(1, 0, 0));
      break;
    case 14:
      r.degree = 5;
      add_orbit(r, 1.0 / 15.0, orbit(1, 0, 0));
      add_orbit(r, 3.0 / 40.0, orbit(s3, s3, s3));
      break;
    case 26:
      r.degree = 7;
      add_orbit(r, 1.0 / 21.0, orbit(1, 0, 0));
      add_orbit(r, 4.0 / 105.0, orbit(s2, s2, 0));
      add_orbit(r, 9.0 / 280.0, orbit(s3, s3, s3));
      break;
    case 38:
      r.degree = 9;
      add_orbit(r, 1.0 / 105.0, orbit(1, 0, 0));
      add_orbit(r, 9.0 / 280.0, orbit(s3, s3, s3));
      add_orbit(r, 1.0 / 35.0, orbit(0.4597008433809831, 0.8880738339771153, 0));
      break;
    case 50: {
      r.degree = 11;
      const double l = 1.0 / std::sqrt(11.0), m = 3.0 / std::sqrt(11.0);
      add_orbit(r, 4.0 / 315.0, orbit(1, 0, 0));
      add_orbit(r, 64.0 / 2835.0, orbit(s2, s2, 0));
      add_orbit(r, 27.0 / 1280.0, orbit(s3, s3, s3));
      add_orbit(r, 14641.0 / 725760.0, orbit(l, l, m));
      break;
    }
    default:
      throw std::invalid_argument("lebedev: supported sizes are 6, 14, 26, 38, 50");
  }
  return r;
}

SphereRule product_sphere(int n) {
  if (n < 1) throw std::invalid_argument("product_sphere: n < 1");
  SphereRule r;
  r.degree = 2 * n - 1;
  auto gl = gauss_legendre(n, -1.0, 1.0);
  const int nphi = 2 * n;
  for (int i = 0; i < n; ++i) {
    const double c = gl.x[i], s = std::sqrt(std::max(0.0, 1 - c * c));
    for (int j = 0; j < nphi; ++j) {
      const double phi = 2 * std::numbers::pi * (j + 0.5) / nphi;
      r.nodes.emplace_back(s * std::cos(phi), s * std::sin(phi), c);
      r.weights.push_back(gl.w[i] * 2 * std::numbers::pi / nphi);
    }
  }
  return r;
}

const std::vector<Eigen::Matrix3d>& cubic_group() {
  static const std::vector<Eigen::Matrix3d> group = [] {
    std::vector<Eigen::Matrix3d> g;
    std::array<int, 3> perm{0, 1, 2};
    do {
      for (int s = 0; s < 8; ++s) {
        Eigen::Matrix3d m = Eigen::Matrix3d::Zero();
        for (int k = 0; k < 3; ++k) m(k, perm[k]) = (s & (1 << k)) ? -1.0 : 1.0;
        g.push_back(m);
      }
    } while (std::next_permutation(perm.begin(), perm.end()));
    return g;
  }();
  return group;
}

int find_node(const SphereRule& rule, const Eigen::Vector3d& v, double tol) {
  for (std::size_t i = 0; i < rule.size(); ++i)
    if ((rule.nodes[i] - v).norm() < tol) return static_cast<int>(i);
  return -1;
}

void legendre_values(int L, double x, double* out) {
  out[0] = 1.0;
  if (L >= 1) out[1] = x;
  for (int l = 1; l < L; ++l) out[l + 1] = ((2 * l + 1) * x * out[l] - l * out[l - 1]) / (l + 1);
}

}  // namespace nelson
