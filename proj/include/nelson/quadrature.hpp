// quadrature.hpp: Gauss rules on intervals and on the unit sphere
#pragma once

#include <Eigen/Dense>
#include <array>
#include <vector>

namespace nelson {

struct Rule1D {
  std::vector<double> x;
  std::vector<double> w;
  std::size_t size() const { return x.size(); }
};

// n-point Gauss–Legendre on [a, b]. Tables come from GSL and are cached.
Rule1D gauss_legendre(int n, double a, double b);

// Gauss–Legendre with n points on every panel [edges[i], edges[i+1]].
Rule1D composite_gauss(const std::vector<double>& edges, int n);

// Panels of width at most h covering [a, b].
std::vector<double> uniform_edges(double a, double b, double h);

struct SphereRule {
  std::vector<Eigen::Vector3d> nodes;
  std::vector<double> weights;  // sum to 4π
  int degree = 0;               // polynomial exactness
  bool cubic = false;           // invariant under the 48-element cubic group
  std::size_t size() const { return nodes.size(); }
};

// Octahedrally symmetric rules with 6, 14, 26, 38 or 50 points.
SphereRule lebedev(int points);

// Gauss–Legendre in cosθ (n nodes) times trapezoid in φ (2n nodes).
SphereRule product_sphere(int n);

// Signed permutation matrices of the full cubic group (rotations and reflections).
const std::vector<Eigen::Matrix3d>& cubic_group();

// Index of the node equal to v within tol, or -1.
int find_node(const SphereRule& rule, const Eigen::Vector3d& v, double tol = 1e-12);

// Legendre polynomials P_0..P_L at x.
void legendre_values(int L, double x, double* out);

}  // namespace nelson
