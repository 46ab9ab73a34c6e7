// modegrid.hpp: photon momentum grid, cutoff function and form factors
#pragma once

#include <Eigen/Dense>
#include <complex>
#include <memory>
#include <string>
#include <vector>

#include "nelson/quadrature.hpp"

namespace nelson {

using cplx = std::complex<double>;

struct RadialSpec {
  // dyadic: panel edges rmin·2^j below (1−ε0)κ, then the shoulder [(1−ε0)κ, κ]
  // log:    `count` geometric panels from max(σ, rmin) to κ
  // gauss:  `count` nodes on [σ, (1−ε0)κ] and `count` on each shoulder panel
  std::string spacing = "dyadic";
  int count = 8;
  int order = 1;  // Gauss points per panel (dyadic, log)
  double rmin = 0.0125;
  int shoulder_panels = 4;
};

struct AngularSpec {
  int order = 6;    // Lebedev-type rule size: 6, 14, 26, 38, 50
  int product = 0;  // > 0 selects the product rule with this many polar nodes
};

struct GridSpec {
  RadialSpec radial;
  AngularSpec angular;
  double sigma = 0.0;
  double eps0 = 0.1;
  double kappa = 1.0;

  std::string to_block() const;  // key = value lines, stable formatting
  std::string hash() const;      // 16 hex digits of FNV-1a over to_block()
};

struct Mode {
  Eigen::Vector3d k;
  double r = 0;
  double weight = 0;  // full d³k weight r²·w_r·w_Ω
  int radial = 0;
  int angular = 0;
};

class ModeGrid {
 public:
  GridSpec spec;
  std::vector<double> radial_nodes;
  std::vector<double> radial_weights;  // dr weights, without r²
  std::vector<double> radial_edges;    // panel edges (empty for gauss spacing)
  SphereRule angular;
  std::vector<Mode> modes;

  std::size_t mode_count() const { return modes.size(); }
  double sigma() const { return spec.sigma; }
  double kappa() const { return spec.kappa; }
  double eps0() const { return spec.eps0; }
  const std::string& hash() const { return hash_; }

  // Mode permutation π with k_{π(i)} = R k_i; empty if R is not a grid symmetry.
  std::vector<int> permutation(const Eigen::Matrix3d& R) const;

 private:
  friend std::shared_ptr<const ModeGrid> build_grid(const RadialSpec&, const AngularSpec&, double, double,
                                                    double);
  std::string hash_;
};

using GridPtr = std::shared_ptr<const ModeGrid>;

struct ModeFunction {
  GridPtr grid;
  Eigen::VectorXcd values;  // ℓ² amplitudes g(k_i)·√w_i

  double norm() const { return values.norm(); }
};

GridPtr build_grid(const RadialSpec& radial, const AngularSpec& angular, double sigma, double eps0 = 0.1,
                   double kappa = 1.0);
GridPtr build_grid(const GridSpec& spec);

// Smooth step: 1 on [0, (1−ε0)κ], 0 on [κ, ∞).
double cutoff_chi(double r, double kappa = 1.0, double eps0 = 0.1);

// v^σ(k) = λ χ_{[σ,κ)}(k)/√(2|k|). sigma_cut < 0 uses the grid's σ.
ModeFunction form_factor(const GridPtr& grid, double lambda, double sigma_cut = -1.0);

// ‖(1 + |k|^{-1/2}) f‖₂
double omega_norm(const ModeFunction& f);

// Sample a continuum function of k into ℓ² amplitudes.
template <class F>
ModeFunction sample(const GridPtr& grid, F&& g) {
  ModeFunction out{grid, Eigen::VectorXcd(grid->mode_count())};
  for (std::size_t i = 0; i < grid->mode_count(); ++i) {
    const auto& m = grid->modes[i];
    out.values[i] = cplx(g(m.k)) * std::sqrt(m.weight);
  }
  return out;
}

std::string fnv1a_hex(const std::string& text);

}  // namespace nelson
