// modegrid.cpp: radial panels, angular rules, form factors
#include "nelson/modegrid.hpp"

#include <fmt/format.h>

#include <cmath>
#include <sstream>

#include "nelson/errors.hpp"

namespace nelson {

std::string fnv1a_hex(const std::string& text) {
  std::uint64_t h = 1469598103934665603ULL;
  for (unsigned char c : text) {
    h ^= c;
    h *= 1099511628211ULL;
  }
  return fmt::format("{:016x}", h);
}

std::string GridSpec::to_block() const {
  std::ostringstream s;
  s << fmt::format("radial.spacing = {}\n", radial.spacing);
  s << fmt::format("radial.count = {}\n", radial.count);
  s << fmt::format("radial.order = {}\n", radial.order);
  s << fmt::format("radial.rmin = {:.17g}\n", radial.rmin);
  s << fmt::format("radial.shoulder_panels = {}\n", radial.shoulder_panels);
  s << fmt::format("angular.order = {}\n", angular.order);
  s << fmt::format("angular.product = {}\n", angular.product);
  s << fmt::format("sigma = {:.17g}\n", sigma);
  s << fmt::format("eps0 = {:.17g}\n", eps0);
  s << fmt::format("kappa = {:.17g}\n", kappa);
  return s.str();
}

std::string GridSpec::hash() const { return fnv1a_hex(to_block()); }

double cutoff_chi(double r, double kappa, double eps0) {
  const double s = (r - (1 - eps0) * kappa) / (eps0 * kappa);
  if (s <= 0) return 1.0;
  if (s >= 1) return 0.0;
  const double a = std::exp(-1.0 / (1 - s)), b = std::exp(-1.0 / s);
  return a / (a + b);
}

namespace {

std::vector<double> dyadic_edges(const RadialSpec& rs, double sigma, double eps0, double kappa) {
  const double knee = (1 - eps0) * kappa;
  std::vector<double> e;
  for (double r = rs.rmin; r < knee * (1 - 1e-12); r *= 2) e.push_back(r);
  e.push_back(knee);
  e.push_back(kappa);
  if (sigma > 0) {
    std::vector<double> cut{sigma};
    for (double x : e)
      if (x > sigma * (1 + 1e-12)) cut.push_back(x);
    e = cut;
  }
  return e;
}

}  // namespace

GridPtr build_grid(const RadialSpec& radial, const AngularSpec& angular, double sigma, double eps0,
                   double kappa) {
  if (!(sigma >= 0) || sigma >= kappa) throw ConfigError("build_grid: sigma must lie in [0, kappa)");
  if (!(eps0 > 0 && eps0 < 1)) throw ConfigError("build_grid: eps0 must lie in (0, 1)");
  auto g = std::make_shared<ModeGrid>();
  g->spec = GridSpec{radial, angular, sigma, eps0, kappa};

  if (angular.product > 0) {
    g->angular = product_sphere(angular.product);
  } else {
    if (angular.order <= 0) throw ConfigError("build_grid: empty angular set");
    try {
      g->angular = lebedev(angular.order);
    } catch (const std::invalid_argument& e) {
      throw ConfigError(std::string("build_grid: ") + e.what());
    }
  }

  Rule1D rr;
  if (radial.spacing == "dyadic") {
    g->radial_edges = dyadic_edges(radial, sigma, eps0, kappa);
    const int panels = static_cast<int>(g->radial_edges.size()) - 1;
    if (radial.count != 0 && radial.count != panels)
      throw ConfigError(fmt::format("build_grid: dyadic spacing yields {} panels but radial.count = {}", panels,
                                    radial.count));
    g->spec.radial.count = panels;
    rr = composite_gauss(g->radial_edges, radial.order);
  } else if (radial.spacing == "log") {
    if (radial.count < 1) throw ConfigError("build_grid: radial.count must be positive");
    const double r0 = sigma > 0 ? sigma : radial.rmin;
    for (int i = 0; i <= radial.count; ++i)
      g->radial_edges.push_back(r0 * std::pow(kappa / r0, double(i) / radial.count));
    rr = composite_gauss(g->radial_edges, radial.order);
  } else if (radial.spacing == "gauss") {
    if (radial.count < 2) throw ConfigError("build_grid: radial.count must be at least 2");
    const double knee = (1 - eps0) * kappa;
    rr = gauss_legendre(radial.count, sigma, knee);
    auto sh = composite_gauss(uniform_edges(knee, kappa, (kappa - knee) / radial.shoulder_panels), radial.count);
    rr.x.insert(rr.x.end(), sh.x.begin(), sh.x.end());
    rr.w.insert(rr.w.end(), sh.w.begin(), sh.w.end());
  } else {
    throw ConfigError("build_grid: unknown radial.spacing '" + radial.spacing + "'");
  }
  if (rr.size() < 2) throw ConfigError("build_grid: fewer than two radial nodes");
  g->radial_nodes = rr.x;
  g->radial_weights = rr.w;

  for (std::size_t a = 0; a < rr.size(); ++a)
    for (std::size_t b = 0; b < g->angular.size(); ++b) {
      Mode m;
      m.r = rr.x[a];
      m.k = m.r * g->angular.nodes[b];
      m.weight = m.r * m.r * rr.w[a] * g->angular.weights[b];
      m.radial = static_cast<int>(a);
      m.angular = static_cast<int>(b);
      g->modes.push_back(m);
    }
  g->hash_ = g->spec.hash();
  return g;
}

GridPtr build_grid(const GridSpec& spec) {
  return build_grid(spec.radial, spec.angular, spec.sigma, spec.eps0, spec.kappa);
}

std::vector<int> ModeGrid::permutation(const Eigen::Matrix3d& R) const {
  const int na = static_cast<int>(angular.size());
  std::vector<int> ang(na);
  for (int b = 0; b < na; ++b) {
    ang[b] = find_node(angular, R * angular.nodes[b], 1e-10);
    if (ang[b] < 0 || std::abs(angular.weights[ang[b]] - angular.weights[b]) > 1e-12) return {};
  }
  std::vector<int> perm(modes.size());
  for (std::size_t i = 0; i < modes.size(); ++i) perm[i] = modes[i].radial * na + ang[modes[i].angular];
  return perm;
}

ModeFunction form_factor(const GridPtr& grid, double lambda, double sigma_cut) {
  const double sig = sigma_cut < 0 ? grid->sigma() : sigma_cut;
  ModeFunction v{grid, Eigen::VectorXcd::Zero(grid->mode_count())};
  for (std::size_t i = 0; i < grid->mode_count(); ++i) {
    const auto& m = grid->modes[i];
    if (m.r < sig) continue;
    v.values[i] = lambda * cutoff_chi(m.r, grid->kappa(), grid->eps0()) / std::sqrt(2 * m.r) * std::sqrt(m.weight);
  }
  return v;
}

double omega_norm(const ModeFunction& f) {
  double s = 0;
  for (std::size_t i = 0; i < f.grid->mode_count(); ++i) {
    const double r = f.grid->modes[i].r;
    s += std::norm((1 + 1 / std::sqrt(r)) * f.values[i]);
  }
  return std::sqrt(s);
}

}  // namespace nelson
