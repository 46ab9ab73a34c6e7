// config.cpp: defaults table, INI parsing through property_tree, typed access
#include "nelson/config.hpp"

#include <boost/algorithm/string.hpp>
#include <boost/lexical_cast.hpp>
#include <boost/property_tree/ini_parser.hpp>
#include <boost/property_tree/ptree.hpp>
#include <fmt/format.h>

#include <fstream>
#include <sstream>

#include "nelson/errors.hpp"

namespace nelson {

namespace {

const std::map<std::string, std::string>& defaults() {
  static const std::map<std::string, std::string> d = {
      {"run.seed", "12345"},
      {"run.threads", "1"},
      {"run.output", "out"},
      {"run.cache", ""},
      {"run.log_level", "warn"},
      {"grid.spacing", "dyadic"},
      {"grid.count", "8"},
      {"grid.order", "1"},
      {"grid.rmin", "0.0125"},
      {"grid.shoulder_panels", "4"},
      {"grid.angular", "6"},
      {"grid.angular_product", "0"},
      {"grid.sigma", "0"},
      {"grid.eps0", "0.1"},
      {"grid.kappa", "1"},
      {"basis.n_max", "3"},
      {"solver.tol", "1e-9"},
      {"solver.fd_step", "1e-3"},
      {"solver.hess_step", "5e-3"},
      {"solver.grad_tol", "1e-7"},
      {"solver.max_iter", "8"},
      {"ground.lambdas", "0.1"},
      {"ground.samples", "20"},
      {"ground.p_max", "0.3"},
      {"scaling.p", "0.1, 0, 0"},
      {"scaling.lambda", "0.1"},
      {"scaling.ladder", "0.2, 0.1, 0.05, 0.025"},
      {"scaling.reference", "0.0125"},
      {"scaling.envelope_sigma", "0.05"},
      {"scaling.envelope_lambdas", "0.2, 0.1, 0.05"},
      {"phases.p", "0.1, 0.05, 0"},
      {"phases.lambda", "0.1"},
      {"phases.velocity", "model"},
      {"phases.beta", "0.9"},
      {"phases.ratios", "0.3, 1, 1.5"},
      {"phases.t_min", "100"},
      {"phases.t_max", "10000"},
      {"phases.t_points", "9"},
      {"phases.tol", "1e-9"},
      {"phases.lmax", "40"},
      {"phases.c0", "0.6"},
      {"phases.c1", "1.4"},
      {"phases.samples", "12"},
      {"packet.lambda", "0.1"},
      {"packet.lambda_pair", "0.05, 0.1"},
      {"packet.h_radius", "0.25"},
      {"packet.h_center", "0, 0, 0"},
      {"packet.p_rule", "spherical"},
      {"packet.p_radial", "6"},
      {"packet.p_angular", "14"},
      {"packet.p_tensor", "12"},
      {"packet.x_angular", "6"},
      {"packet.x_tol", "1e-2"},
      {"packet.x_extent_factor", "2.1"},
      {"packet.x_min_extent", "60"},
      {"packet.x_max_intervals", "32"},
      {"packet.phase_source", "continuum"},
      {"packet.weyl_tol", "0.5"},
      {"packet.sigma_cut", "-1"},
      {"packet.t_ladder", "10, 31.6227766, 100, 316.227766, 1000"},
      {"packet.nontriv_lambdas", "0.2, 0.1, 0.05"},
      {"packet.delta_radius", "40"},
      {"packet.tail_lambdas", "0.05"},
      {"packet.tail_ladder", "0, 2.5, 5, 10, 31.6227766, 100"},
      {"envelope.t_ladder", "100, 316.227766, 1000, 3162.27766, 10000"},
      {"envelope.h_radius", "0.25"},
      {"envelope.c0", "0.6"},
      {"envelope.lambda", "0.1"},
      {"envelope.p", "0.1, 0.05, 0"},
      {"envelope.beta", "0.9"},
      {"envelope.decades", "3"},
      {"envelope.fd_step", "1e-3"},
  };
  return d;
}

}  // namespace

RunConfig::RunConfig() : values_(defaults()) {
  for (const auto& [k, v] : values_) where_[k] = "default";
}

void RunConfig::assign(const std::string& key, const std::string& value, const std::string& where) {
  if (!values_.count(key)) throw ConfigError(fmt::format("{}: unknown key '{}'", where, key));
  values_[key] = value;
  where_[key] = where;
}

void RunConfig::bad(const std::string& key, const std::string& what) const {
  const auto it = where_.find(key);
  throw ConfigError(fmt::format("{}: key '{}' = '{}': {}", it == where_.end() ? "?" : it->second, key,
                                values_.count(key) ? values_.at(key) : "", what));
}

RunConfig RunConfig::parse(const std::string& text, const std::string& origin) {
  // property_tree reports syntax errors with lines; a pre-scan anchors keys
  std::map<std::string, int> lines;
  {
    std::istringstream in(text);
    std::string line, section;
    for (int n = 1; std::getline(in, line); ++n) {
      boost::trim(line);
      if (line.empty() || line[0] == ';' || line[0] == '#') continue;
      if (line.front() == '[' && line.back() == ']') {
        section = line.substr(1, line.size() - 2);
        continue;
      }
      const auto eq = line.find('=');
      if (eq == std::string::npos) continue;
      const std::string key = boost::trim_copy(line.substr(0, eq));
      lines[section.empty() ? key : section + "." + key] = n;
    }
  }
  boost::property_tree::ptree tree;
  std::istringstream in(text);
  try {
    boost::property_tree::ini_parser::read_ini(in, tree);
  } catch (const boost::property_tree::ini_parser_error& e) {
    throw ConfigError(fmt::format("{}:{}: {}", origin, e.line(), e.message()));
  }
  RunConfig c;
  for (const auto& [section, body] : tree) {
    if (body.empty() && !body.data().empty())
      throw ConfigError(
          fmt::format("{}:{}: key '{}' outside a section", origin, lines.count(section) ? lines[section] : 0, section));
    for (const auto& [key, node] : body) {
      const std::string full = section + "." + key;
      const auto ln = lines.find(full);
      c.assign(full, boost::trim_copy(node.data()),
               fmt::format("{}:{}", origin, ln == lines.end() ? 0 : ln->second));
    }
  }
  // type-check everything up front so errors surface before any work
  for (const auto& [k, v] : c.values_) {
    if (v.empty() || k == "run.output" || k == "run.cache" || k == "run.log_level" || k == "grid.spacing" ||
        k == "packet.p_rule" || k == "packet.phase_source" || k == "phases.velocity")
      continue;
    c.list(k);
  }
  return c;
}

RunConfig RunConfig::load(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot read config '" + path + "'");
  std::stringstream ss;
  ss << in.rdbuf();
  return parse(ss.str(), path);
}

void RunConfig::set(const std::string& assignment, const std::string& origin) {
  const auto eq = assignment.find('=');
  if (eq == std::string::npos) throw ConfigError(origin + ": expected section.key=value, got '" + assignment + "'");
  const std::string key = boost::trim_copy(assignment.substr(0, eq));
  assign(key, boost::trim_copy(assignment.substr(eq + 1)), origin + " " + key);
  if (!values_[key].empty()) {
    try {
      list(key);
    } catch (const ConfigError&) {
      if (key != "run.output" && key != "run.cache" && key != "run.log_level" && key != "grid.spacing" &&
          key != "packet.p_rule" && key != "packet.phase_source" && key != "phases.velocity")
        throw;
    }
  }
}

std::string RunConfig::str(const std::string& key) const {
  const auto it = values_.find(key);
  if (it == values_.end()) throw ConfigError("unknown key '" + key + "'");
  return it->second;
}

double RunConfig::num(const std::string& key) const {
  const auto v = list(key);
  if (v.size() != 1) bad(key, "expected one number");
  return v[0];
}

int RunConfig::integer(const std::string& key) const {
  const double v = num(key);
  if (v != std::floor(v)) bad(key, "expected an integer");
  return static_cast<int>(v);
}

bool RunConfig::flag(const std::string& key) const {
  const auto v = boost::to_lower_copy(str(key));
  if (v == "true" || v == "1" || v == "yes") return true;
  if (v == "false" || v == "0" || v == "no") return false;
  bad(key, "expected a boolean");
}

std::vector<double> RunConfig::list(const std::string& key) const {
  std::vector<std::string> parts;
  const std::string s = str(key);
  boost::split(parts, s, boost::is_any_of(","));
  std::vector<double> out;
  for (auto& p : parts) {
    boost::trim(p);
    if (p.empty()) {
      if (parts.size() == 1) break;
      bad(key, "empty list entry");
    }
    try {
      out.push_back(boost::lexical_cast<double>(p));
    } catch (const boost::bad_lexical_cast&) {
      bad(key, "'" + p + "' is not a number");
    }
  }
  return out;
}

Eigen::Vector3d RunConfig::vec3(const std::string& key) const {
  const auto v = list(key);
  if (v.size() != 3) bad(key, "expected three numbers");
  return {v[0], v[1], v[2]};
}

std::string RunConfig::hash() const {
  std::string text;
  // where results go and how loudly they are produced does not change them
  for (const auto& [k, v] : values_)
    if (k != "run.output" && k != "run.cache" && k != "run.log_level" && k != "run.threads") text += k + " = " + v + "\n";
  return fnv1a_hex(text);
}

GridSpec grid_spec(const RunConfig& c) {
  GridSpec g;
  g.radial.spacing = c.str("grid.spacing");
  g.radial.count = c.integer("grid.count");
  g.radial.order = c.integer("grid.order");
  g.radial.rmin = c.num("grid.rmin");
  g.radial.shoulder_panels = c.integer("grid.shoulder_panels");
  g.angular.order = c.integer("grid.angular");
  g.angular.product = c.integer("grid.angular_product");
  g.sigma = c.num("grid.sigma");
  g.eps0 = c.num("grid.eps0");
  g.kappa = c.num("grid.kappa");
  return g;
}

SolveOptions solve_options(const RunConfig& c) {
  SolveOptions o;
  o.tol = c.num("solver.tol");
  o.fd_step = c.num("solver.fd_step");
  o.hess_step = c.num("solver.hess_step");
  o.grad_tol = c.num("solver.grad_tol");
  o.max_iter = c.integer("solver.max_iter");
  return o;
}

PhaseSettings phase_settings(const RunConfig& c) {
  PhaseSettings s;
  s.kappa = c.num("grid.kappa");
  s.eps0 = c.num("grid.eps0");
  s.tol = c.num("phases.tol");
  s.lmax = c.integer("phases.lmax");
  s.c0 = c.num("phases.c0");
  s.c1 = c.num("phases.c1");
  return s;
}

PacketConfig packet_config(const RunConfig& c, const GridPtr& grid, const BasisPtr& basis) {
  PacketConfig p;
  p.grid = grid;
  p.basis = basis;
  p.lambda = c.num("packet.lambda");
  p.sigma_cut = c.num("packet.sigma_cut");
  p.h_radius = c.num("packet.h_radius");
  p.h_center = c.vec3("packet.h_center");
  p.p_rule = c.str("packet.p_rule");
  p.p_radial = c.integer("packet.p_radial");
  p.p_angular = c.integer("packet.p_angular");
  p.p_tensor = c.integer("packet.p_tensor");
  p.x_angular = c.integer("packet.x_angular");
  p.x_tol = c.num("packet.x_tol");
  p.x_extent_factor = c.num("packet.x_extent_factor");
  p.x_min_extent = c.num("packet.x_min_extent");
  p.x_max_intervals = c.integer("packet.x_max_intervals");
  p.phase_source = c.str("packet.phase_source");
  p.phase = phase_settings(c);
  p.solve = solve_options(c);
  p.weyl_tol = c.num("packet.weyl_tol");
  return p;
}

}  // namespace nelson
