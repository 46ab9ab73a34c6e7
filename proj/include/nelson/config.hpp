// config.hpp: INI run configuration with line-anchored errors and overrides
#pragma once

#include <map>
#include <string>
#include <vector>

#include "nelson/fock.hpp"
#include "nelson/modegrid.hpp"
#include "nelson/phases.hpp"
#include "nelson/spectral.hpp"
#include "nelson/wavepacket.hpp"

namespace nelson {

class RunConfig {
 public:
  // All keys with defaults; `section.key` naming.
  RunConfig();

  // Parses an INI file on top of the defaults. Unknown keys and malformed
  // values raise ConfigError naming file and line.
  static RunConfig load(const std::string& path);
  static RunConfig parse(const std::string& text, const std::string& origin = "<string>");

  // `section.key=value`; unknown keys raise ConfigError.
  void set(const std::string& assignment, const std::string& origin = "--set");

  std::string str(const std::string& key) const;
  double num(const std::string& key) const;
  int integer(const std::string& key) const;
  bool flag(const std::string& key) const;
  std::vector<double> list(const std::string& key) const;
  Eigen::Vector3d vec3(const std::string& key) const;

  const std::map<std::string, std::string>& values() const { return values_; }
  std::string hash() const;  // FNV-1a over the resolved key = value lines

 private:
  void assign(const std::string& key, const std::string& value, const std::string& where);
  [[noreturn]] void bad(const std::string& key, const std::string& what) const;
  std::map<std::string, std::string> values_;
  std::map<std::string, std::string> where_;  // key -> "file:line"
};

GridSpec grid_spec(const RunConfig& c);
SolveOptions solve_options(const RunConfig& c);
PhaseSettings phase_settings(const RunConfig& c);
PacketConfig packet_config(const RunConfig& c, const GridPtr& grid, const BasisPtr& basis);

}  // namespace nelson
