// cache.hpp: persistent ground-state records keyed by grid, basis and (p, λ, σ)
#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <filesystem>
#include <functional>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include "nelson/spectral.hpp"

namespace nelson {

inline constexpr std::uint32_t kCacheVersion = 1;

struct CacheKey {
  std::string grid_hash;
  std::string basis_hash;
  Eigen::Vector3d p = Eigen::Vector3d::Zero();
  double lambda = 0;
  double sigma_cut = -1;
  std::string solver;  // solver settings that change the record

  std::string id() const;  // file stem: <grid_hash>-<16 hex>
};

// Exclusive flock on <dir>/.lock; blocking or fail-fast.
class CacheLock {
 public:
  CacheLock(const std::filesystem::path& dir, bool wait);
  ~CacheLock();
  CacheLock(const CacheLock&) = delete;
  CacheLock& operator=(const CacheLock&) = delete;

 private:
  int fd_ = -1;
};

class GroundStateCache {
 public:
  // Empty dir disables persistence.
  explicit GroundStateCache(std::filesystem::path dir = {});

  // NELSON_LAB_CACHE overrides the configured directory.
  static std::filesystem::path resolve_dir(const std::string& configured);

  const std::filesystem::path& dir() const { return dir_; }
  bool enabled() const { return !dir_.empty(); }

  // Throws CacheError on a version mismatch or a key collision.
  std::optional<GroundStateRecord> load(const CacheKey& key) const;
  void store(const CacheKey& key, const GroundStateRecord& rec) const;
  GroundStateRecord get_or_solve(const CacheKey& key, const std::function<GroundStateRecord()>& solve);

  int hits() const { return hits_; }
  int misses() const { return misses_; }

 private:
  std::filesystem::path dir_;
  int hits_ = 0, misses_ = 0;
};

struct GcEntry {
  std::string id;
  std::string grid_hash;
  std::uintmax_t bytes = 0;
  std::string action;  // kept | evicted | pinned
};

struct GcReport {
  std::vector<GcEntry> entries;
  std::uintmax_t reclaimed = 0;
  int evicted = 0;
  int pinned = 0;
};

// Evicts records whose grid hash is not in `known` unless listed (by grid hash
// or record id) in <dir>/pins.txt. Throws CacheError while a writer holds the lock.
GcReport cache_gc(const std::filesystem::path& dir, const std::set<std::string>& known);

}  // namespace nelson
