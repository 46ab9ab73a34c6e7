// cache.cpp: cereal-serialized records with a text .meta sidecar
#include "nelson/cache.hpp"

#include <cereal/archives/binary.hpp>
#include <cereal/types/complex.hpp>
#include <cereal/types/string.hpp>
#include <cereal/types/vector.hpp>
#include <fcntl.h>
#include <fmt/format.h>
#include <sys/file.h>
#include <unistd.h>

#include <cstdlib>
#include <fstream>

#include "nelson/errors.hpp"

namespace fs = std::filesystem;

namespace nelson {

namespace {

struct Blob {
  std::uint32_t version = kCacheVersion;
  std::string key;
  std::vector<double> p, gradE, gradE_hf, hessian;
  double sigma = 0, lambda = 0, energy = 0, energy_undressed = 0, residual = 0;
  std::string grid_hash, basis_hash;
  int n_max = 0, iterations = 0;
  std::vector<std::complex<double>> phi;

  template <class A>
  void serialize(A& ar) {
    ar(version, key, p, gradE, gradE_hf, hessian, sigma, lambda, energy, energy_undressed, residual, grid_hash,
       basis_hash, n_max, iterations, phi);
  }
};

std::string key_text(const CacheKey& k) {
  return fmt::format("grid={} basis={} p=({:.17g},{:.17g},{:.17g}) lambda={:.17g} sigma_cut={:.17g} solver={}",
                     k.grid_hash, k.basis_hash, k.p[0], k.p[1], k.p[2], k.lambda, k.sigma_cut, k.solver);
}

std::vector<double> flat(const double* d, int n) { return {d, d + n}; }

}  // namespace

std::string CacheKey::id() const { return grid_hash + "-" + fnv1a_hex(key_text(*this)); }

CacheLock::CacheLock(const fs::path& dir, bool wait) {
  fs::create_directories(dir);
  fd_ = ::open((dir / ".lock").c_str(), O_RDWR | O_CREAT, 0644);
  if (fd_ < 0) throw CacheError("cache: cannot open lock file in " + dir.string());
  if (::flock(fd_, LOCK_EX | (wait ? 0 : LOCK_NB)) != 0) {
    ::close(fd_);
    throw CacheError("cache: " + dir.string() + " is locked by a writer");
  }
}

CacheLock::~CacheLock() {
  ::flock(fd_, LOCK_UN);
  ::close(fd_);
}

GroundStateCache::GroundStateCache(fs::path dir) : dir_(std::move(dir)) {}

fs::path GroundStateCache::resolve_dir(const std::string& configured) {
  if (const char* env = std::getenv("NELSON_LAB_CACHE"); env && *env) return env;
  return configured;
}

std::optional<GroundStateRecord> GroundStateCache::load(const CacheKey& key) const {
  if (!enabled()) return std::nullopt;
  const fs::path file = dir_ / (key.id() + ".gsr");
  std::ifstream in(file, std::ios::binary);
  if (!in) return std::nullopt;
  Blob b;
  try {
    cereal::BinaryInputArchive ar(in);
    ar(b.version);
    if (b.version != kCacheVersion)
      throw CacheError(fmt::format("cache: {} has format version {}, expected {}; run cache-gc or clear the cache",
                                   file.string(), b.version, kCacheVersion));
    b.serialize(ar);
  } catch (const cereal::Exception& e) {
    throw CacheError("cache: unreadable record " + file.string() + ": " + e.what());
  }
  if (b.key != key_text(key)) throw CacheError("cache: key collision at " + file.string());
  GroundStateRecord r;
  r.p = Eigen::Map<const Eigen::Vector3d>(b.p.data());
  r.gradE = Eigen::Map<const Eigen::Vector3d>(b.gradE.data());
  r.gradE_hf = Eigen::Map<const Eigen::Vector3d>(b.gradE_hf.data());
  r.hessian = Eigen::Map<const Eigen::Matrix3d>(b.hessian.data());
  r.sigma = b.sigma;
  r.lambda = b.lambda;
  r.energy = b.energy;
  r.energy_undressed = b.energy_undressed;
  r.residual = b.residual;
  r.grid_hash = b.grid_hash;
  r.basis_hash = b.basis_hash;
  r.n_max = b.n_max;
  r.iterations = b.iterations;
  r.phi = Eigen::Map<const CVec>(b.phi.data(), static_cast<Eigen::Index>(b.phi.size()));
  return r;
}

void GroundStateCache::store(const CacheKey& key, const GroundStateRecord& r) const {
  if (!enabled()) return;
  CacheLock lock(dir_, true);
  Blob b;
  b.key = key_text(key);
  b.p = flat(r.p.data(), 3);
  b.gradE = flat(r.gradE.data(), 3);
  b.gradE_hf = flat(r.gradE_hf.data(), 3);
  b.hessian = flat(r.hessian.data(), 9);
  b.sigma = r.sigma;
  b.lambda = r.lambda;
  b.energy = r.energy;
  b.energy_undressed = r.energy_undressed;
  b.residual = r.residual;
  b.grid_hash = r.grid_hash;
  b.basis_hash = r.basis_hash;
  b.n_max = r.n_max;
  b.iterations = r.iterations;
  b.phi.assign(r.phi.data(), r.phi.data() + r.phi.size());
  const std::string id = key.id();
  const fs::path tmp = dir_ / (id + ".tmp");
  {
    std::ofstream out(tmp, std::ios::binary);
    cereal::BinaryOutputArchive ar(out);
    ar(b.version);
    b.serialize(ar);
  }
  {
    std::ofstream meta(dir_ / (id + ".meta"));
    meta << "version = " << kCacheVersion << "\n" << "grid_hash = " << key.grid_hash << "\n"
         << "basis_hash = " << key.basis_hash << "\n" << "key = " << b.key << "\n";
  }
  fs::rename(tmp, dir_ / (id + ".gsr"));
}

GroundStateRecord GroundStateCache::get_or_solve(const CacheKey& key,
                                                 const std::function<GroundStateRecord()>& solve) {
  if (auto r = load(key)) {
    ++hits_;
    return *r;
  }
  ++misses_;
  auto r = solve();
  store(key, r);
  return r;
}

GcReport cache_gc(const fs::path& dir, const std::set<std::string>& known) {
  GcReport rep;
  if (!fs::exists(dir)) return rep;
  CacheLock lock(dir, false);
  std::set<std::string> pins;
  if (std::ifstream in(dir / "pins.txt"); in)
    for (std::string line; std::getline(in, line);) {
      line.erase(0, line.find_first_not_of(" \t"));
      line.erase(line.find_last_not_of(" \t\r") + 1);
      if (!line.empty() && line[0] != '#') pins.insert(line);
    }
  std::vector<fs::path> files;
  for (const auto& e : fs::directory_iterator(dir))
    if (e.path().extension() == ".gsr") files.push_back(e.path());
  std::sort(files.begin(), files.end());
  for (const auto& f : files) {
    GcEntry e;
    e.id = f.stem().string();
    e.grid_hash = e.id.substr(0, e.id.find('-'));
    const fs::path meta = fs::path(f).replace_extension(".meta");
    e.bytes = fs::file_size(f) + (fs::exists(meta) ? fs::file_size(meta) : 0);
    if (known.count(e.grid_hash)) {
      e.action = "kept";
    } else if (pins.count(e.grid_hash) || pins.count(e.id)) {
      e.action = "pinned";
      ++rep.pinned;
    } else {
      e.action = "evicted";
      fs::remove(f);
      fs::remove(meta);
      rep.reclaimed += e.bytes;
      ++rep.evicted;
    }
    rep.entries.push_back(e);
  }
  return rep;
}

}  // namespace nelson
