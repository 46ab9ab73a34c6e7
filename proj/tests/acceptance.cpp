// acceptance.cpp: one PASS/FAIL line per acceptance criterion
//
//   acceptance --criterion N     run one criterion (1..13)
//   acceptance                   run all of them
//
// Criteria that exercise a whole experiment drive nelson-lab on the bundled
// configs and read its JSON manifest; the rest call the library directly.
// The ground-state cache is disabled so runtimes are cold.
#include <CLI11.hpp>
#include <fmt/format.h>
#include <json.hpp>

#include <chrono>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <random>
#include <sstream>
#include <sys/wait.h>

#include "nelson/config.hpp"
#include "nelson/spectral.hpp"
#include "oracles/phase_oracle.hpp"
#include "oracles/pt2_oracle.hpp"
#include "unit/common.hpp"

using namespace nelson;
namespace fs = std::filesystem;
using json = nlohmann::json;

namespace {

const std::string kDefault = std::string(NELSON_SOURCE_DIR) + "/configs/default.ini";
const std::string kTiny = std::string(NELSON_SOURCE_DIR) + "/configs/tiny.ini";

class Stopwatch {
 public:
  double seconds() const { return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0_).count(); }

 private:
  std::chrono::steady_clock::time_point t0_ = std::chrono::steady_clock::now();
};

void detail(const std::string& s) {
  fmt::print("  {}\n", s);
  std::fflush(stdout);
}

bool verdict(int n, bool pass, const std::string& summary) {
  fmt::print("{} criterion {}: {}\n", pass ? "PASS" : "FAIL", n, summary);
  std::fflush(stdout);
  return pass;
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::stringstream s;
  s << in.rdbuf();
  return s.str();
}

struct LabRun {
  int code = -1;
  json manifest;
  fs::path out;
  double wall = 0;
};

LabRun lab(const std::string& sub, const std::string& config, const std::string& tag,
           const std::vector<std::string>& sets = {}) {
  LabRun r;
  r.out = fs::temp_directory_path() / ("nelson-acceptance-" + tag);
  fs::remove_all(r.out);
  std::string cmd = fmt::format("'{}' {} --config '{}' --set 'run.output={}' --set run.cache= --set run.log_level=warn",
                                NELSON_LAB, sub, config, r.out.string());
  for (const auto& s : sets) cmd += " --set '" + s + "'";
  detail(cmd);
  Stopwatch sw;
  const int status = std::system(cmd.c_str());
  r.wall = sw.seconds();
  r.code = WIFEXITED(status) ? WEXITSTATUS(status) : -1;
  if (fs::exists(r.out / (sub + ".json"))) r.manifest = json::parse(slurp(r.out / (sub + ".json")));
  return r;
}

// All manifest checks whose names start with one of the prefixes must pass.
bool checks_pass(const LabRun& r, const std::vector<std::string>& prefixes, int& matched) {
  bool ok = true;
  matched = 0;
  if (r.manifest.is_null()) return false;
  for (const auto& c : r.manifest["checks"]) {
    const std::string name = c["name"];
    for (const auto& p : prefixes)
      if (name.rfind(p, 0) == 0) {
        ++matched;
        ok &= c["pass"].get<bool>();
        break;
      }
  }
  return ok && matched > 0;
}

BasisPtr basis(int modes, int n_max) { return std::make_shared<const FockBasis>(modes, n_max); }

// 1. Lanczos against the dense solver on 4 modes, n_max 3.
bool criterion1() {
  Stopwatch sw;
  const auto g = testing::grid4();
  const auto b = basis(4, 3);
  std::mt19937_64 rng(1);
  std::uniform_real_distribution<double> u(-1, 1), ul(0, 0.2);
  double worst = 0;
  for (int s = 0; s < 10; ++s) {
    // |p| ≤ 0.3 keeps ∇E inside the dressing bound
    Eigen::Vector3d p(u(rng), u(rng), u(rng));
    p *= 0.3 * std::abs(u(rng)) / std::max(p.norm(), 1e-12);
    const auto H = assemble_fiber(p, g, ul(rng), b);
    worst = std::max(worst, std::abs(ground_state(H, 1e-12, 4000, EigenMethod::lanczos).energy -
                                      dense_ground_state(H).energy));
  }
  const double t = sw.seconds();
  return verdict(1, worst <= 1e-9 && t <= 5, fmt::format("max |dE| = {:.3g} (<= 1e-9), {:.2f} s (<= 5 s)", worst, t));
}

// 2. |E − E_PT2| ∝ λ⁴: successive ratios over λ = 0.1, 0.05, 0.025 in [12, 20].
bool criterion2() {
  const Eigen::Vector3d p(0.1, 0.05, 0);
  bool ok = true;
  std::string summary;
  const std::vector<std::pair<std::string, GridPtr>> grids = {
      {"4 modes", testing::grid4()}, {"24 modes", testing::grid24()}, {"48 modes", build_grid(GridSpec{})}};
  for (const auto& [name, g] : grids) {
    Stopwatch sw;
    const auto b = basis(static_cast<int>(g->mode_count()), 3);
    std::vector<double> d;
    for (double l : {0.1, 0.05, 0.025})
      d.push_back(std::abs(ground_state(assemble_fiber(p, g, l, b), 1e-13).energy - oracle::pt2_energy(p, g, l)));
    const double r1 = d[0] / d[1], r2 = d[1] / d[2], t = sw.seconds();
    const bool pass = r1 >= 12 && r1 <= 20 && r2 >= 12 && r2 <= 20 && t <= 30;
    detail(fmt::format("{}: ratios {:.3f}, {:.3f}; {:.1f} s", name, r1, r2, t));
    summary += fmt::format("{}{} {:.2f}/{:.2f}", summary.empty() ? "" : "; ", name, r1, r2);
    ok &= pass;
  }
  return verdict(2, ok, "ratios in [12, 20], <= 30 s per grid: " + summary);
}

// 3. Energy landscape at λ = 0.1 over 20 momenta with |p| ≤ 0.3.
bool criterion3() {
  const auto r = lab("ground", kDefault, "ground");
  int n = 0;
  const bool ok = r.code == 0 && checks_pass(r, {"max |grad E| lambda=0.1", "min Hessian eigenvalue lambda=0.1",
                                                  "HF vs FD gradient lambda=0.1"}, n) && n == 3;
  std::string s;
  for (const auto& c : r.manifest["checks"]) s += fmt::format("{} {:.4g}; ", c["name"].get<std::string>(), c["value"].get<double>());
  return verdict(3, ok, s + fmt::format("{:.0f} s", r.wall));
}

// 4. σ-scaling slopes, ≤ 10 min.
bool criterion4() {
  const auto r = lab("scaling", kDefault, "scaling");
  int n = 0;
  const bool ok = checks_pass(r, {"energy slope", "aligned vector slope", "H_f vector slope"}, n) && n == 3;
  std::string s;
  for (const auto& c : r.manifest["checks"])
    if (c["name"].get<std::string>().find("slope") != std::string::npos)
      s += fmt::format("{} {:.3f}; ", c["name"].get<std::string>(), c["value"].get<double>());
  return verdict(4, ok && r.wall <= 600, s + fmt::format("{:.0f} s (<= 600 s)", r.wall));
}

// 5. Weyl operators: coherent state, Weyl relation, norm defect, c ≤ 2 bounds.
bool criterion5() {
  const auto g = testing::grid24();
  const auto b = basis(24, 3);
  const ModeFunction f = form_factor(g, 0.3);
  const double coh = (weyl_apply(f, vacuum(*b), *b, INFINITY).vec - coherent_vector(f, *b, INFINITY).vec).norm();

  double unit = 0;
  for (int s = 0; s < 5; ++s) {
    const CVec psi = testing::random_vector(b->dim(), 40 + s).normalized();
    const auto w = weyl_apply(f, psi, *b, INFINITY);
    unit = std::max(unit, std::abs(w.vec.norm() - 1) - w.tail);
  }

  // deep cap on 4 modes so truncation stays out of the relation
  const auto deep = basis(4, 14);
  double relation = 0;
  for (int s = 0; s < 5; ++s) {
    const CVec F = testing::random_vector(4, 50 + s, 0.05), G = testing::random_vector(4, 60 + s, 0.05);
    CVec phi = CVec::Zero(deep->dim());
    for (std::size_t i = 0; i < deep->sector_begin(3); ++i) phi[i] = testing::random_vector(1, 1000 * s + i)[0];
    phi.normalize();
    const CVec lhs = weyl_apply(F, weyl_apply(G, phi, *deep, INFINITY).vec, *deep, INFINITY).vec;
    const CVec rhs = std::exp(cplx(0, -F.dot(G).imag())) * weyl_apply(F + G, phi, *deep, INFINITY).vec;
    relation = std::max(relation, (lhs - rhs).norm());
  }

  const auto g4 = testing::grid4();
  const auto b4 = basis(4, 3);
  double c = 0;
  for (int s = 0; s < 10; ++s) {
    const auto r = operator_bound_ratios(ModeFunction{g4, testing::random_vector(4, 70 + s)}, *b4);
    c = std::max({c, r.energy_annihilate, r.energy_create, r.number_annihilate, r.number_create});
  }
  const bool ok = coh <= 1e-9 && relation <= 1e-6 && unit <= 1e-10 && c <= 2;
  return verdict(5, ok,
                 fmt::format("coherent {:.2g} (<= 1e-9); Weyl relation {:.2g} (<= 1e-6); norm defect beyond tail "
                             "{:.2g} (<= 1e-10); bound constant {:.4f} (<= 2)",
                             coh, relation, unit, c));
}

// 6. Phase quadrature against the adaptive oracle, the mode-sum identity, λ² scaling.
bool criterion6() {
  std::mt19937_64 rng(6);
  std::uniform_real_distribution<double> u(0, 1);
  std::normal_distribution<double> nd;
  auto unit = [&] { return Eigen::Vector3d(nd(rng), nd(rng), nd(rng)).normalized(); };
  double worst = 0, worst_abs = 0;
  int floored = 0;
  for (int s = 0; s < 50; ++s) {
    const double t = std::pow(10.0, 3 * u(rng));
    const Eigen::Vector3d x = unit() * t * 1.6 * u(rng);
    const Eigen::Vector3d gE = unit() * 0.45 * u(rng);
    const double lambda = 0.05 + 0.2 * u(rng);
    const auto ref = oracle::phases(x, t, lambda, gE);
    const auto v = phase_values(x, t, lambda, gE);
    // relative error, except where the value has decayed under the λ²·1e-6
    // level and only its absolute accuracy is meaningful
    const double floor = 1e-6 * lambda * lambda;
    for (auto [a, b] : {std::pair{v.gamma, ref.gamma}, std::pair{v.gamma_int, ref.gamma_int}}) {
      if (std::abs(b) < floor) {
        ++floored;
        worst_abs = std::max(worst_abs, std::abs(a - b) / floor);
      } else {
        worst = std::max(worst, std::abs(a - b) / std::abs(b));
      }
    }
  }

  RadialSpec r;
  r.spacing = "gauss";
  r.count = 48;
  r.shoulder_panels = 4;
  AngularSpec a;
  a.product = 24;
  const auto g = build_grid(r, a, 0.0);
  const double lambda = 0.2;
  const Eigen::Vector3d gE(0.1, -0.2, 0.05);
  const auto vf = form_factor(g, lambda);
  double identity = 0;
  for (int s = 0; s < 8; ++s) {
    const double t = 3 * u(rng);
    const Eigen::Vector3d x = unit() * 2 * u(rng);
    cplx acc = 0;
    for (std::size_t i = 0; i < g->mode_count(); ++i) {
      const auto& m = g->modes[i];
      acc += std::conj(f_p_eval(m.k, lambda, gE) * std::sqrt(m.weight) * std::exp(cplx(0, -m.r * t + m.k.dot(x)))) *
             vf.values[i];
    }
    identity = std::max(identity, std::abs(2 * acc.real() - gamma_int(x, t, lambda, gE)));
  }

  double scaling = 0;
  for (int s = 0; s < 8; ++s) {
    const double t = std::pow(10.0, 3 * u(rng));
    const Eigen::Vector3d x = unit() * t * 1.5 * u(rng), gEs = unit() * 0.4 * u(rng);
    const auto p1 = phase_values(x, t, 0.1, gEs), p2 = phase_values(x, t, 0.2, gEs);
    scaling = std::max({scaling, std::abs(p2.gamma - 4 * p1.gamma) / std::max(std::abs(p2.gamma), 1e-300),
                        std::abs(p2.gamma_int - 4 * p1.gamma_int) / std::max(std::abs(p2.gamma_int), 1e-300)});
  }
  detail(fmt::format("{} of 100 values under the floor; worst absolute error there {:.2g} x 1e-6 lambda^2", floored,
                     worst_abs));
  const bool ok = worst <= 1e-7 && worst_abs <= 1e-7 && identity <= 1e-8 && scaling <= 1e-12;
  return verdict(6, ok,
                 fmt::format("oracle rel. err {:.2g} (<= 1e-7); identity {:.2g} (<= 1e-8); lambda^2 scaling {:.2g} "
                             "(<= 1e-12)",
                             worst, identity, scaling));
}

// 7. Decay regimes of γ_int along x = v t, t ∈ [10², 10⁴], each fit ≤ 2 min.
bool criterion7() {
  const auto cfg = RunConfig::load(kDefault);
  const auto s = phase_settings(cfg);
  const auto vel = model_velocity(cfg.num("phases.beta"));
  const auto p = cfg.vec3("phases.p");
  const double lambda = cfg.num("phases.lambda");
  std::vector<double> ladder;
  const int n = cfg.integer("phases.t_points");
  for (int i = 0; i < n; ++i) ladder.push_back(1e2 * std::pow(1e2, double(i) / (n - 1)));
  bool ok = true;
  std::string summary;
  for (double ratio : {0.3, 1.0, 1.5}) {
    Stopwatch sw;
    const bool light = ratio == 1.0;
    const auto fit = decay_fit(p, Eigen::Vector3d(ratio, 0, 0), ladder, lambda, vel, light, s);
    const double t = sw.seconds();
    const bool pass = (light ? std::abs(fit.slope + 1) <= 0.15 : fit.slope <= -3) && t <= 120;
    detail(fmt::format("|x|/t = {}: slope {:.4f}{} over {} points, {:.1f} s -> {}", ratio, fit.slope,
                       light ? fmt::format(" (log log coefficient {:.3f})", fit.log_coeff) : "", fit.points, t,
                       pass ? "pass" : "fail"));
    summary += fmt::format("{}{}: {:.3f}", summary.empty() ? "" : "; ", ratio, fit.slope);
    ok &= pass;
  }
  return verdict(7, ok, "slopes at |x|/t " + summary + " (inside/outside <= -3, light cone -1 +- 0.15)");
}

// 8. Log envelopes over three decades.
bool criterion8() {
  const auto r = lab("envelope", kDefault, "envelope-log");
  int n = 0;
  const bool ok = checks_pass(r, {"log envelope"}, n) && n == 3;
  std::string s;
  for (const auto& c : r.manifest["checks"])
    if (c["name"].get<std::string>().rfind("log envelope", 0) == 0)
      s += fmt::format("{} {:.3f}; ", c["name"].get<std::string>(), c["value"].get<double>());
  return verdict(8, ok, s + "(<= 2)");
}

// 9. Cook integrand on the default grid, ≤ 30 min.
bool criterion9() {
  const auto r = lab("cook", kDefault, "cook");
  int n = 0;
  const bool ok = checks_pass(r, {"Cook slope", "Cook integral finite", "lambda ratio"}, n) && n == 4;
  std::string s;
  for (const auto& c : r.manifest["checks"]) s += fmt::format("{} {:.4g}; ", c["name"].get<std::string>(), c["value"].get<double>());
  return verdict(9, ok && r.wall <= 1800, s + fmt::format("{:.0f} s (<= 1800 s)", r.wall));
}

// 10. Non-triviality: D(λ)/λ^{1/4} spread and certified lower bound, ≤ 15 min.
bool criterion10() {
  const auto r = lab("packet", kDefault, "packet");
  int n = 0;
  const bool ok = checks_pass(r, {"D/lambda^(1/4) spread", "lower bound at lambda=0.05"}, n) && n == 2;
  std::string s;
  for (const auto& c : r.manifest["checks"]) s += fmt::format("{} {:.4g}; ", c["name"].get<std::string>(), c["value"].get<double>());
  if (r.manifest.contains("results"))
    for (const auto& row : r.manifest["results"]["packet"])
      detail(fmt::format("lambda {}: D = {:.4g}, D/lambda^(1/4) = {:.4g}", row["lambda"].get<double>(),
                         row["D"].get<double>(), row["ratio"].get<double>()));
  return verdict(10, ok && r.wall <= 900, s + fmt::format("{:.0f} s (<= 900 s)", r.wall));
}

// 11. Stationary-phase envelopes of the free dispersion.
bool criterion11() {
  const auto r = lab("envelope", kDefault, "envelope-stationary");
  int n = 0;
  const bool ok = checks_pass(r, {"free pointwise slope", "inside L2", "outside L2 slope"}, n) && n == 3;
  std::string s;
  for (const auto& c : r.manifest["checks"])
    if (c["name"].get<std::string>().rfind("log", 0) != 0)
      s += fmt::format("{} {:.4g}; ", c["name"].get<std::string>(), c["value"].get<double>());
  return verdict(11, ok, s);
}

// 12. Wavefunction envelope at σ = 0.05 and vacuum distance across λ.
bool criterion12() {
  const auto cfg = RunConfig::load(kDefault);
  const auto grid = build_grid(grid_spec(cfg));
  const auto b = basis(static_cast<int>(grid->mode_count()), cfg.integer("basis.n_max"));
  auto opt = solve_options(cfg);
  opt.sigma_cut = 0.05;
  const Eigen::Vector3d p = cfg.vec3("scaling.p");
  // bounded: the scaled distance must not grow as λ decreases along the ladder
  double first = -1, hi = 0;
  bool ok = true;
  std::string summary;
  for (double lambda : {0.2, 0.1, 0.05}) {
    const auto env = wavefunction_envelope_check(self_consistent_dressed(p, grid, lambda, b, opt), grid, b);
    const double scaled = env.vacuum_distance / std::pow(lambda, 0.25);
    if (first < 0) first = scaled;
    hi = std::max(hi, scaled);
    detail(fmt::format("lambda {}: ratios {:.4g}, {:.4g}, {:.4g}; |phi - Omega|/lambda^(1/4) = {:.4g}", lambda,
                       env.max_ratio[1], env.max_ratio[2], env.max_ratio[3], scaled));
    if (lambda == 0.1) {
      ok &= env.max_ratio[2] <= 1.5 * env.max_ratio[1] && env.max_ratio[3] <= 1.5 * env.max_ratio[1];
      summary = fmt::format("n=2,3 ratios {:.3f}, {:.3f} x the n=1 constant (<= 1.5)", env.max_ratio[2] / env.max_ratio[1],
                            env.max_ratio[3] / env.max_ratio[1]);
    }
  }
  ok &= hi <= 2 * first;
  return verdict(12, ok, summary + fmt::format("; scaled vacuum distance max/first {:.3f} (<= 2)", hi / first));
}

// 13. check on the tiny config: green, ≤ 60 s, identical CSV bytes across runs.
bool criterion13() {
  const auto a = lab("check", kTiny, "check-a");
  const auto b = lab("check", kTiny, "check-b");
  const std::string x = slurp(a.out / "check.csv"), y = slurp(b.out / "check.csv");
  const bool same = !x.empty() && x == y;
  const bool ok = a.code == 0 && b.code == 0 && same && a.wall <= 60 && b.wall <= 60;
  return verdict(13, ok,
                 fmt::format("exit codes {}, {}; {:.1f} s and {:.1f} s (<= 60 s); CSV bytes {}", a.code, b.code, a.wall,
                             b.wall, same ? "identical" : "differ"));
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"acceptance criteria"};
  int which = 0;
  app.add_option("--criterion", which, "criterion number (default: all)")->check(CLI::Range(1, 13));
  CLI11_PARSE(app, argc, argv);
  unsetenv("NELSON_LAB_CACHE");
  const std::vector<bool (*)()> all = {criterion1, criterion2,  criterion3,  criterion4,  criterion5,
                                       criterion6, criterion7,  criterion8,  criterion9,  criterion10,
                                       criterion11, criterion12, criterion13};
  bool ok = true;
  for (int i = 1; i <= 13; ++i) {
    if (which != 0 && which != i) continue;
    try {
      ok &= all[i - 1]();
    } catch (const std::exception& e) {
      ok &= verdict(i, false, std::string("error: ") + e.what());
    }
  }
  return ok ? 0 : 1;
}
