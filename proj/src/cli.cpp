// cli.cpp: subcommands writing CSV + manifest + plot script per table
#include "nelson/cli.hpp"

#include <CLI11.hpp>
#include <fmt/format.h>
#include <fmt/ostream.h>
#include <json.hpp>
#include <spdlog/spdlog.h>

#include <chrono>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <random>

#include "nelson/cache.hpp"
#include "nelson/errors.hpp"

namespace fs = std::filesystem;
using json = nlohmann::json;

namespace nelson {

namespace {

std::string num(double v) { return fmt::format("{:.17g}", v); }

class Table {
 public:
  Table(std::string name, std::vector<std::string> columns) : name_(std::move(name)), columns_(std::move(columns)) {}
  void row(const std::vector<std::string>& cells) { rows_.push_back(cells); }
  const std::string& name() const { return name_; }

  // Every row carries the config hash in the first column.
  void write(const fs::path& dir, const std::string& hash) const {
    std::ofstream out(dir / (name_ + ".csv"));
    out << "config_hash";
    for (const auto& c : columns_) out << "," << c;
    out << "\n";
    for (const auto& r : rows_) {
      out << hash;
      for (const auto& c : r) out << "," << c;
      out << "\n";
    }
    std::ofstream py(dir / (name_ + "_plot.py"));
    py << "# Plot " << name_ << ".csv: first numeric column against the others on log axes.\n"
       << "import sys\nimport pandas as pd\nimport matplotlib\nmatplotlib.use('Agg')\n"
       << "import matplotlib.pyplot as plt\n\n"
       << "df = pd.read_csv('" << name_ << ".csv')\n"
       << "num = [c for c in df.columns if c != 'config_hash' and pd.api.types.is_numeric_dtype(df[c])]\n"
       << "fig, ax = plt.subplots()\n"
       << "for c in num[1:]:\n"
       << "    y = df[c].abs()\n"
       << "    if (y > 0).any():\n"
       << "        ax.loglog(df[num[0]].abs(), y, 'o-', label=c)\n"
       << "ax.set_xlabel(num[0])\nax.legend(fontsize='small')\n"
       << "fig.savefig(sys.argv[1] if len(sys.argv) > 1 else '" << name_ << ".png', dpi=120)\n";
  }

 private:
  std::string name_;
  std::vector<std::string> columns_;
  std::vector<std::vector<std::string>> rows_;
};

struct Context {
  RunConfig cfg;
  std::string sub;
  fs::path out;
  std::string hash;
  int threads = 1;
  GroundStateCache cache;
  std::vector<Table> tables;
  std::vector<CheckRow> checks;
  json extra = json::object();

  GridPtr grid() const { return build_grid(grid_spec(cfg)); }
  BasisPtr basis(const GridPtr& g) const {
    return std::make_shared<const FockBasis>(static_cast<int>(g->mode_count()), cfg.integer("basis.n_max"));
  }
  void check(const std::string& name, double value, double threshold, bool pass) {
    checks.push_back({name, value, threshold, pass});
  }
};

// Cached self-consistent solve.
GroundStateRecord cached_solve(Context& ctx, const Eigen::Vector3d& p, double lambda, const GridPtr& grid,
                               const BasisPtr& basis, const SolveOptions& opt) {
  CacheKey key{grid->hash(), basis->hash(), p, lambda, opt.sigma_cut,
               fmt::format("tol={:.3g} fd={:.3g} grad_tol={:.3g} hessian={}", opt.tol, opt.fd_step, opt.grad_tol,
                           opt.hessian)};
  return ctx.cache.get_or_solve(key, [&] { return self_consistent_dressed(p, grid, lambda, basis, opt); });
}

std::vector<Eigen::Vector3d> ball_samples(int n, double radius, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> u(-1, 1);
  std::vector<Eigen::Vector3d> out;
  while (static_cast<int>(out.size()) < n) {
    const Eigen::Vector3d v(u(rng), u(rng), u(rng));
    if (v.norm() <= 1) out.push_back(radius * v);
  }
  return out;
}

std::vector<double> geometric(double a, double b, int n) {
  std::vector<double> t;
  for (int i = 0; i < n; ++i) t.push_back(n == 1 ? a : a * std::pow(b / a, double(i) / (n - 1)));
  return t;
}

void cmd_ground(Context& ctx) {
  const auto grid = ctx.grid();
  const auto basis = ctx.basis(grid);
  const auto opt = solve_options(ctx.cfg);
  const auto samples = ball_samples(ctx.cfg.integer("ground.samples"), ctx.cfg.num("ground.p_max"),
                                    static_cast<std::uint64_t>(ctx.cfg.integer("run.seed")));
  Table t("ground", {"lambda", "px", "py", "pz", "energy", "grad_fd_x", "grad_fd_y", "grad_fd_z", "grad_hf_x",
                     "grad_hf_y", "grad_hf_z", "min_hessian_eig"});
  for (double lambda : ctx.cfg.list("ground.lambdas")) {
    const auto L = energy_landscape(samples, grid, lambda, basis, opt.sigma_cut, opt.fd_step, opt.hess_step,
                                    ctx.threads);
    for (const auto& r : L.rows)
      t.row({num(lambda), num(r.p[0]), num(r.p[1]), num(r.p[2]), num(r.energy), num(r.grad_fd[0]),
             num(r.grad_fd[1]), num(r.grad_fd[2]), num(r.grad_hf[0]), num(r.grad_hf[1]), num(r.grad_hf[2]),
             num(r.min_hessian_eig)});
    const std::string tag = fmt::format("lambda={}", lambda);
    ctx.check("max |grad E| " + tag, L.max_grad, 0.5, L.max_grad <= 0.5);
    ctx.check("min Hessian eigenvalue " + tag, L.min_hessian_eig, 0.0, L.min_hessian_eig > 0);
    ctx.check("HF vs FD gradient " + tag, L.max_hf_fd_reldiff, 1e-4, L.max_hf_fd_reldiff <= 1e-4);
  }
  ctx.tables.push_back(std::move(t));
}

void cmd_scaling(Context& ctx) {
  auto gs = grid_spec(ctx.cfg);
  const double ref = ctx.cfg.num("scaling.reference");
  if (gs.sigma > ref) throw ConfigError("scaling: grid.sigma must not exceed scaling.reference");
  const auto grid = build_grid(gs);
  const auto basis = ctx.basis(grid);
  const auto opt = solve_options(ctx.cfg);
  const auto p = ctx.cfg.vec3("scaling.p");
  const auto rep = sigma_scaling_study(p, ctx.cfg.num("scaling.lambda"), ctx.cfg.list("scaling.ladder"), ref, grid,
                                       basis, opt);
  Table t("scaling", {"sigma", "dE", "dgrad", "dphi", "dphi_aligned", "hf0", "hf1", "hf2"});
  for (const auto& r : rep.rows)
    t.row({num(r.sigma), num(r.dE), num(r.dgrad), num(r.dphi), num(r.dphi_aligned), num(r.hf[0]), num(r.hf[1]),
           num(r.hf[2])});
  ctx.tables.push_back(std::move(t));
  ctx.check("energy slope", rep.energy.slope, 0.9, rep.energy.slope >= 0.9);
  ctx.check("aligned vector slope", rep.vector_aligned.slope, 0.4, rep.vector_aligned.slope >= 0.4);
  ctx.check("H_f vector slope", rep.hf[1].slope, 0.15, rep.hf[1].slope >= 0.15);

  // wavefunction envelope and vacuum distance across λ
  SolveOptions eo = opt;
  eo.sigma_cut = ctx.cfg.num("scaling.envelope_sigma");
  Table e("envelope_wavefunction", {"lambda", "ratio1", "ratio2", "ratio3", "vacuum_distance", "distance_scaled"});
  // an upper bound: the scaled distance must not grow as λ decreases
  double first = -1, hi = 0;
  for (double lambda : ctx.cfg.list("scaling.envelope_lambdas")) {
    const auto rec = cached_solve(ctx, p, lambda, grid, basis, eo);
    const auto env = wavefunction_envelope_check(rec, grid, basis);
    const double scaled = env.vacuum_distance / std::pow(lambda, 0.25);
    if (first < 0) first = scaled;
    hi = std::max(hi, scaled);
    e.row({num(lambda), num(env.max_ratio[1]), num(env.max_ratio[2]), num(env.max_ratio[3]),
           num(env.vacuum_distance), num(scaled)});
    if (std::abs(lambda - 0.1) < 1e-12)
      for (int n = 2; n <= 3; ++n)
        ctx.check(fmt::format("n={} envelope ratio vs 1.5 x n=1", n), env.max_ratio[n], 1.5 * env.max_ratio[1],
                  env.max_ratio[n] <= 1.5 * env.max_ratio[1]);
  }
  ctx.check("|phi - Omega|/lambda^(1/4) max over first", hi / first, 2.0, hi <= 2 * first);
  ctx.tables.push_back(std::move(e));
}

VelocityField velocity(const Context& ctx, const std::string& prefix) {
  const std::string kind = ctx.cfg.str(prefix + ".velocity");
  if (kind == "model") return model_velocity(ctx.cfg.num(prefix + ".beta"));
  if (kind == "coupled") {
    const auto grid = ctx.grid();
    const auto basis = ctx.basis(grid);
    std::vector<double> rho, e;
    for (int i = 0; i <= 6; ++i) {
      rho.push_back(0.3 * i / 6);
      e.push_back(self_consistent_dressed(Eigen::Vector3d(rho.back(), 0, 0), grid, ctx.cfg.num(prefix + ".lambda"),
                                          basis, solve_options(ctx.cfg))
                      .energy);
    }
    return coupled_velocity(fit_radial_energy(rho, e));
  }
  throw ConfigError("phases.velocity must be 'model' or 'coupled'");
}

void cmd_phases(Context& ctx) {
  const auto s = phase_settings(ctx.cfg);
  const auto v = velocity(ctx, "phases");
  const auto p = ctx.cfg.vec3("phases.p");
  const double lambda = ctx.cfg.num("phases.lambda");
  const auto ladder = geometric(ctx.cfg.num("phases.t_min"), ctx.cfg.num("phases.t_max"),
                                ctx.cfg.integer("phases.t_points"));
  Table t("phases", {"px", "py", "pz", "x1", "x2", "x3", "t", "gamma", "gamma_int", "vel_ratio", "regime",
                     "err_est"});
  std::mt19937_64 rng(static_cast<std::uint64_t>(ctx.cfg.integer("run.seed")));
  std::uniform_real_distribution<double> u(-1, 1);
  for (int i = 0; i < ctx.cfg.integer("phases.samples"); ++i) {
    Eigen::Vector3d dir(u(rng), u(rng), u(rng));
    dir.normalize();
    const double tt = std::pow(10.0, 1 + 2 * (u(rng) + 1) / 2);
    const double ratio = 0.75 * (u(rng) + 1);
    const auto smp = phase_sample(p, ratio * tt * dir, tt, lambda, v, s);
    t.row({num(p[0]), num(p[1]), num(p[2]), num(smp.x[0]), num(smp.x[1]), num(smp.x[2]), num(tt), num(smp.gamma),
           num(smp.gamma_int), num(smp.velocity_ratio), regime_name(smp.regime), num(smp.err_est)});
  }
  ctx.tables.push_back(std::move(t));
  Table d("phases_decay", {"ratio", "t", "abs_gamma_int", "err", "below_noise"});
  for (double r : ctx.cfg.list("phases.ratios")) {
    const bool light = std::abs(r - 1) < 1e-12;
    const auto fit = decay_fit(p, Eigen::Vector3d(r, 0, 0), ladder, lambda, v, light, s);
    for (std::size_t i = 0; i < fit.t.size(); ++i)
      d.row({num(r), num(fit.t[i]), num(fit.value[i]), num(fit.err[i]), fit.below_noise[i] ? "1" : "0"});
    if (light)
      ctx.check("light-cone slope", fit.slope, -1.0, std::abs(fit.slope + 1) <= 0.15);
    else
      ctx.check(fmt::format("slope at |x|/t={}", r), fit.slope, -3.0, fit.slope <= -3);
  }
  ctx.tables.push_back(std::move(d));
}

GroundStates packet_states(Context& ctx, PacketConfig pc, double lambda) {
  pc.lambda = lambda;
  SolveOptions opt = pc.solve;
  opt.sigma_cut = pc.sigma_cut;
  return prepare_ground_states(pc, [&](const Eigen::Vector3d& p, double lam) {
    return cached_solve(ctx, p, lam, pc.grid, pc.basis, opt);
  });
}

void cmd_cook(Context& ctx) {
  const auto grid = ctx.grid();
  const auto basis = ctx.basis(grid);
  auto pc = packet_config(ctx.cfg, grid, basis);
  const auto ladder = ctx.cfg.list("packet.t_ladder");
  const auto gs = packet_states(ctx, pc, pc.lambda);
  const auto prof = cook_profile(pc, gs, ladder);
  Table t("cook", {"t", "norm", "slope_so_far", "tail_estimate", "error_budget", "truncation_tail"});
  std::vector<double> ts, ns;
  for (const auto& f : prof.fields) {
    if (f.t > 0) ts.push_back(f.t), ns.push_back(f.norm);
    const auto fit = fit_loglog(ts, ns);
    const double tail = fit.points >= 2 && fit.slope < -1 ? f.norm * f.t / (-fit.slope - 1) : INFINITY;
    t.row({num(f.t), num(f.norm), num(fit.points >= 2 ? fit.slope : 0.0), num(f.norm == 0 ? 0.0 : tail),
           num(f.x_error + f.extent_tail), num(f.max_tail)});
  }
  ctx.tables.push_back(std::move(t));
  ctx.extra["cook"] = {{"slope", prof.fit.slope},
                       {"ladder_integral", prof.ladder_integral},
                       {"tail_integral", prof.tail_integral},
                       {"total", prof.total}};
  if (pc.lambda == 0) return;
  ctx.check("Cook slope", prof.fit.slope, -1.3, prof.fit.slope <= -1.3);
  ctx.check("Cook integral finite", prof.total, 0, std::isfinite(prof.total));
  const auto pair = ctx.cfg.list("packet.lambda_pair");
  if (pair.size() == 2) {
    Table r("cook_lambda_ratio", {"t", "norm_lambda", "norm_2lambda", "ratio"});
    // the ladder already holds the working λ at both ends
    auto norm_at = [&](double lambda, std::size_t end) {
      if (lambda == pc.lambda) return prof.fields[end].norm;
      PacketConfig c = pc;
      c.lambda = lambda;
      return assemble_integrand(c, packet_states(ctx, pc, lambda), ladder[end], IntegrandMode::dpsi).norm;
    };
    for (std::size_t end : {std::size_t{0}, ladder.size() - 1}) {
      const double tt = ladder[end];
      const double a = norm_at(pair[0], end);
      const double b = norm_at(pair[1], end);
      r.row({num(tt), num(a), num(b), num(b / a)});
      ctx.check(fmt::format("lambda ratio at t={}", tt), b / a, 4.0, b / a >= 3.5 && b / a <= 4.5);
    }
    ctx.tables.push_back(std::move(r));
  }
}

void cmd_packet(Context& ctx) {
  const auto grid = ctx.grid();
  const auto basis = ctx.basis(grid);
  auto pc = packet_config(ctx.cfg, grid, basis);
  std::vector<GroundStates> per;
  for (double l : ctx.cfg.list("packet.nontriv_lambdas")) per.push_back(packet_states(ctx, pc, l));
  const auto rows = nontriviality_study(pc, per, ctx.cfg.num("packet.delta_radius"),
                                        ctx.cfg.list("packet.tail_lambdas"), ctx.cfg.list("packet.tail_ladder"));
  Table t("packet", {"lambda", "D", "D_over_lambda_quarter", "free_norm", "free_oracle", "tail", "lower_bound"});
  double lo = INFINITY, hi = 0;
  for (const auto& r : rows) {
    t.row({num(r.lambda), num(r.D), num(r.ratio), num(r.free_norm), num(r.free_oracle), num(r.tail),
           num(r.lower_bound)});
    if (r.lambda != 0) lo = std::min(lo, r.ratio), hi = std::max(hi, r.ratio);
    if (std::isfinite(r.tail))
      ctx.check(fmt::format("lower bound at lambda={}", r.lambda), r.lower_bound, 0, r.lower_bound > 0);
  }
  if (hi > 0) ctx.check("D/lambda^(1/4) spread", hi / lo, 2.0, hi <= 2 * lo);
  json summary = json::array();
  for (const auto& r : rows) summary.push_back({{"lambda", r.lambda}, {"D", r.D}, {"ratio", r.ratio}});
  ctx.extra["packet"] = summary;
  ctx.tables.push_back(std::move(t));
}

void cmd_envelope(Context& ctx) {
  const double hr = ctx.cfg.num("envelope.h_radius");
  const auto rep = stationary_envelope_check([](double r) { return 0.5 * r * r; }, [](double r) { return r; }, hr,
                                             ctx.cfg.list("envelope.t_ladder"), ctx.cfg.num("envelope.c0"));
  Table t("envelope_stationary", {"t", "sup_abs", "inside_l2", "outside_l2"});
  for (const auto& r : rep.rows) t.row({num(r.t), num(r.sup_abs), num(r.inside_l2), num(r.outside_l2)});
  ctx.tables.push_back(std::move(t));
  ctx.check("free pointwise slope", rep.sup_fit.slope, -1.5, std::abs(rep.sup_fit.slope + 1.5) <= 0.1);
  ctx.check("inside L2 max/min", rep.inside_max_ratio, 2.0, rep.inside_max_ratio <= 2.0);
  ctx.check("outside L2 slope", rep.outside_fit.slope, -0.4, rep.outside_fit.slope <= -0.4);

  const auto p = ctx.cfg.vec3("envelope.p");
  const auto v = model_velocity(ctx.cfg.num("envelope.beta"));
  std::vector<std::pair<Eigen::Vector3d, double>> samples;
  std::mt19937_64 rng(static_cast<std::uint64_t>(ctx.cfg.integer("run.seed")));
  std::uniform_real_distribution<double> u(0, 1);
  const int decades = ctx.cfg.integer("envelope.decades");
  for (int d = 0; d < decades; ++d)
    for (int i = 0; i < 4; ++i) {
      const double scale = std::pow(10.0, d + 1 + u(rng));
      Eigen::Vector3d dir(u(rng) - 0.5, u(rng) - 0.5, u(rng) - 0.5);
      dir.normalize();
      const double ratio = 1.5 * u(rng);
      const double tt = scale / (1 + ratio);
      samples.push_back({ratio * tt * dir, tt});
    }
  const auto env = log_envelope_suite(p, ctx.cfg.num("envelope.lambda"), v, samples, phase_settings(ctx.cfg),
                                      ctx.cfg.num("envelope.fd_step"));
  Table e("envelope_log", {"t", "x1", "x2", "x3", "fm2", "gamma_abs", "dgamma_abs", "envelope"});
  for (const auto& r : env.rows)
    e.row({num(r.t), num(r.x[0]), num(r.x[1]), num(r.x[2]), num(r.fm2), num(r.gamma_abs), num(r.dgamma_abs),
           num(r.envelope)});
  ctx.tables.push_back(std::move(e));
  const char* names[3] = {"|f_p m|^2", "|gamma|", "|d_p gamma|"};
  for (int k = 0; k < 3; ++k)
    ctx.check(fmt::format("log envelope {} last/first decade", names[k]),
              env.last_decade_max[k] / env.first_decade_max[k], 2.0, env.bounded[k]);
}

void cmd_check(Context& ctx) {
  const auto rows = invariant_suite(ctx.cfg);
  Table t("check", {"name", "value", "threshold", "pass"});
  for (const auto& r : rows) {
    t.row({"\"" + r.name + "\"", num(r.value), num(r.threshold), r.pass ? "1" : "0"});
    ctx.checks.push_back(r);
  }
  ctx.tables.push_back(std::move(t));
}

int finish(Context& ctx, double seconds) {
  fs::create_directories(ctx.out);
  json files = json::array();
  for (const auto& t : ctx.tables) {
    t.write(ctx.out, ctx.hash);
    files.push_back(t.name() + ".csv");
  }
  bool ok = true;
  json checks = json::array();
  for (const auto& c : ctx.checks) {
    ok &= c.pass;
    checks.push_back({{"name", c.name}, {"value", c.value}, {"threshold", c.threshold}, {"pass", c.pass}});
    fmt::print("{} {}: {:.6g} (threshold {:.6g})\n", c.pass ? "PASS" : "FAIL", c.name, c.value, c.threshold);
  }
  json m = {{"subcommand", ctx.sub},
            {"config_hash", ctx.hash},
            {"config", ctx.cfg.values()},
            {"cache", {{"dir", ctx.cache.dir().string()}, {"hits", ctx.cache.hits()}, {"misses", ctx.cache.misses()}}},
            {"files", files},
            {"checks", checks},
            {"results", ctx.extra},
            {"seconds", seconds},
            {"status", ok ? "pass" : "fail"}};
  std::ofstream(ctx.out / (ctx.sub + ".json")) << m.dump(2) << "\n";
  return ok ? kExitOk : kExitCheckFailed;
}

}  // namespace

int run_cli(int argc, char** argv) {
  CLI::App app{"nelson-lab: infraparticle scattering experiments"};
  app.require_subcommand(1);
  std::string config_path;
  std::vector<std::string> sets;
  int threads = 0;
  const std::vector<std::string> names = {"ground", "scaling", "phases", "cook", "packet", "envelope", "check"};
  for (const auto& n : names) {
    auto* s = app.add_subcommand(n);
    s->add_option("--config", config_path, "INI config file")->required();
    s->add_option("--set", sets, "override section.key=value");
    s->add_option("--threads", threads, "worker threads");
  }
  auto* gc = app.add_subcommand("cache-gc", "evict records of grids no config uses");
  std::vector<std::string> gc_configs;
  gc->add_option("--config", gc_configs, "configs whose grids stay live")->required();
  gc->add_option("--set", sets, "override section.key=value");
  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    std::cerr << e.what() << "\n\n" << app.help();
    return kExitError;
  }
  try {
    if (gc->parsed()) {
      std::set<std::string> known;
      std::string dir;
      for (const auto& path : gc_configs) {
        auto c = RunConfig::load(path);
        for (const auto& s : sets) c.set(s);
        known.insert(grid_spec(c).hash());
        if (dir.empty()) dir = GroundStateCache::resolve_dir(c.str("run.cache"));
      }
      if (dir.empty()) throw ConfigError("cache-gc: no cache directory configured");
      const auto rep = cache_gc(dir, known);
      for (const auto& e : rep.entries)
        if (e.action != "kept") fmt::print("{} {} ({} bytes)\n", e.action, e.id, e.bytes);
      fmt::print("evicted {} records, {} pinned, reclaimed {} bytes\n", rep.evicted, rep.pinned, rep.reclaimed);
      return kExitOk;
    }
    const auto start = std::chrono::steady_clock::now();
    Context ctx;
    for (auto* s : app.get_subcommands()) ctx.sub = s->get_name();
    ctx.cfg = RunConfig::load(config_path);
    for (const auto& s : sets) ctx.cfg.set(s);
    if (threads > 0) ctx.cfg.set(fmt::format("run.threads={}", threads), "--threads");
    spdlog::set_level(spdlog::level::from_str(ctx.cfg.str("run.log_level")));
    ctx.threads = ctx.cfg.integer("run.threads");
    ctx.out = ctx.cfg.str("run.output");
    ctx.hash = ctx.cfg.hash();
    ctx.cache = GroundStateCache(GroundStateCache::resolve_dir(ctx.cfg.str("run.cache")));
    if (ctx.sub == "ground") cmd_ground(ctx);
    else if (ctx.sub == "scaling") cmd_scaling(ctx);
    else if (ctx.sub == "phases") cmd_phases(ctx);
    else if (ctx.sub == "cook") cmd_cook(ctx);
    else if (ctx.sub == "packet") cmd_packet(ctx);
    else if (ctx.sub == "envelope") cmd_envelope(ctx);
    else cmd_check(ctx);
    return finish(ctx, std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count());
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitError;
  }
}

}  // namespace nelson
