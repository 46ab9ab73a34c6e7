// invariants.cpp: cross-module invariant suite behind the `check` subcommand
#include <fmt/format.h>

#include <cmath>
#include <filesystem>
#include <random>

#include "nelson/cache.hpp"
#include "nelson/cli.hpp"

namespace nelson {

std::vector<CheckRow> invariant_suite(const RunConfig& cfg) {
  std::vector<CheckRow> out;
  auto le = [&](const std::string& name, double v, double thr) { out.push_back({name, v, thr, v <= thr}); };

  const auto grid = build_grid(grid_spec(cfg));
  const auto basis = std::make_shared<const FockBasis>(static_cast<int>(grid->mode_count()), cfg.integer("basis.n_max"));
  const auto opt = solve_options(cfg);
  const double lambda = cfg.num("packet.lambda");
  const Eigen::Vector3d p = cfg.vec3("scaling.p");

  // fock: W(g)Ω against the closed-form coherent state
  const auto g = form_factor(grid, 0.3);
  const auto coh = coherent_vector(g, *basis, INFINITY);
  const auto w = weyl_apply(g, vacuum(*basis), *basis, INFINITY);
  le("coherent state vs W(g)Omega", (coh.vec - w.vec).norm(), 1e-9);
  le("W(g) norm defect beyond tail", std::abs(w.vec.squaredNorm() + w.tail - 1), 1e-10);

  // hamiltonian: self-adjointness of the fiber operator
  const auto H = assemble_fiber(p, grid, lambda, basis);
  le("fiber Hamiltonian hermiticity defect", H.hermiticity_defect(), 1e-12);

  // spectral: both iterative solvers against the dense oracle
  const double e_dense = dense_ground_state(H).energy;
  le("Lanczos vs dense |dE|", std::abs(ground_state(H, 1e-10, 4000, EigenMethod::lanczos).energy - e_dense), 1e-9);
  le("Davidson vs dense |dE|", std::abs(ground_state(H, 1e-10, 4000, EigenMethod::davidson).energy - e_dense), 1e-9);
  std::mt19937_64 rng(static_cast<std::uint64_t>(cfg.integer("run.seed")));
  std::uniform_real_distribution<double> u(-0.17, 0.17);
  std::vector<Eigen::Vector3d> samples;
  for (int i = 0; i < 3; ++i) samples.emplace_back(u(rng), u(rng), u(rng));
  const auto L = energy_landscape(samples, grid, lambda, basis, opt.sigma_cut, opt.fd_step, opt.hess_step);
  le("max |grad E|", L.max_grad, 0.5);
  out.push_back({"min Hessian eigenvalue", L.min_hessian_eig, 0.0, L.min_hessian_eig > 0});
  le("Hellmann-Feynman vs FD gradient", L.max_hf_fd_reldiff, 1e-4);

  // phases: exact λ² scaling and rotation equivariance in model mode
  const auto ps = phase_settings(cfg);
  const auto vel = model_velocity(0.9);
  const Eigen::Vector3d x(3.0, -1.0, 2.0), q(0.1, 0.05, -0.02);
  const auto a = phase_values(x, 7.0, lambda, vel(q), ps);
  const auto b = phase_values(x, 7.0, 2 * lambda, vel(q), ps);
  le("gamma lambda^2 scaling", std::abs(b.gamma - 4 * a.gamma) / std::abs(a.gamma), 1e-12);
  le("gamma_int lambda^2 scaling", std::abs(b.gamma_int - 4 * a.gamma_int) / std::abs(a.gamma_int), 1e-12);
  const Eigen::Matrix3d R = Eigen::AngleAxisd(0.7, Eigen::Vector3d(1, 2, 3).normalized()).toRotationMatrix();
  const auto c = phase_values(R * x, 7.0, lambda, vel(R * q), ps);
  le("gamma rotation equivariance", std::abs(c.gamma - a.gamma) / std::abs(a.gamma), 1e-9);

  // wavepacket: free case (λ = 0) is Ω times the free packet
  auto pc = packet_config(cfg, grid, basis);
  pc.lambda = 0;
  const auto gs0 = prepare_ground_states(pc, [&](const Eigen::Vector3d& k, double) {
    GroundStateRecord r;
    r.p = k;
    r.energy = 0.5 * k.squaredNorm();
    r.gradE = k;
    r.phi = vacuum(*basis);
    return r;
  });
  le("lambda=0 Cook integrand norm", assemble_integrand(pc, gs0, 10.0, IntegrandMode::dpsi).norm, 0.0);
  const double hnorm = free_packet_norm(pc.h_radius, 1e4);
  for (double t : {0.0, 10.0}) {
    const double n = assemble_integrand(pc, gs0, t, IntegrandMode::psi).norm;
    le(fmt::format("lambda=0 Plancherel at t={}", t), std::abs(n - hnorm) / hnorm, 1e-2);
  }

  // stationary phase: free dispersion
  const auto st = stationary_envelope_check([](double r) { return 0.5 * r * r; }, [](double r) { return r; }, 0.25,
                                            {100, 316.227766, 1000, 3162.27766, 10000}, 0.6);
  le("free pointwise decay |slope + 1.5|", std::abs(st.sup_fit.slope + 1.5), 0.1);

  // cache: bit-identical round trip
  const auto dir = std::filesystem::temp_directory_path() / fmt::format("nelson-check-{}", cfg.hash());
  std::filesystem::remove_all(dir);
  GroundStateCache cache(dir);
  auto rec = self_consistent_dressed(p, grid, lambda, basis, opt);
  const CacheKey key{grid->hash(), basis->hash(), p, lambda, opt.sigma_cut, "check"};
  cache.store(key, rec);
  const auto back = cache.load(key);
  le("cache round trip |dphi|", back ? (back->phi - rec.phi).norm() + std::abs(back->energy - rec.energy) : 1.0, 0.0);
  std::filesystem::remove_all(dir);
  return out;
}

}  // namespace nelson
