// test_spectral.cpp: eigensolvers, dressing loop, landscape, scaling, envelopes
#include <doctest.h>

#include <random>

#include "common.hpp"
#include "nelson/errors.hpp"
#include "nelson/spectral.hpp"
#include "oracles/pt2_oracle.hpp"

using namespace nelson;

namespace {

BasisPtr basis(int modes, int n_max) { return std::make_shared<const FockBasis>(modes, n_max); }

}  // namespace

TEST_CASE("free fiber ground state is the vacuum") {
  const auto g = testing::grid24();
  const auto b = basis(24, 2);
  const auto H = assemble_fiber(Eigen::Vector3d(0.1, 0, 0), g, 0.0, b);
  for (auto m : {EigenMethod::lanczos, EigenMethod::davidson}) {
    const auto r = ground_state(H, 1e-10, 4000, m);
    CHECK(std::abs(r.energy - 0.005) < 1e-12);
    CHECK((r.phi - vacuum(*b)).norm() < 1e-8);
  }
}

TEST_CASE("Lanczos and Davidson agree with the dense solver on 4 modes, n_max 3") {
  const auto g = testing::grid4();
  const auto b = basis(4, 3);
  std::mt19937_64 rng(7);
  std::uniform_real_distribution<double> u(-1, 1), ul(0, 0.2);
  for (int s = 0; s < 10; ++s) {
    const Eigen::Vector3d p = 0.17 * Eigen::Vector3d(u(rng), u(rng), u(rng));
    const auto H = assemble_fiber(p, g, ul(rng), b);
    const double ref = dense_ground_state(H).energy;
    const auto l = ground_state(H, 1e-10, 4000, EigenMethod::lanczos);
    const auto d = ground_state(H, 1e-10, 4000, EigenMethod::davidson);
    CHECK(std::abs(l.energy - ref) < 1e-9);
    CHECK(std::abs(d.energy - ref) < 1e-9);
    CHECK(std::abs(l.phi.dot(d.phi)) == doctest::Approx(1).epsilon(1e-8));
  }
}

TEST_CASE("second-order perturbation oracle: error scales as lambda^4") {
  // measured successive ratios at n_max 3: 15.6, 16.0 (4 modes); 15.1, 15.9 (24 modes)
  const Eigen::Vector3d p(0.1, 0.05, 0);
  for (const auto& g : {testing::grid4(), testing::grid24()}) {
    const auto b = basis(static_cast<int>(g->mode_count()), 3);
    std::vector<double> d;
    for (double l : {0.1, 0.05, 0.025}) d.push_back(std::abs(ground_state(assemble_fiber(p, g, l, b), 1e-12).energy - oracle::pt2_energy(p, g, l)));
    for (int i = 0; i < 2; ++i) {
      const double r = d[i] / d[i + 1];
      CHECK(r > 16 / 2.5);
      CHECK(r < 16 * 2.5);
    }
  }
}

TEST_CASE("phase convention") {
  CVec v(3);
  v << cplx(0, 2), cplx(1, 1), 0;
  fix_phase(v);
  CHECK(std::abs(v[0].imag()) < 1e-15);
  CHECK(v[0].real() > 0);
  CVec w(3);
  w << 0, cplx(0, 0.3), cplx(-0.5, 0.5);
  fix_phase(w);
  CHECK(w[0] == cplx(0));
  CHECK(std::abs(w[2].imag()) < 1e-15);
  CHECK(w[2].real() > 0);
}

TEST_CASE("ground energy is variational") {
  const auto g = testing::grid4();
  const auto b = basis(4, 3);
  const auto H = assemble_fiber(Eigen::Vector3d(0.1, 0.05, 0), g, 0.2, b);
  const double e = ground_state(H).energy;
  for (int s = 0; s < 10; ++s) {
    const CVec psi = testing::random_vector(b->dim(), 100 + s).normalized();
    CHECK(e <= psi.dot(H * psi).real() + 1e-12);
  }
}

TEST_CASE("ground energy is non-increasing in n_max") {
  const auto g = testing::grid4();
  const Eigen::Vector3d p(0.1, 0.05, 0);
  double prev = 1e9;
  for (int n = 1; n <= 5; ++n) {
    const double e = ground_state(assemble_fiber(p, g, 0.3, basis(4, n)), 1e-11).energy;
    CHECK(e <= prev + 1e-12);
    prev = e;
  }
}

TEST_CASE("rotation covariance under grid symmetries") {
  const auto g = testing::grid24();
  const auto b = basis(24, 2);
  const Eigen::Vector3d p(0.1, 0.05, 0.02);
  Eigen::Matrix3d R;
  R << 0, 1, 0, 0, 0, 1, 1, 0, 0;
  const double e = ground_state(assemble_fiber(p, g, 0.2, b), 1e-11).energy;
  const double er = ground_state(assemble_fiber(R * p, g, 0.2, b), 1e-11).energy;
  CHECK(std::abs(e - er) < 1e-10);
}

TEST_CASE("dressing loop: free case, inversion symmetry, Hellmann-Feynman") {
  const auto g = testing::grid24();
  const auto b = basis(24, 3);
  const Eigen::Vector3d p(0.1, 0.05, 0);
  const auto r0 = self_consistent_dressed(p, g, 0.0, b);
  CHECK(r0.iterations == 1);
  CHECK((r0.gradE - p).norm() < 1e-8);
  CHECK((r0.phi - vacuum(*b)).norm() < 1e-8);

  const auto rz = self_consistent_dressed(Eigen::Vector3d::Zero(), g, 0.1, b);
  CHECK(rz.gradE.norm() < 1e-8);

  const auto r = self_consistent_dressed(p, g, 0.1, b);
  CHECK((r.gradE - r.gradE_hf).norm() / r.gradE_hf.norm() < 1e-4);
  CHECK(r.phi.norm() == doctest::Approx(1).epsilon(1e-10));
  CHECK(std::abs(r.phi[0].imag()) < 1e-14);
  CHECK(r.phi[0].real() >= 0);
}

TEST_CASE("energy landscape at zero coupling") {
  const auto g = testing::grid4();
  const auto b = basis(4, 2);
  const auto L = energy_landscape({Eigen::Vector3d(0.1, 0, 0), Eigen::Vector3d(-0.1, 0.2, 0.1)}, g, 0.0, b);
  for (const auto& row : L.rows) {
    CHECK((row.hessian - Eigen::Matrix3d::Identity()).norm() < 1e-5);
    CHECK((row.grad_fd - row.p).norm() < 1e-8);
  }
  CHECK(L.max_grad <= 1.0 / 3);
  CHECK(L.min_hessian_eig == doctest::Approx(1).epsilon(1e-5));
  CHECK_THROWS_AS(energy_landscape({Eigen::Vector3d(0.4, 0, 0)}, g, 0.0, b), ConfigError);
}

TEST_CASE("log-log fit recovers exact power laws") {
  const std::vector<double> x = {1, 2, 4, 8};
  std::vector<double> y;
  for (double v : x) y.push_back(3 * std::pow(v, 0.75));
  const auto f = fit_loglog(x, y);
  CHECK(f.slope == doctest::Approx(0.75).epsilon(1e-12));
  CHECK(std::exp(f.intercept) == doctest::Approx(3).epsilon(1e-12));
  CHECK(f.points == 4);
}

TEST_CASE("sigma scaling at zero coupling and ladder validation") {
  const auto g = build_grid(GridSpec{});
  const auto b = basis(48, 1);
  const Eigen::Vector3d p(0.1, 0, 0);
  const auto rep = sigma_scaling_study(p, 0.0, {0.2, 0.1, 0.05}, 0.0125, g, b);
  for (const auto& row : rep.rows) {
    CHECK(row.dE < 1e-14);
    CHECK(row.dphi < 1e-12);
  }
  CHECK_THROWS_AS(sigma_scaling_study(p, 0.1, {0.1, 0.2}, 0.0125, g, b), ConfigError);
  CHECK_THROWS_AS(sigma_scaling_study(p, 0.1, {0.2, 0.1}, 0.001, g, b), LadderTooDeep);
}

TEST_CASE("wavefunction envelope at zero coupling") {
  const auto g = testing::grid24();
  const auto b = basis(24, 3);
  const auto rec = self_consistent_dressed(Eigen::Vector3d(0.1, 0, 0), g, 0.0, b);
  const auto rep = wavefunction_envelope_check(rec, g, b);
  for (int n = 1; n <= 3; ++n) CHECK(rep.max_ratio[n] == 0);
  CHECK(rep.vacuum_distance < 1e-8);
}

TEST_CASE("wavefunction envelope ignores solver noise in uncoupled modes") {
  const auto g = testing::grid24();
  const auto b = basis(24, 3);
  SolveOptions o;
  o.sigma_cut = 0.4;
  const auto rec = self_consistent_dressed(Eigen::Vector3d(0.1, 0, 0), g, 0.1, b, o);
  const auto rep = wavefunction_envelope_check(rec, g, b);
  CHECK(rep.max_ratio[1] > 0);
  for (int n = 1; n <= 3; ++n) CHECK(std::isfinite(rep.max_ratio[n]));
  CHECK(rep.max_ratio[2] <= 1.5 * rep.max_ratio[1]);
}
