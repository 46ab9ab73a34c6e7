// test_hamiltonian.cpp: fiber operator, dressed normal form, conjugation oracle
#include <doctest.h>

#include "common.hpp"
#include "nelson/errors.hpp"
#include "nelson/hamiltonian.hpp"
#include "nelson/spectral.hpp"
#include "oracles/phase_oracle.hpp"

using namespace nelson;

namespace {

BasisPtr basis(int modes, int n_max) { return std::make_shared<const FockBasis>(modes, n_max); }

double lowest(const FiberOperator& op) {
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXcd> es(op.dense());
  return es.eigenvalues()[0];
}

}  // namespace

TEST_CASE("free fiber: vacuum energy p^2/2 and diagonal photon energies") {
  const auto g = testing::grid4();
  const auto b = basis(4, 2);
  const Eigen::Vector3d p(0.1, 0, 0);
  const auto H = assemble_fiber(p, g, 0.0, b);
  const CVec om = vacuum(*b);
  CHECK(std::abs(om.dot(H * om) - 0.005) < 1e-15);
  const Eigen::MatrixXcd D = H.dense();
  CHECK((D - Eigen::MatrixXcd(D.diagonal().asDiagonal())).norm() == 0);
  // one photon in mode i: ½(p − k_i)² + |k_i|
  for (int i = 0; i < 4; ++i) {
    std::vector<int> occ(4, 0);
    occ[i] = 1;
    const auto& m = g->modes[i];
    const double ref = 0.5 * (p - m.k).squaredNorm() + m.r;
    CHECK(std::abs(D(*b->index_of(occ), *b->index_of(occ)).real() - ref) < 1e-14);
  }
}

TEST_CASE("vacuum expectation of the coupled fiber is p^2/2") {
  const auto g = testing::grid24();
  const auto b = basis(24, 2);
  const Eigen::Vector3d p(0.1, -0.05, 0.2);
  const auto H = assemble_fiber(p, g, 0.3, b);
  const CVec om = vacuum(*b);
  CHECK(std::abs(om.dot(H * om) - 0.5 * p.squaredNorm()) < 1e-15);
}

TEST_CASE("assembled operators are hermitian to 1e-12") {
  const auto g = testing::grid4();
  const auto b = basis(4, 4);
  const Eigen::Vector3d p(0.1, 0.05, -0.02);
  CHECK(assemble_fiber(p, g, 0.3, b).hermiticity_defect() < 1e-12);
  const auto d = dressing_data(p, g, 0.3, Eigen::Vector3d(0.05, 0.03, 0));
  const auto Hw = assemble_dressed(d, b);
  CHECK(Hw.hermiticity_defect() < 1e-12);
  const Eigen::MatrixXcd A = Hw.dense();
  CHECK((A - A.adjoint()).norm() < 1e-12 * A.norm());
}

TEST_CASE("dressing data: zero coupling and zero gradient") {
  const auto g = testing::grid24();
  const Eigen::Vector3d p(0.1, 0.05, 0);
  const auto d0 = dressing_data(p, g, 0.0, p);
  CHECK(d0.f.values.norm() == 0);
  CHECK(d0.c_scalar == doctest::Approx(0.5 * p.squaredNorm()).epsilon(1e-15));
  const auto d = dressing_data(p, g, 0.2, Eigen::Vector3d::Zero());
  for (int i = 0; i < d.alpha.size(); ++i) CHECK(d.alpha[i] == 1.0);
  const auto v = form_factor(g, 0.2);
  for (std::size_t i = 0; i < g->mode_count(); ++i) CHECK(std::abs(d.f.values[i] - v.values[i] / g->modes[i].r) < 1e-15);
  CHECK_THROWS_AS(dressing_data(p, g, 0.1, Eigen::Vector3d(0.6, 0, 0)), GradientBound);
}

TEST_CASE("dressing constant matches the radial oracle at zero gradient") {
  // c = −Σ|v_i|²/|k_i| → −2πλ² ∫χ² dr
  RadialSpec r;
  r.spacing = "gauss";
  r.count = 32;
  AngularSpec a;
  a.order = 6;
  const auto g = build_grid(r, a, 0.0);
  const double lambda = 0.2;
  const auto d = dressing_data(Eigen::Vector3d::Zero(), g, lambda, Eigen::Vector3d::Zero());
  oracle::Integrator I;
  auto chi2 = [](double x) { return std::pow(cutoff_chi(x), 2); };
  const double ref = -2 * M_PI * lambda * lambda * (I.qag(chi2, 0, 0.9, 0, 1e-13) + I.qag(chi2, 0.9, 1, 0, 1e-13));
  CHECK(std::abs(d.c_scalar - ref) < 1e-8 * std::abs(ref));
}

TEST_CASE("free dressed operator equals the fiber operator") {
  const auto g = testing::grid4();
  const auto b = basis(4, 3);
  const Eigen::Vector3d p(0.1, 0.05, 0);
  const auto H = assemble_fiber(p, g, 0.0, b);
  const auto Hw = assemble_dressed(dressing_data(p, g, 0.0, p), b);
  CHECK((H.dense() - Hw.dense()).norm() < 1e-14);
  const auto C = conjugation_oracle(p, g, 0.0, p, b);
  CHECK((H.dense() - C.dense()).norm() < 1e-14);
  const CVec om = vacuum(*b);
  CHECK(std::abs(om.dot(Hw * om).real() - lowest(Hw)) < 1e-14);
}

TEST_CASE("vacuum expectation of the dressed operator bounds its bottom from above") {
  const auto g = testing::grid4();
  const auto b = basis(4, 3);
  const Eigen::Vector3d p(0.1, 0.05, 0);
  const auto ud = undressed_ground_state(p, g, 0.3, b);
  const auto Hw = assemble_dressed(dressing_data(p, g, 0.3, ud.gradE_hf), b);
  const CVec om = vacuum(*b);
  CHECK(om.dot(Hw * om).real() > lowest(Hw) + 1e-6);
}

TEST_CASE("dressed, conjugated and undressed ground energies agree at weak coupling") {
  const auto g = testing::grid4();
  const auto b = basis(4, 2);
  const Eigen::Vector3d p(0.1, 0.05, 0);
  const double lambda = 0.02;
  const auto ud = undressed_ground_state(p, g, lambda, b);
  const double Eu = lowest(assemble_fiber(p, g, lambda, b));
  const double Ew = lowest(assemble_dressed(dressing_data(p, g, lambda, ud.gradE_hf), b));
  const double Ec = lowest(conjugation_oracle(p, g, lambda, ud.gradE_hf, b));
  CHECK(std::abs(Eu - Ew) < 1e-6);
  CHECK(std::abs(Ew - Ec) < 1e-6);
}

TEST_CASE("unitary invariance is truncation-limited and improves monotonically with n_max") {
  const auto g = testing::grid4();
  const Eigen::Vector3d p(0.1, 0.05, 0);
  const double lambda = 0.3;
  std::vector<double> du, dc;
  for (int n = 2; n <= 4; ++n) {
    const auto b = basis(4, n);
    const auto ud = undressed_ground_state(p, g, lambda, b);
    const double Eu = lowest(assemble_fiber(p, g, lambda, b));
    const double Ew = lowest(assemble_dressed(dressing_data(p, g, lambda, ud.gradE_hf), b));
    const double Ec = lowest(conjugation_oracle(p, g, lambda, ud.gradE_hf, b));
    du.push_back(std::abs(Eu - Ew));
    dc.push_back(std::abs(Ew - Ec));
  }
  for (int i = 0; i < 2; ++i) {
    CHECK(du[i + 1] < 0.5 * du[i]);
    CHECK(dc[i + 1] < 0.5 * dc[i]);
  }
  // measured at (4 modes, n_max = 4): 1.1e-3
  CHECK(du[2] < 2e-3);
}

TEST_CASE("conjugation oracle refuses large bases") {
  const auto g = testing::grid24();
  const auto b = basis(24, 3);
  CHECK_THROWS_AS(conjugation_oracle(Eigen::Vector3d::Zero(), g, 0.1, Eigen::Vector3d::Zero(), b, -1, 500), DimensionCap);
}

TEST_CASE("field momentum and energy diagonals") {
  const auto g = testing::grid4();
  const auto b = basis(4, 2);
  const auto P = field_momentum_diagonal(*b, *g);
  const auto Hf = field_energy_diagonal(*b, *g);
  for (std::size_t s = 0; s < b->dim(); ++s) {
    const auto occ = b->occupation(s);
    Eigen::Vector3d k = Eigen::Vector3d::Zero();
    double e = 0;
    for (int i = 0; i < 4; ++i) {
      k += occ[i] * g->modes[i].k;
      e += occ[i] * g->modes[i].r;
    }
    CHECK((P.row(s).transpose() - k).norm() < 1e-15);
    CHECK(std::abs(Hf[s] - e) < 1e-15);
  }
}
