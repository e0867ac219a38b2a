#include "oracles.hpp"

#include <doctest.h>
#include <stochham/diagnostics.hpp>
#include <stochham/systems.hpp>

#include <cmath>

using namespace stochham;

namespace {

Vec v2(double a, double b) { return (Vec(2) << a, b).finished(); }

ScalarField energy() { return quadratic_field(Mat::Identity(2, 2)); }

EnsembleModel rotation_bm() {
  return EnsembleModel{HamiltonianSystem{PhaseStructure::canonical(2), HamiltonianBundle({energy()})},
                       DriverSpec({ComponentSpec::brownian(0)}, 1), {}};
}

EnsembleModel translation_bm() {
  return EnsembleModel{HamiltonianSystem{PhaseStructure::canonical(2), HamiltonianBundle({coordinate_field(2, 1)})},
                       DriverSpec({ComponentSpec::brownian(0)}, 1), {}};
}

Ensemble run(const EnsembleModel& m, std::size_t n, Vec z0, double dt = 1e-3, Seed seed = 1) {
  EnsembleSpec s;
  s.n_paths = n;
  s.T = 1.0;
  s.dt = dt;
  s.master_seed = seed;
  s.initial = std::move(z0);
  s.record_every = 10;
  return run_ensemble(m, s);
}

ErrorCode code_of(const std::function<void()>& fn) {
  try {
    fn();
  } catch (const Error& e) {
    return e.code();
  }
  return ErrorCode::Io;
}

}  // namespace

TEST_CASE("strong conservation separates conserved and moving quantities") {
  const auto e = run(rotation_bm(), 50, v2(1, 0));
  const auto good = strong_conservation_check(energy(), e, 1e-3);
  CHECK(good.passed);
  CHECK(good.details["paths_used"] == 50);
  const auto bad = strong_conservation_check(coordinate_field(2, 0), e, 1e-3);
  CHECK_FALSE(bad.passed);
  CHECK(bad.statistic > 0.1);
  CHECK(bad.details.contains("worst_path"));
  const auto j = to_json(bad);
  CHECK(j["name"] == "strong_conservation");
  CHECK(j["passed"] == false);
}

TEST_CASE("weak but not strong conservation of a martingale") {
  const auto e = run(translation_bm(), 2000, v2(0, 0));
  const std::vector<StoppingTime> taus{StoppingTime::fixed(0.5), StoppingTime::fixed(1.0),
                                       StoppingTime::first_exit(Region::ball(v2(0, 0), 0.5))};
  CHECK(weak_conservation_check(coordinate_field(2, 0), e, taus).passed);
  CHECK_FALSE(strong_conservation_check(coordinate_field(2, 0), e, 1e-3).passed);
  // q^2 has E q_t^2 = t
  const auto drift = weak_conservation_check(quadratic_field(2.0 * Mat::Identity(2, 2)), e, taus);
  CHECK_FALSE(drift.passed);
  CHECK(drift.details["per_stopping_time"].size() == 3);
}

TEST_CASE("weak conservation fails for the rotated coordinate") {
  // E q_t = exp(-t/2) under z_t = R(B_t) z0
  const auto e = run(rotation_bm(), 1000, v2(1, 0));
  CHECK_FALSE(weak_conservation_check(coordinate_field(2, 0), e, {StoppingTime::fixed(1.0)}).passed);
  // Heun energy error is O(dt) in mean
  CHECK(weak_conservation_check(energy(), e, {StoppingTime::fixed(1.0)}, 1e-3).passed);
}

TEST_CASE("involution of action coordinates") {
  const auto sys = build_system("integrable_torus");
  const auto& hs = sys.hamiltonian_system();
  std::vector<Vec> probes;
  for (int i = 0; i < 10; ++i) probes.push_back(v2(0.3 * i, 0.5 + 0.1 * i));
  const auto I = involution_check(hs.structure, coordinate_field(2, 1), hs.hamiltonian, probes);
  CHECK(I.passed);
  CHECK(I.statistic == 0.0);
  const auto theta = involution_check(hs.structure, coordinate_field(2, 0), hs.hamiltonian, probes);
  CHECK_FALSE(theta.passed);
  CHECK(theta.statistic >= 1.0);
}

TEST_CASE("casimir of the rigid body is in involution with the hamiltonians") {
  const auto sys = build_system("rigid_body");
  const auto& hs = sys.hamiltonian_system();
  std::vector<Vec> probes{Vec::Random(3), Vec::Random(3), (Vec(3) << 1, 2, 3).finished()};
  CHECK(involution_check(hs.structure, sys.observables.at("casimir"), hs.hamiltonian, probes).passed);
  CHECK_FALSE(involution_check(hs.structure, coordinate_field(3, 0), hs.hamiltonian, probes).passed);
}

TEST_CASE("bracket increment identity") {
  const auto s = PhaseStructure::canonical(2);
  const ScalarField pend = make_field([](const Vec& z) { return 0.5 * z[1] * z[1] - std::cos(z[0]); },
                                      [](const Vec& z, Vec& g) {
                                        g.resize(2);
                                        g[0] = std::sin(z[0]);
                                        g[1] = z[1];
                                      });
  const HamiltonianBundle h({pend, coordinate_field(2, 0)});
  const double dt = 1e-4;
  const auto X = sample_path(DriverSpec({ComponentSpec::time(), ComponentSpec::brownian(0)}, 1), 1.0, dt, 6);
  IntegratorConfig cfg;
  cfg.dt = dt;
  const auto tr = simulate(s, h, v2(0.5, 0.2), X, cfg);
  for (std::size_t c = 0; c < 2; ++c) {
    const auto rep = bracket_increment_check(s, h, tr, X, coordinate_field(2, c), 5e-3);
    CHECK(rep.passed);
    CHECK(rep.details["sup_stratonovich"].get<double>() <= 1e-3);
  }
  // a wrong Hamiltonian breaks the identity for p: {p, -cos q} = -sin q but {p, |z|^2/2} = -q
  const HamiltonianBundle wrong({energy(), coordinate_field(2, 0)});
  CHECK_FALSE(bracket_increment_check(s, wrong, tr, X, coordinate_field(2, 1), 5e-3).passed);
}

TEST_CASE("symplectic defect") {
  const Mat O = canonical_omega(2);
  CHECK((O - (Mat(2, 2) << 0, 1, -1, 0).finished()).norm() == 0.0);
  const std::vector<Mat> ok{Mat::Identity(2, 2), oracle::expm((Mat(2, 2) << 0, 1, -1, 0).finished() * 0.3)};
  const auto a = symplectic_defect(ok, O, 1e-12);
  CHECK(a.passed);
  const Mat stretch = (Mat(2, 2) << 2, 0, 0, 1).finished();
  const auto b = symplectic_defect({Mat::Identity(2, 2), stretch}, O, 1e-2);
  CHECK_FALSE(b.passed);
  CHECK(b.details["max_abs_det_minus_one"].get<double>() == doctest::Approx(1.0));
  CHECK_THROWS_AS(canonical_omega(3), Error);
}

TEST_CASE("dirichlet certificate examples") {
  const auto osc = dirichlet_certificate(energy(), v2(0, 0));
  CHECK(osc.passed);
  CHECK(osc.details["definite"] == "positive");
  const auto neg = dirichlet_certificate(scaled(energy(), -1.0), v2(0, 0));
  CHECK(neg.passed);
  CHECK(neg.details["definite"] == "negative");

  Mat S = Mat::Zero(2, 2);
  S.diagonal() << 2.0, -2.0;
  const auto saddle = dirichlet_certificate(quadratic_field(S), v2(0, 0));
  CHECK_FALSE(saddle.passed);
  CHECK(saddle.details["definite"] == "no");

  const ScalarField quartic = make_field([](const Vec& z) { return std::pow(z[0], 4) + std::pow(z[1], 4); },
                                         [](const Vec& z, Vec& g) {
                                           g.resize(2);
                                           g[0] = 4 * std::pow(z[0], 3);
                                           g[1] = 4 * std::pow(z[1], 3);
                                         });
  const auto deg = dirichlet_certificate(quartic, v2(0, 0));
  CHECK_FALSE(deg.passed);
  CHECK(deg.details["degenerate"] == true);
  CHECK(deg.details["hessian_source"] == "finite_difference");

  const auto off = dirichlet_certificate(energy(), v2(0.1, 0));
  CHECK_FALSE(off.passed);
  DirichletOptions bad;
  bad.fd_step = 0.0;
  CHECK_THROWS_AS(dirichlet_certificate(energy(), v2(0, 0), bad), Error);
}

TEST_CASE("lyapunov check") {
  const auto sys = build_system("damped_oscillator");
  EnsembleSpec s;
  s.n_paths = 500;
  s.T = 2.0;
  s.dt = 1e-3;
  s.initial = sys.default_initial;
  s.record_every = 100;
  const auto e = run_ensemble(sys.ensemble_model(), s);
  const std::vector<StoppingTime> taus{StoppingTime::fixed(1.0), StoppingTime::fixed(2.0)};
  const auto h = sys.observables.at("energy");
  const auto eq = lyapunov_check(h, e, taus, v2(0, 0), 1e-3);
  CHECK(eq.passed);
  CHECK(std::abs(eq.statistic) <= 1e-3);
  CHECK(code_of([&] { lyapunov_check(scaled(h, -1.0), e, taus, v2(0, 0)); }) == ErrorCode::PreconditionViolated);
  CHECK(code_of([&] { lyapunov_check(sum(h, constant_field(2, 1.0)), e, taus, v2(0, 0)); }) ==
        ErrorCode::PreconditionViolated);
  CHECK_THROWS_AS(lyapunov_check(h, e, {}, v2(0, 0)), Error);
}

TEST_CASE("langevin without noise decreases strictly") {
  const auto sys = build_system("langevin", {{"b", 0.0}});
  EnsembleSpec s;
  s.n_paths = 4;
  s.T = 1.0;
  s.dt = 1e-3;
  s.initial = sys.default_initial;
  s.record_every = 100;
  const auto e = run_ensemble(sys.ensemble_model(), s);
  const auto kin = sys.observables.at("kinetic");
  const auto rep = lyapunov_check(kin, e, {StoppingTime::fixed(0.5), StoppingTime::fixed(1.0)}, Vec::Zero(sys.dim()));
  CHECK(rep.passed);
  CHECK(rep.statistic < -0.1);
}

TEST_CASE("variance growth as the converse of conservation") {
  const auto e = run(translation_bm(), 400, v2(0, 0));
  const Mat qv = Mat::Identity(1, 1);
  const auto grows = variance_growth_check(coordinate_field(2, 0), e, qv, 1.0);
  CHECK(grows.passed);
  CHECK(grows.details["variance"].get<double>() == doctest::Approx(1.0).epsilon(0.2));
  CHECK_FALSE(variance_growth_check(coordinate_field(2, 1), e, qv, 1.0).passed);
  Mat corr = Mat::Identity(2, 2);
  corr(0, 1) = corr(1, 0) = 0.5;
  CHECK(code_of([&] { variance_growth_check(coordinate_field(2, 0), e, corr, 1.0); }) ==
        ErrorCode::PreconditionViolated);
}
