#include "oracles.hpp"

#include <doctest.h>
#include <stochham/calculus.hpp>
#include <stochham/systems.hpp>

#include <cmath>
#include <set>

using namespace stochham;

namespace {

Vec vec(std::initializer_list<double> v) {
  Vec out(static_cast<Eigen::Index>(v.size()));
  Eigen::Index i = 0;
  for (double x : v) out[i++] = x;
  return out;
}

ErrorCode code_of(const std::function<void()>& fn) {
  try {
    fn();
  } catch (const Error& e) {
    return e.code();
  }
  return ErrorCode::Io;
}

IntegratorConfig config(double dt) {
  IntegratorConfig c;
  c.dt = dt;
  return c;
}

}  // namespace

TEST_CASE("catalog lists eight entries with valid defaults") {
  CHECK(catalog().size() == 8);
  std::set<std::string> names;
  for (const auto& e : catalog()) {
    names.insert(e.name);
    const auto sys = build_system(e.name);
    CHECK(sys.default_initial.size() == static_cast<Eigen::Index>(sys.dim()));
    CHECK(e.closed_form == static_cast<bool>(sys.closed_form));
    CHECK(e.hamiltonian == sys.hamiltonian);
    if (sys.hamiltonian) CHECK(sys.hamiltonian_system().hamiltonian.size() == sys.ensemble_model().driver.size());
  }
  CHECK(names.size() == 8);
  const auto j = catalog_json();
  CHECK(j["schema_version"] == 1);
  CHECK(j["systems"].size() == 8);
}

TEST_CASE("unknown names and invalid parameters") {
  CHECK(code_of([] { build_system("double_pendulum"); }) == ErrorCode::UnknownName);
  CHECK(code_of([] { build_system("damped_oscillator", {{"m", 0.0}}); }) == ErrorCode::InvalidArgument);
  CHECK(code_of([] { build_system("inverted_pendulum", {{"l", -1.0}}); }) == ErrorCode::InvalidArgument);
  CHECK(code_of([] { build_system("damped_oscillator", {{"mass", 1.0}}); }) == ErrorCode::InvalidArgument);
  CHECK(code_of([] { build_system("integrable_torus", {{"dof", 1.5}}); }) == ErrorCode::InvalidArgument);
  CHECK(code_of([] { build_system("inverted_pendulum", {{"hamiltonian_variant", 1.0}}); }) ==
        ErrorCode::InvalidArgument);
  CHECK(code_of([] { build_system("langevin").hamiltonian_system(); }) == ErrorCode::NotAvailable);
  CHECK(code_of([] {
          const auto sys = build_system("rigid_body");
          closed_form_reference(sys, sample_path(sys.driver, 1.0, 0.1, 0), sys.default_initial);
        }) == ErrorCode::NotAvailable);
  const auto P = resolve_params(catalog_entry("damped_oscillator"), {{"nu", 0.25}});
  CHECK(P.at("nu") == 0.25);
  CHECK(P.at("m") == 1.0);
}

TEST_CASE("undamped oscillator has a pure time driver") {
  const auto sys = build_system("damped_oscillator", {{"nu", 0.0}});
  CHECK(sys.driver.size() == 1);
  CHECK(qv_matrix(sys.driver).norm() == 0.0);
  const auto X = sys.driver_path(1.0, 0.25, 3);
  CHECK(X.column(0) == X.times);
}

TEST_CASE("oscillator macroscopic constants") {
  const auto c = oscillator_constants(build_system("damped_oscillator").params);
  CHECK(c.lambda == doctest::Approx(0.25).epsilon(1e-15));
  CHECK(c.k == doctest::Approx(1.015625).epsilon(1e-15));
  const auto c2 = oscillator_constants({{"m", 2.0}, {"rho", 3.0}, {"nu", 0.5}});
  CHECK(c2.lambda == doctest::Approx(0.75));
  CHECK(c2.k == doctest::Approx(3.0 * (0.0625 * 3.0 / 8.0 + 1.0)));
}

TEST_CASE("moment ode") {
  const auto P = build_system("damped_oscillator").params;
  const auto ms = oscillator_moment_ode(P, 1.0, 0.0, 10.0, 1e-3);
  CHECK(ms.second_order_residual <= 1e-8);
  CHECK(ms.times.size() == 10001);
  // independent check of the first-order system: q' = p - q/8, p' = -p/8 - q
  const auto ref = oracle::rk4([](const Vec& z) { return vec({z[1] - 0.125 * z[0], -0.125 * z[1] - z[0]}); },
                               vec({1.0, 0.0}), 10.0, 20000);
  CHECK(ms.q.back() == doctest::Approx(ref.back()[0]).epsilon(1e-9));
  CHECK(ms.p.back() == doctest::Approx(ref.back()[1]).epsilon(1e-9));

  const auto free = oscillator_moment_ode({{"m", 1.0}, {"rho", 4.0}, {"nu", 0.0}}, 1.0, 0.0, 3.0, 1e-3);
  for (std::size_t k = 0; k < free.times.size(); k += 500)
    CHECK(free.q[k] == doctest::Approx(std::cos(2.0 * free.times[k])).epsilon(1e-9));

  // energy of the mean decays monotonically
  double prev = 1e300;
  for (std::size_t k = 0; k < ms.times.size(); k += 10) {
    const double e = 0.5 * ms.p[k] * ms.p[k] + 0.5 * ms.q[k] * ms.q[k];
    CHECK(e <= prev + 1e-15);
    prev = e;
  }
}

TEST_CASE("MC mean of the oscillator follows the moment ode") {
  const auto sys = build_system("damped_oscillator");
  EnsembleSpec s;
  s.n_paths = 2000;
  s.T = 2.0;
  s.dt = 1e-3;
  s.initial = sys.default_initial;
  s.record_every = 100;
  const auto e = run_ensemble(sys.ensemble_model(), s);
  const auto ms = oscillator_moment_ode(sys.params, 1.0, 0.0, 2.0, 1e-3);
  for (double t : {0.5, 1.0, 1.5, 2.0}) {
    const auto q = expectation(sys.observables.at("q"), e, t);
    const auto k = static_cast<std::size_t>(std::lround(t / 1e-3));
    CHECK(std::abs(q.mean - ms.q[k]) <= 3.0 * q.std_error + 1e-3);
  }
}

TEST_CASE("torus closed form with a deterministic driver") {
  // omega(I0) = omega0 + kappa I0 = 1 + 0.5 * 2 = 2
  const auto sys = build_system("integrable_torus", {{"sigma", 0.0}});
  const auto X = sys.driver_path(1.0, 0.1, 0);
  const auto tr = closed_form_reference(sys, X, vec({0.3, 2.0}));
  for (std::size_t k = 0; k < tr.rows(); ++k) {
    CHECK(tr.states(static_cast<Eigen::Index>(k), 0) == doctest::Approx(0.3 + 2.0 * X.times[k]).epsilon(1e-14));
    CHECK(tr.states(static_cast<Eigen::Index>(k), 1) == 2.0);
  }
}

TEST_CASE("torus actions are constant on simulated paths") {
  const auto sys = build_system("integrable_torus", {{"dof", 2.0}});
  const auto X = sys.driver_path(1.0, 1e-3, 8);
  const auto& hs = sys.hamiltonian_system();
  const Vec z0 = vec({0.0, 1.0, 0.5, 2.0});
  const auto tr = simulate(hs.structure, hs.hamiltonian, z0, X, config(1e-3));
  double drift = 0.0;
  for (std::size_t k = 0; k < tr.rows(); ++k) drift = std::max(drift, (tr.state(k).tail(2) - z0.tail(2)).norm());
  CHECK(drift == 0.0);
  const auto ref = closed_form_reference(sys, X, z0);
  CHECK((tr.final_state() - ref.final_state()).norm() <= 1e-9);
}

TEST_CASE("circle closed form") {
  const auto sys = build_system("circle_brownian");
  RowMatrix zero = RowMatrix::Zero(11, 1);
  const auto X0 = make_noise_path(0.1, zero, Mat::Identity(1, 1));
  const auto still = closed_form_reference(sys, X0, vec({0.6, 0.8}));
  for (std::size_t k = 0; k < still.rows(); ++k) CHECK((still.state(k) - vec({0.6, 0.8})).norm() == 0.0);

  const auto X = sys.driver_path(1.0, 1e-3, 2);
  const auto cf = closed_form_reference(sys, X, sys.default_initial);
  for (std::size_t k = 0; k < cf.rows(); k += 100) {
    const double b = X.values(static_cast<Eigen::Index>(k), 0);
    CHECK(cf.state(k)[0] == doctest::Approx(std::cos(b)).epsilon(1e-14));
    CHECK(cf.state(k)[1] == doctest::Approx(std::sin(b)).epsilon(1e-14));
    CHECK(cf.state(k).squaredNorm() == doctest::Approx(1.0).epsilon(1e-14));
  }
}

TEST_CASE("closed forms drive the hamilton residual to zero") {
  for (const std::string name : {"circle_brownian", "damped_oscillator", "parallelizable_bm", "integrable_torus"}) {
    CAPTURE(name);
    const auto sys = build_system(name);
    const auto& hs = sys.hamiltonian_system();
    std::vector<double> ldt, lres;
    for (int L = 6; L <= 12; L += 2) {
      const double dt = std::ldexp(1.0, -L);
      double res = 0.0;
      for (Seed seed = 0; seed < 8; ++seed) {
        const auto X = sys.driver_path(1.0, dt, 4 + seed);
        const auto cf = closed_form_reference(sys, X, sys.default_initial);
        for (std::size_t i = 0; i < sys.dim(); ++i)
          res += hamilton_residual(hs.structure, hs.hamiltonian, cf.states, X, coordinate_form(sys.dim(), i)).sup_abs();
      }
      res /= 8.0;
      ldt.push_back(std::log(dt));
      lres.push_back(std::log(std::max(res, 1e-300)));
    }
    // the residual is exactly first order, so the fitted slope scatters around 1
    if (std::exp(lres.front()) > 1e-12) CHECK(oracle::slope(ldt, lres) >= 0.9);
    CHECK(std::exp(lres.back()) <= 1e-2);
  }
}

TEST_CASE("langevin mean decays exponentially") {
  const auto sys = build_system("langevin");
  EnsembleSpec s;
  s.n_paths = 2000;
  s.T = 1.0;
  s.dt = 1e-3;
  s.initial = sys.default_initial;
  s.record_every = 100;
  const auto e = run_ensemble(sys.ensemble_model(), s);
  const double v0 = sys.default_initial[1];
  for (double t : {0.5, 1.0}) {
    const auto v = expectation(sys.observables.at("v"), e, t);
    CHECK(std::abs(v.mean - v0 * std::exp(-t)) <= 3.0 * v.std_error + 1e-3);
  }
  // noiseless fine-grid run is the same mean
  const auto quiet = build_system("langevin", {{"b", 0.0}});
  auto s1 = s;
  s1.n_paths = 1;
  const auto d = run_ensemble(quiet.ensemble_model(), s1);
  CHECK(d.state(0, d.record_row(1.0))[1] == doctest::Approx(v0 * std::exp(-1.0)).epsilon(1e-3));
}

TEST_CASE("rigid body keeps the casimir") {
  const auto sys = build_system("rigid_body");
  CHECK_FALSE(sys.symplectic);
  const auto& hs = sys.hamiltonian_system();
  const auto X = sys.driver_path(1.0, 1e-3, 6);
  const auto tr = simulate(hs.structure, hs.hamiltonian, sys.default_initial, X, config(1e-3));
  const auto C = sys.observables.at("casimir");
  double drift = 0.0;
  for (std::size_t k = 0; k < tr.rows(); ++k) drift = std::max(drift, std::abs(C(tr.state(k)) - C(tr.state(0))));
  CHECK(drift <= 1e-3);
  CHECK(sys.equilibria.size() == 3);
}

TEST_CASE("inverted pendulum forcing") {
  const auto sys = build_system("inverted_pendulum");
  CHECK_FALSE(sys.hamiltonian);
  CHECK(sys.dim() == 4);
  REQUIRE(static_cast<bool>(sys.sampler));
  // stationary OU initial law: x, y each N(0, 1/2)
  std::vector<double> ys;
  for (std::size_t i = 0; i < 4000; ++i) ys.push_back(sys.sampler(path_seed(1, i))[3]);
  CHECK(std::abs(oracle::mean(ys)) <= 3.0 * oracle::stderr_of_mean(ys));
  CHECK(oracle::variance(ys) == doctest::Approx(0.5).epsilon(0.08));

  const auto var = build_system("inverted_pendulum", {{"lambda", 0.0}, {"hamiltonian_variant", 1.0}});
  CHECK(var.dim() == 2);
  REQUIRE(static_cast<bool>(var.derive_driver));
  const auto X = var.driver_path(1.0, 1e-3, 3);
  CHECK(X.size() == 3);
  CHECK(X.column(0) == X.times);
  // second column is the realized covariation of the third
  const auto qv = realized_covariation(X.column(2), X.column(2));
  CHECK(X.values(X.values.rows() - 1, 1) == doctest::Approx(qv.back()).epsilon(1e-12));
  CHECK(X.qv_rates(2, 2) == 1.0);
}
