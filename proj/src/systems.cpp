#include "stochham/systems.hpp"

#include <cmath>
#include <numbers>

namespace stochham {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

ParamSchema positive(std::string name, double def, std::string desc) {
  return {std::move(name), def, 0.0, kInf, true, false, std::move(desc)};
}
ParamSchema nonnegative(std::string name, double def, std::string desc) {
  return {std::move(name), def, 0.0, kInf, false, false, std::move(desc)};
}
ParamSchema real(std::string name, double def, std::string desc) {
  return {std::move(name), def, -kInf, kInf, false, false, std::move(desc)};
}

std::vector<CatalogEntry> make_catalog() {
  std::vector<CatalogEntry> c;
  c.push_back({"bismut_diffusion", "Hamiltonian diffusions",
               "h = (p^2/2m + rho q^2/2, sigma_q q, sigma_p p), X = (t, B1, B2)",
               {positive("m", 1.0, "mass"), positive("rho", 1.0, "spring constant"),
                real("sigma_q", 0.3, "loading of B1 on h1 = sigma_q q"),
                real("sigma_p", 0.3, "loading of B2 on h2 = sigma_p p")},
               true, false});
  c.push_back({"damped_oscillator", "damped harmonic oscillator",
               "h = p^2/2m + rho q^2/2 driven by X = t + nu B",
               {positive("m", 1.0, "mass"), positive("rho", 1.0, "spring constant"),
                nonnegative("nu", 0.5, "noise amplitude")},
               true, true});
  c.push_back({"langevin", "Langevin (Ornstein-Uhlenbeck) contrast",
               "Ito SDE dq = v dt, dv = -lambda v dt + b dB (not Hamiltonian)",
               {nonnegative("lambda", 1.0, "friction"), real("b", 0.5, "noise amplitude")}, false, false});
  {
    ParamSchema dof{"dof", 1.0, 1.0, 8.0, false, true, "number of angle/action pairs"};
    c.push_back({"integrable_torus", "integrable systems in action-angle coordinates",
                 "(theta, I) with h0 = sum(omega0 I + kappa I^2/2), h1 = sigma sum I, X = (t, B)",
                 {dof, real("omega0", 1.0, "linear frequency"), real("kappa", 0.5, "frequency shear"),
                  real("sigma", 1.0, "noise loading; 0 gives the deterministic driver X = t")},
                 true, true});
  }
  c.push_back({"circle_brownian", "Brownian motion on the circle",
               "dx = -y o dB, dy = x o dB in the plane chart with h = -(x^2+y^2)/2, X = B", {}, true, true});
  c.push_back({"parallelizable_bm", "Brownian motion on a parallelizable manifold",
               "flat 2-torus T*T^2 with h_j = p_j, X = (B1, B2)", {}, true, true});
  c.push_back({"rigid_body", "Lie-Poisson rigid body on so(3)*",
               "h = (sum mu_i^2 / 2 I_i, sigma1 mu1, sigma2 mu2), X = (t, B1, B2)",
               {positive("I1", 1.0, "principal moment"), positive("I2", 2.0, "principal moment"),
                positive("I3", 3.0, "principal moment"), real("sigma1", 0.5, "loading on mu1"),
                real("sigma2", 0.5, "loading on mu2")},
               true, false});
  c.push_back({"inverted_pendulum", "stochastically vibrating suspension point",
               "dphi = phidot dt, dphidot = (g/l phi - lambda phidot) dt + eps^2 omega^2 phi dzdot, OU forcing",
               {nonnegative("g", 9.81, "gravity"), positive("l", 1.0, "length"),
                nonnegative("lambda", 0.1, "friction"), nonnegative("epsilon", 0.2, "sqrt(a/l)"),
                nonnegative("omega", 10.0, "forcing frequency"),
                {"hamiltonian_variant", 0.0, 0.0, 1.0, false, true, "1: Hamiltonian form (requires lambda = 0)"}},
               false, false});
  return c;
}

ScalarField energy_1dof(double m, double rho) {
  Mat Q(2, 2);
  Q << rho, 0.0, 0.0, 1.0 / m;
  return quadratic_field(Q);
}

Vec vec(std::initializer_list<double> v) {
  Vec out(static_cast<Eigen::Index>(v.size()));
  Eigen::Index i = 0;
  for (double x : v) out[i++] = x;
  return out;
}

Trajectory trajectory_on(const NoisePath& X, std::size_t n) {
  Trajectory t;
  t.times = X.times;
  t.states.resize(static_cast<Eigen::Index>(X.times.size()), static_cast<Eigen::Index>(n));
  t.status = PathStatus::Completed;
  t.terminal_index = X.steps();
  t.noise_seed = X.seed;
  return t;
}

std::vector<std::string> default_coordinates(std::size_t n) {
  std::vector<std::string> c;
  for (std::size_t i = 0; i < n; ++i) c.push_back("z" + std::to_string(i + 1));
  return c;
}

SystemSpec bismut(const Params& P) {
  const double m = P.at("m"), rho = P.at("rho"), sq = P.at("sigma_q"), sp = P.at("sigma_p");
  SystemSpec s;
  const ScalarField h0 = energy_1dof(m, rho);
  s.model = HamiltonianSystem{PhaseStructure::canonical(2),
                              HamiltonianBundle({h0, linear_field(vec({sq, 0.0})), linear_field(vec({0.0, sp}))},
                                                {"t", "B1", "B2"})};
  s.driver = DriverSpec({ComponentSpec::time(), ComponentSpec::brownian(0), ComponentSpec::brownian(1)}, 2);
  s.coordinates = {"q", "p"};
  s.default_initial = vec({1.0, 0.0});
  s.observables = {{"energy", h0}};
  return s;
}

SystemSpec damped_oscillator(const Params& P) {
  const double m = P.at("m"), rho = P.at("rho"), nu = P.at("nu");
  SystemSpec s;
  const ScalarField h = energy_1dof(m, rho);
  s.model = HamiltonianSystem{PhaseStructure::canonical(2), HamiltonianBundle({h}, {"X"})};
  s.driver = nu == 0.0 ? DriverSpec({ComponentSpec::time()}, 0) : DriverSpec({ComponentSpec::affine(1.0, {nu})}, 1);
  s.coordinates = {"q", "p"};
  s.equilibria = {Vec::Zero(2)};
  s.default_initial = vec({1.0, 0.0});
  s.observables = {{"energy", h}, {"q", coordinate_field(2, 0)}, {"p", coordinate_field(2, 1)}};
  // z_t = exp(A X_t) z0 with A = [[0, 1/m], [-rho, 0]], A^2 = -(rho/m) I.
  s.closed_form = [m, rho](const NoisePath& X, const Vec& z0) {
    STOCHHAM_REQUIRE(X.size() == 1, ErrorCode::DimensionMismatch, "oscillator driver has one component");
    Trajectory t = trajectory_on(X, 2);
    const double w = std::sqrt(rho / m);
    Mat A(2, 2);
    A << 0.0, 1.0 / m, -rho, 0.0;
    for (Eigen::Index k = 0; k < t.states.rows(); ++k) {
      const double x = X.values(k, 0);
      const Mat E = std::cos(w * x) * Mat::Identity(2, 2) + (std::sin(w * x) / w) * A;
      t.states.row(k) = (E * z0).transpose();
    }
    return t;
  };
  return s;
}

SystemSpec langevin(const Params& P) {
  const double lambda = P.at("lambda"), b = P.at("b");
  SystemSpec s;
  ItoModel im;
  im.dim = 2;
  im.channels = 1;
  im.drift = [lambda](const Vec& z, Vec& out) {
    out.resize(2);
    out[0] = z[1];
    out[1] = -lambda * z[1];
  };
  im.diffusion = [b](const Vec&, Mat& out) {
    out.setZero(2, 1);
    out(1, 0) = b;
  };
  s.model = im;
  s.driver = DriverSpec({ComponentSpec::brownian(0)}, 1);
  s.hamiltonian = false;
  s.symplectic = false;
  s.coordinates = {"q", "v"};
  s.equilibria = {Vec::Zero(2)};
  s.default_initial = vec({0.0, 1.0});
  Mat Q = Mat::Zero(2, 2);
  Q(1, 1) = 1.0;
  s.observables = {{"kinetic", quadratic_field(Q)}, {"v", coordinate_field(2, 1)}};
  return s;
}

SystemSpec integrable_torus(const Params& P) {
  const auto d = static_cast<Eigen::Index>(P.at("dof"));
  const double omega0 = P.at("omega0"), kappa = P.at("kappa"), sigma = P.at("sigma");
  const auto n = static_cast<std::size_t>(2 * d);
  SystemSpec s;
  // (theta_1..theta_d, I_1..I_d) in (q, p) order.
  auto h0 = make_field(
      [d, omega0, kappa](const Vec& z) {
        const auto I = z.tail(d);
        return omega0 * I.sum() + 0.5 * kappa * I.squaredNorm();
      },
      [d, omega0, kappa](const Vec& z, Vec& g) {
        g.setZero(2 * d);
        g.tail(d) = (omega0 + kappa * z.tail(d).array()).matrix();
      },
      [d, kappa](const Vec&, Mat& H) {
        H.setZero(2 * d, 2 * d);
        H.bottomRightCorner(d, d) = kappa * Mat::Identity(d, d);
      });
  Vec c1 = Vec::Zero(2 * d);
  c1.tail(d).setConstant(sigma);
  std::vector<ScalarField> comps{h0};
  std::vector<std::string> labels{"t"};
  if (sigma != 0.0) {
    comps.push_back(linear_field(c1));
    labels.push_back("B");
    s.driver = DriverSpec({ComponentSpec::time(), ComponentSpec::brownian(0)}, 1);
  } else {
    s.driver = DriverSpec({ComponentSpec::time()}, 0);
  }
  s.model = HamiltonianSystem{PhaseStructure::canonical(n), HamiltonianBundle(comps, labels)};
  s.coordinates.clear();
  for (Eigen::Index i = 0; i < d; ++i) s.coordinates.push_back("theta" + std::to_string(i + 1));
  for (Eigen::Index i = 0; i < d; ++i) s.coordinates.push_back("I" + std::to_string(i + 1));
  s.default_initial = Vec::Zero(2 * d);
  s.default_initial.tail(d).setConstant(1.0);
  for (Eigen::Index i = 0; i < d; ++i)
    s.observables.emplace("I" + std::to_string(i + 1), coordinate_field(n, static_cast<std::size_t>(d + i)));
  // theta_t = theta_0 + sum_j omega_j(I_0) X^j_t, I_t = I_0.
  s.closed_form = [d, n, omega0, kappa, sigma](const NoisePath& X, const Vec& z0) {
    Trajectory t = trajectory_on(X, n);
    for (Eigen::Index k = 0; k < t.states.rows(); ++k) {
      Vec z = z0;
      for (Eigen::Index i = 0; i < d; ++i) {
        z[i] = z0[i] + (omega0 + kappa * z0[d + i]) * X.values(k, 0);
        if (sigma != 0.0) z[i] += sigma * X.values(k, 1);
      }
      t.states.row(k) = z.transpose();
    }
    return t;
  };
  return s;
}

SystemSpec circle_brownian(const Params&) {
  SystemSpec s;
  Mat Q = -Mat::Identity(2, 2);
  const ScalarField h = quadratic_field(Q);
  s.model = HamiltonianSystem{PhaseStructure::canonical(2), HamiltonianBundle({h}, {"B"})};
  s.driver = DriverSpec({ComponentSpec::brownian(0)}, 1);
  s.coordinates = {"x", "y"};
  s.equilibria = {Vec::Zero(2)};
  s.default_initial = vec({1.0, 0.0});
  s.observables = {{"radius2", quadratic_field(2.0 * Mat::Identity(2, 2))},
                   {"x", coordinate_field(2, 0)},
                   {"y", coordinate_field(2, 1)}};
  s.closed_form = [](const NoisePath& X, const Vec& z0) {
    STOCHHAM_REQUIRE(X.size() == 1, ErrorCode::DimensionMismatch, "circle driver has one component");
    Trajectory t = trajectory_on(X, 2);
    for (Eigen::Index k = 0; k < t.states.rows(); ++k) {
      const double b = X.values(k, 0), c = std::cos(b), sn = std::sin(b);
      t.states(k, 0) = c * z0[0] - sn * z0[1];
      t.states(k, 1) = sn * z0[0] + c * z0[1];
    }
    return t;
  };
  return s;
}

SystemSpec parallelizable_bm(const Params&) {
  SystemSpec s;
  s.model = HamiltonianSystem{PhaseStructure::canonical(4),
                              HamiltonianBundle({coordinate_field(4, 2), coordinate_field(4, 3)}, {"B1", "B2"})};
  s.driver = DriverSpec({ComponentSpec::brownian(0), ComponentSpec::brownian(1)}, 2);
  s.coordinates = {"q1", "q2", "p1", "p2"};
  s.default_initial = vec({0.0, 0.0, 1.0, -1.0});
  s.observables = {{"p1", coordinate_field(4, 2)}, {"p2", coordinate_field(4, 3)}};
  s.closed_form = [](const NoisePath& X, const Vec& z0) {
    STOCHHAM_REQUIRE(X.size() == 2, ErrorCode::DimensionMismatch, "driver has two components");
    Trajectory t = trajectory_on(X, 4);
    for (Eigen::Index k = 0; k < t.states.rows(); ++k) {
      t.states.row(k) = z0.transpose();
      t.states(k, 0) += X.values(k, 0);
      t.states(k, 1) += X.values(k, 1);
    }
    return t;
  };
  return s;
}

SystemSpec rigid_body(const Params& P) {
  const double I1 = P.at("I1"), I2 = P.at("I2"), I3 = P.at("I3");
  SystemSpec s;
  Mat Q = Mat::Zero(3, 3);
  Q.diagonal() << 1.0 / I1, 1.0 / I2, 1.0 / I3;
  const ScalarField h0 = quadratic_field(Q);
  const ScalarField casimir = quadratic_field(2.0 * Mat::Identity(3, 3));
  s.model = HamiltonianSystem{PhaseStructure::lie_poisson_so3(),
                              HamiltonianBundle({h0, linear_field(vec({P.at("sigma1"), 0.0, 0.0})),
                                                 linear_field(vec({0.0, P.at("sigma2"), 0.0}))},
                                                {"t", "B1", "B2"})};
  s.driver = DriverSpec({ComponentSpec::time(), ComponentSpec::brownian(0), ComponentSpec::brownian(1)}, 2);
  s.symplectic = false;
  s.coordinates = {"mu1", "mu2", "mu3"};
  s.equilibria = {vec({1.0, 0.0, 0.0}), vec({0.0, 1.0, 0.0}), vec({0.0, 0.0, 1.0})};
  s.default_initial = vec({1.0, 0.5, 0.25});
  s.observables = {{"casimir", casimir}, {"energy", h0}};
  return s;
}

// OU forcing dx = y dt, dy = -(x + y) dt + dB started from its stationary law N(0, 1/2) x N(0, 1/2).
constexpr std::uint64_t kOuTag = 0x4F55;

Vec ou_initial(Seed seed) {
  const double sd = std::sqrt(0.5);
  return vec({sd * keyed_normal(seed, kOuTag, 0, 0), sd * keyed_normal(seed, kOuTag, 0, 1)});
}

SystemSpec inverted_pendulum(const Params& P) {
  const double g = P.at("g"), l = P.at("l"), lambda = P.at("lambda"), eps = P.at("epsilon"), om = P.at("omega");
  const bool variant = P.at("hamiltonian_variant") != 0.0;
  const double c = eps * eps * om * om;
  SystemSpec s;
  if (!variant) {
    ItoModel im;
    im.dim = 4;
    im.channels = 1;
    // (phi, phidot, x, y); dzdot = dy.
    im.drift = [g, l, lambda, c](const Vec& z, Vec& out) {
      out.resize(4);
      const double dy = -(z[2] + z[3]);
      out[0] = z[1];
      out[1] = g / l * z[0] - lambda * z[1] + c * z[0] * dy;
      out[2] = z[3];
      out[3] = dy;
    };
    im.diffusion = [c](const Vec& z, Mat& out) {
      out.setZero(4, 1);
      out(1, 0) = c * z[0];
      out(3, 0) = 1.0;
    };
    s.model = im;
    s.driver = DriverSpec({ComponentSpec::brownian(0)}, 1);
    s.hamiltonian = false;
    s.symplectic = false;
    s.coordinates = {"phi", "phidot", "x", "y"};
    s.equilibria = {Vec::Zero(4)};
    s.default_initial = vec({0.1, 0.0, 0.0, 0.0});
    const Vec base = s.default_initial;
    s.sampler = [base](Seed seed) {
      Vec z = base;
      z.tail(2) = ou_initial(seed);
      return z;
    };
    Mat Q = Mat::Zero(4, 4);
    Q(0, 0) = 2.0;
    Q(1, 1) = 2.0;
    s.observables = {{"phi", coordinate_field(4, 0)}, {"radius2", quadratic_field(Q)}};
    return s;
  }
  STOCHHAM_REQUIRE(lambda == 0.0, ErrorCode::InvalidArgument, "the Hamiltonian pendulum variant requires lambda = 0");
  // Form l^2 dphi ^ dphidot, tensor (1/l^2) J.
  auto h0 = quadratic_field((Mat(2, 2) << -g * l, 0.0, 0.0, l * l).finished());
  auto h1 = quadratic_field((Mat(2, 2) << 0.5 * c * l * l, 0.0, 0.0, 0.0).finished());
  auto h2 = quadratic_field((Mat(2, 2) << -c * l * l, 0.0, 0.0, 0.0).finished());
  s.model = HamiltonianSystem{PhaseStructure::scaled_canonical(2, 1.0 / (l * l)),
                              HamiltonianBundle({h0, h1, h2}, {"t", "[zdot,zdot]", "zdot"})};
  s.driver = DriverSpec({ComponentSpec::brownian(0)}, 1);
  // Base path is B; the model sees (t, realized [y, y], y - y_0) with y from the OU forcing.
  s.derive_driver = [](const NoisePath& base, Seed seed) {
    const std::size_t N = base.steps();
    const double dt = base.dt;
    RowMatrix v = RowMatrix::Zero(static_cast<Eigen::Index>(N + 1), 3);
    const Vec xy0 = ou_initial(seed);
    double x = xy0[0], y = xy0[1], qv = 0.0;
    const double y0 = y;
    for (std::size_t k = 0; k < N; ++k) {
      const auto ki = static_cast<Eigen::Index>(k);
      const double dB = base.values(ki + 1, 0) - base.values(ki, 0);
      const double dy = -(x + y) * dt + dB;
      x += y * dt;
      y += dy;
      qv += dy * dy;
      v(ki + 1, 0) = base.times[k + 1];
      v(ki + 1, 1) = qv;
      v(ki + 1, 2) = y - y0;
    }
    Mat qv_rates = Mat::Zero(3, 3);
    qv_rates(2, 2) = 1.0;
    return make_noise_path(dt, std::move(v), qv_rates, seed);
  };
  s.symplectic = true;
  s.coordinates = {"phi", "phidot"};
  s.equilibria = {Vec::Zero(2)};
  s.default_initial = vec({0.1, 0.0});
  s.observables = {{"phi", coordinate_field(2, 0)}, {"energy", h0}};
  return s;
}

}  // namespace

const std::vector<CatalogEntry>& catalog() {
  static const std::vector<CatalogEntry> c = make_catalog();
  return c;
}

const CatalogEntry& catalog_entry(const std::string& name) {
  for (const auto& e : catalog())
    if (e.name == name) return e;
  std::string names;
  for (const auto& e : catalog()) names += (names.empty() ? "" : ", ") + e.name;
  throw Error(ErrorCode::UnknownName, "unknown system '" + name + "'; catalog: " + names);
}

nlohmann::json catalog_json() {
  nlohmann::json arr = nlohmann::json::array();
  for (const auto& e : catalog()) {
    nlohmann::json params = nlohmann::json::array();
    for (const auto& p : e.params) {
      nlohmann::json j{{"name", p.name}, {"default", p.default_value}, {"description", p.description},
                       {"integer", p.integer}, {"min_exclusive", p.min_exclusive}};
      j["min"] = std::isfinite(p.min) ? nlohmann::json(p.min) : nlohmann::json(nullptr);
      j["max"] = std::isfinite(p.max) ? nlohmann::json(p.max) : nlohmann::json(nullptr);
      params.push_back(j);
    }
    arr.push_back({{"name", e.name}, {"anchor", e.anchor}, {"summary", e.summary}, {"params", params},
                   {"hamiltonian", e.hamiltonian}, {"closed_form", e.closed_form}});
  }
  return {{"schema_version", 1}, {"systems", arr}};
}

Params resolve_params(const CatalogEntry& entry, const Params& overrides) {
  Params out;
  for (const auto& p : entry.params) out[p.name] = p.default_value;
  for (const auto& [k, v] : overrides) {
    auto it = out.find(k);
    if (it == out.end()) {
      std::string names;
      for (const auto& p : entry.params) names += (names.empty() ? "" : ", ") + p.name;
      throw Error(ErrorCode::InvalidArgument, "unknown parameter '" + k + "' for " + entry.name +
                                                  (names.empty() ? " (takes no parameters)" : "; valid: " + names));
    }
    it->second = v;
  }
  for (const auto& p : entry.params) {
    const double v = out[p.name];
    const bool low_ok = p.min_exclusive ? v > p.min : v >= p.min;
    if (!std::isfinite(v) || !low_ok || v > p.max || (p.integer && v != std::floor(v))) {
      throw Error(ErrorCode::InvalidArgument, "parameter " + entry.name + "." + p.name + " = " + std::to_string(v) +
                                                  " is out of range");
    }
  }
  return out;
}

std::size_t SystemSpec::dim() const {
  return std::visit(
      [](const auto& m) -> std::size_t {
        if constexpr (std::is_same_v<std::decay_t<decltype(m)>, HamiltonianSystem>) return m.structure.dim();
        else return m.dim;
      },
      model);
}

const HamiltonianSystem& SystemSpec::hamiltonian_system() const {
  const auto* h = std::get_if<HamiltonianSystem>(&model);
  if (!h) throw Error(ErrorCode::NotAvailable, name + " is not a Hamiltonian system");
  return *h;
}

EnsembleModel SystemSpec::ensemble_model() const { return EnsembleModel{model, driver, derive_driver}; }

NoisePath SystemSpec::driver_path(double T, double dt, Seed seed) const {
  NoisePath base = sample_path(driver, T, dt, seed);
  return derive_driver ? derive_driver(base, seed) : base;
}

SystemSpec build_system(const std::string& name, const Params& overrides) {
  const CatalogEntry& entry = catalog_entry(name);
  const Params P = resolve_params(entry, overrides);
  SystemSpec s;
  if (name == "bismut_diffusion") s = bismut(P);
  else if (name == "damped_oscillator") s = damped_oscillator(P);
  else if (name == "langevin") s = langevin(P);
  else if (name == "integrable_torus") s = integrable_torus(P);
  else if (name == "circle_brownian") s = circle_brownian(P);
  else if (name == "parallelizable_bm") s = parallelizable_bm(P);
  else if (name == "rigid_body") s = rigid_body(P);
  else s = inverted_pendulum(P);
  s.name = name;
  s.anchor = entry.anchor;
  s.params = P;
  if (s.coordinates.empty()) s.coordinates = default_coordinates(s.dim());
  return s;
}

Trajectory closed_form_reference(const SystemSpec& sys, const NoisePath& X, const Vec& z0) {
  if (!sys.closed_form) throw Error(ErrorCode::NotAvailable, sys.name + " has no closed form");
  STOCHHAM_REQUIRE(static_cast<std::size_t>(z0.size()) == sys.dim(), ErrorCode::DimensionMismatch,
                   "initial state has the wrong dimension");
  return sys.closed_form(X, z0);
}

OscillatorConstants oscillator_constants(const Params& params) {
  const double m = params.at("m"), rho = params.at("rho"), nu = params.at("nu");
  return {nu * nu * rho, rho * (std::pow(nu, 4) * rho / (4.0 * m) + 1.0)};
}

MomentSeries oscillator_moment_ode(const Params& params, double q0, double p0, double T, double dt_ode) {
  const Params P = resolve_params(catalog_entry("damped_oscillator"), params);
  const double m = P.at("m"), rho = P.at("rho"), nu = P.at("nu");
  const std::size_t N = grid_steps(T, dt_ode);
  const double a = nu * nu * rho / (2.0 * m);
  auto f = [&](double q, double p, double& dq, double& dp) {
    dq = p / m - a * q;
    dp = -a * p - rho * q;
  };
  MomentSeries out;
  out.times.resize(N + 1);
  out.q.resize(N + 1);
  out.p.resize(N + 1);
  double q = q0, p = p0;
  out.q[0] = q;
  out.p[0] = p;
  const double h = dt_ode;
  for (std::size_t k = 0; k < N; ++k) {
    double k1q, k1p, k2q, k2p, k3q, k3p, k4q, k4p;
    f(q, p, k1q, k1p);
    f(q + 0.5 * h * k1q, p + 0.5 * h * k1p, k2q, k2p);
    f(q + 0.5 * h * k2q, p + 0.5 * h * k2p, k3q, k3p);
    f(q + h * k3q, p + h * k3p, k4q, k4p);
    q += h / 6.0 * (k1q + 2.0 * k2q + 2.0 * k3q + k4q);
    p += h / 6.0 * (k1p + 2.0 * k2p + 2.0 * k3p + k4p);
    out.q[k + 1] = q;
    out.p[k + 1] = p;
  }
  for (std::size_t k = 0; k <= N; ++k) out.times[k] = static_cast<double>(k) * h;

  const OscillatorConstants c = oscillator_constants(P);
  double worst = 0.0;
  const auto& Q = out.q;
  for (std::size_t k = 2; k + 2 <= N; ++k) {
    const double d1 = (Q[k - 2] - 8.0 * Q[k - 1] + 8.0 * Q[k + 1] - Q[k + 2]) / (12.0 * h);
    const double d2 = (-Q[k - 2] + 16.0 * Q[k - 1] - 30.0 * Q[k] + 16.0 * Q[k + 1] - Q[k + 2]) / (12.0 * h * h);
    worst = std::max(worst, std::abs(m * d2 + c.lambda * d1 + c.k * Q[k]));
  }
  out.second_order_residual = worst;
  return out;
}

}  // namespace stochham
