#include "stochham/diagnostics.hpp"

#include <Eigen/Eigenvalues>

#include <cmath>
#include <limits>

namespace stochham {

using nlohmann::json;

json to_json(const DiagnosticsReport& r) {
  json j;
  j["name"] = r.name;
  j["statistic"] = r.statistic;
  j["tolerance"] = r.tolerance;
  j["passed"] = r.passed;
  j["details"] = r.details;
  return j;
}

json to_json(const std::vector<DiagnosticsReport>& reports) {
  json arr = json::array();
  for (const auto& r : reports) arr.push_back(to_json(r));
  return arr;
}

DiagnosticsReport strong_conservation_check(const ScalarField& f, const Ensemble& e, double tol) {
  DiagnosticsReport rep;
  rep.name = "strong_conservation";
  rep.tolerance = tol;
  double worst = 0.0;
  std::size_t worst_path = 0, used = 0;
  double worst_time = 0.0;
  for (std::size_t i = 0; i < e.paths.size(); ++i) {
    const auto& p = e.paths[i];
    if (p.status == PathStatus::Exploded) continue;
    ++used;
    const double f0 = f(p.recorded.row(0).transpose());
    for (Eigen::Index r = 1; r < p.recorded.rows(); ++r) {
      const double d = std::abs(f(p.recorded.row(r).transpose()) - f0);
      if (!(d <= worst)) {
        worst = d;
        worst_path = i;
        worst_time = e.record_times[static_cast<std::size_t>(r)];
      }
    }
  }
  rep.statistic = worst;
  rep.details["worst_path"] = worst_path;
  rep.details["worst_time"] = worst_time;
  rep.details["paths_used"] = used;
  rep.details["exploded"] = e.exploded_count();
  rep.decide();
  return rep;
}

DiagnosticsReport weak_conservation_check(const ScalarField& f, const Ensemble& e,
                                          const std::vector<StoppingTime>& stopping_times, double abs_tol) {
  STOCHHAM_REQUIRE(!stopping_times.empty(), ErrorCode::InvalidArgument, "weak conservation needs stopping times");
  DiagnosticsReport rep;
  rep.name = "weak_conservation";
  rep.tolerance = abs_tol;
  rep.statistic = -std::numeric_limits<double>::infinity();
  json per = json::array();
  for (const auto& tau : stopping_times) {
    const Estimate d = expectation_increment(f, e, tau);
    const double excess = std::abs(d.mean) - 3.0 * d.std_error;
    rep.statistic = std::max(rep.statistic, excess);
    per.push_back({{"stopping_time", tau.label}, {"mean_increment", d.mean}, {"stderr", d.std_error}, {"n", d.n}});
  }
  rep.details["per_stopping_time"] = per;
  rep.decide();
  return rep;
}

DiagnosticsReport involution_check(const PhaseStructure& s, const ScalarField& f, const HamiltonianBundle& h,
                                   const std::vector<Vec>& probes, double tol) {
  STOCHHAM_REQUIRE(!probes.empty(), ErrorCode::InvalidArgument, "involution check needs probes");
  DiagnosticsReport rep;
  rep.name = "involution";
  rep.tolerance = tol;
  json per = json::array();
  for (std::size_t j = 0; j < h.size(); ++j) {
    double worst = 0.0;
    for (const Vec& z : probes) {
      for (Eigen::Index i = 0; i < z.size(); ++i)
        STOCHHAM_REQUIRE(std::isfinite(z[i]), ErrorCode::NonFinite, "probe is not finite");
      worst = std::max(worst, std::abs(poisson_bracket(s, f, h[j], z)));
    }
    per.push_back({{"component", h.basis_labels[j]}, {"max_abs_bracket", worst}});
    rep.statistic = std::max(rep.statistic, worst);
  }
  rep.details["per_component"] = per;
  rep.details["probes"] = probes.size();
  rep.decide();
  return rep;
}

DiagnosticsReport bracket_increment_check(const PhaseStructure& s, const HamiltonianBundle& h, const Trajectory& traj,
                                          const NoisePath& X, const ScalarField& f, double tol, double fd_step) {
  const std::size_t rows = traj.rows();
  STOCHHAM_REQUIRE(rows <= X.times.size(), ErrorCode::GridMismatch, "trajectory longer than its driver");
  STOCHHAM_REQUIRE(X.size() == h.size(), ErrorCode::DimensionMismatch, "driver and Hamiltonian sizes differ");
  const std::size_t r = h.size();

  std::vector<ScalarField> fh;
  for (std::size_t j = 0; j < r; ++j) fh.push_back(bracket_field(s, f, h[j], fd_step));

  std::vector<std::vector<double>> Z(r, std::vector<double>(rows));
  std::vector<double> drift(rows, 0.0);  // 1/2 sum_ij {{f,h_j},h_i} kappa^{ij}
  const double f0 = f(traj.state(0));
  std::vector<double> lhs(rows);
  for (std::size_t k = 0; k < rows; ++k) {
    const Vec z = traj.state(k);
    lhs[k] = f(z) - f0;
    for (std::size_t j = 0; j < r; ++j) Z[j][k] = fh[j](z);
    for (std::size_t i = 0; i < r; ++i) {
      for (std::size_t j = 0; j < r; ++j) {
        const double q = X.qv_rates(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j));
        if (q != 0.0) drift[k] += 0.5 * q * poisson_bracket(s, fh[j], h[i], z);
      }
    }
  }

  double sup_strat = 0.0, sup_ito = 0.0;
  std::vector<double> strat(rows, 0.0), ito(rows, 0.0);
  for (std::size_t j = 0; j < r; ++j) {
    std::vector<double> Xj = X.column(j);
    Xj.resize(rows);
    const auto sj = scalar_strat_integral(Z[j], Xj);
    const auto ij = scalar_ito_integral(Z[j], Xj);
    for (std::size_t k = 0; k < rows; ++k) {
      strat[k] += sj.partial_sums[k];
      ito[k] += ij.partial_sums[k];
    }
  }
  double drift_acc = 0.0;
  for (std::size_t k = 0; k < rows; ++k) {
    if (k > 0) drift_acc += drift[k - 1] * X.dt;
    sup_strat = std::max(sup_strat, std::abs(lhs[k] - strat[k]));
    sup_ito = std::max(sup_ito, std::abs(lhs[k] - ito[k] - drift_acc));
  }

  DiagnosticsReport rep;
  rep.name = "bracket_increment";
  rep.tolerance = tol;
  rep.statistic = std::max(sup_strat, sup_ito);
  rep.details["sup_stratonovich"] = sup_strat;
  rep.details["sup_ito"] = sup_ito;
  rep.details["final_increment"] = lhs.back();
  rep.details["final_stratonovich_rhs"] = strat.back();
  rep.decide();
  return rep;
}

Mat canonical_omega(std::size_t n) {
  STOCHHAM_REQUIRE(n % 2 == 0 && n > 0, ErrorCode::InvalidArgument, "symplectic matrix needs even dimension");
  const auto k = static_cast<Eigen::Index>(n / 2);
  Mat O = Mat::Zero(2 * k, 2 * k);
  O.topRightCorner(k, k).setIdentity();
  O.bottomLeftCorner(k, k) = -Mat::Identity(k, k);
  return O;
}

DiagnosticsReport symplectic_defect(const std::vector<Mat>& J_series, const Mat& Omega, double tol) {
  STOCHHAM_REQUIRE(!J_series.empty(), ErrorCode::InvalidArgument, "empty tangent-flow series");
  DiagnosticsReport rep;
  rep.name = "symplectic_defect";
  rep.tolerance = tol;
  double det_dev = 0.0;
  for (const Mat& J : J_series) {
    STOCHHAM_REQUIRE(J.rows() == Omega.rows() && J.cols() == Omega.cols(), ErrorCode::DimensionMismatch,
                     "J and Omega dimensions differ");
    rep.statistic = std::max(rep.statistic, (J.transpose() * Omega * J - Omega).norm());
    det_dev = std::max(det_dev, std::abs(J.determinant() - 1.0));
  }
  rep.details["max_abs_det_minus_one"] = det_dev;
  rep.details["final_det"] = J_series.back().determinant();
  rep.decide();
  return rep;
}

DiagnosticsReport dirichlet_certificate(const ScalarField& f, const Vec& z0, const DirichletOptions& opt) {
  STOCHHAM_REQUIRE(opt.fd_step > 0.0 && std::isfinite(opt.fd_step), ErrorCode::InvalidArgument,
                   "singular finite-difference stencil: fd_step must be positive");
  const Vec g = f.grad(z0);
  const Mat H = f.hess(z0, opt.fd_step);
  STOCHHAM_REQUIRE(H.allFinite() && g.allFinite(), ErrorCode::NonFinite, "non-finite derivatives at candidate point");
  Eigen::SelfAdjointEigenSolver<Mat> eig(0.5 * (H + H.transpose()));
  const Vec ev = eig.eigenvalues();

  const double grad_tol = opt.fd_gradient ? opt.gradient_tol_fd : opt.gradient_tol_analytic;
  const bool positive = (ev.array() >= opt.definiteness_floor).all();
  const bool negative = (ev.array() <= -opt.definiteness_floor).all();
  const bool degenerate = (ev.array().abs() < opt.definiteness_floor).any();

  DiagnosticsReport rep;
  rep.name = "dirichlet";
  rep.tolerance = 1.0;
  const double grad_ratio = g.norm() / grad_tol;
  rep.statistic = std::max(grad_ratio, (positive || negative) ? 0.0 : 2.0);
  rep.details["gradient_norm"] = g.norm();
  rep.details["gradient_tolerance"] = grad_tol;
  rep.details["eigenvalues"] = std::vector<double>(ev.data(), ev.data() + ev.size());
  rep.details["definite"] = positive ? "positive" : (negative ? "negative" : "no");
  rep.details["degenerate"] = degenerate;
  rep.details["hessian_source"] = f.has_hessian() ? "analytic" : "finite_difference";
  rep.decide();
  return rep;
}

DiagnosticsReport lyapunov_check(const ScalarField& V, const Ensemble& e, const std::vector<StoppingTime>& stopping_times,
                                 const Vec& equilibrium, double abs_tol) {
  STOCHHAM_REQUIRE(!stopping_times.empty(), ErrorCode::InvalidArgument, "Lyapunov check needs stopping times");
  const double v_eq = V(equilibrium);
  STOCHHAM_REQUIRE(std::abs(v_eq) <= 1e-12, ErrorCode::PreconditionViolated,
                   "Lyapunov candidate must vanish at the equilibrium");
  for (const auto& p : e.paths) {
    if (p.status == PathStatus::Exploded) continue;
    for (Eigen::Index r = 0; r < p.recorded.rows(); ++r) {
      if (V(p.recorded.row(r).transpose()) < -1e-12) {
        throw Error(ErrorCode::PreconditionViolated, "Lyapunov candidate is negative on the tested neighborhood");
      }
    }
  }
  DiagnosticsReport rep;
  rep.name = "lyapunov";
  rep.tolerance = abs_tol;
  rep.statistic = -std::numeric_limits<double>::infinity();
  json per = json::array();
  for (const auto& tau : stopping_times) {
    const Estimate d = expectation_increment(V, e, tau);
    rep.statistic = std::max(rep.statistic, d.mean - 3.0 * d.std_error);
    per.push_back({{"stopping_time", tau.label}, {"mean_increment", d.mean}, {"stderr", d.std_error}});
  }
  rep.details["per_stopping_time"] = per;
  rep.decide();
  return rep;
}

DiagnosticsReport variance_growth_check(const ScalarField& f, const Ensemble& e, const Mat& qv_rates, double t) {
  for (Eigen::Index i = 0; i < qv_rates.rows(); ++i)
    for (Eigen::Index j = 0; j < qv_rates.cols(); ++j)
      if (i != j && qv_rates(i, j) != 0.0)
        throw Error(ErrorCode::PreconditionViolated,
                    "converse conservation test needs [X^i, X^j] = 0 for i != j");
  const std::size_t row = e.record_row(t);
  std::vector<double> x;
  for (const auto& p : e.paths)
    if (p.status != PathStatus::Exploded) x.push_back(f(p.recorded.row(static_cast<Eigen::Index>(row)).transpose()));
  STOCHHAM_REQUIRE(x.size() >= 4, ErrorCode::InvalidArgument, "variance growth needs at least 4 paths");
  const double n = static_cast<double>(x.size());
  double mean = 0.0;
  for (double v : x) mean += v;
  mean /= n;
  double m2 = 0.0, m4 = 0.0;
  for (double v : x) {
    const double d = v - mean;
    m2 += d * d;
    m4 += d * d * d * d;
  }
  m2 /= n;
  m4 /= n;
  const double se = std::sqrt(std::max(0.0, m4 - m2 * m2) / n);
  DiagnosticsReport rep;
  rep.name = "variance_growth";
  rep.tolerance = -1e-12;
  rep.statistic = 3.0 * se - m2;
  rep.details["variance"] = m2;
  rep.details["variance_stderr"] = se;
  rep.details["time"] = t;
  rep.decide();
  return rep;
}

}  // namespace stochham
