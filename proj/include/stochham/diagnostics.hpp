#pragma once
// Numerical surrogates for conservation, Liouville and stability statements.
// Each report passes iff statistic <= tolerance.

#include "stochham/calculus.hpp"
#include "stochham/montecarlo.hpp"

#include <json.hpp>

#include <string>
#include <vector>

namespace stochham {

struct DiagnosticsReport {
  std::string name;
  double statistic = 0.0;
  double tolerance = 0.0;
  bool passed = false;
  nlohmann::json details = nlohmann::json::object();

  void decide() { passed = statistic <= tolerance; }
};

nlohmann::json to_json(const DiagnosticsReport& r);
nlohmann::json to_json(const std::vector<DiagnosticsReport>& reports);

/// max over paths and recorded times of |f(G_t) - f(G_0)|.
DiagnosticsReport strong_conservation_check(const ScalarField& f, const Ensemble& e, double tol);

/// Per stopping time: |mean(f(G_tau^T) - f(G_0))| <= 3 stderr + abs_tol.
/// Statistic is max_tau (|mean| - 3 stderr), tolerance abs_tol.
DiagnosticsReport weak_conservation_check(const ScalarField& f, const Ensemble& e,
                                          const std::vector<StoppingTime>& stopping_times, double abs_tol = 0.0);

/// max over probes and components of |{f, h_j}|.
DiagnosticsReport involution_check(const PhaseStructure& s, const ScalarField& f, const HamiltonianBundle& h,
                                   const std::vector<Vec>& probes, double tol = 1e-10);

/// f(G_t) - f(G_0) against sum_j int {f,h_j} dX^j (Stratonovich midpoint) and against the Ito
/// form with the 1/2 sum {{f,h_j},h_i} kappa^{ij} dt drift. Statistic is the larger sup.
DiagnosticsReport bracket_increment_check(const PhaseStructure& s, const HamiltonianBundle& h, const Trajectory& traj,
                                          const NoisePath& X, const ScalarField& f, double tol,
                                          double fd_step = kDefaultFdStep);

/// sup_t ||J_t^T Omega J_t - Omega||_F; details carry max |det J_t - 1|.
DiagnosticsReport symplectic_defect(const std::vector<Mat>& J_series, const Mat& Omega, double tol);

Mat canonical_omega(std::size_t n);

struct DirichletOptions {
  double fd_step = 1e-4;
  double definiteness_floor = 1e-6;
  double gradient_tol_analytic = 1e-8;
  double gradient_tol_fd = 1e-5;
  bool fd_gradient = false;  // the field's gradient is itself a finite difference
};

/// grad f(z0) ~ 0 and Hess f(z0) definite with min |eigenvalue| >= floor.
DiagnosticsReport dirichlet_certificate(const ScalarField& f, const Vec& z0, const DirichletOptions& opt = {});

/// mean V(G_tau^T) <= mean V(G_0) + 3 stderr + abs_tol for each tau. Statistic is
/// max_tau (mean increment - 3 stderr), tolerance abs_tol. Throws PreconditionViolated when V
/// is negative on recorded states or V(equilibrium) != 0.
DiagnosticsReport lyapunov_check(const ScalarField& V, const Ensemble& e, const std::vector<StoppingTime>& stopping_times,
                                 const Vec& equilibrium, double abs_tol = 0.0);

/// For the converse of the involution criterion: ensemble variance growth of f(G_t) from 0.
/// Statistic 3 stderr - variance; passes when the variance exceeds 3 stderr + 1e-12.
/// Refuses (PreconditionViolated) when the driver has correlated distinct components.
DiagnosticsReport variance_growth_check(const ScalarField& f, const Ensemble& e, const Mat& qv_rates, double t);

}  // namespace stochham
