#pragma once
// Stochastic action on exact symplectic charts and its directional derivatives.
//
// S_t(G) = int <theta, dG> - sum_j int h_j(G) dX^j, both as midpoint sums.
// With W_ik = d_i theta_k - d_k theta_i the chart is compatible with B when W B = I.
// For a variation Y the derivative of S along G + sY is
//   dS/ds = -int <W Y, dG> - sum_j int <dh_j, Y>(G) dX^j + theta(G_t).Y_t - theta(G_0).Y_0,
// which is an exact discrete identity when theta is linear in z.

#include "stochham/calculus.hpp"
#include "stochham/diagnostics.hpp"
#include "stochham/integrators.hpp"
#include "stochham/montecarlo.hpp"

#include <string>
#include <vector>

namespace stochham {

struct ExactSymplecticChart {
  std::size_t dim = 0;
  CovectorField theta;
  std::function<void(const Vec& z, Mat& out)> theta_jacobian;  // out(k, i) = d theta_k / d z_i

  /// theta = c * sum_i p_i dq_i in (q, p) ordering; pairs with B = (1/c) [[0,I],[-I,0]].
  static ExactSymplecticChart liouville(std::size_t n, double c = 1.0);
  /// Custom primitive; a missing Jacobian falls back to central differences.
  static ExactSymplecticChart custom(std::size_t n, CovectorField theta,
                                     std::function<void(const Vec&, Mat&)> jacobian = {});

  Vec theta_at(const Vec& z) const;
  /// W with W_ik = d_i theta_k - d_k theta_i.
  Mat dtheta(const Vec& z) const;
  /// max over probes of |W(z) B(z) - I|.
  double compatibility_defect(const PhaseStructure& s, const std::vector<Vec>& probes) const;
};

/// A variation: either a vector field Y(z) or a process Y_k along a given path.
struct VariationField {
  std::function<Vec(const Vec& z)> field;
  std::function<Vec(std::size_t k, const Vec& z)> path_field;
  std::vector<std::string> vanishing;  // declared vanishing sets, e.g. "m0", "boundary", "t=0", "tau_K"

  static VariationField vector_field(std::function<Vec(const Vec&)> Y, std::vector<std::string> vanishing = {});
  static VariationField on_path(std::function<Vec(std::size_t, const Vec&)> Y, std::vector<std::string> vanishing = {});
  static VariationField zero(std::size_t n);

  bool is_path_field() const { return static_cast<bool>(path_field); }
  Vec at(std::size_t k, const Vec& z) const;
};

/// Largest |Y(z)| over probe points on a declared vanishing set.
double vanishing_defect(const VariationField& Y, const std::vector<Vec>& probes);

/// Variation on the first n rows of the path: row-wise Y.
RowMatrix variation_along(const VariationField& Y, const RowMatrix& gamma);

PathIntegralResult action(const ExactSymplecticChart& chart, const RowMatrix& gamma, const NoisePath& X,
                          const HamiltonianBundle& h);
PathIntegralResult action(const ExactSymplecticChart& chart, const Trajectory& gamma, const NoisePath& X,
                          const HamiltonianBundle& h);

PathIntegralResult derivative_formula(const ExactSymplecticChart& chart, const RowMatrix& gamma, const NoisePath& X,
                                      const HamiltonianBundle& h, const VariationField& Y);
PathIntegralResult derivative_formula(const ExactSymplecticChart& chart, const Trajectory& gamma, const NoisePath& X,
                                      const HamiltonianBundle& h, const VariationField& Y);

/// phi_s applied to the state at grid index k.
using PathFlow = std::function<Vec(std::size_t k, double s, const Vec& z)>;
/// phi_s(z) = z + s Y(z) (or G_k + s Y_k for path fields).
PathFlow linear_flow(const VariationField& Y);

struct FdDerivative {
  PathIntegralResult estimate;      // Richardson-extrapolated central differences
  std::vector<double> error;        // per-index |extrapolated - finest central difference|
  double max_error() const;
};

/// Central differences (S(phi_s G) - S(phi_{-s} G)) / 2s, extrapolated in s^2 across the two smallest s.
FdDerivative derivative_fd(const ExactSymplecticChart& chart, const RowMatrix& gamma, const NoisePath& X,
                           const HamiltonianBundle& h, const PathFlow& flow, std::vector<double> s_values);

struct PathwiseDerivative {
  PathIntegralResult formula;
  PathIntegralResult fd;  // (S(G + sY) - S(G - sY)) / 2s
};

PathwiseDerivative pathwise_variation_derivative(const ExactSymplecticChart& chart, const RowMatrix& gamma,
                                                 const NoisePath& X, const HamiltonianBundle& h,
                                                 const VariationField& Y, double s = 1e-4);

/// i_Y theta as a scalar field (gradient by central differences).
ScalarField contraction_field(const ExactSymplecticChart& chart, const VariationField& Y,
                              double fd_step = kDefaultFdStep);

/// Strong conservation of i_Y theta. Refuses (PreconditionViolated) unless |Y[h_j]| <= invariance_tol at all probes.
DiagnosticsReport noether_check(const ExactSymplecticChart& chart, const HamiltonianBundle& h, const VariationField& Y,
                                const Ensemble& e, const std::vector<Vec>& probes, double tol,
                                double invariance_tol = 1e-10);

}  // namespace stochham
