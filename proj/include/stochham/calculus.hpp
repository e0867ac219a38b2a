#pragma once
// Discretized line integrals along sampled state paths.
//
// Stratonovich integrals use the midpoint (trapezoidal-in-integrand) sums
// sum 1/2 (a(G_k) + a(G_{k+1})) . (G_{k+1} - G_k); Ito integrals use the
// left point. A state path is an (N+1) x n row matrix on a uniform grid.

#include "stochham/noise.hpp"
#include "stochham/structures.hpp"

#include <span>
#include <vector>

namespace stochham {

enum class IntegralRule { StratonovichMidpoint, ItoLeftpoint };

struct PathIntegralResult {
  std::vector<double> partial_sums;  // partial_sums[0] == 0
  IntegralRule rule = IntegralRule::StratonovichMidpoint;

  double final_value() const { return partial_sums.empty() ? 0.0 : partial_sums.back(); }
  double sup_abs() const;
  double at(std::size_t index) const { return partial_sums.at(index); }
};

PathIntegralResult strat_line_integral(const CovectorField& alpha, const RowMatrix& gamma);
PathIntegralResult ito_line_integral(const CovectorField& alpha, const RowMatrix& gamma);

PathIntegralResult scalar_strat_integral(std::span<const double> Z, std::span<const double> X);
PathIntegralResult scalar_ito_integral(std::span<const double> Z, std::span<const double> X);

/// Z * 1_{[0, t_stop)}: integrand zeroed from the stop index on. With the left-point rule,
/// integrating it reproduces the stopped Ito integral exactly.
std::vector<double> indicator_stopped(std::span<const double> Z, std::size_t stop_index);
/// X^tau: values after stop_index held at X[stop_index]. For either rule,
/// int Z dX^tau equals the stopped integral exactly.
std::vector<double> stopped_path(std::span<const double> X, std::size_t stop_index);
/// Process stopped at stop_index: values after it are held constant.
PathIntegralResult stopped(const PathIntegralResult& r, std::size_t stop_index);

/// Partial sums of int <alpha, dG> + sum_j int <dh_j, B alpha>(G) dX^j.
/// Vanishes (in the grid limit) iff G solves the stochastic Hamilton equations.
PathIntegralResult hamilton_residual(const PhaseStructure& s, const HamiltonianBundle& h, const RowMatrix& gamma,
                                     const NoisePath& X, const CovectorField& alpha);

/// Constant covector e_i, i.e. the form dz^i.
CovectorField coordinate_form(std::size_t dim, std::size_t index);
/// The exact form df.
CovectorField exact_form(const ScalarField& f);

PathIntegralResult add(const PathIntegralResult& a, const PathIntegralResult& b, double scale_b = 1.0);

}  // namespace stochham
