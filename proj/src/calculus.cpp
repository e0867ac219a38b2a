#include "stochham/calculus.hpp"

#include <cmath>

namespace stochham {

double PathIntegralResult::sup_abs() const {
  double m = 0.0;
  for (double v : partial_sums) m = std::max(m, std::abs(v));
  return m;
}

namespace {

void require_finite(double v, std::size_t k) {
  if (!std::isfinite(v)) {
    throw Error(ErrorCode::NonFinite, "non-finite integrand at grid index " + std::to_string(k));
  }
}

PathIntegralResult line_integral(const CovectorField& alpha, const RowMatrix& gamma, IntegralRule rule) {
  STOCHHAM_REQUIRE(gamma.rows() >= 1, ErrorCode::InvalidArgument, "state path is empty");
  const auto N = static_cast<std::size_t>(gamma.rows() - 1);
  const auto n = gamma.cols();
  PathIntegralResult out;
  out.rule = rule;
  out.partial_sums.assign(N + 1, 0.0);
  Vec z0 = gamma.row(0).transpose(), z1(n), a0(n), a1(n);
  alpha(z0, a0);
  STOCHHAM_REQUIRE(a0.size() == n, ErrorCode::DimensionMismatch, "covector dimension differs from state dimension");
  for (std::size_t k = 0; k < N; ++k) {
    z1 = gamma.row(static_cast<Eigen::Index>(k + 1)).transpose();
    const Vec dz = z1 - z0;
    double term;
    if (rule == IntegralRule::StratonovichMidpoint) {
      alpha(z1, a1);
      term = 0.5 * (a0.dot(dz) + a1.dot(dz));
    } else {
      term = a0.dot(dz);
      alpha(z1, a1);
    }
    require_finite(term, k);
    out.partial_sums[k + 1] = out.partial_sums[k] + term;
    z0.swap(z1);
    a0.swap(a1);
  }
  return out;
}

PathIntegralResult scalar_integral(std::span<const double> Z, std::span<const double> X, IntegralRule rule) {
  STOCHHAM_REQUIRE(Z.size() == X.size(), ErrorCode::GridMismatch, "integrand and integrator grids differ");
  STOCHHAM_REQUIRE(!Z.empty(), ErrorCode::InvalidArgument, "empty path");
  PathIntegralResult out;
  out.rule = rule;
  out.partial_sums.assign(Z.size(), 0.0);
  for (std::size_t k = 0; k + 1 < Z.size(); ++k) {
    const double dx = X[k + 1] - X[k];
    const double term = rule == IntegralRule::StratonovichMidpoint ? 0.5 * (Z[k] + Z[k + 1]) * dx : Z[k] * dx;
    require_finite(term, k);
    out.partial_sums[k + 1] = out.partial_sums[k] + term;
  }
  return out;
}

}  // namespace

PathIntegralResult strat_line_integral(const CovectorField& alpha, const RowMatrix& gamma) {
  return line_integral(alpha, gamma, IntegralRule::StratonovichMidpoint);
}

PathIntegralResult ito_line_integral(const CovectorField& alpha, const RowMatrix& gamma) {
  return line_integral(alpha, gamma, IntegralRule::ItoLeftpoint);
}

PathIntegralResult scalar_strat_integral(std::span<const double> Z, std::span<const double> X) {
  return scalar_integral(Z, X, IntegralRule::StratonovichMidpoint);
}

PathIntegralResult scalar_ito_integral(std::span<const double> Z, std::span<const double> X) {
  return scalar_integral(Z, X, IntegralRule::ItoLeftpoint);
}

std::vector<double> indicator_stopped(std::span<const double> Z, std::size_t stop_index) {
  std::vector<double> out(Z.begin(), Z.end());
  for (std::size_t k = stop_index; k < out.size(); ++k) out[k] = 0.0;
  return out;
}

std::vector<double> stopped_path(std::span<const double> X, std::size_t stop_index) {
  std::vector<double> out(X.begin(), X.end());
  for (std::size_t k = stop_index + 1; k < out.size(); ++k) out[k] = out[stop_index];
  return out;
}

PathIntegralResult stopped(const PathIntegralResult& r, std::size_t stop_index) {
  PathIntegralResult out = r;
  if (stop_index >= out.partial_sums.size()) return out;
  const double v = out.partial_sums[stop_index];
  for (std::size_t k = stop_index + 1; k < out.partial_sums.size(); ++k) out.partial_sums[k] = v;
  return out;
}

PathIntegralResult hamilton_residual(const PhaseStructure& s, const HamiltonianBundle& h, const RowMatrix& gamma,
                                     const NoisePath& X, const CovectorField& alpha) {
  STOCHHAM_REQUIRE(static_cast<std::size_t>(gamma.rows()) == X.times.size(), ErrorCode::GridMismatch,
                   "state path and driver have different grids");
  STOCHHAM_REQUIRE(X.size() == h.size(), ErrorCode::DimensionMismatch, "driver and Hamiltonian component counts differ");
  STOCHHAM_REQUIRE(static_cast<std::size_t>(gamma.cols()) == s.dim(), ErrorCode::DimensionMismatch,
                   "state path dimension differs from structure");
  PathIntegralResult total = strat_line_integral(alpha, gamma);

  const auto rows = static_cast<std::size_t>(gamma.rows());
  const auto n = gamma.cols();
  // Z_j(k) = <dh_j, B alpha>(G_k)
  std::vector<std::vector<double>> Z(h.size(), std::vector<double>(rows));
  Vec z(n), a(n), Ba(n), g(n);
  for (std::size_t k = 0; k < rows; ++k) {
    z = gamma.row(static_cast<Eigen::Index>(k)).transpose();
    alpha(z, a);
    s.apply(z, a, Ba);
    for (std::size_t j = 0; j < h.size(); ++j) {
      h[j].gradient(z, g);
      Z[j][k] = g.dot(Ba);
    }
  }
  for (std::size_t j = 0; j < h.size(); ++j) {
    const auto Xj = X.column(j);
    total = add(total, scalar_strat_integral(Z[j], Xj));
  }
  return total;
}

CovectorField coordinate_form(std::size_t dim, std::size_t index) {
  STOCHHAM_REQUIRE(index < dim, ErrorCode::InvalidArgument, "coordinate index out of range");
  const auto n = static_cast<Eigen::Index>(dim);
  const auto i = static_cast<Eigen::Index>(index);
  return [n, i](const Vec&, Vec& out) {
    out.setZero(n);
    out[i] = 1.0;
  };
}

CovectorField exact_form(const ScalarField& f) {
  return [f](const Vec& z, Vec& out) { f.gradient(z, out); };
}

PathIntegralResult add(const PathIntegralResult& a, const PathIntegralResult& b, double scale_b) {
  STOCHHAM_REQUIRE(a.partial_sums.size() == b.partial_sums.size(), ErrorCode::GridMismatch, "series lengths differ");
  PathIntegralResult out = a;
  for (std::size_t k = 0; k < out.partial_sums.size(); ++k) out.partial_sums[k] += scale_b * b.partial_sums[k];
  return out;
}

}  // namespace stochham
