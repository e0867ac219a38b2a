#include "stochham/variational.hpp"

#include <algorithm>
#include <cmath>

namespace stochham {

ExactSymplecticChart ExactSymplecticChart::liouville(std::size_t n, double c) {
  STOCHHAM_REQUIRE(n % 2 == 0 && n > 0, ErrorCode::InvalidArgument, "Liouville form needs an even dimension");
  const auto k = static_cast<Eigen::Index>(n / 2);
  ExactSymplecticChart ch;
  ch.dim = n;
  ch.theta = [k, c](const Vec& z, Vec& out) {
    out.setZero(2 * k);
    out.head(k) = c * z.tail(k);
  };
  ch.theta_jacobian = [k, c](const Vec&, Mat& out) {
    out.setZero(2 * k, 2 * k);
    out.topRightCorner(k, k) = c * Mat::Identity(k, k);
  };
  return ch;
}

ExactSymplecticChart ExactSymplecticChart::custom(std::size_t n, CovectorField theta,
                                                  std::function<void(const Vec&, Mat&)> jacobian) {
  STOCHHAM_REQUIRE(static_cast<bool>(theta), ErrorCode::InvalidArgument, "primitive form is empty");
  ExactSymplecticChart ch;
  ch.dim = n;
  ch.theta = std::move(theta);
  if (jacobian) {
    ch.theta_jacobian = std::move(jacobian);
  } else {
    ch.theta_jacobian = [n, th = ch.theta](const Vec& z, Mat& out) {
      const auto m = static_cast<Eigen::Index>(n);
      out.resize(m, m);
      const double h = scaled_fd_step(kDefaultFdStep, z);
      Vec zp = z, zm = z, ap(m), am(m);
      for (Eigen::Index i = 0; i < m; ++i) {
        zp[i] = z[i] + h;
        zm[i] = z[i] - h;
        th(zp, ap);
        th(zm, am);
        out.col(i) = (ap - am) / (2.0 * h);
        zp[i] = zm[i] = z[i];
      }
    };
  }
  return ch;
}

Vec ExactSymplecticChart::theta_at(const Vec& z) const {
  Vec out;
  theta(z, out);
  return out;
}

Mat ExactSymplecticChart::dtheta(const Vec& z) const {
  Mat D;
  theta_jacobian(z, D);
  return D.transpose() - D;
}

double ExactSymplecticChart::compatibility_defect(const PhaseStructure& s, const std::vector<Vec>& probes) const {
  STOCHHAM_REQUIRE(s.dim() == dim, ErrorCode::DimensionMismatch, "chart and structure dimensions differ");
  double worst = 0.0;
  for (const Vec& z : probes) {
    const Mat WB = dtheta(z) * s.tensor_at(z);
    worst = std::max(worst, (WB - Mat::Identity(WB.rows(), WB.cols())).cwiseAbs().maxCoeff());
  }
  return worst;
}

VariationField VariationField::vector_field(std::function<Vec(const Vec&)> Y, std::vector<std::string> vanishing) {
  VariationField v;
  v.field = std::move(Y);
  v.vanishing = std::move(vanishing);
  return v;
}

VariationField VariationField::on_path(std::function<Vec(std::size_t, const Vec&)> Y,
                                       std::vector<std::string> vanishing) {
  VariationField v;
  v.path_field = std::move(Y);
  v.vanishing = std::move(vanishing);
  return v;
}

VariationField VariationField::zero(std::size_t n) {
  return vector_field([n](const Vec&) { return Vec::Zero(static_cast<Eigen::Index>(n)).eval(); });
}

Vec VariationField::at(std::size_t k, const Vec& z) const {
  if (path_field) return path_field(k, z);
  STOCHHAM_REQUIRE(static_cast<bool>(field), ErrorCode::InvalidArgument, "variation field is empty");
  return field(z);
}

double vanishing_defect(const VariationField& Y, const std::vector<Vec>& probes) {
  STOCHHAM_REQUIRE(static_cast<bool>(Y.field), ErrorCode::InvalidArgument, "vanishing probes need a vector field");
  double worst = 0.0;
  for (const Vec& z : probes) worst = std::max(worst, Y.field(z).norm());
  return worst;
}

RowMatrix variation_along(const VariationField& Y, const RowMatrix& gamma) {
  RowMatrix out(gamma.rows(), gamma.cols());
  for (Eigen::Index k = 0; k < gamma.rows(); ++k) {
    const Vec y = Y.at(static_cast<std::size_t>(k), gamma.row(k).transpose());
    STOCHHAM_REQUIRE(y.size() == gamma.cols(), ErrorCode::DimensionMismatch, "variation has the wrong dimension");
    out.row(k) = y.transpose();
  }
  return out;
}

namespace {

void require_grid(const RowMatrix& gamma, const NoisePath& X, const HamiltonianBundle& h) {
  STOCHHAM_REQUIRE(gamma.rows() >= 1, ErrorCode::InvalidArgument, "empty path");
  STOCHHAM_REQUIRE(static_cast<std::size_t>(gamma.rows()) <= X.times.size(), ErrorCode::GridMismatch,
                   "path is longer than its driver");
  STOCHHAM_REQUIRE(X.size() == h.size(), ErrorCode::DimensionMismatch, "driver and Hamiltonian sizes differ");
}

void require_times(const Trajectory& gamma, const NoisePath& X) {
  STOCHHAM_REQUIRE(gamma.times.size() <= X.times.size(), ErrorCode::GridMismatch, "path is longer than its driver");
  for (std::size_t k = 0; k < gamma.times.size(); ++k) {
    STOCHHAM_REQUIRE(std::abs(gamma.times[k] - X.times[k]) <= 1e-12 * (1.0 + std::abs(X.times[k])),
                     ErrorCode::GridMismatch, "path and driver grids differ");
  }
}

std::vector<double> column_prefix(const NoisePath& X, std::size_t j, std::size_t rows) {
  std::vector<double> c(rows);
  for (std::size_t k = 0; k < rows; ++k) c[k] = X.values(static_cast<Eigen::Index>(k), static_cast<Eigen::Index>(j));
  return c;
}

}  // namespace

PathIntegralResult action(const ExactSymplecticChart& chart, const RowMatrix& gamma, const NoisePath& X,
                          const HamiltonianBundle& h) {
  require_grid(gamma, X, h);
  const auto rows = static_cast<std::size_t>(gamma.rows());
  PathIntegralResult S = strat_line_integral(chart.theta, gamma);
  std::vector<double> hv(rows);
  for (std::size_t j = 0; j < h.size(); ++j) {
    for (std::size_t k = 0; k < rows; ++k) hv[k] = h[j](gamma.row(static_cast<Eigen::Index>(k)).transpose());
    S = add(S, scalar_strat_integral(hv, column_prefix(X, j, rows)), -1.0);
  }
  return S;
}

PathIntegralResult action(const ExactSymplecticChart& chart, const Trajectory& gamma, const NoisePath& X,
                          const HamiltonianBundle& h) {
  require_times(gamma, X);
  return action(chart, gamma.states, X, h);
}

PathIntegralResult derivative_formula(const ExactSymplecticChart& chart, const RowMatrix& gamma, const NoisePath& X,
                                      const HamiltonianBundle& h, const VariationField& Y) {
  require_grid(gamma, X, h);
  const auto rows = static_cast<std::size_t>(gamma.rows());
  const RowMatrix V = variation_along(Y, gamma);
  const auto n = gamma.cols();

  // -sum 1/2 (W Y_k + W Y_{k+1}) . dG
  std::vector<Vec> WY(rows);
  for (std::size_t k = 0; k < rows; ++k) {
    const auto ki = static_cast<Eigen::Index>(k);
    WY[k] = chart.dtheta(gamma.row(ki).transpose()) * V.row(ki).transpose();
  }
  PathIntegralResult out;
  out.partial_sums.assign(rows, 0.0);
  for (std::size_t k = 0; k + 1 < rows; ++k) {
    const Vec dz = (gamma.row(static_cast<Eigen::Index>(k + 1)) - gamma.row(static_cast<Eigen::Index>(k))).transpose();
    out.partial_sums[k + 1] = out.partial_sums[k] - 0.5 * (WY[k] + WY[k + 1]).dot(dz);
  }

  std::vector<double> dh(rows);
  Vec g(n);
  for (std::size_t j = 0; j < h.size(); ++j) {
    for (std::size_t k = 0; k < rows; ++k) {
      const auto ki = static_cast<Eigen::Index>(k);
      h[j].gradient(gamma.row(ki).transpose(), g);
      dh[k] = g.dot(V.row(ki).transpose());
    }
    out = add(out, scalar_strat_integral(dh, column_prefix(X, j, rows)), -1.0);
  }

  const double b0 = chart.theta_at(gamma.row(0).transpose()).dot(V.row(0).transpose());
  for (std::size_t k = 0; k < rows; ++k) {
    const auto ki = static_cast<Eigen::Index>(k);
    out.partial_sums[k] += chart.theta_at(gamma.row(ki).transpose()).dot(V.row(ki).transpose()) - b0;
  }
  return out;
}

PathIntegralResult derivative_formula(const ExactSymplecticChart& chart, const Trajectory& gamma, const NoisePath& X,
                                      const HamiltonianBundle& h, const VariationField& Y) {
  require_times(gamma, X);
  return derivative_formula(chart, gamma.states, X, h, Y);
}

PathFlow linear_flow(const VariationField& Y) {
  return [Y](std::size_t k, double s, const Vec& z) -> Vec { return z + s * Y.at(k, z); };
}

double FdDerivative::max_error() const {
  double m = 0.0;
  for (double e : error) m = std::max(m, e);
  return m;
}

namespace {

RowMatrix apply_flow(const PathFlow& flow, const RowMatrix& gamma, double s) {
  RowMatrix out(gamma.rows(), gamma.cols());
  for (Eigen::Index k = 0; k < gamma.rows(); ++k)
    out.row(k) = flow(static_cast<std::size_t>(k), s, gamma.row(k).transpose()).transpose();
  return out;
}

std::vector<double> central(const ExactSymplecticChart& chart, const RowMatrix& gamma, const NoisePath& X,
                            const HamiltonianBundle& h, const PathFlow& flow, double s) {
  const auto Sp = action(chart, apply_flow(flow, gamma, s), X, h);
  const auto Sm = action(chart, apply_flow(flow, gamma, -s), X, h);
  std::vector<double> d(Sp.partial_sums.size());
  for (std::size_t k = 0; k < d.size(); ++k) d[k] = (Sp.partial_sums[k] - Sm.partial_sums[k]) / (2.0 * s);
  return d;
}

}  // namespace

FdDerivative derivative_fd(const ExactSymplecticChart& chart, const RowMatrix& gamma, const NoisePath& X,
                           const HamiltonianBundle& h, const PathFlow& flow, std::vector<double> s_values) {
  STOCHHAM_REQUIRE(s_values.size() >= 2, ErrorCode::InvalidArgument, "finite-difference derivative needs two s values");
  for (double& s : s_values) {
    s = std::abs(s);
    STOCHHAM_REQUIRE(s > 0.0 && std::isfinite(s), ErrorCode::InvalidArgument, "s values must be nonzero and finite");
  }
  std::sort(s_values.begin(), s_values.end());
  STOCHHAM_REQUIRE(s_values[1] > s_values[0], ErrorCode::InvalidArgument, "s values must be distinct");
  const double s1 = s_values[0], s2 = s_values[1];
  const auto d1 = central(chart, gamma, X, h, flow, s1);
  const auto d2 = central(chart, gamma, X, h, flow, s2);
  const double ratio = (s2 / s1) * (s2 / s1);
  FdDerivative out;
  out.estimate.partial_sums.resize(d1.size());
  out.error.resize(d1.size());
  for (std::size_t k = 0; k < d1.size(); ++k) {
    const double corr = (d1[k] - d2[k]) / (ratio - 1.0);
    out.estimate.partial_sums[k] = d1[k] + corr;
    out.error[k] = std::abs(corr);
  }
  return out;
}

PathwiseDerivative pathwise_variation_derivative(const ExactSymplecticChart& chart, const RowMatrix& gamma,
                                                 const NoisePath& X, const HamiltonianBundle& h,
                                                 const VariationField& Y, double s) {
  STOCHHAM_REQUIRE(s > 0.0, ErrorCode::InvalidArgument, "finite-difference step must be positive");
  PathwiseDerivative out;
  out.formula = derivative_formula(chart, gamma, X, h, Y);
  const RowMatrix V = variation_along(Y, gamma);
  const auto Sp = action(chart, RowMatrix(gamma + s * V), X, h);
  const auto Sm = action(chart, RowMatrix(gamma - s * V), X, h);
  out.fd.partial_sums.resize(Sp.partial_sums.size());
  for (std::size_t k = 0; k < Sp.partial_sums.size(); ++k)
    out.fd.partial_sums[k] = (Sp.partial_sums[k] - Sm.partial_sums[k]) / (2.0 * s);
  return out;
}

ScalarField contraction_field(const ExactSymplecticChart& chart, const VariationField& Y, double fd_step) {
  STOCHHAM_REQUIRE(static_cast<bool>(Y.field), ErrorCode::InvalidArgument, "contraction needs a vector field");
  auto value = [chart, Y](const Vec& z) { return chart.theta_at(z).dot(Y.field(z)); };
  auto gradient = [value, fd_step](const Vec& z, Vec& out) {
    out.resize(z.size());
    const double hstep = scaled_fd_step(fd_step, z);
    Vec zp = z, zm = z;
    for (Eigen::Index i = 0; i < z.size(); ++i) {
      zp[i] = z[i] + hstep;
      zm[i] = z[i] - hstep;
      out[i] = (value(zp) - value(zm)) / (2.0 * hstep);
      zp[i] = zm[i] = z[i];
    }
  };
  return make_field(value, gradient);
}

DiagnosticsReport noether_check(const ExactSymplecticChart& chart, const HamiltonianBundle& h, const VariationField& Y,
                                const Ensemble& e, const std::vector<Vec>& probes, double tol, double invariance_tol) {
  STOCHHAM_REQUIRE(!probes.empty(), ErrorCode::InvalidArgument, "Noether check needs probe points");
  STOCHHAM_REQUIRE(static_cast<bool>(Y.field), ErrorCode::InvalidArgument, "Noether check needs a vector field");
  double worst = 0.0;
  std::size_t worst_j = 0;
  for (std::size_t j = 0; j < h.size(); ++j) {
    for (const Vec& z : probes) {
      const double v = std::abs(h[j].grad(z).dot(Y.field(z)));
      if (v > worst) {
        worst = v;
        worst_j = j;
      }
    }
  }
  if (!(worst <= invariance_tol)) {
    throw Error(ErrorCode::PreconditionViolated, "variation is not a symmetry: |Y[h_" + std::to_string(worst_j) +
                                                     "]| = " + std::to_string(worst) + " at a probe point");
  }
  DiagnosticsReport rep = strong_conservation_check(contraction_field(chart, Y), e, tol);
  rep.name = "noether";
  rep.details["invariance_defect"] = worst;
  return rep;
}

}  // namespace stochham
