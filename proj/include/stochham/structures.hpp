#pragma once
// Phase spaces, scalar fields and Hamiltonian bundles.
//
// Sign conventions: {f,g} = grad(f)^T B(z) grad(g) and X_f = B(z) grad(f).
// The canonical tensor in (q,p) ordering is [[0, I], [-I, 0]], so
// X_h = (dh/dp, -dh/dq). The so(3)* Lie-Poisson tensor acts as B(mu)v = mu x v.

#include "stochham/errors.hpp"
#include "stochham/types.hpp"

#include <optional>
#include <string>
#include <vector>

namespace stochham {

/// Default central-difference step, scaled as fd_step * (1 + |z|).
inline constexpr double kDefaultFdStep = 1e-5;

double scaled_fd_step(double fd_step, const Vec& z);

/// A smooth real function on the chart with an analytic gradient and an
/// optional analytic Hessian.
struct ScalarField {
  std::function<double(const Vec&)> value;
  std::function<void(const Vec&, Vec&)> gradient;
  std::function<void(const Vec&, Mat&)> hessian;  // may be empty

  double operator()(const Vec& z) const { return value(z); }
  Vec grad(const Vec& z) const;
  bool has_hessian() const { return static_cast<bool>(hessian); }
  /// Analytic Hessian when supplied, otherwise central differences of the gradient.
  Mat hess(const Vec& z, double fd_step = kDefaultFdStep) const;
};

ScalarField make_field(std::function<double(const Vec&)> value,
                       std::function<void(const Vec&, Vec&)> gradient,
                       std::function<void(const Vec&, Mat&)> hessian = {});

ScalarField constant_field(std::size_t dim, double c);
ScalarField coordinate_field(std::size_t dim, std::size_t index);
/// f(z) = c . z + offset
ScalarField linear_field(Vec coefficients, double offset = 0.0);
/// f(z) = 0.5 z^T Q z with Q symmetric
ScalarField quadratic_field(Mat Q);
ScalarField sum(const ScalarField& f, const ScalarField& g);
ScalarField scaled(const ScalarField& f, double c);
ScalarField product(const ScalarField& f, const ScalarField& g);

/// Max |analytic - central difference| over probes, for the gradient.
double gradient_fd_error(const ScalarField& f, const std::vector<Vec>& probes, double fd_step = 1e-6);
/// Max |analytic - central difference of gradient| over probes, for the Hessian.
double hessian_fd_error(const ScalarField& f, const std::vector<Vec>& probes, double fd_step = 1e-5);

enum class StructureKind { CanonicalSymplectic, GeneralPoisson };

using TensorFn = std::function<void(const Vec& z, Mat& out)>;
using TensorApplyFn = std::function<void(const Vec& z, const Vec& v, Vec& out)>;

/// Poisson tensor field on an n-dimensional Euclidean chart.
class PhaseStructure {
 public:
  /// Canonical symplectic structure on R^n, n = 2k, (q, p) ordering.
  static PhaseStructure canonical(std::size_t n);
  /// Constant multiple of the canonical tensor, B = c [[0,I],[-I,0]].
  static PhaseStructure scaled_canonical(std::size_t n, double c);
  /// Lie-Poisson structure on so(3)*: B(mu) v = mu x v. Casimir |mu|^2.
  static PhaseStructure lie_poisson_so3();
  /// Arbitrary tensor field. Antisymmetry is not enforced here; see
  /// antisymmetry_defect() and jacobi_residual().
  static PhaseStructure general(std::size_t n, TensorFn tensor, bool constant = false,
                                std::vector<ScalarField> casimirs = {});

  std::size_t dim() const { return dim_; }
  StructureKind kind() const { return kind_; }
  bool is_constant() const { return constant_; }
  const std::vector<ScalarField>& casimirs() const { return casimirs_; }
  PhaseStructure with_casimirs(std::vector<ScalarField> casimirs) const;

  Mat tensor_at(const Vec& z) const;
  /// out = B(z) v, allocation-free for the built-in structures.
  void apply(const Vec& z, const Vec& v, Vec& out) const;
  /// max |B + B^T| at z.
  double antisymmetry_defect(const Vec& z) const;

 private:
  PhaseStructure() = default;

  std::size_t dim_ = 0;
  StructureKind kind_ = StructureKind::GeneralPoisson;
  bool constant_ = false;
  TensorFn tensor_;
  TensorApplyFn apply_;
  std::vector<ScalarField> casimirs_;
};

/// h = sum_j h_j eps^j with r >= 1 components sharing the chart dimension.
struct HamiltonianBundle {
  std::vector<ScalarField> components;
  std::vector<std::string> basis_labels;

  HamiltonianBundle() = default;
  HamiltonianBundle(std::vector<ScalarField> comps, std::vector<std::string> labels = {});

  std::size_t size() const { return components.size(); }
  const ScalarField& operator[](std::size_t j) const { return components[j]; }
};

void check_dim(const PhaseStructure& s, const Vec& z, const char* where);

Vec hamiltonian_vector_field(const PhaseStructure& s, const ScalarField& f, const Vec& z);
double poisson_bracket(const PhaseStructure& s, const ScalarField& f, const ScalarField& g, const Vec& z);
/// The function z -> {f, g}(z); its gradient is computed by central differences.
ScalarField bracket_field(const PhaseStructure& s, const ScalarField& f, const ScalarField& g,
                          double fd_step = kDefaultFdStep);

/// |{{f,g},h} + {{g,h},f} + {{h,f},g}| at z, outer brackets by central
/// differences of the inner bracket values.
double jacobi_residual(const PhaseStructure& s, const ScalarField& f, const ScalarField& g,
                       const ScalarField& h, const Vec& z, double fd_step);

/// H(z)(u) = sum_j u_j X_{h_j}(z).
Vec stratonovich_operator_apply(const PhaseStructure& s, const HamiltonianBundle& h, const Vec& z,
                                const Vec& u);

/// D X_f(z): analytic (B * Hess f) for constant tensors with a Hessian,
/// central differences of the vector field otherwise.
Mat vector_field_jacobian(const PhaseStructure& s, const ScalarField& f, const Vec& z,
                          double fd_step = kDefaultFdStep);

}  // namespace stochham
