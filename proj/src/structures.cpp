#include "stochham/structures.hpp"

#include <cmath>
#include <memory>
#include <utility>

namespace stochham {

double scaled_fd_step(double fd_step, const Vec& z) { return fd_step * (1.0 + z.norm()); }

Vec ScalarField::grad(const Vec& z) const {
  Vec out(z.size());
  gradient(z, out);
  return out;
}

Mat ScalarField::hess(const Vec& z, double fd_step) const {
  const auto n = z.size();
  Mat H(n, n);
  if (hessian) {
    hessian(z, H);
    return H;
  }
  STOCHHAM_REQUIRE(fd_step > 0.0, ErrorCode::InvalidArgument, "hessian fallback needs fd_step > 0");
  const double step = scaled_fd_step(fd_step, z);
  Vec zp = z, zm = z, gp(n), gm(n);
  for (Eigen::Index i = 0; i < n; ++i) {
    zp[i] = z[i] + step;
    zm[i] = z[i] - step;
    gradient(zp, gp);
    gradient(zm, gm);
    H.col(i) = (gp - gm) / (2.0 * step);
    zp[i] = z[i];
    zm[i] = z[i];
  }
  return 0.5 * (H + H.transpose());
}

ScalarField make_field(std::function<double(const Vec&)> value, std::function<void(const Vec&, Vec&)> gradient,
                       std::function<void(const Vec&, Mat&)> hessian) {
  return ScalarField{std::move(value), std::move(gradient), std::move(hessian)};
}

ScalarField constant_field(std::size_t dim, double c) {
  const auto n = static_cast<Eigen::Index>(dim);
  return make_field([c](const Vec&) { return c; }, [n](const Vec&, Vec& g) { g.setZero(n); },
                    [n](const Vec&, Mat& H) { H.setZero(n, n); });
}

ScalarField coordinate_field(std::size_t dim, std::size_t index) {
  STOCHHAM_REQUIRE(index < dim, ErrorCode::InvalidArgument, "coordinate index out of range");
  Vec c = Vec::Zero(static_cast<Eigen::Index>(dim));
  c[static_cast<Eigen::Index>(index)] = 1.0;
  return linear_field(std::move(c));
}

ScalarField linear_field(Vec coefficients, double offset) {
  const auto n = coefficients.size();
  auto c = std::make_shared<const Vec>(std::move(coefficients));
  return make_field([c, offset](const Vec& z) { return c->dot(z) + offset; },
                    [c](const Vec&, Vec& g) { g = *c; }, [n](const Vec&, Mat& H) { H.setZero(n, n); });
}

ScalarField quadratic_field(Mat Q) {
  auto q = std::make_shared<const Mat>(0.5 * (Q + Q.transpose()));
  return make_field([q](const Vec& z) { return 0.5 * z.dot(*q * z); }, [q](const Vec& z, Vec& g) { g.noalias() = *q * z; },
                    [q](const Vec&, Mat& H) { H = *q; });
}

ScalarField sum(const ScalarField& f, const ScalarField& g) {
  std::function<void(const Vec&, Mat&)> hess;
  if (f.has_hessian() && g.has_hessian()) {
    hess = [f, g](const Vec& z, Mat& H) {
      Mat Hg;
      f.hessian(z, H);
      g.hessian(z, Hg);
      H += Hg;
    };
  }
  return make_field([f, g](const Vec& z) { return f.value(z) + g.value(z); },
                    [f, g](const Vec& z, Vec& out) {
                      Vec tmp(z.size());
                      f.gradient(z, out);
                      g.gradient(z, tmp);
                      out += tmp;
                    },
                    std::move(hess));
}

ScalarField scaled(const ScalarField& f, double c) {
  std::function<void(const Vec&, Mat&)> hess;
  if (f.has_hessian()) {
    hess = [f, c](const Vec& z, Mat& H) {
      f.hessian(z, H);
      H *= c;
    };
  }
  return make_field([f, c](const Vec& z) { return c * f.value(z); },
                    [f, c](const Vec& z, Vec& out) {
                      f.gradient(z, out);
                      out *= c;
                    },
                    std::move(hess));
}

ScalarField product(const ScalarField& f, const ScalarField& g) {
  std::function<void(const Vec&, Mat&)> hess;
  if (f.has_hessian() && g.has_hessian()) {
    hess = [f, g](const Vec& z, Mat& H) {
      Mat Hf, Hg;
      f.hessian(z, Hf);
      g.hessian(z, Hg);
      const Vec gf = f.grad(z), gg = g.grad(z);
      H = g.value(z) * Hf + f.value(z) * Hg + gf * gg.transpose() + gg * gf.transpose();
    };
  }
  return make_field([f, g](const Vec& z) { return f.value(z) * g.value(z); },
                    [f, g](const Vec& z, Vec& out) {
                      Vec tmp(z.size());
                      f.gradient(z, out);
                      g.gradient(z, tmp);
                      out = g.value(z) * out + f.value(z) * tmp;
                    },
                    std::move(hess));
}

double gradient_fd_error(const ScalarField& f, const std::vector<Vec>& probes, double fd_step) {
  double worst = 0.0;
  for (const Vec& z : probes) {
    const Vec g = f.grad(z);
    const double step = scaled_fd_step(fd_step, z);
    Vec zp = z, zm = z;
    for (Eigen::Index i = 0; i < z.size(); ++i) {
      zp[i] = z[i] + step;
      zm[i] = z[i] - step;
      const double fd = (f.value(zp) - f.value(zm)) / (2.0 * step);
      worst = std::max(worst, std::abs(fd - g[i]));
      zp[i] = z[i];
      zm[i] = z[i];
    }
  }
  return worst;
}

double hessian_fd_error(const ScalarField& f, const std::vector<Vec>& probes, double fd_step) {
  STOCHHAM_REQUIRE(f.has_hessian(), ErrorCode::NotAvailable, "field has no analytic Hessian");
  const ScalarField gradient_only = make_field(f.value, f.gradient);
  double worst = 0.0;
  for (const Vec& z : probes) {
    Mat H(z.size(), z.size());
    f.hessian(z, H);
    worst = std::max(worst, (H - gradient_only.hess(z, fd_step)).cwiseAbs().maxCoeff());
  }
  return worst;
}

// ---------------------------------------------------------------------------

PhaseStructure PhaseStructure::canonical(std::size_t n) { return scaled_canonical(n, 1.0); }

PhaseStructure PhaseStructure::scaled_canonical(std::size_t n, double c) {
  STOCHHAM_REQUIRE(n >= 2 && n % 2 == 0, ErrorCode::InvalidArgument, "canonical structure needs even dimension");
  STOCHHAM_REQUIRE(c != 0.0 && std::isfinite(c), ErrorCode::InvalidArgument, "tensor scale must be finite and nonzero");
  PhaseStructure s;
  s.dim_ = n;
  s.kind_ = c == 1.0 ? StructureKind::CanonicalSymplectic : StructureKind::GeneralPoisson;
  s.constant_ = true;
  const auto k = static_cast<Eigen::Index>(n / 2);
  s.tensor_ = [k, c](const Vec&, Mat& B) {
    B.setZero(2 * k, 2 * k);
    B.topRightCorner(k, k).setIdentity();
    B.bottomLeftCorner(k, k) = -Mat::Identity(k, k);
    B *= c;
  };
  s.apply_ = [k, c](const Vec&, const Vec& v, Vec& out) {
    out.resize(2 * k);
    for (Eigen::Index i = 0; i < k; ++i) {
      out[i] = c * v[i + k];
      out[i + k] = -c * v[i];
    }
  };
  return s;
}

PhaseStructure PhaseStructure::lie_poisson_so3() {
  PhaseStructure s;
  s.dim_ = 3;
  s.kind_ = StructureKind::GeneralPoisson;
  s.constant_ = false;
  s.tensor_ = [](const Vec& m, Mat& B) {
    B.resize(3, 3);
    B << 0.0, -m[2], m[1],  //
        m[2], 0.0, -m[0],   //
        -m[1], m[0], 0.0;
  };
  s.apply_ = [](const Vec& m, const Vec& v, Vec& out) {
    out.resize(3);
    out[0] = m[1] * v[2] - m[2] * v[1];
    out[1] = m[2] * v[0] - m[0] * v[2];
    out[2] = m[0] * v[1] - m[1] * v[0];
  };
  s.casimirs_.push_back(quadratic_field(2.0 * Mat::Identity(3, 3)));
  return s;
}

PhaseStructure PhaseStructure::general(std::size_t n, TensorFn tensor, bool constant, std::vector<ScalarField> casimirs) {
  STOCHHAM_REQUIRE(n >= 1, ErrorCode::InvalidArgument, "structure dimension must be positive");
  STOCHHAM_REQUIRE(static_cast<bool>(tensor), ErrorCode::InvalidArgument, "tensor handle is empty");
  PhaseStructure s;
  s.dim_ = n;
  s.kind_ = StructureKind::GeneralPoisson;
  s.constant_ = constant;
  s.tensor_ = tensor;
  s.apply_ = [tensor](const Vec& z, const Vec& v, Vec& out) {
    Mat B;
    tensor(z, B);
    out.noalias() = B * v;
  };
  s.casimirs_ = std::move(casimirs);
  return s;
}

PhaseStructure PhaseStructure::with_casimirs(std::vector<ScalarField> casimirs) const {
  PhaseStructure s = *this;
  s.casimirs_ = std::move(casimirs);
  return s;
}

Mat PhaseStructure::tensor_at(const Vec& z) const {
  check_dim(*this, z, "tensor_at");
  Mat B;
  tensor_(z, B);
  return B;
}

void PhaseStructure::apply(const Vec& z, const Vec& v, Vec& out) const { apply_(z, v, out); }

double PhaseStructure::antisymmetry_defect(const Vec& z) const {
  const Mat B = tensor_at(z);
  return (B + B.transpose()).cwiseAbs().maxCoeff();
}

HamiltonianBundle::HamiltonianBundle(std::vector<ScalarField> comps, std::vector<std::string> labels)
    : components(std::move(comps)), basis_labels(std::move(labels)) {
  STOCHHAM_REQUIRE(!components.empty(), ErrorCode::InvalidArgument, "Hamiltonian bundle needs r >= 1 components");
  if (basis_labels.empty()) {
    for (std::size_t j = 0; j < components.size(); ++j) basis_labels.push_back("eps" + std::to_string(j + 1));
  }
  STOCHHAM_REQUIRE(basis_labels.size() == components.size(), ErrorCode::DimensionMismatch,
                   "one basis label per Hamiltonian component");
}

void check_dim(const PhaseStructure& s, const Vec& z, const char* where) {
  if (static_cast<std::size_t>(z.size()) != s.dim()) {
    throw Error(ErrorCode::DimensionMismatch, std::string(where) + ": state has dimension " + std::to_string(z.size()) +
                                                  ", structure has " + std::to_string(s.dim()));
  }
}

Vec hamiltonian_vector_field(const PhaseStructure& s, const ScalarField& f, const Vec& z) {
  check_dim(s, z, "hamiltonian_vector_field");
  Vec g(z.size()), out(z.size());
  f.gradient(z, g);
  STOCHHAM_REQUIRE(static_cast<std::size_t>(g.size()) == s.dim(), ErrorCode::DimensionMismatch,
                   "gradient dimension differs from structure dimension");
  s.apply(z, g, out);
  return out;
}

double poisson_bracket(const PhaseStructure& s, const ScalarField& f, const ScalarField& g, const Vec& z) {
  check_dim(s, z, "poisson_bracket");
  Vec gf(z.size()), gg(z.size()), bg(z.size()), bf(z.size());
  f.gradient(z, gf);
  g.gradient(z, gg);
  STOCHHAM_REQUIRE(gf.size() == z.size() && gg.size() == z.size(), ErrorCode::DimensionMismatch,
                   "gradient dimension differs from structure dimension");
  s.apply(z, gg, bg);
  s.apply(z, gf, bf);
  // symmetrized so that {f,g} = -{g,f} holds bit for bit
  return 0.5 * (gf.dot(bg) - gg.dot(bf));
}

ScalarField bracket_field(const PhaseStructure& s, const ScalarField& f, const ScalarField& g, double fd_step) {
  auto value = [s, f, g](const Vec& z) { return poisson_bracket(s, f, g, z); };
  auto gradient = [value, fd_step](const Vec& z, Vec& out) {
    const double step = scaled_fd_step(fd_step, z);
    out.resize(z.size());
    Vec zp = z, zm = z;
    for (Eigen::Index i = 0; i < z.size(); ++i) {
      zp[i] = z[i] + step;
      zm[i] = z[i] - step;
      out[i] = (value(zp) - value(zm)) / (2.0 * step);
      zp[i] = z[i];
      zm[i] = z[i];
    }
  };
  return make_field(value, gradient);
}

double jacobi_residual(const PhaseStructure& s, const ScalarField& f, const ScalarField& g, const ScalarField& h,
                       const Vec& z, double fd_step) {
  STOCHHAM_REQUIRE(fd_step > 0.0, ErrorCode::InvalidArgument, "jacobi_residual needs fd_step > 0");
  check_dim(s, z, "jacobi_residual");
  const double a = poisson_bracket(s, bracket_field(s, f, g, fd_step), h, z);
  const double b = poisson_bracket(s, bracket_field(s, g, h, fd_step), f, z);
  const double c = poisson_bracket(s, bracket_field(s, h, f, fd_step), g, z);
  return std::abs(a + b + c);
}

Vec stratonovich_operator_apply(const PhaseStructure& s, const HamiltonianBundle& h, const Vec& z, const Vec& u) {
  check_dim(s, z, "stratonovich_operator_apply");
  STOCHHAM_REQUIRE(static_cast<std::size_t>(u.size()) == h.size(), ErrorCode::DimensionMismatch,
                   "driver vector has " + std::to_string(u.size()) + " components, bundle has " +
                       std::to_string(h.size()));
  // sum_j u_j B grad(h_j) = B (sum_j u_j grad(h_j))
  Vec acc = Vec::Zero(z.size()), g(z.size()), out(z.size());
  for (std::size_t j = 0; j < h.size(); ++j) {
    if (u[static_cast<Eigen::Index>(j)] == 0.0) continue;
    h[j].gradient(z, g);
    acc += u[static_cast<Eigen::Index>(j)] * g;
  }
  s.apply(z, acc, out);
  return out;
}

Mat vector_field_jacobian(const PhaseStructure& s, const ScalarField& f, const Vec& z, double fd_step) {
  check_dim(s, z, "vector_field_jacobian");
  const auto n = z.size();
  if (s.is_constant() && f.has_hessian()) {
    Mat H(n, n);
    f.hessian(z, H);
    return s.tensor_at(z) * H;
  }
  STOCHHAM_REQUIRE(fd_step > 0.0, ErrorCode::InvalidArgument, "vector field Jacobian fallback needs fd_step > 0");
  const double step = scaled_fd_step(fd_step, z);
  Mat J(n, n);
  Vec zp = z, zm = z;
  for (Eigen::Index i = 0; i < n; ++i) {
    zp[i] = z[i] + step;
    zm[i] = z[i] - step;
    J.col(i) = (hamiltonian_vector_field(s, f, zp) - hamiltonian_vector_field(s, f, zm)) / (2.0 * step);
    zp[i] = z[i];
    zm[i] = z[i];
  }
  return J;
}

}  // namespace stochham
