#include "stochham/integrators.hpp"

#include "stochham/io.hpp"

#include <cmath>
#include <ostream>

namespace stochham {

std::string to_string(Scheme s) {
  switch (s) {
    case Scheme::StratonovichHeun: return "stratonovich_heun";
    case Scheme::ItoEulerCorrected: return "ito_euler_corrected";
  }
  return "?";
}

Scheme parse_scheme(const std::string& name) {
  if (name == "stratonovich_heun") return Scheme::StratonovichHeun;
  if (name == "ito_euler_corrected") return Scheme::ItoEulerCorrected;
  throw Error(ErrorCode::InvalidArgument,
              "unknown scheme '" + name + "'; valid schemes: stratonovich_heun, ito_euler_corrected");
}

std::string to_string(PathStatus s) {
  switch (s) {
    case PathStatus::Completed: return "completed";
    case PathStatus::Exited: return "exited";
    case PathStatus::Exploded: return "exploded";
  }
  return "?";
}

void IntegratorConfig::validate() const {
  STOCHHAM_REQUIRE(std::isfinite(dt) && dt > 0.0, ErrorCode::InvalidArgument, "integrator dt must be positive");
  STOCHHAM_REQUIRE(blowup_threshold > 0.0, ErrorCode::InvalidArgument, "blowup_threshold must be positive");
  STOCHHAM_REQUIRE(fd_step >= 0.0, ErrorCode::InvalidArgument, "fd_step must be non-negative");
  STOCHHAM_REQUIRE(max_steps >= 1, ErrorCode::InvalidArgument, "max_steps must be positive");
}

Region Region::ball(Vec center, double radius) {
  STOCHHAM_REQUIRE(radius > 0.0, ErrorCode::InvalidArgument, "ball radius must be positive");
  const double r2 = radius * radius;
  Region reg;
  reg.label = "ball(r=" + io::format_double(radius) + ")";
  reg.contains = [c = std::move(center), r2](const Vec& z) { return (z - c).squaredNorm() < r2; };
  return reg;
}

Region Region::half_space(Vec normal, double offset) {
  Region reg;
  reg.label = "half_space";
  reg.contains = [nrm = std::move(normal), offset](const Vec& z) { return nrm.dot(z) < offset; };
  return reg;
}

namespace {

// Allocation-free evaluation of the Stratonovich operator and its derivatives.
class FieldEval {
 public:
  FieldEval(const PhaseStructure& s, const HamiltonianBundle& h)
      : s_(s), h_(h), n_(static_cast<Eigen::Index>(s.dim())), g_(n_), acc_(n_), zp_(n_), zm_(n_), fp_(n_), fm_(n_), H_(n_, n_) {}

  // out = B(z) sum_j u_j grad h_j(z)
  void operator()(const Vec& z, const double* u, Vec& out) {
    acc_.setZero();
    for (std::size_t j = 0; j < h_.size(); ++j) {
      if (u[j] == 0.0) continue;
      h_[j].gradient(z, g_);
      acc_.noalias() += u[j] * g_;
    }
    s_.apply(z, acc_, out);
  }

  void component(const Vec& z, std::size_t j, Vec& out) {
    h_[j].gradient(z, g_);
    s_.apply(z, g_, out);
  }

  // out = D X_{h_j}(z) v
  void directional(const Vec& z, std::size_t j, const Vec& v, double fd_step, Vec& out) {
    if (s_.is_constant() && h_[j].has_hessian()) {
      h_[j].hessian(z, H_);
      acc_.noalias() = H_ * v;
      s_.apply(z, acc_, out);
      return;
    }
    const double vn = v.norm();
    if (vn == 0.0) {
      out.setZero(n_);
      return;
    }
    STOCHHAM_REQUIRE(fd_step > 0.0, ErrorCode::InvalidArgument, "finite-difference fallback needs fd_step > 0");
    const double eps = scaled_fd_step(fd_step, z) / vn;
    zp_ = z + eps * v;
    zm_ = z - eps * v;
    component(zp_, j, fp_);
    component(zm_, j, fm_);
    out = (fp_ - fm_) / (2.0 * eps);
  }

  // Jacobian of z -> B(z) sum_j u_j grad h_j(z)
  void jacobian(const Vec& z, const double* u, double fd_step, Mat& out) {
    bool analytic = s_.is_constant();
    for (std::size_t j = 0; j < h_.size() && analytic; ++j) analytic = u[j] == 0.0 || h_[j].has_hessian();
    out.setZero(n_, n_);
    if (analytic) {
      Mat acc = Mat::Zero(n_, n_);
      for (std::size_t j = 0; j < h_.size(); ++j) {
        if (u[j] == 0.0) continue;
        h_[j].hessian(z, H_);
        acc += u[j] * H_;
      }
      for (Eigen::Index c = 0; c < n_; ++c) {
        g_ = acc.col(c);
        s_.apply(z, g_, fp_);
        out.col(c) = fp_;
      }
      return;
    }
    STOCHHAM_REQUIRE(fd_step > 0.0, ErrorCode::InvalidArgument,
                     "tangent flow needs Hessians or a positive fd_step for the Jacobian fallback");
    const double step = scaled_fd_step(fd_step, z);
    for (Eigen::Index c = 0; c < n_; ++c) {
      zp_ = z;
      zm_ = z;
      zp_[c] += step;
      zm_[c] -= step;
      (*this)(zp_, u, fp_);
      (*this)(zm_, u, fm_);
      out.col(c) = (fp_ - fm_) / (2.0 * step);
    }
  }

  Eigen::Index dim() const { return n_; }

 private:
  const PhaseStructure& s_;
  const HamiltonianBundle& h_;
  Eigen::Index n_;
  Vec g_, acc_, zp_, zm_, fp_, fm_;
  Mat H_;
};

class Stepper {
 public:
  Stepper(const PhaseStructure& s, const HamiltonianBundle& h)
      : eval_(s, h), r_(h.size()), F0_(eval_.dim()), F1_(eval_.dim()), zs_(eval_.dim()), corr_(eval_.dim()), tmp_(eval_.dim()) {
    Xi_.assign(r_, Vec(eval_.dim()));
  }

  void heun(const Vec& z, const double* dX, Vec& out) {
    eval_(z, dX, F0_);
    zs_ = z + F0_;
    eval_(zs_, dX, F1_);
    out = z + 0.5 * (F0_ + F1_);
  }

  void ito(const Vec& z, const double* dX, const Mat& dQV, double fd_step, Vec& out) {
    eval_(z, dX, F0_);
    out = z + F0_;
    corr_.setZero();
    bool any = false;
    for (std::size_t i = 0; i < r_; ++i) {
      bool needed = false;
      for (std::size_t j = 0; j < r_; ++j) needed = needed || dQV(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) != 0.0;
      if (needed) eval_.component(z, i, Xi_[i]);
      any = any || needed;
    }
    if (!any) return;
    for (std::size_t i = 0; i < r_; ++i) {
      for (std::size_t j = 0; j < r_; ++j) {
        const double q = dQV(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j));
        if (q == 0.0) continue;
        eval_.directional(z, j, Xi_[i], fd_step, tmp_);
        corr_.noalias() += q * tmp_;
      }
    }
    out.noalias() += 0.5 * corr_;
  }

  FieldEval& eval() { return eval_; }

 private:
  FieldEval eval_;
  std::size_t r_;
  Vec F0_, F1_, zs_, corr_, tmp_;
  std::vector<Vec> Xi_;
};

bool exploded(const Vec& z, double threshold) {
  for (Eigen::Index i = 0; i < z.size(); ++i)
    if (!std::isfinite(z[i])) return true;
  return z.norm() > threshold;
}

void check_model_inputs(const PhaseStructure& s, const HamiltonianBundle& h, const Vec& z0, const NoisePath& X,
                        const IntegratorConfig& cfg) {
  cfg.validate();
  check_dim(s, z0, "simulate");
  STOCHHAM_REQUIRE(X.size() == h.size(), ErrorCode::DimensionMismatch,
                   "driver has " + std::to_string(X.size()) + " components, Hamiltonian has " + std::to_string(h.size()));
  STOCHHAM_REQUIRE(X.steps() >= 1, ErrorCode::InvalidArgument, "driver path has no steps");
  STOCHHAM_REQUIRE(X.steps() <= cfg.max_steps, ErrorCode::ResourceLimit, "driver path exceeds max_steps");
  STOCHHAM_REQUIRE(std::abs(X.dt - cfg.dt) <= 1e-12 * cfg.dt, ErrorCode::GridMismatch,
                   "driver grid step differs from integrator dt");
  for (Eigen::Index i = 0; i < z0.size(); ++i)
    STOCHHAM_REQUIRE(std::isfinite(z0[i]), ErrorCode::NonFinite, "initial condition is not finite");
}

// Runs the step loop; `advance(k, z, out)` computes the state at index k+1.
template <class Advance>
Trajectory run_steps(const Vec& z0, const NoisePath& X, const IntegratorConfig& cfg,
                     const std::optional<Region>& stop_region, Advance&& advance) {
  const std::size_t N = X.steps();
  const auto n = z0.size();
  Trajectory traj;
  traj.noise_seed = X.seed;
  RowMatrix states(static_cast<Eigen::Index>(N + 1), n);
  states.row(0) = z0.transpose();
  std::size_t last = 0;
  traj.status = PathStatus::Completed;
  traj.terminal_index = N;

  if (stop_region && !stop_region->contains(z0)) {
    traj.status = PathStatus::Exited;
    traj.terminal_index = 0;
  } else {
    Vec z = z0, next(n);
    for (std::size_t k = 0; k < N; ++k) {
      advance(k, z, next);
      if (exploded(next, cfg.blowup_threshold)) {
        traj.status = PathStatus::Exploded;
        traj.terminal_index = k + 1;
        break;
      }
      states.row(static_cast<Eigen::Index>(k + 1)) = next.transpose();
      last = k + 1;
      z.swap(next);
      if (stop_region && !stop_region->contains(z)) {
        traj.status = PathStatus::Exited;
        traj.terminal_index = k + 1;
        break;
      }
    }
  }
  if (last < N) states.conservativeResize(static_cast<Eigen::Index>(last + 1), n);
  traj.states = std::move(states);
  traj.times.assign(X.times.begin(), X.times.begin() + static_cast<std::ptrdiff_t>(last + 1));
  return traj;
}

}  // namespace

Vec step_heun(const PhaseStructure& s, const HamiltonianBundle& h, const Vec& z, const Vec& dX) {
  check_dim(s, z, "step_heun");
  STOCHHAM_REQUIRE(static_cast<std::size_t>(dX.size()) == h.size(), ErrorCode::DimensionMismatch,
                   "increment size differs from Hamiltonian component count");
  Stepper st(s, h);
  Vec out(z.size());
  st.heun(z, dX.data(), out);
  STOCHHAM_REQUIRE(out.allFinite(), ErrorCode::NonFinite, "step_heun produced a non-finite state");
  return out;
}

Vec step_ito(const PhaseStructure& s, const HamiltonianBundle& h, const Vec& z, const Vec& dX, const Mat& dQV,
             double fd_step) {
  check_dim(s, z, "step_ito");
  STOCHHAM_REQUIRE(static_cast<std::size_t>(dX.size()) == h.size(), ErrorCode::DimensionMismatch,
                   "increment size differs from Hamiltonian component count");
  STOCHHAM_REQUIRE(static_cast<std::size_t>(dQV.rows()) == h.size() && dQV.rows() == dQV.cols(),
                   ErrorCode::DimensionMismatch, "dQV must be r x r");
  Stepper st(s, h);
  Vec out(z.size());
  st.ito(z, dX.data(), dQV, fd_step, out);
  STOCHHAM_REQUIRE(out.allFinite(), ErrorCode::NonFinite, "step_ito produced a non-finite state");
  return out;
}

Vec vector_field_directional(const PhaseStructure& s, const ScalarField& f, const Vec& z, const Vec& v, double fd_step) {
  check_dim(s, z, "vector_field_directional");
  HamiltonianBundle single({f});
  FieldEval eval(s, single);
  Vec out(z.size());
  eval.directional(z, 0, v, fd_step, out);
  return out;
}

Trajectory simulate(const PhaseStructure& s, const HamiltonianBundle& h, const Vec& z0, const NoisePath& X,
                    const IntegratorConfig& cfg, const std::optional<Region>& stop_region) {
  check_model_inputs(s, h, z0, X, cfg);
  Stepper st(s, h);
  const Mat dQV = X.qv_rates * X.dt;
  if (cfg.scheme == Scheme::StratonovichHeun) {
    return run_steps(z0, X, cfg, stop_region, [&](std::size_t k, const Vec& z, Vec& out) {
      st.heun(z, X.increments.row(static_cast<Eigen::Index>(k)).data(), out);
    });
  }
  return run_steps(z0, X, cfg, stop_region, [&](std::size_t k, const Vec& z, Vec& out) {
    st.ito(z, X.increments.row(static_cast<Eigen::Index>(k)).data(), dQV, cfg.fd_step, out);
  });
}

Trajectory simulate(const ItoModel& model, const Vec& z0, const NoisePath& X, const IntegratorConfig& cfg,
                    const std::optional<Region>& stop_region) {
  cfg.validate();
  STOCHHAM_REQUIRE(static_cast<std::size_t>(z0.size()) == model.dim, ErrorCode::DimensionMismatch,
                   "initial condition dimension differs from model");
  STOCHHAM_REQUIRE(X.size() == model.channels, ErrorCode::DimensionMismatch,
                   "Ito model needs one driver column per Brownian channel");
  STOCHHAM_REQUIRE(std::abs(X.dt - cfg.dt) <= 1e-12 * cfg.dt, ErrorCode::GridMismatch,
                   "driver grid step differs from integrator dt");
  STOCHHAM_REQUIRE(X.steps() <= cfg.max_steps, ErrorCode::ResourceLimit, "driver path exceeds max_steps");
  const auto n = static_cast<Eigen::Index>(model.dim);
  const auto k = static_cast<Eigen::Index>(model.channels);
  Vec a(n);
  Mat sig(n, k);
  const double dt = X.dt;
  return run_steps(z0, X, cfg, stop_region, [&](std::size_t step, const Vec& z, Vec& out) {
    model.drift(z, a);
    model.diffusion(z, sig);
    out = z + a * dt;
    const auto dB = X.increments.row(static_cast<Eigen::Index>(step));
    for (Eigen::Index c = 0; c < k; ++c) out.noalias() += sig.col(c) * dB[c];
  });
}

Trajectory simulate(const Model& model, const Vec& z0, const NoisePath& X, const IntegratorConfig& cfg,
                    const std::optional<Region>& stop_region) {
  if (const auto* hs = std::get_if<HamiltonianSystem>(&model)) {
    return simulate(hs->structure, hs->hamiltonian, z0, X, cfg, stop_region);
  }
  return simulate(std::get<ItoModel>(model), z0, X, cfg, stop_region);
}

std::vector<Mat> tangent_flow(const PhaseStructure& s, const HamiltonianBundle& h, const Trajectory& traj,
                              const NoisePath& X, const IntegratorConfig& cfg) {
  STOCHHAM_REQUIRE(traj.status == PathStatus::Completed, ErrorCode::PreconditionViolated,
                   "tangent_flow needs a completed trajectory");
  STOCHHAM_REQUIRE(traj.rows() == X.times.size(), ErrorCode::GridMismatch, "trajectory and driver grids differ");
  STOCHHAM_REQUIRE(X.size() == h.size(), ErrorCode::DimensionMismatch, "driver and Hamiltonian sizes differ");
  const auto n = static_cast<Eigen::Index>(s.dim());
  FieldEval eval(s, h);
  std::vector<Mat> J;
  J.reserve(traj.rows());
  J.push_back(Mat::Identity(n, n));
  Mat A0(n, n), A1(n, n), Js(n, n);
  Vec z(n), F0(n), zs(n);
  for (std::size_t k = 0; k + 1 < traj.rows(); ++k) {
    const double* dX = X.increments.row(static_cast<Eigen::Index>(k)).data();
    z = traj.states.row(static_cast<Eigen::Index>(k)).transpose();
    eval(z, dX, F0);
    zs = z + F0;
    eval.jacobian(z, dX, cfg.fd_step, A0);
    eval.jacobian(zs, dX, cfg.fd_step, A1);
    const Mat& Jk = J.back();
    Js = Jk + A0 * Jk;
    J.push_back(Jk + 0.5 * (A0 * Jk + A1 * Js));
  }
  return J;
}

void write_trajectory_csv(std::ostream& os, const Trajectory& traj) {
  os << "t";
  for (Eigen::Index i = 0; i < traj.states.cols(); ++i) os << ",z" << i + 1;
  os << ",status\n";
  for (std::size_t r = 0; r < traj.rows(); ++r) {
    os << io::format_double(traj.times[r]);
    for (Eigen::Index i = 0; i < traj.states.cols(); ++i)
      os << "," << io::format_double(traj.states(static_cast<Eigen::Index>(r), i));
    os << ",";
    if (r + 1 == traj.rows()) os << to_string(traj.status);
    os << "\n";
  }
}

}  // namespace stochham
