#pragma once
// Pathwise integration of dG = sum_j X_{h_j}(G) o dX^j.
//
// stratonovich_heun:     z* = z + H(z)dX,  z' = z + 1/2 (H(z) + H(z*)) dX
// ito_euler_corrected:   z' = z + H(z)dX + 1/2 sum_ij (D X_{h_j} . X_{h_i})(z) kappa^{ij} dt
//
// Exit detection is grid-resolution only, so exit times carry an O(dt) bias.

#include "stochham/noise.hpp"
#include "stochham/structures.hpp"

#include <optional>
#include <string>
#include <variant>
#include <vector>

namespace stochham {

enum class Scheme { StratonovichHeun, ItoEulerCorrected };

std::string to_string(Scheme s);
Scheme parse_scheme(const std::string& name);  // throws InvalidArgument listing valid names

struct IntegratorConfig {
  Scheme scheme = Scheme::StratonovichHeun;
  double dt = 1e-3;
  double fd_step = kDefaultFdStep;
  std::size_t max_steps = kDefaultMaxSteps;
  double blowup_threshold = 1e8;

  void validate() const;
};

enum class PathStatus { Completed, Exited, Exploded };
std::string to_string(PathStatus s);

struct Trajectory {
  std::vector<double> times;  // grid times of the recorded rows
  RowMatrix states;           // rows 0..last recorded
  PathStatus status = PathStatus::Completed;
  std::size_t terminal_index = 0;  // grid index of completion, exit, or explosion
  Seed noise_seed = 0;

  std::size_t rows() const { return static_cast<std::size_t>(states.rows()); }
  Vec state(std::size_t i) const { return states.row(static_cast<Eigen::Index>(i)).transpose(); }
  Vec final_state() const { return state(rows() - 1); }
};

/// Region predicate used for stopping (first exit) and stopping times.
struct Region {
  std::function<bool(const Vec&)> contains;
  std::string label;

  static Region ball(Vec center, double radius);
  static Region half_space(Vec normal, double offset);  // {z : normal . z < offset}
};

struct HamiltonianSystem {
  PhaseStructure structure;
  HamiltonianBundle hamiltonian;
};

/// Generic Ito SDE dz = a(z) dt + sigma(z) dB for the non-Hamiltonian
/// contrast systems. Driven by a path whose r columns are the Brownian channels.
struct ItoModel {
  std::size_t dim = 0;
  std::size_t channels = 0;
  std::function<void(const Vec& z, Vec& out)> drift;
  std::function<void(const Vec& z, Mat& out)> diffusion;  // dim x channels
};

using Model = std::variant<HamiltonianSystem, ItoModel>;

Vec step_heun(const PhaseStructure& s, const HamiltonianBundle& h, const Vec& z, const Vec& dX);
Vec step_ito(const PhaseStructure& s, const HamiltonianBundle& h, const Vec& z, const Vec& dX, const Mat& dQV,
             double fd_step = kDefaultFdStep);

/// D X_f(z) v with X_f the Hamiltonian vector field of f.
Vec vector_field_directional(const PhaseStructure& s, const ScalarField& f, const Vec& z, const Vec& v,
                             double fd_step = kDefaultFdStep);

Trajectory simulate(const PhaseStructure& s, const HamiltonianBundle& h, const Vec& z0, const NoisePath& X,
                    const IntegratorConfig& cfg, const std::optional<Region>& stop_region = std::nullopt);
Trajectory simulate(const ItoModel& model, const Vec& z0, const NoisePath& X, const IntegratorConfig& cfg,
                    const std::optional<Region>& stop_region = std::nullopt);
Trajectory simulate(const Model& model, const Vec& z0, const NoisePath& X, const IntegratorConfig& cfg,
                    const std::optional<Region>& stop_region = std::nullopt);

/// J_t for the Heun map, J_0 = I, advanced with the same predictor-corrector staging as the state.
std::vector<Mat> tangent_flow(const PhaseStructure& s, const HamiltonianBundle& h, const Trajectory& traj,
                              const NoisePath& X, const IntegratorConfig& cfg);

/// Trajectory CSV: t,z1..zn,status with the status only on the final row.
void write_trajectory_csv(std::ostream& os, const Trajectory& traj);

}  // namespace stochham
