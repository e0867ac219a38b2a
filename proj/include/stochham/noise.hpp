#pragma once
// Driver semimartingales on uniform grids.
//
// Brownian channels are generated hierarchically. For N = M * 2^L steps
// (M odd) the values at the M coarse nodes come from i.i.d. N(0, T/M)
// increments, and each finer level fills interval midpoints by Brownian
// bridge sampling. Every Gaussian is keyed by (seed, channel, level, node),
// so the path at dt/2 agrees bit-for-bit with the path at dt on the shared
// grid points. Gaussians come from Box-Muller on two counter-hashed
// uniforms (splitmix64 finalizer).

#include "stochham/errors.hpp"
#include "stochham/types.hpp"

#include <iosfwd>
#include <span>
#include <string>
#include <vector>

namespace stochham {

inline constexpr std::size_t kDefaultMaxSteps = 100'000'000;

struct ComponentSpec {
  enum class Kind { DeterministicTime, Brownian, Affine };

  Kind kind = Kind::DeterministicTime;
  double slope = 0.0;            // a: coefficient of t
  std::vector<double> loadings;  // b: coefficients of the Brownian channels (size k)

  static ComponentSpec time();
  static ComponentSpec brownian(std::size_t channel);
  static ComponentSpec affine(double a, std::vector<double> b);
};

struct DriverSpec {
  std::vector<ComponentSpec> components;
  std::size_t channels = 0;  // k independent Brownian channels

  DriverSpec() = default;
  DriverSpec(std::vector<ComponentSpec> comps, std::size_t k);

  std::size_t size() const { return components.size(); }
  void validate() const;
  std::string describe() const;
};

/// kappa^{ij}: d[X^i, X^j] = kappa^{ij} dt.
double qv_rate(const DriverSpec& spec, std::size_t i, std::size_t j);
Mat qv_matrix(const DriverSpec& spec);

struct NoisePath {
  double dt = 0.0;
  std::vector<double> times;  // t_i = i dt
  RowMatrix values;           // (N+1) x r, values.row(0) == 0
  RowMatrix increments;       // N x r
  Mat qv_rates;               // r x r
  Seed seed = 0;

  std::size_t steps() const { return times.empty() ? 0 : times.size() - 1; }
  std::size_t size() const { return static_cast<std::size_t>(values.cols()); }
  double horizon() const { return times.empty() ? 0.0 : times.back(); }
  std::vector<double> column(std::size_t j) const;
};

/// Number of grid steps for horizon T and step dt; T must be a multiple of dt.
std::size_t grid_steps(double T, double dt, std::size_t max_steps = kDefaultMaxSteps);

/// Standard Brownian paths W^c at grid indices 0..N for c < channels, as an (N+1) x k matrix.
RowMatrix sample_brownian(std::size_t channels, double T, std::size_t steps, Seed seed);

NoisePath sample_path(const DriverSpec& spec, double T, double dt, Seed seed,
                      std::size_t max_steps = kDefaultMaxSteps);

/// Build a path from explicit values (row 0 must be zero) on a uniform grid.
NoisePath make_noise_path(double dt, RowMatrix values, Mat qv_rates, Seed seed = 0);

/// Partial sums sum_{k<i} da_k db_k for i = 0..N.
std::vector<double> realized_covariation(std::span<const double> a, std::span<const double> b);

/// Deterministic standard normal keyed by a counter tuple.
double keyed_normal(Seed seed, std::uint64_t a, std::uint64_t b, std::uint64_t c);
double keyed_uniform(Seed seed, std::uint64_t a, std::uint64_t b, std::uint64_t c);
std::uint64_t splitmix64(std::uint64_t x);

/// CSV with header t,X1..Xr; floats written round-trip exact.
void write_noise_csv(std::ostream& os, const NoisePath& path);
/// Reads a CSV written by write_noise_csv; qv_rates must be supplied separately.
NoisePath read_noise_csv(std::istream& is, const Mat& qv_rates);

}  // namespace stochham
