#include "stochham/noise.hpp"

#include "stochham/io.hpp"

#include <cmath>
#include <istream>
#include <numbers>
#include <ostream>
#include <sstream>
#include <string>

namespace stochham {

ComponentSpec ComponentSpec::time() { return ComponentSpec{Kind::DeterministicTime, 1.0, {}}; }

ComponentSpec ComponentSpec::brownian(std::size_t channel) {
  ComponentSpec c{Kind::Brownian, 0.0, std::vector<double>(channel + 1, 0.0)};
  c.loadings[channel] = 1.0;
  return c;
}

ComponentSpec ComponentSpec::affine(double a, std::vector<double> b) { return ComponentSpec{Kind::Affine, a, std::move(b)}; }

DriverSpec::DriverSpec(std::vector<ComponentSpec> comps, std::size_t k) : components(std::move(comps)), channels(k) {
  validate();
}

void DriverSpec::validate() const {
  STOCHHAM_REQUIRE(!components.empty(), ErrorCode::InvalidArgument, "driver needs at least one component");
  for (std::size_t i = 0; i < components.size(); ++i) {
    const auto& c = components[i];
    STOCHHAM_REQUIRE(std::isfinite(c.slope), ErrorCode::InvalidArgument, "driver slope must be finite");
    if (c.kind == ComponentSpec::Kind::DeterministicTime) continue;
    // trailing zero loadings beyond k are allowed; nonzero ones are not
    for (std::size_t ch = 0; ch < c.loadings.size(); ++ch) {
      STOCHHAM_REQUIRE(std::isfinite(c.loadings[ch]), ErrorCode::InvalidArgument, "driver loading must be finite");
      if (ch >= channels && c.loadings[ch] != 0.0) {
        throw Error(ErrorCode::InvalidArgument, "component " + std::to_string(i) + " uses Brownian channel " +
                                                    std::to_string(ch) + " but only " + std::to_string(channels) +
                                                    " channels exist");
      }
    }
  }
}

std::string DriverSpec::describe() const {
  std::ostringstream os;
  os << "(";
  for (std::size_t i = 0; i < components.size(); ++i) {
    const auto& c = components[i];
    if (i) os << ", ";
    switch (c.kind) {
      case ComponentSpec::Kind::DeterministicTime: os << "t"; break;
      case ComponentSpec::Kind::Brownian:
        for (std::size_t ch = 0; ch < c.loadings.size(); ++ch)
          if (c.loadings[ch] != 0.0) os << "B" << ch + 1;
        break;
      case ComponentSpec::Kind::Affine: {
        os << io::format_double(c.slope) << "t";
        for (std::size_t ch = 0; ch < c.loadings.size(); ++ch)
          if (c.loadings[ch] != 0.0) os << "+" << io::format_double(c.loadings[ch]) << "B" << ch + 1;
        break;
      }
    }
  }
  os << ")";
  return os.str();
}

double qv_rate(const DriverSpec& spec, std::size_t i, std::size_t j) {
  STOCHHAM_REQUIRE(i < spec.size() && j < spec.size(), ErrorCode::InvalidArgument, "qv_rate index out of range");
  const auto& a = spec.components[i];
  const auto& b = spec.components[j];
  if (a.kind == ComponentSpec::Kind::DeterministicTime || b.kind == ComponentSpec::Kind::DeterministicTime) return 0.0;
  const std::size_t n = std::min(a.loadings.size(), b.loadings.size());
  double acc = 0.0;
  for (std::size_t ch = 0; ch < n; ++ch) acc += a.loadings[ch] * b.loadings[ch];
  return acc;
}

Mat qv_matrix(const DriverSpec& spec) {
  const auto r = static_cast<Eigen::Index>(spec.size());
  Mat K(r, r);
  for (Eigen::Index i = 0; i < r; ++i)
    for (Eigen::Index j = 0; j < r; ++j)
      K(i, j) = qv_rate(spec, static_cast<std::size_t>(i), static_cast<std::size_t>(j));
  return K;
}

std::vector<double> NoisePath::column(std::size_t j) const {
  std::vector<double> out(static_cast<std::size_t>(values.rows()));
  for (Eigen::Index i = 0; i < values.rows(); ++i) out[static_cast<std::size_t>(i)] = values(i, static_cast<Eigen::Index>(j));
  return out;
}

// ---------------------------------------------------------------------------

std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9E3779B97F4A7C15ULL;
  x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ULL;
  x = (x ^ (x >> 27)) * 0x94D049BB133111EBULL;
  return x ^ (x >> 31);
}

namespace {

std::uint64_t keyed_bits(Seed seed, std::uint64_t a, std::uint64_t b, std::uint64_t c, std::uint64_t salt) {
  std::uint64_t h = splitmix64(seed);
  h = splitmix64(h ^ a);
  h = splitmix64(h ^ b);
  h = splitmix64(h ^ c);
  return splitmix64(h ^ salt);
}

double to_unit_open_closed(std::uint64_t bits) {
  // (0, 1]
  return (static_cast<double>(bits >> 11) + 1.0) * 0x1.0p-53;
}

}  // namespace

double keyed_uniform(Seed seed, std::uint64_t a, std::uint64_t b, std::uint64_t c) {
  return to_unit_open_closed(keyed_bits(seed, a, b, c, 0x5555));
}

double keyed_normal(Seed seed, std::uint64_t a, std::uint64_t b, std::uint64_t c) {
  const double u1 = to_unit_open_closed(keyed_bits(seed, a, b, c, 1));
  const double u2 = to_unit_open_closed(keyed_bits(seed, a, b, c, 2));
  return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * std::numbers::pi * u2);
}

std::size_t grid_steps(double T, double dt, std::size_t max_steps) {
  STOCHHAM_REQUIRE(std::isfinite(T) && T > 0.0, ErrorCode::InvalidArgument, "horizon T must be positive");
  STOCHHAM_REQUIRE(std::isfinite(dt) && dt > 0.0, ErrorCode::InvalidArgument, "step dt must be positive");
  const double ratio = T / dt;
  STOCHHAM_REQUIRE(ratio <= static_cast<double>(max_steps), ErrorCode::ResourceLimit,
                   "T/dt = " + io::format_double(ratio) + " exceeds max steps " + std::to_string(max_steps));
  const double n = std::round(ratio);
  STOCHHAM_REQUIRE(n >= 1.0 && std::abs(ratio - n) <= 1e-9 * std::max(1.0, n), ErrorCode::InvalidArgument,
                   "T must be an integer multiple of dt");
  return static_cast<std::size_t>(n);
}

RowMatrix sample_brownian(std::size_t channels, double T, std::size_t steps, Seed seed) {
  const auto rows = static_cast<Eigen::Index>(steps + 1);
  RowMatrix W = RowMatrix::Zero(rows, static_cast<Eigen::Index>(channels));
  if (channels == 0) return W;

  std::size_t coarse = steps;
  unsigned levels = 0;
  while (coarse % 2 == 0) {
    coarse /= 2;
    ++levels;
  }
  const double coarse_len = T / static_cast<double>(coarse);
  const double coarse_sd = std::sqrt(coarse_len);
  const std::size_t top_stride = std::size_t{1} << levels;

  for (std::size_t c = 0; c < channels; ++c) {
    const auto col = static_cast<Eigen::Index>(c);
    for (std::size_t j = 0; j < coarse; ++j) {
      const auto lo = static_cast<Eigen::Index>(j * top_stride);
      const auto hi = static_cast<Eigen::Index>((j + 1) * top_stride);
      W(hi, col) = W(lo, col) + coarse_sd * keyed_normal(seed, c, 0, j);
    }
    for (unsigned level = 1; level <= levels; ++level) {
      const std::size_t stride = top_stride >> level;
      const double half_len = std::ldexp(coarse_len, -static_cast<int>(level));
      const double bridge_sd = std::sqrt(0.5 * half_len);
      const std::size_t nodes = coarse << (level - 1);
      for (std::size_t m = 0; m < nodes; ++m) {
        const auto mid = static_cast<Eigen::Index>((2 * m + 1) * stride);
        const auto s = static_cast<Eigen::Index>(stride);
        W(mid, col) = 0.5 * (W(mid - s, col) + W(mid + s, col)) + bridge_sd * keyed_normal(seed, c, level, m);
      }
    }
  }
  return W;
}

NoisePath sample_path(const DriverSpec& spec, double T, double dt, Seed seed, std::size_t max_steps) {
  spec.validate();
  const std::size_t N = grid_steps(T, dt, max_steps);
  const RowMatrix W = sample_brownian(spec.channels, T, N, seed);

  const auto r = static_cast<Eigen::Index>(spec.size());
  const auto rows = static_cast<Eigen::Index>(N + 1);
  RowMatrix values(rows, r);
  std::vector<double> times(N + 1);
  for (std::size_t i = 0; i <= N; ++i) times[i] = static_cast<double>(i) * dt;

  for (Eigen::Index j = 0; j < r; ++j) {
    const auto& comp = spec.components[static_cast<std::size_t>(j)];
    for (Eigen::Index i = 0; i < rows; ++i) {
      const double t = times[static_cast<std::size_t>(i)];
      double x = 0.0;
      switch (comp.kind) {
        case ComponentSpec::Kind::DeterministicTime: x = t; break;
        case ComponentSpec::Kind::Brownian:
        case ComponentSpec::Kind::Affine: {
          x = comp.slope == 0.0 ? 0.0 : comp.slope * t;
          for (std::size_t ch = 0; ch < comp.loadings.size() && ch < spec.channels; ++ch) {
            if (comp.loadings[ch] != 0.0) x += comp.loadings[ch] * W(i, static_cast<Eigen::Index>(ch));
          }
          break;
        }
      }
      values(i, j) = x;
    }
  }
  return make_noise_path(dt, std::move(values), qv_matrix(spec), seed);
}

NoisePath make_noise_path(double dt, RowMatrix values, Mat qv_rates, Seed seed) {
  STOCHHAM_REQUIRE(dt > 0.0, ErrorCode::InvalidArgument, "dt must be positive");
  STOCHHAM_REQUIRE(values.rows() >= 2, ErrorCode::InvalidArgument, "noise path needs at least one step");
  STOCHHAM_REQUIRE(qv_rates.rows() == values.cols() && qv_rates.cols() == values.cols(), ErrorCode::DimensionMismatch,
                   "qv_rates must be r x r");
  for (Eigen::Index j = 0; j < values.cols(); ++j) {
    STOCHHAM_REQUIRE(values(0, j) == 0.0, ErrorCode::InvalidArgument, "driver must start at zero");
  }
  NoisePath p;
  p.dt = dt;
  const auto N = static_cast<std::size_t>(values.rows() - 1);
  p.times.resize(N + 1);
  for (std::size_t i = 0; i <= N; ++i) p.times[i] = static_cast<double>(i) * dt;
  p.increments = values.bottomRows(values.rows() - 1) - values.topRows(values.rows() - 1);
  p.values = std::move(values);
  p.qv_rates = std::move(qv_rates);
  p.seed = seed;
  return p;
}

std::vector<double> realized_covariation(std::span<const double> a, std::span<const double> b) {
  STOCHHAM_REQUIRE(a.size() == b.size(), ErrorCode::GridMismatch, "realized_covariation needs equal grids");
  STOCHHAM_REQUIRE(!a.empty(), ErrorCode::InvalidArgument, "empty path");
  std::vector<double> out(a.size(), 0.0);
  for (std::size_t i = 1; i < a.size(); ++i) out[i] = out[i - 1] + (a[i] - a[i - 1]) * (b[i] - b[i - 1]);
  return out;
}

void write_noise_csv(std::ostream& os, const NoisePath& path) {
  os << "t";
  for (std::size_t j = 0; j < path.size(); ++j) os << ",X" << j + 1;
  os << "\n";
  for (Eigen::Index i = 0; i < path.values.rows(); ++i) {
    os << io::format_double(path.times[static_cast<std::size_t>(i)]);
    for (Eigen::Index j = 0; j < path.values.cols(); ++j) os << "," << io::format_double(path.values(i, j));
    os << "\n";
  }
}

NoisePath read_noise_csv(std::istream& is, const Mat& qv_rates) {
  std::string line;
  STOCHHAM_REQUIRE(static_cast<bool>(std::getline(is, line)), ErrorCode::Io, "noise CSV is empty");
  const auto header = io::split_csv_line(line);
  STOCHHAM_REQUIRE(header.size() >= 2 && header[0] == "t", ErrorCode::Io, "noise CSV header must be t,X1..Xr");
  const std::size_t r = header.size() - 1;
  std::vector<double> times;
  std::vector<double> flat;
  while (std::getline(is, line)) {
    if (line.empty()) continue;
    const auto cells = io::split_csv_line(line);
    STOCHHAM_REQUIRE(cells.size() == r + 1, ErrorCode::Io, "noise CSV row has wrong column count");
    times.push_back(io::parse_double(cells[0]));
    for (std::size_t j = 0; j < r; ++j) flat.push_back(io::parse_double(cells[j + 1]));
  }
  STOCHHAM_REQUIRE(times.size() >= 2, ErrorCode::Io, "noise CSV needs at least two rows");
  const double dt = times[1] - times[0];
  for (std::size_t i = 0; i < times.size(); ++i) {
    STOCHHAM_REQUIRE(std::abs(times[i] - static_cast<double>(i) * dt) <= 1e-9 * std::max(1.0, times[i]),
                     ErrorCode::GridMismatch, "noise CSV grid is not uniform");
  }
  RowMatrix values = Eigen::Map<RowMatrix>(flat.data(), static_cast<Eigen::Index>(times.size()),
                                           static_cast<Eigen::Index>(r));
  NoisePath p = make_noise_path(dt, std::move(values), qv_rates, 0);
  p.times = std::move(times);
  return p;
}

}  // namespace stochham
