#pragma once

// Synchronous update of the exclusion process. Every particle draws a coin;
// on success it moves to min{x_i + v, x_{i+1} - r_i - r_{i+1}} computed from
// the time-t state.

#include <cstddef>
#include <cstdint>
#include <functional>
#include <iosfwd>
#include <optional>
#include <vector>

#include "traffic/config.hpp"

namespace traffic {

/// Counter-based Bernoulli(p) coins: coin(i, t) depends only on (seed, i, t),
/// so two processes fed the same stream are statically coupled regardless
/// of iteration order.
class CoinStream {
 public:
  explicit CoinStream(std::uint64_t seed) : seed_(seed) {}

  std::uint64_t seed() const noexcept { return seed_; }

  /// Per-step key; coin(i, t) is a splitmix64 output of the stream keyed by time_key(t).
  std::uint64_t time_key(std::uint64_t time) const noexcept { return mix(seed_ + kGolden * (time + 1)); }
  static std::uint64_t bits(std::uint64_t key, std::uint64_t particle) noexcept {
    return mix(key + kGolden * (particle + 1));
  }
  /// Uniform variate in [0, 1) keyed by (seed, particle, time).
  double uniform(std::uint64_t particle, std::uint64_t time) const noexcept {
    return static_cast<double>(bits(time_key(time), particle) >> 11) * 0x1.0p-53;
  }
  bool coin(std::uint64_t particle, std::uint64_t time, double p) const noexcept {
    return uniform(particle, time) < p;
  }

  static std::uint64_t mix(std::uint64_t z) noexcept {
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
    z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
    return z ^ (z >> 31);
  }

 private:
  static constexpr std::uint64_t kGolden = 0x9E3779B97F4A7C15ULL;
  std::uint64_t seed_;
};

/// Derive an independent stream seed from a master seed and a tag (experiment, replica).
std::uint64_t derive_seed(std::uint64_t master, std::uint64_t tag) noexcept;

/// Static stopping points z_j for point particles.
class ObstacleField {
 public:
  ObstacleField() = default;
  ObstacleField(Geometry geometry, std::vector<double> obstacles);

  const Geometry& geometry() const noexcept { return geometry_; }
  const std::vector<double>& positions() const noexcept { return z_; }
  std::size_t size() const noexcept { return z_.size(); }
  bool empty() const noexcept { return z_.empty(); }

  /// First obstacle strictly beyond x, in the same lifted coordinates as x;
  /// +infinity when none exists.
  double next_beyond(double x) const;
  /// Obstacles per unit length (rings only).
  double density() const;

 private:
  Geometry geometry_;
  std::vector<double> z_;
};

Configuration step(const Configuration& cfg, const ProcessParams& params, const CoinStream& coins,
                   std::uint64_t t);

/// Step with obstacles; requires uniform radius 0.
Configuration step_obstacles(const Configuration& cfg, const ObstacleField& field,
                             const ProcessParams& params, const CoinStream& coins, std::uint64_t t);

struct Snapshot {
  std::uint64_t t = 0;
  std::vector<double> positions;
  std::vector<double> displacement;  // cumulative since t = 0
};

struct TrajectorySummary {
  std::uint64_t steps = 0;
  std::size_t particles = 0;
  /// Total displacement of each particle over the run.
  std::vector<double> displacement;
  /// Sum over particles of the displacement made during step t (size = steps).
  std::vector<double> step_displacement;
  std::vector<Snapshot> snapshots;
  /// Density at each snapshot.
  std::vector<double> density_series;
  Configuration final_state;
};

struct RunOptions {
  std::uint64_t steps = 1;
  std::uint64_t seed = 0;
  /// Snapshot every `stride` steps (plus t = 0); 0 disables snapshots.
  std::uint64_t snapshot_stride = 0;
  std::optional<ObstacleField> obstacles;
  /// Called after every step with (t + 1, new state).
  std::function<void(std::uint64_t, const Configuration&)> observer;
};

TrajectorySummary run(const Configuration& cfg, const ProcessParams& params, const RunOptions& options);

struct CoupledSummary {
  TrajectorySummary a;
  TrajectorySummary b;
  /// max over t and i of |Delta_i^a(t) - Delta_i^b(t)|.
  double max_gap_difference = 0.0;
  /// max over t and i of the per-step displacement difference.
  double max_displacement_difference = 0.0;
};

/// Runs two processes on one coin stream. Both configurations need the same particle count.
CoupledSummary coupled_run(const Configuration& cfg_a, const Configuration& cfg_b,
                           const ProcessParams& params_a, const ProcessParams& params_b,
                           std::uint64_t steps, std::uint64_t seed);

/// CSV with columns t,particle,position,displacement.
void write_trajectory_csv(std::ostream& out, const TrajectorySummary& summary);

}  // namespace traffic
