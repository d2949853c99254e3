#pragma once

// Average-velocity formulas, Monte Carlo velocity estimation, fundamental
// diagrams, p -> 1 stability sweeps and obstacle experiments.

#include <cstddef>
#include <cstdint>
#include <iosfwd>
#include <vector>

#include "traffic/config.hpp"
#include "traffic/dynamics.hpp"
#include "traffic/markov.hpp"

namespace traffic {

/// Stationary average velocity V(rho, p, v, r).
///
/// Reduces to point particles at the gap-equivalent density
/// rho' = rho / (1 - 2 r rho) (equal gaps give equal velocities) and applies
/// V(rho', 0) = [1 + v rho' - sqrt((1 + v rho')^2 - 4 p v rho')] / (2 rho').
/// Returns 0 for a packed ring (2 r rho = 1).
double theoretical_velocity(double rho, double p, double v, double r);

/// Velocity among obstacles whose extended field has density rho_z.
double theoretical_velocity_obstacles(double rho_x, double rho_z, double p);

/// Inserts floor(gap / v) virtual obstacles spaced v apart after every
/// obstacle (including the wrap gap on a ring); a virtual obstacle landing
/// on the next real one is dropped.
ObstacleField extend_obstacles(const ObstacleField& field, double v);

struct VelocityEstimate {
  double value = 0.0;
  double std_error = 0.0;
  std::size_t particles = 0;
  std::uint64_t steps = 0;  // post burn-in
  std::uint64_t burn_in = 0;
  std::size_t batches = 0;
};

/// Post-burn-in displacement per particle per step, with a batch-means
/// standard error over min(batches, T - burn_in) batches.
VelocityEstimate estimate_velocity(const TrajectorySummary& summary, std::uint64_t burn_in,
                                   std::size_t batches = 20);

/// Density of the v = 1, r = 1/2 lattice process that transports to (rho, v, r).
double lattice_density(double rho, double v, double r);

/// Initial ring configuration of `particles` balls of radius r at density
/// close to rho, drawn from the stationary Markov measure of the lattice
/// process and transported by radius conjugation and the scaling x -> v x + w.
/// With `random_offset` the shift w is uniform in [0, v).
Configuration invariant_initial_condition(double rho, double p, double v, double r,
                                          std::size_t particles, std::uint64_t seed,
                                          bool random_offset = false);

struct SimulationBudget {
  std::size_t particles = 10080;
  std::uint64_t steps = 20000;
  std::uint64_t burn_in = 0;  // 0 means steps / 4
  unsigned jobs = 1;
  /// Independent runs per point. With more than one, V_hat is their mean and
  /// the standard error comes from their spread instead of batch means.
  std::size_t replicas = 1;
};

struct FundamentalDiagramRow {
  double rho = 0.0;  // realised ring density
  double p = 0.0;
  double v = 0.0;
  double r = 0.0;
  double v_theory = 0.0;
  double v_hat = 0.0;
  double std_error = 0.0;
  double flux = 0.0;
};

std::vector<FundamentalDiagramRow> fundamental_diagram(double p, double v, double r,
                                                       const std::vector<double>& rho_grid,
                                                       const SimulationBudget& budget,
                                                       std::uint64_t seed);

struct StabilityRow {
  double p = 0.0;
  double v_theory = 0.0;
  double v_hat = 0.0;
  double std_error = 0.0;
  /// max over words of length <= 4 of |mu^(p)(w) - mu^(1)(w)|.
  double measure_dist = 0.0;
};

/// Largest cylinder discrepancy over all words of length 1..max_len.
double cylinder_distance(const MarkovMatrix& a, const MarkovMatrix& b, std::size_t max_len = 4);

std::vector<StabilityRow> stability_sweep(double rho, double v, double r, const std::vector<double>& ps,
                                          const SimulationBudget& budget, std::uint64_t seed);

struct SimilarityReport {
  double density_original = 0.0;
  double density_scaled = 0.0;
  /// max over t, i of |d~_i(t) - u d_i(t)|.
  double max_scaling_error = 0.0;
  double velocity_original = 0.0;
  double velocity_scaled = 0.0;
};

/// Runs (x, v) and (u x, u v) on one coin stream; requires point particles.
SimilarityReport similarity_check(const Configuration& cfg, const ProcessParams& params, double u,
                                  std::uint64_t steps, std::uint64_t seed);

struct ObstacleExperiment {
  double ring = 10000.0;
  std::vector<double> pattern{0.0, 3.5};  // obstacles within one period
  double period = 5.0;
  double rho_x = 0.25;
  double p = 0.5;
  double v = 1.0;
  std::uint64_t steps = 20000;
  std::uint64_t burn_in = 0;  // 0 means steps / 4
};

struct ObstacleResult {
  double rho_x = 0.0;
  double rho_extended = 0.0;
  double v_theory = 0.0;
  VelocityEstimate estimate;
};

ObstacleField periodic_obstacles(double ring, const std::vector<double>& pattern, double period);
ObstacleResult run_obstacle_experiment(const ObstacleExperiment& exp, std::uint64_t seed);

void write_fundamental_diagram_csv(std::ostream& out, const std::vector<FundamentalDiagramRow>& rows);
void write_stability_csv(std::ostream& out, const std::vector<StabilityRow>& rows);

}  // namespace traffic
