#include "traffic/velocity.hpp"

#include <algorithm>
#include <cmath>
#include <future>
#include <ostream>
#include <random>

namespace traffic {

double theoretical_velocity(double rho, double p, double v, double r) {
  if (!(rho > 0.0)) throw DomainError("density must be positive");
  if (!(p >= 0.0 && p <= 1.0)) throw DomainError("p must lie in [0, 1]");
  if (!(v > 0.0)) throw DomainError("v must be positive");
  if (!(r >= 0.0)) throw DomainError("r must be nonnegative");
  const double packing = 2.0 * r * rho;
  if (packing > 1.0) throw DomainError("2 r rho >= 1: configuration cannot exist");
  if (packing == 1.0) return 0.0;
  const double rho0 = rho / (1.0 - packing);
  const double b = 1.0 + v * rho0;
  const double disc = std::max(b * b - 4.0 * p * v * rho0, 0.0);
  // Rationalised form of (b - sqrt(disc)) / (2 rho0).
  return 2.0 * p * v / (b + std::sqrt(disc));
}

double theoretical_velocity_obstacles(double rho_x, double rho_z, double p) {
  if (!(rho_x > 0.0) || !(rho_z > 0.0)) throw DomainError("densities must be positive");
  if (!(p >= 0.0 && p <= 1.0)) throw DomainError("p must lie in [0, 1]");
  const double s = rho_x + rho_z;
  const double disc = std::max(s * s - 4.0 * p * rho_x * rho_z, 0.0);
  return 2.0 * p / (s + std::sqrt(disc));
}

ObstacleField extend_obstacles(const ObstacleField& field, double v) {
  if (!(v > 0.0)) throw DomainError("v must be positive");
  const auto& z = field.positions();
  const std::size_t n = z.size();
  if (n == 0) return field;
  const bool ring = field.geometry().is_ring();
  const double L = field.geometry().circumference;
  std::vector<double> out;
  const std::size_t segments = ring ? n : n - 1;
  for (std::size_t j = 0; j < n; ++j) {
    out.push_back(z[j]);
    if (j >= segments) continue;
    const double next = j + 1 < n ? z[j + 1] : z[0] + L;
    const double gap = next - z[j];
    const double scale = std::max({1.0, std::abs(z[j]), std::abs(next)});
    const auto count = static_cast<long long>(std::floor(gap / v + 1e-12));
    for (long long k = 1; k <= count; ++k) {
      const double candidate = z[j] + static_cast<double>(k) * v;
      if (candidate >= next - 1e-12 * scale) break;
      out.push_back(ring && candidate >= L ? candidate - L : candidate);
    }
  }
  std::sort(out.begin(), out.end());
  return ObstacleField(field.geometry(), std::move(out));
}

VelocityEstimate estimate_velocity(const TrajectorySummary& summary, std::uint64_t burn_in,
                                   std::size_t batches) {
  if (summary.steps <= burn_in) throw DomainError("not enough steps after burn-in");
  if (summary.particles == 0) throw DomainError("no particles to average over");
  if (summary.step_displacement.size() != summary.steps) throw DomainError("trajectory lacks per-step totals");
  VelocityEstimate est;
  est.particles = summary.particles;
  est.burn_in = burn_in;
  est.steps = summary.steps - burn_in;
  const double n = static_cast<double>(summary.particles);

  double total = 0.0;
  for (std::uint64_t t = burn_in; t < summary.steps; ++t) total += summary.step_displacement[t];
  est.value = total / (n * static_cast<double>(est.steps));

  const std::size_t b = static_cast<std::size_t>(std::min<std::uint64_t>(batches, est.steps));
  est.batches = b;
  if (b < 2) return est;
  const std::uint64_t len = est.steps / b;
  std::vector<double> means(b, 0.0);
  for (std::size_t k = 0; k < b; ++k) {
    double s = 0.0;
    const std::uint64_t start = burn_in + k * len;
    for (std::uint64_t t = start; t < start + len; ++t) s += summary.step_displacement[t];
    means[k] = s / (n * static_cast<double>(len));
  }
  double mean = 0.0;
  for (double m : means) mean += m;
  mean /= static_cast<double>(b);
  double var = 0.0;
  for (double m : means) var += (m - mean) * (m - mean);
  var /= static_cast<double>(b - 1);
  est.std_error = std::sqrt(var / static_cast<double>(b));
  return est;
}

double lattice_density(double rho, double v, double r) {
  if (!(rho > 0.0) || !(v > 0.0) || !(r >= 0.0)) throw DomainError("invalid density transport arguments");
  if (2.0 * r * rho >= 1.0) throw DomainError("2 r rho >= 1");
  const double point = v * rho / (1.0 - 2.0 * r * rho);  // point particles at jump length 1
  return point / (1.0 + point);
}

namespace {

// Holes H of the lattice ring with K particles such that transporting it to
// (v, r) gives ring length v H + 2 r K closest to K / rho.
std::size_t lattice_holes(double rho, double v, double r, std::size_t particles) {
  const double k = static_cast<double>(particles);
  const double holes = k * (1.0 - 2.0 * r * rho) / (v * rho);
  const auto h = static_cast<std::size_t>(std::llround(holes));
  if (h == 0) throw DomainError("density too close to packing for the requested particle count");
  return h;
}

}  // namespace

Configuration invariant_initial_condition(double rho, double p, double v, double r,
                                          std::size_t particles, std::uint64_t seed, bool random_offset) {
  if (particles < 1) throw DomainError("need at least one particle");
  if (2.0 * r * rho >= 1.0) throw DomainError("2 r rho >= 1");
  const std::size_t holes = lattice_holes(rho, v, r, particles);
  const std::size_t sites = particles + holes;
  const double rho_lattice = static_cast<double>(particles) / static_cast<double>(sites);
  const MarkovMatrix m = build_invariant_matrix(rho_lattice, p);
  const Word word = sample_ring_word_with_count(m, sites, particles, derive_seed(seed, 1));

  double shift = 0.0;
  if (random_offset) {
    std::mt19937_64 rng(derive_seed(seed, 2));
    shift = v * static_cast<double>(rng() >> 11) * 0x1.0p-53;
  }
  Configuration cfg = radius_conjugate(decode_word(word), 0.0);
  cfg = scale_shift(cfg, v, shift);
  if (r > 0.0) cfg = radius_conjugate(cfg, r);
  return cfg;
}

namespace {

FundamentalDiagramRow diagram_point(double rho, double p, double v, double r, const SimulationBudget& budget,
                                    std::uint64_t seed) {
  if (budget.replicas < 1) throw DomainError("need at least one replica");
  const std::uint64_t burn = budget.burn_in > 0 ? budget.burn_in : budget.steps / 4;
  FundamentalDiagramRow row;
  std::vector<double> means;
  for (std::size_t k = 0; k < budget.replicas; ++k) {
    const std::uint64_t replica_seed = budget.replicas == 1 ? seed : derive_seed(seed, 1000 + k);
    const Configuration cfg = invariant_initial_condition(rho, p, v, r, budget.particles, replica_seed);
    RunOptions opt;
    opt.steps = budget.steps;
    opt.seed = derive_seed(replica_seed, 3);
    const auto est = estimate_velocity(run(cfg, ProcessParams(p, v), opt), burn);
    means.push_back(est.value);
    row.rho = density(cfg);
    row.std_error = est.std_error;
  }
  row.p = p;
  row.v = v;
  row.r = r;
  row.v_theory = theoretical_velocity(row.rho, p, v, r);
  if (means.size() > 1) {
    const double n = static_cast<double>(means.size());
    double mean = 0.0;
    for (double m : means) mean += m;
    mean /= n;
    double var = 0.0;
    for (double m : means) var += (m - mean) * (m - mean);
    row.std_error = std::sqrt(var / (n - 1.0) / n);
    row.v_hat = mean;
  } else {
    row.v_hat = means.front();
  }
  row.flux = row.rho * row.v_hat;
  return row;
}

template <typename Job>
auto run_jobs(std::size_t count, unsigned jobs, Job job) {
  using Result = decltype(job(std::size_t{0}));
  std::vector<Result> out(count);
  const unsigned workers = std::max(1u, jobs);
  if (workers == 1) {
    for (std::size_t i = 0; i < count; ++i) out[i] = job(i);
    return out;
  }
  for (std::size_t start = 0; start < count; start += workers) {
    std::vector<std::future<Result>> pending;
    for (std::size_t i = start; i < std::min(count, start + workers); ++i)
      pending.push_back(std::async(std::launch::async, job, i));
    for (std::size_t k = 0; k < pending.size(); ++k) out[start + k] = pending[k].get();
  }
  return out;
}

}  // namespace

std::vector<FundamentalDiagramRow> fundamental_diagram(double p, double v, double r,
                                                       const std::vector<double>& rho_grid,
                                                       const SimulationBudget& budget, std::uint64_t seed) {
  if (!(p > 0.0 && p <= 1.0)) throw DomainError("p must lie in (0, 1]");
  for (double rho : rho_grid) {
    if (!(rho > 0.0)) throw DomainError("grid densities must be positive");
    if (2.0 * r * rho >= 1.0) throw DomainError("2 r rho >= 1 at grid point " + std::to_string(rho));
  }
  return run_jobs(rho_grid.size(), budget.jobs, [&](std::size_t i) {
    return diagram_point(rho_grid[i], p, v, r, budget, derive_seed(seed, 100 + i));
  });
}

double cylinder_distance(const MarkovMatrix& a, const MarkovMatrix& b, std::size_t max_len) {
  double worst = 0.0;
  for (std::size_t n = 1; n <= max_len; ++n)
    for (const auto& w : all_words(n))
      worst = std::max(worst, std::abs(cylinder_measure(a, w) - cylinder_measure(b, w)));
  return worst;
}

std::vector<StabilityRow> stability_sweep(double rho, double v, double r, const std::vector<double>& ps,
                                          const SimulationBudget& budget, std::uint64_t seed) {
  const double rho_lattice = lattice_density(rho, v, r);
  const MarkovMatrix limit = build_invariant_matrix(rho_lattice, 1.0);
  for (double p : ps)
    if (!(p > 0.0 && p <= 1.0)) throw DomainError("p must lie in (0, 1]");
  return run_jobs(ps.size(), budget.jobs, [&](std::size_t i) {
    const double p = ps[i];
    const auto point = diagram_point(rho, p, v, r, budget, derive_seed(seed, 200 + i));
    StabilityRow row;
    row.p = p;
    row.v_theory = theoretical_velocity(rho, p, v, r);
    row.v_hat = point.v_hat;
    row.std_error = point.std_error;
    row.measure_dist = cylinder_distance(build_invariant_matrix(rho_lattice, p), limit);
    return row;
  });
}

SimilarityReport similarity_check(const Configuration& cfg, const ProcessParams& params, double u,
                                  std::uint64_t steps, std::uint64_t seed) {
  if (!cfg.has_uniform_radius() || cfg.uniform_radius() != 0.0)
    throw DomainError("similarity check requires point particles (r = 0)");
  if (!(u > 0.0)) throw DomainError("scale factor u must be positive");
  if (steps < 1) throw DomainError("run needs at least one step");
  require_admissible(cfg);
  const ProcessParams scaled_params(params.p(), u * params.v(), Space::Continuum);
  const ProcessParams base_params(params.p(), params.v(), Space::Continuum);
  const CoinStream coins(seed);
  Configuration x = cfg;
  Configuration y = scale_shift(cfg, u, 0.0);
  x.reset_winding();
  SimilarityReport report;
  report.density_original = cfg.size() >= 2 || cfg.is_ring() ? density(cfg) : 0.0;
  report.density_scaled = cfg.size() >= 2 || cfg.is_ring() ? density(y) : 0.0;
  for (std::uint64_t t = 0; t < steps; ++t) {
    Configuration nx = step(x, base_params, coins, t);
    Configuration ny = step(y, scaled_params, coins, t);
    for (std::size_t i = 0; i < cfg.size(); ++i) {
      const double dx = nx.position(i) - x.position(i);
      const double dy = ny.position(i) - y.position(i);
      report.max_scaling_error = std::max(report.max_scaling_error, std::abs(dy - u * dx));
    }
    x = std::move(nx);
    y = std::move(ny);
  }
  double sx = 0.0, sy = 0.0;
  for (std::size_t i = 0; i < cfg.size(); ++i) {
    sx += x.winding()[i];
    sy += y.winding()[i];
  }
  const double denom = static_cast<double>(cfg.size()) * static_cast<double>(steps);
  if (denom > 0.0) {
    report.velocity_original = sx / denom;
    report.velocity_scaled = sy / denom;
  }
  return report;
}

ObstacleField periodic_obstacles(double ring, const std::vector<double>& pattern, double period) {
  if (!(period > 0.0) || !(ring > 0.0)) throw DomainError("ring and period must be positive");
  const double copies = ring / period;
  if (std::abs(copies - std::round(copies)) > 1e-9) throw DomainError("ring length must be a multiple of the period");
  std::vector<double> base = pattern;
  std::sort(base.begin(), base.end());
  for (double z : base)
    if (z < 0.0 || z >= period) throw DomainError("pattern obstacles must lie in [0, period)");
  std::vector<double> z;
  const auto n = static_cast<long long>(std::llround(copies));
  for (long long k = 0; k < n; ++k)
    for (double b : base) z.push_back(b + static_cast<double>(k) * period);
  return ObstacleField(Geometry::ring(ring), std::move(z));
}

ObstacleResult run_obstacle_experiment(const ObstacleExperiment& exp, std::uint64_t seed) {
  if (!(exp.rho_x > 0.0)) throw DomainError("particle density must be positive");
  const ObstacleField field = periodic_obstacles(exp.ring, exp.pattern, exp.period);
  const ObstacleField extended = extend_obstacles(field, exp.v);
  if (extended.empty()) throw DomainError("obstacle field is empty");

  // Particles start on sites of the extended field, several per site allowed.
  const auto particles = static_cast<std::size_t>(std::llround(exp.rho_x * exp.ring));
  if (particles == 0) throw DomainError("density too low for the ring length");
  std::mt19937_64 rng(derive_seed(seed, 4));
  std::vector<double> positions(particles);
  for (auto& x : positions) x = extended.positions()[rng() % extended.size()];
  std::sort(positions.begin(), positions.end());
  const Configuration cfg = Configuration::ring(exp.ring, std::move(positions), 0.0);

  RunOptions opt;
  opt.steps = exp.steps;
  opt.seed = derive_seed(seed, 5);
  opt.obstacles = field;
  const auto summary = run(cfg, ProcessParams(exp.p, exp.v), opt);

  ObstacleResult out;
  out.rho_x = density(cfg);
  out.rho_extended = extended.density();
  out.v_theory = theoretical_velocity_obstacles(out.rho_x, out.rho_extended, exp.p);
  out.estimate = estimate_velocity(summary, exp.burn_in > 0 ? exp.burn_in : exp.steps / 4);
  return out;
}

void write_fundamental_diagram_csv(std::ostream& out, const std::vector<FundamentalDiagramRow>& rows) {
  out.precision(17);
  out << "rho,p,v,r,V_theory,V_hat,stderr,flux\n";
  for (const auto& row : rows)
    out << row.rho << ',' << row.p << ',' << row.v << ',' << row.r << ',' << row.v_theory << ',' << row.v_hat
        << ',' << row.std_error << ',' << row.flux << '\n';
}

void write_stability_csv(std::ostream& out, const std::vector<StabilityRow>& rows) {
  out.precision(17);
  out << "p,V_theory,V_hat,stderr,measure_dist\n";
  for (const auto& row : rows)
    out << row.p << ',' << row.v_theory << ',' << row.v_hat << ',' << row.std_error << ',' << row.measure_dist
        << '\n';
}

}  // namespace traffic
