#include "traffic/dynamics.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <ostream>

namespace traffic {

namespace {

constexpr std::uint64_t kGolden = 0x9E3779B97F4A7C15ULL;

std::uint64_t mix64(std::uint64_t z) noexcept { return CoinStream::mix(z); }

// Writes time-(t+1) positions into `next`. Targets only read `cfg`, so the
// update is synchronous.
void advance(const Configuration& cfg, const ProcessParams& params, const CoinStream& coins,
             std::uint64_t t, std::vector<double>& next) {
  const std::size_t n = cfg.size();
  const auto x = cfg.positions();
  const double v = params.v();
  const double p = params.p();
  next.resize(n);
  if (n == 0) return;
  const std::uint64_t key = coins.time_key(t);
  // Same comparison as CoinStream::coin: u < p with u = bits >> 11 scaled by 2^-53.
  auto moves = [&](std::size_t i) {
    return static_cast<double>(CoinStream::bits(key, i) >> 11) * 0x1.0p-53 < p;
  };
  if (cfg.has_uniform_radius()) {
    const double contact = 2.0 * cfg.uniform_radius();
    for (std::size_t i = 0; i + 1 < n; ++i) {
      const double target = std::min(x[i] + v, x[i + 1] - contact);
      next[i] = moves(i) ? target : x[i];
    }
  } else {
    for (std::size_t i = 0; i + 1 < n; ++i) {
      const double target = std::min(x[i] + v, cfg.contact_limit(i));
      next[i] = moves(i) ? target : x[i];
    }
  }
  const std::size_t last = n - 1;
  next[last] = moves(last) ? std::min(x[last] + v, cfg.contact_limit(last)) : x[last];
}

void advance_obstacles(const Configuration& cfg, const ObstacleField& field,
                       const ProcessParams& params, const CoinStream& coins, std::uint64_t t,
                       std::vector<double>& next) {
  const std::size_t n = cfg.size();
  const auto x = cfg.positions();
  next.assign(x.begin(), x.end());
  for (std::size_t i = 0; i < n; ++i) {
    if (!coins.coin(i, t, params.p())) continue;
    double target = std::min(x[i] + params.v(), cfg.contact_limit(i));
    if (!field.empty()) target = std::min(target, field.next_beyond(x[i]));
    next[i] = target;
  }
}

void require_point_particles(const Configuration& cfg) {
  if (!cfg.has_uniform_radius() || cfg.uniform_radius() != 0.0)
    throw DomainError("obstacle dynamics requires point particles (uniform radius 0)");
}

}  // namespace

std::uint64_t derive_seed(std::uint64_t master, std::uint64_t tag) noexcept {
  return mix64(mix64(master) ^ (tag * kGolden + 0x632BE59BD9B4E019ULL));
}

ObstacleField::ObstacleField(Geometry geometry, std::vector<double> obstacles)
    : geometry_(geometry), z_(std::move(obstacles)) {
  for (std::size_t j = 1; j < z_.size(); ++j)
    if (!(z_[j - 1] < z_[j])) throw DomainError("obstacle positions must be strictly increasing");
  if (geometry_.is_ring() && !z_.empty() && (z_.front() < 0.0 || z_.back() >= geometry_.circumference))
    throw DomainError("ring obstacles must lie in [0, L)");
}

double ObstacleField::next_beyond(double x) const {
  constexpr double inf = std::numeric_limits<double>::infinity();
  if (z_.empty()) return inf;
  if (!geometry_.is_ring()) {
    const auto it = std::upper_bound(z_.begin(), z_.end(), x);
    return it == z_.end() ? inf : *it;
  }
  const double L = geometry_.circumference;
  const double turns = std::floor(x / L);
  const double y = x - turns * L;
  auto idx = static_cast<std::size_t>(std::upper_bound(z_.begin(), z_.end(), y) - z_.begin());
  // Rounding in y can land on or just below an obstacle; resolve in lifted coordinates.
  for (;;) {
    const double wraps = turns + static_cast<double>(idx / z_.size());
    const double candidate = z_[idx % z_.size()] + wraps * L;
    if (candidate > x) return candidate;
    ++idx;
  }
}

double ObstacleField::density() const {
  if (!geometry_.is_ring()) throw DomainError("obstacle density is defined on rings only");
  return static_cast<double>(z_.size()) / geometry_.circumference;
}

Configuration step(const Configuration& cfg, const ProcessParams& params, const CoinStream& coins,
                   std::uint64_t t) {
  std::vector<double> next;
  advance(cfg, params, coins, t, next);
  Configuration out = cfg;
  out.move_to(next);
  return out;
}

Configuration step_obstacles(const Configuration& cfg, const ObstacleField& field,
                             const ProcessParams& params, const CoinStream& coins, std::uint64_t t) {
  require_point_particles(cfg);
  std::vector<double> next;
  advance_obstacles(cfg, field, params, coins, t, next);
  Configuration out = cfg;
  out.move_to(next);
  return out;
}

namespace {

void take_snapshot(TrajectorySummary& summary, std::uint64_t t, const Configuration& cfg) {
  Snapshot snap;
  snap.t = t;
  snap.positions.assign(cfg.positions().begin(), cfg.positions().end());
  snap.displacement.assign(cfg.winding().begin(), cfg.winding().end());
  summary.snapshots.push_back(std::move(snap));
  summary.density_series.push_back(cfg.size() >= 2 || cfg.is_ring() ? density(cfg) : 0.0);
}

double total_move(const Configuration& cfg, const std::vector<double>& next) {
  double moved = 0.0;
  const auto x = cfg.positions();
  for (std::size_t i = 0; i < next.size(); ++i) moved += next[i] - x[i];
  return moved;
}

}  // namespace

TrajectorySummary run(const Configuration& cfg, const ProcessParams& params, const RunOptions& options) {
  if (options.steps < 1) throw DomainError("run needs at least one step");
  require_admissible(cfg);
  require_compatible(cfg, params);
  if (options.obstacles) require_point_particles(cfg);

  const CoinStream coins(options.seed);
  TrajectorySummary summary;
  summary.steps = options.steps;
  summary.particles = cfg.size();
  summary.step_displacement.reserve(options.steps);

  Configuration state = cfg;
  state.reset_winding();
  if (options.snapshot_stride > 0) take_snapshot(summary, 0, state);
  std::vector<double> next;
  for (std::uint64_t t = 0; t < options.steps; ++t) {
    if (options.obstacles)
      advance_obstacles(state, *options.obstacles, params, coins, t, next);
    else
      advance(state, params, coins, t, next);
    summary.step_displacement.push_back(total_move(state, next));
    state.move_to(next);
    if (options.observer) options.observer(t + 1, state);
    if (options.snapshot_stride > 0 && (t + 1) % options.snapshot_stride == 0)
      take_snapshot(summary, t + 1, state);
  }
  summary.displacement.assign(state.winding().begin(), state.winding().end());
  summary.final_state = std::move(state);
  return summary;
}

CoupledSummary coupled_run(const Configuration& cfg_a, const Configuration& cfg_b,
                           const ProcessParams& params_a, const ProcessParams& params_b,
                           std::uint64_t steps, std::uint64_t seed) {
  if (cfg_a.size() != cfg_b.size()) throw DomainError("coupled runs need equal particle counts");
  if (steps < 1) throw DomainError("run needs at least one step");
  for (const auto* c : {&cfg_a, &cfg_b}) require_admissible(*c);
  require_compatible(cfg_a, params_a);
  require_compatible(cfg_b, params_b);

  const std::size_t n = cfg_a.size();
  const std::size_t pairs = cfg_a.is_ring() && cfg_b.is_ring() ? n : (n == 0 ? 0 : n - 1);
  const CoinStream coins(seed);
  CoupledSummary out;
  auto compare_gaps = [&](const Configuration& a, const Configuration& b) {
    for (std::size_t i = 0; i < pairs; ++i) {
      const double ga = a.contact_limit(i) - a.position(i);
      const double gb = b.contact_limit(i) - b.position(i);
      out.max_gap_difference = std::max(out.max_gap_difference, std::abs(ga - gb));
    }
  };

  Configuration a = cfg_a;
  Configuration b = cfg_b;
  a.reset_winding();
  b.reset_winding();
  for (auto* s : {&out.a, &out.b}) {
    s->steps = steps;
    s->particles = n;
    s->step_displacement.reserve(steps);
  }
  compare_gaps(a, b);
  std::vector<double> next_a, next_b;
  for (std::uint64_t t = 0; t < steps; ++t) {
    advance(a, params_a, coins, t, next_a);
    advance(b, params_b, coins, t, next_b);
    for (std::size_t i = 0; i < n; ++i) {
      const double da = next_a[i] - a.position(i);
      const double db = next_b[i] - b.position(i);
      out.max_displacement_difference = std::max(out.max_displacement_difference, std::abs(da - db));
    }
    out.a.step_displacement.push_back(total_move(a, next_a));
    out.b.step_displacement.push_back(total_move(b, next_b));
    a.move_to(next_a);
    b.move_to(next_b);
    compare_gaps(a, b);
  }
  out.a.displacement.assign(a.winding().begin(), a.winding().end());
  out.b.displacement.assign(b.winding().begin(), b.winding().end());
  out.a.final_state = std::move(a);
  out.b.final_state = std::move(b);
  return out;
}

void write_trajectory_csv(std::ostream& out, const TrajectorySummary& summary) {
  out.precision(17);
  out << "t,particle,position,displacement\n";
  for (const auto& snap : summary.snapshots)
    for (std::size_t i = 0; i < snap.positions.size(); ++i)
      out << snap.t << ',' << i << ',' << snap.positions[i] << ',' << snap.displacement[i] << '\n';
}

}  // namespace traffic
