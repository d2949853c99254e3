#include "traffic/config.hpp"

#include <algorithm>
#include <cmath>
#include <istream>
#include <limits>
#include <numeric>
#include <ostream>
#include <sstream>

namespace traffic {

namespace {

bool is_integer(double x) { return std::isfinite(x) && std::floor(x) == x; }

}  // namespace

ProcessParams::ProcessParams(double p, double v, Space space) : p_(p), v_(v), space_(space) {
  if (!(p >= 0.0 && p <= 1.0)) throw DomainError("p must lie in [0, 1]");
  if (!(v > 0.0) || !std::isfinite(v)) throw DomainError("v must be positive");
  if (space == Space::Lattice && !is_integer(v))
    throw DomainError("lattice process requires an integer v");
}

Configuration::Configuration(Geometry g, std::vector<double> positions, double radius,
                             std::vector<double> radii)
    : geometry_(g),
      positions_(std::move(positions)),
      uniform_radius_(radius),
      radii_(std::move(radii)),
      winding_(positions_.size(), 0.0) {
  if (g.is_ring() && !(g.circumference > 0.0)) throw DomainError("ring circumference must be positive");
  if (!radii_.empty() && radii_.size() != positions_.size())
    throw DomainError("radius count does not match particle count");
  if (!radii_.empty()) uniform_radius_ = 0.0;
}

Configuration Configuration::ring(double circumference, std::vector<double> positions,
                                  double radius) {
  return {Geometry::ring(circumference), std::move(positions), radius, {}};
}

Configuration Configuration::ring(double circumference, std::vector<double> positions,
                                  std::vector<double> radii) {
  return {Geometry::ring(circumference), std::move(positions), 0.0, std::move(radii)};
}

Configuration Configuration::line(std::vector<double> positions, double radius) {
  return {Geometry::line(), std::move(positions), radius, {}};
}

Configuration Configuration::line(std::vector<double> positions, std::vector<double> radii) {
  return {Geometry::line(), std::move(positions), 0.0, std::move(radii)};
}

double Configuration::wrapped_position(std::size_t i) const {
  double x = positions_[i];
  if (!is_ring()) return x;
  const double L = geometry_.circumference;
  x -= L * std::floor(x / L);
  return x >= L ? x - L : x;
}

double Configuration::mean_radius() const {
  if (radii_.empty()) return uniform_radius_;
  return std::accumulate(radii_.begin(), radii_.end(), 0.0) / static_cast<double>(radii_.size());
}

double Configuration::contact_limit(std::size_t i) const {
  const std::size_t n = positions_.size();
  if (i + 1 < n) return positions_[i + 1] - (radius(i) + radius(i + 1));
  if (!is_ring()) return std::numeric_limits<double>::infinity();
  return (positions_[0] + geometry_.circumference) - (radius(i) + radius(0));
}

void Configuration::move_to(std::span<const double> next) {
  for (std::size_t i = 0; i < positions_.size(); ++i) {
    winding_[i] += next[i] - positions_[i];
    positions_[i] = next[i];
  }
}

AdmissibilityReport check_admissible(const Configuration& cfg) {
  AdmissibilityReport report;
  const std::size_t n = cfg.size();
  double diameters = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    const double r = cfg.radius(i);
    if (!std::isfinite(cfg.position(i)) || !std::isfinite(r) || r < 0.0)
      report.bad_particles.push_back(i);
    diameters += 2.0 * r;
  }
  const std::size_t pairs = cfg.is_ring() ? n : (n == 0 ? 0 : n - 1);
  for (std::size_t i = 0; i < pairs; ++i)
    if (!(cfg.position(i) <= cfg.contact_limit(i))) report.violations.push_back(i);
  if (cfg.is_ring() && diameters > cfg.circumference()) report.overfull = true;
  report.ok = report.violations.empty() && report.bad_particles.empty() && !report.overfull;
  return report;
}

void require_admissible(const Configuration& cfg) {
  const auto report = check_admissible(cfg);
  if (report.ok) return;
  if (!report.bad_particles.empty()) {
    const auto i = report.bad_particles.front();
    throw AdmissibilityError(i, "invalid position or radius at particle " + std::to_string(i));
  }
  if (!report.violations.empty()) {
    const auto i = report.violations.front();
    const auto j = cfg.is_ring() ? (i + 1) % cfg.size() : i + 1;
    throw AdmissibilityError(i, "overlapping particles at pair (" + std::to_string(i) + "," +
                                    std::to_string(j) + ")");
  }
  throw AdmissibilityError(0, "sum of diameters exceeds ring circumference");
}

void require_compatible(const Configuration& cfg, const ProcessParams& params) {
  if (params.space() != Space::Lattice) return;
  for (std::size_t i = 0; i < cfg.size(); ++i)
    if (!is_integer(cfg.position(i)))
      throw DomainError("lattice process requires integer positions (particle " +
                        std::to_string(i) + ")");
  if (cfg.is_ring() && !is_integer(cfg.circumference()))
    throw DomainError("lattice ring requires an integer circumference");
}

std::vector<double> gaps(const Configuration& cfg) {
  require_admissible(cfg);
  const std::size_t n = cfg.size();
  const std::size_t pairs = cfg.is_ring() ? n : (n == 0 ? 0 : n - 1);
  std::vector<double> out(pairs);
  for (std::size_t i = 0; i < pairs; ++i) out[i] = cfg.contact_limit(i) - cfg.position(i);
  return out;
}

double density(const Configuration& cfg) {
  if (cfg.is_ring()) return static_cast<double>(cfg.size()) / cfg.circumference();
  if (cfg.size() < 2) throw DomainError("line-window density needs at least 2 particles");
  const double span = cfg.position(cfg.size() - 1) - cfg.position(0);
  if (!(span > 0.0)) throw DomainError("line-window density undefined for a window of zero length");
  return static_cast<double>(cfg.size() - 1) / span;
}

Configuration radius_conjugate(const Configuration& cfg, double r_new) {
  if (!(r_new >= 0.0)) throw DomainError("new radius must be nonnegative");
  require_admissible(cfg);
  const std::size_t n = cfg.size();
  std::vector<double> next(n);
  double excess = 0.0;  // sum 2(r_i - r_new)
  if (cfg.has_uniform_radius()) {
    const double shift = 2.0 * (cfg.uniform_radius() - r_new);
    for (std::size_t i = 0; i < n; ++i) next[i] = cfg.position(i) - static_cast<double>(i) * shift;
    excess = static_cast<double>(n) * shift;
  } else {
    double offset = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
      if (i > 0) offset += cfg.radius(i - 1) + cfg.radius(i) - 2.0 * r_new;
      next[i] = cfg.position(i) - offset;
      excess += 2.0 * (cfg.radius(i) - r_new);
    }
  }
  // Touching pairs that rounding pushed into overlap are moved back to contact.
  const double contact = 2.0 * r_new;
  for (std::size_t i = 1; i < n; ++i)
    while (next[i] - contact < next[i - 1]) next[i] = std::nextafter(next[i], INFINITY);
  if (!cfg.is_ring()) return Configuration::line(std::move(next), r_new);
  double L = cfg.circumference() - excess;
  if (!(L > 0.0)) throw DomainError("conjugated ring circumference must be positive");
  while (n > 0 && (next[0] + L) - contact < next[n - 1]) L = std::nextafter(L, INFINITY);
  return Configuration::ring(L, std::move(next), r_new);
}

Configuration scale_shift(const Configuration& cfg, double u, double w) {
  if (!(u > 0.0)) throw DomainError("scale factor u must be positive");
  std::vector<double> next(cfg.size());
  for (std::size_t i = 0; i < cfg.size(); ++i) next[i] = u * cfg.position(i) + w;
  if (cfg.has_uniform_radius()) {
    const double r = u * cfg.uniform_radius();
    return cfg.is_ring() ? Configuration::ring(u * cfg.circumference(), std::move(next), r)
                         : Configuration::line(std::move(next), r);
  }
  std::vector<double> radii(cfg.size());
  for (std::size_t i = 0; i < cfg.size(); ++i) radii[i] = u * cfg.radius(i);
  return cfg.is_ring() ? Configuration::ring(u * cfg.circumference(), std::move(next), std::move(radii))
                       : Configuration::line(std::move(next), std::move(radii));
}

std::vector<std::uint8_t> encode_word(const Configuration& cfg) {
  if (!cfg.is_ring() || !is_integer(cfg.circumference()))
    throw DomainError("encoding requires a lattice ring of integer circumference");
  if (!cfg.has_uniform_radius() || cfg.uniform_radius() != 0.5)
    throw DomainError("encoding requires uniform radius 1/2");
  const auto sites = static_cast<std::size_t>(cfg.circumference());
  std::vector<std::uint8_t> word(sites, 0);
  for (std::size_t i = 0; i < cfg.size(); ++i) {
    if (!is_integer(cfg.position(i))) throw DomainError("encoding requires integer positions");
    const auto k = static_cast<std::size_t>(cfg.wrapped_position(i));
    if (word[k]) throw DomainError("duplicate site " + std::to_string(k));
    word[k] = 1;
  }
  return word;
}

Configuration decode_word(std::span<const std::uint8_t> word) {
  if (word.empty()) throw DomainError("cannot decode an empty word");
  std::vector<double> positions;
  for (std::size_t k = 0; k < word.size(); ++k) {
    if (word[k] > 1) throw DomainError("word letters must be 0 or 1");
    if (word[k]) positions.push_back(static_cast<double>(k));
  }
  return Configuration::ring(static_cast<double>(word.size()), std::move(positions), 0.5);
}

std::string word_to_string(std::span<const std::uint8_t> word) {
  std::string s(word.size(), '0');
  for (std::size_t k = 0; k < word.size(); ++k)
    if (word[k]) s[k] = '1';
  return s;
}

std::vector<std::uint8_t> word_from_string(const std::string& text) {
  std::vector<std::uint8_t> word;
  word.reserve(text.size());
  for (char c : text) {
    if (c != '0' && c != '1') throw DomainError("binary word may only contain 0 and 1");
    word.push_back(static_cast<std::uint8_t>(c - '0'));
  }
  return word;
}

void write_configuration_csv(std::ostream& out, const Configuration& cfg) {
  out.precision(17);
  if (cfg.is_ring())
    out << "# ring," << cfg.circumference() << '\n';
  else
    out << "# line\n";
  out << "index,position,radius\n";
  for (std::size_t i = 0; i < cfg.size(); ++i)
    out << i << ',' << cfg.position(i) << ',' << cfg.radius(i) << '\n';
}

Configuration read_configuration_csv(std::istream& in) {
  std::string line;
  Geometry geometry = Geometry::line();
  std::vector<double> positions;
  std::vector<double> radii;
  bool header_seen = false;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    if (line[0] == '#') {
      if (line.rfind("# ring,", 0) == 0) geometry = Geometry::ring(std::stod(line.substr(7)));
      continue;
    }
    if (!header_seen) {
      if (line != "index,position,radius") throw DomainError("expected header index,position,radius");
      header_seen = true;
      continue;
    }
    std::istringstream row(line);
    std::string idx, pos, rad;
    if (!std::getline(row, idx, ',') || !std::getline(row, pos, ',') || !std::getline(row, rad))
      throw DomainError("malformed configuration row: " + line);
    if (std::stoul(idx) != positions.size()) throw DomainError("configuration rows out of order");
    positions.push_back(std::stod(pos));
    radii.push_back(std::stod(rad));
  }
  const bool uniform =
      radii.empty() || std::all_of(radii.begin(), radii.end(), [&](double r) { return r == radii[0]; });
  const double r0 = radii.empty() ? 0.0 : radii[0];
  if (geometry.is_ring())
    return uniform ? Configuration::ring(geometry.circumference, std::move(positions), r0)
                   : Configuration::ring(geometry.circumference, std::move(positions), std::move(radii));
  return uniform ? Configuration::line(std::move(positions), r0)
                 : Configuration::line(std::move(positions), std::move(radii));
}

}  // namespace traffic
