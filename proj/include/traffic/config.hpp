#pragma once

// Particle configurations of the exclusion process: balls of radius r_i
// centred at ordered positions x_0 <= x_1 <= ... on a ring or a line window.

#include <cstddef>
#include <cstdint>
#include <iosfwd>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

namespace traffic {

/// Raised when an argument lies outside the domain of an operation.
class DomainError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// Raised by operations that require an admissible configuration.
class AdmissibilityError : public DomainError {
 public:
  AdmissibilityError(std::size_t index, const std::string& what)
      : DomainError(what), index_(index) {}
  /// Index i of the first offending pair (i, i+1); on a ring the wrap pair is (N-1, 0).
  std::size_t index() const noexcept { return index_; }

 private:
  std::size_t index_;
};

struct Geometry {
  enum class Kind { Ring, Line };
  Kind kind = Kind::Line;
  double circumference = 0.0;  // rings only

  static Geometry ring(double circumference) { return {Kind::Ring, circumference}; }
  static Geometry line() { return {Kind::Line, 0.0}; }
  bool is_ring() const noexcept { return kind == Kind::Ring; }
  bool operator==(const Geometry&) const = default;
};

enum class Space { Lattice, Continuum };

/// Parameters (p, v, space) of the process; the radius lives on the configuration.
class ProcessParams {
 public:
  ProcessParams(double p, double v, Space space = Space::Continuum);

  double p() const noexcept { return p_; }
  double v() const noexcept { return v_; }
  Space space() const noexcept { return space_; }

 private:
  double p_;
  double v_;
  Space space_;
};

/// An ordered set of particles with radii.
///
/// On a ring the positions are kept in lifted (unwrapped) coordinates: the
/// successor of the last particle is x_0 + L and admissibility requires
/// x_{N-1} + r_{N-1} <= x_0 + L - r_0. Lifting keeps particle indices fixed
/// across wraparound, which static coupling depends on. `wrapped_position`
/// returns the representative in [0, L).
///
/// `winding` holds each particle's cumulative displacement since the
/// configuration was created.
class Configuration {
 public:
  Configuration() = default;

  static Configuration ring(double circumference, std::vector<double> positions, double radius);
  static Configuration ring(double circumference, std::vector<double> positions,
                            std::vector<double> radii);
  static Configuration line(std::vector<double> positions, double radius);
  static Configuration line(std::vector<double> positions, std::vector<double> radii);

  const Geometry& geometry() const noexcept { return geometry_; }
  bool is_ring() const noexcept { return geometry_.is_ring(); }
  double circumference() const noexcept { return geometry_.circumference; }
  std::size_t size() const noexcept { return positions_.size(); }
  bool empty() const noexcept { return positions_.empty(); }

  std::span<const double> positions() const noexcept { return positions_; }
  double position(std::size_t i) const { return positions_[i]; }
  double wrapped_position(std::size_t i) const;

  bool has_uniform_radius() const noexcept { return radii_.empty(); }
  double uniform_radius() const noexcept { return uniform_radius_; }
  double radius(std::size_t i) const { return radii_.empty() ? uniform_radius_ : radii_[i]; }
  /// Mean radius; the uniform radius when homogeneous.
  double mean_radius() const;

  std::span<const double> winding() const noexcept { return winding_; }

  /// Successor contact point: the largest position particle i may occupy
  /// given the current position of particle i+1 (x_0 + L for the last
  /// particle on a ring). Infinite for the last particle on a line.
  double contact_limit(std::size_t i) const;

  void reset_winding() { winding_.assign(positions_.size(), 0.0); }

  /// Replace positions, accumulating the displacement into `winding`.
  void move_to(std::span<const double> next);

  bool operator==(const Configuration&) const = default;

 private:
  Configuration(Geometry g, std::vector<double> positions, double radius,
                std::vector<double> radii);

  Geometry geometry_;
  std::vector<double> positions_;
  double uniform_radius_ = 0.0;
  std::vector<double> radii_;  // empty when homogeneous
  std::vector<double> winding_;
};

struct AdmissibilityReport {
  bool ok = true;
  /// Offending pair indices i (pair (i, i+1), wrap pair on a ring is N-1).
  std::vector<std::size_t> violations;
  /// Particles with negative or non-finite radius/position.
  std::vector<std::size_t> bad_particles;
  /// Ring only: sum of diameters exceeds the circumference.
  bool overfull = false;
};

AdmissibilityReport check_admissible(const Configuration& cfg);
/// Throws AdmissibilityError naming the first violation.
void require_admissible(const Configuration& cfg);

/// Lattice requirements: integer v and integer positions.
void require_compatible(const Configuration& cfg, const ProcessParams& params);

/// Gaps between ball boundaries, Delta_i = x_{i+1} - x_i - r_i - r_{i+1}.
/// Rings include the wrap gap; lines have N-1 gaps.
std::vector<double> gaps(const Configuration& cfg);

/// N/L on a ring, (N-1)/(x_{N-1} - x_0) on a line window.
double density(const Configuration& cfg);

/// Gap-preserving change of radius: every particle gets radius r_new and
/// positions telescope so all gaps are unchanged (x_0 stays fixed). A ring
/// circumference shrinks by sum 2(r_i - r_new).
Configuration radius_conjugate(const Configuration& cfg, double r_new);

/// Affine change of variables x -> u x + w with radii and circumference scaled by u.
Configuration scale_shift(const Configuration& cfg, double u, double w);

/// Occupancy word of a lattice ring with radius 1/2: letter k is 1 iff a particle sits at site k.
std::vector<std::uint8_t> encode_word(const Configuration& cfg);
/// Inverse of encode_word: ring of circumference word.size(), radius 1/2.
Configuration decode_word(std::span<const std::uint8_t> word);

std::string word_to_string(std::span<const std::uint8_t> word);
std::vector<std::uint8_t> word_from_string(const std::string& text);

/// CSV with columns index,position,radius. Ring geometry is recorded in a
/// leading `# ring,<L>` comment line.
void write_configuration_csv(std::ostream& out, const Configuration& cfg);
Configuration read_configuration_csv(std::istream& in);

}  // namespace traffic
