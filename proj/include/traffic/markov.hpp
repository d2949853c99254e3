#pragma once

// Translation-invariant Markov measures on binary occupancy sequences:
// the stationary family for the v = 1, r = 1/2 lattice process, Parry
// (maximal-entropy) measures of 2x2 subshifts, cylinder evaluation, exact
// ring sampling and periodic-point enumeration.

#include <array>
#include <cstddef>
#include <cstdint>
#include <iosfwd>
#include <span>
#include <string>
#include <vector>

namespace traffic {

using Word = std::vector<std::uint8_t>;

/// Nonempty finite binary word fixing consecutive occupancy letters.
class Cylinder {
 public:
  explicit Cylinder(Word letters);
  explicit Cylinder(const std::string& text);

  const Word& letters() const noexcept { return letters_; }
  std::size_t size() const noexcept { return letters_.size(); }
  std::uint8_t operator[](std::size_t i) const { return letters_[i]; }
  std::string str() const;

 private:
  Word letters_;
};

/// 2x2 stochastic matrix with its stationary vector (p_0, p_1).
class MarkovMatrix {
 public:
  /// Validates rows summing to 1 (within 1e-12), entries in [0, 1] and irreducibility.
  static MarkovMatrix from_entries(double p00, double p01, double p10, double p11);

  double operator()(int from, int to) const { return entries_[2 * from + to]; }
  double p00() const noexcept { return entries_[0]; }
  double p01() const noexcept { return entries_[1]; }
  double p10() const noexcept { return entries_[2]; }
  double p11() const noexcept { return entries_[3]; }
  /// The parameter a = p_01.
  double a() const noexcept { return entries_[1]; }

  double stationary(int letter) const noexcept { return stationary_[letter]; }
  const std::array<double, 4>& entries() const noexcept { return entries_; }

  /// Movement probability this matrix was built for (0 when not from the invariant family).
  double built_for_p() const noexcept { return built_for_p_; }
  bool invariant_family() const noexcept { return invariant_family_; }
  /// |p00 p11 - (1 - p) p10 p01| for the given movement probability.
  double invariance_residual(double p) const noexcept;

 private:
  friend MarkovMatrix build_invariant_matrix(double rho, double p);
  std::array<double, 4> entries_{};
  std::array<double, 2> stationary_{};
  double built_for_p_ = 0.0;
  bool invariant_family_ = false;
};

/// Binary transition structure M of a subshift with its leading eigenpair.
struct TransitionStructure {
  std::array<int, 4> m{};  // row-major, entries 0/1
  double lambda = 0.0;
  std::array<double, 2> eigenvector{};  // right eigenvector, sums to 1

  static TransitionStructure from_matrix(std::array<int, 4> m);
  /// M_+ = (1 1; 1 0): no two adjacent particles.
  static TransitionStructure plus();
  /// M_- = (0 1; 1 1): no two adjacent holes.
  static TransitionStructure minus();
  /// Full shift (1 1; 1 1).
  static TransitionStructure full();

  bool allows(int from, int to) const { return m[2 * from + to] != 0; }
};

/// Parameter a = p_01 of the invariant family at density rho and movement
/// probability p: a = 2 rho / (1 + sqrt(1 - 4 p rho (1 - rho))), the
/// minus-root solution of rho = a (1 - p a) / (1 - p a^2).
double solve_parameter(double rho, double p);

/// Stationary Markov matrix of density rho for the v = 1, r = 1/2 lattice process.
/// p < 1: (1-a, a; p10, 1-p10) with p10 = (1-a)/(1-pa).
/// p = 1: (1-a, a; 1, 0) with a = rho/(1-rho) for rho <= 1/2,
///        (0, 1; b, 1-b) with b = (1-rho)/rho for rho > 1/2.
MarkovMatrix build_invariant_matrix(double rho, double p);

/// (p_0, p_1) = (p10, p01) / (p01 + p10).
std::array<double, 2> stationary_vector(double p01, double p10);

/// mu([a_1 ... a_n]) = p_{a_1} prod p_{a_i a_{i+1}}.
double cylinder_measure(const MarkovMatrix& m, const Cylinder& c);
double cylinder_measure(const MarkovMatrix& m, std::span<const std::uint8_t> word);

/// Exact sample from the cyclically wrapped Markov weight on N sites.
Word sample_ring_word(const MarkovMatrix& m, std::size_t sites, std::uint64_t seed);

/// As sample_ring_word, conditioned on exactly `ones` particles (rejection).
Word sample_ring_word_with_count(const MarkovMatrix& m, std::size_t sites, std::size_t ones,
                                 std::uint64_t seed);

/// P_ij = M_ij m_j / (lambda m_i).
MarkovMatrix parry_matrix(const TransitionStructure& ts);

struct PeriodicPoints {
  std::vector<Word> points;
  std::uint64_t count = 0;
};

/// All words of length n admissible cyclically under M (1 <= n <= 24).
PeriodicPoints periodic_points(const TransitionStructure& ts, int n);

/// trace(M^n) in integer arithmetic.
std::uint64_t trace_power(const TransitionStructure& ts, int n);

/// Average over points and cyclic offsets of the indicator that c occurs.
double empirical_cylinder_frequency(std::span<const Word> points, const Cylinder& c);

/// All binary words of a given length in lexicographic order.
std::vector<Word> all_words(std::size_t length);

/// CSV row p00,p01,p10,p11 (with header when requested).
void write_matrix_csv(std::ostream& out, const MarkovMatrix& m, bool header = true);
/// CSV word,measure over all words of length 1..max_len.
void write_cylinder_table_csv(std::ostream& out, const MarkovMatrix& m, std::size_t max_len);

}  // namespace traffic
