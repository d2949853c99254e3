#include "traffic/markov.hpp"

#include <cmath>
#include <ostream>
#include <random>

#include "traffic/config.hpp"

namespace traffic {

namespace {

constexpr double kRowTol = 1e-12;

using Mat2 = std::array<double, 4>;

Mat2 multiply(const Mat2& x, const Mat2& y) {
  return {x[0] * y[0] + x[1] * y[2], x[0] * y[1] + x[1] * y[3],
          x[2] * y[0] + x[3] * y[2], x[2] * y[1] + x[3] * y[3]};
}

double unit_uniform(std::mt19937_64& rng) { return static_cast<double>(rng() >> 11) * 0x1.0p-53; }

}  // namespace

Cylinder::Cylinder(Word letters) : letters_(std::move(letters)) {
  if (letters_.empty()) throw DomainError("cylinder base must be nonempty");
  for (auto b : letters_)
    if (b > 1) throw DomainError("cylinder letters must be 0 or 1");
}

Cylinder::Cylinder(const std::string& text) : Cylinder(word_from_string(text)) {}

std::string Cylinder::str() const { return word_to_string(letters_); }

std::array<double, 2> stationary_vector(double p01, double p10) {
  const double total = p01 + p10;
  if (!(total > 0.0)) throw DomainError("reducible matrix: p01 = p10 = 0 has no unique stationary vector");
  return {p10 / total, p01 / total};
}

MarkovMatrix MarkovMatrix::from_entries(double p00, double p01, double p10, double p11) {
  for (double e : {p00, p01, p10, p11})
    if (!(e >= 0.0 && e <= 1.0)) throw DomainError("matrix entries must lie in [0, 1]");
  if (std::abs(p00 + p01 - 1.0) > kRowTol || std::abs(p10 + p11 - 1.0) > kRowTol)
    throw DomainError("matrix rows must sum to 1");
  MarkovMatrix m;
  m.entries_ = {p00, p01, p10, p11};
  const auto s = stationary_vector(p01, p10);
  m.stationary_ = {s[0], s[1]};
  return m;
}

double MarkovMatrix::invariance_residual(double p) const noexcept {
  return std::abs(p00() * p11() - (1.0 - p) * p10() * p01());
}

TransitionStructure TransitionStructure::from_matrix(std::array<int, 4> m) {
  for (int e : m)
    if (e != 0 && e != 1) throw DomainError("transition structure entries must be 0 or 1");
  if (m[1] == 0 || m[2] == 0) throw DomainError("transition structure is reducible");
  TransitionStructure ts;
  ts.m = m;
  const double tr = m[0] + m[3];
  const double det = static_cast<double>(m[0] * m[3] - m[1] * m[2]);
  ts.lambda = 0.5 * (tr + std::sqrt(tr * tr - 4.0 * det));
  // Row 0 of (M - lambda) m = 0 with m_01 = 1: m_1 = (lambda - M_00) m_0.
  const double m0 = 1.0;
  const double m1 = (ts.lambda - m[0]) * m0 / m[1];
  ts.eigenvector = {m0 / (m0 + m1), m1 / (m0 + m1)};
  return ts;
}

TransitionStructure TransitionStructure::plus() { return from_matrix({1, 1, 1, 0}); }
TransitionStructure TransitionStructure::minus() { return from_matrix({0, 1, 1, 1}); }
TransitionStructure TransitionStructure::full() { return from_matrix({1, 1, 1, 1}); }

double solve_parameter(double rho, double p) {
  if (!(rho > 0.0 && rho < 1.0)) throw DomainError("density must lie in (0, 1)");
  if (!(p > 0.0 && p <= 1.0)) throw DomainError("p must lie in (0, 1]");
  const double disc = 1.0 - 4.0 * p * rho * (1.0 - rho);
  // Rationalised form of (1 - sqrt(disc)) / (2 p (1 - rho)); no cancellation as rho -> 0.
  return 2.0 * rho / (1.0 + std::sqrt(std::max(disc, 0.0)));
}

MarkovMatrix build_invariant_matrix(double rho, double p) {
  if (!(rho > 0.0 && rho < 1.0)) throw DomainError("density must lie in (0, 1)");
  if (!(p > 0.0 && p <= 1.0)) throw DomainError("p must lie in (0, 1]");
  MarkovMatrix m;
  if (p < 1.0) {
    const double a = solve_parameter(rho, p);
    const double p10 = (1.0 - a) / (1.0 - p * a);
    m = MarkovMatrix::from_entries(1.0 - a, a, p10, 1.0 - p10);
  } else if (rho < 0.5) {
    const double a = rho / (1.0 - rho);
    m = MarkovMatrix::from_entries(1.0 - a, a, 1.0, 0.0);
  } else {
    const double b = (1.0 - rho) / rho;
    m = MarkovMatrix::from_entries(0.0, 1.0, b, 1.0 - b);
  }
  m.built_for_p_ = p;
  m.invariant_family_ = true;
  return m;
}

double cylinder_measure(const MarkovMatrix& m, std::span<const std::uint8_t> word) {
  if (word.empty()) return 1.0;
  double mu = m.stationary(word[0]);
  for (std::size_t i = 1; i < word.size(); ++i) mu *= m(word[i - 1], word[i]);
  return mu;
}

double cylinder_measure(const MarkovMatrix& m, const Cylinder& c) {
  return cylinder_measure(m, std::span<const std::uint8_t>(c.letters()));
}

Word sample_ring_word(const MarkovMatrix& m, std::size_t sites, std::uint64_t seed) {
  if (sites < 2) throw DomainError("ring sampling needs at least 2 sites");
  // powers[k] = P^k
  std::vector<Mat2> powers(sites + 1);
  powers[0] = {1.0, 0.0, 0.0, 1.0};
  for (std::size_t k = 1; k <= sites; ++k) powers[k] = multiply(powers[k - 1], m.entries());
  const Mat2& full = powers[sites];
  const double trace = full[0] + full[3];
  if (!(trace > 0.0)) throw DomainError("matrix gives zero weight to every ring word of this length");

  std::mt19937_64 rng(seed);
  Word word(sites);
  const int s = unit_uniform(rng) * trace < full[0] ? 0 : 1;
  word[0] = static_cast<std::uint8_t>(s);
  for (std::size_t k = 1; k < sites; ++k) {
    const int prev = word[k - 1];
    const Mat2& rest = powers[sites - k];
    // Weight of letter b: p_{prev,b} * (P^{N-k})_{b,s}, closing the cycle back to w_0.
    const double w0 = m(prev, 0) * rest[0 * 2 + s];
    const double w1 = m(prev, 1) * rest[1 * 2 + s];
    word[k] = static_cast<std::uint8_t>(unit_uniform(rng) * (w0 + w1) < w0 ? 0 : 1);
  }
  return word;
}

Word sample_ring_word_with_count(const MarkovMatrix& m, std::size_t sites, std::size_t ones,
                                 std::uint64_t seed) {
  if (ones > sites) throw DomainError("more particles than sites");
  constexpr int kMaxTries = 200000;
  std::mt19937_64 seeds(seed);
  for (int attempt = 0; attempt < kMaxTries; ++attempt) {
    Word w = sample_ring_word(m, sites, seeds());
    std::size_t count = 0;
    for (auto b : w) count += b;
    if (count == ones) return w;
  }
  throw DomainError("could not draw a ring word with the requested particle count");
}

MarkovMatrix parry_matrix(const TransitionStructure& ts) {
  if (ts.m[1] == 0 || ts.m[2] == 0) throw DomainError("Parry matrix needs an irreducible structure");
  std::array<double, 4> p{};
  for (int i = 0; i < 2; ++i)
    for (int j = 0; j < 2; ++j)
      p[2 * i + j] = ts.m[2 * i + j] * ts.eigenvector[j] / (ts.lambda * ts.eigenvector[i]);
  // Renormalise rows against rounding before validation.
  for (int i = 0; i < 2; ++i) {
    const double row = p[2 * i] + p[2 * i + 1];
    p[2 * i] /= row;
    p[2 * i + 1] /= row;
  }
  return MarkovMatrix::from_entries(p[0], p[1], p[2], p[3]);
}

PeriodicPoints periodic_points(const TransitionStructure& ts, int n) {
  if (n < 1 || n > 24) throw DomainError("period must lie in [1, 24]");
  PeriodicPoints out;
  const std::uint32_t total = 1u << n;
  Word w(static_cast<std::size_t>(n));
  for (std::uint32_t code = 0; code < total; ++code) {
    for (int k = 0; k < n; ++k) w[k] = static_cast<std::uint8_t>((code >> (n - 1 - k)) & 1u);
    bool ok = true;
    for (int k = 0; k < n && ok; ++k) ok = ts.allows(w[k], w[(k + 1) % n]);
    if (ok) out.points.push_back(w);
  }
  out.count = out.points.size();
  return out;
}

std::uint64_t trace_power(const TransitionStructure& ts, int n) {
  if (n < 1) throw DomainError("power must be positive");
  std::array<std::uint64_t, 4> acc{1, 0, 0, 1};
  const std::array<std::uint64_t, 4> base{static_cast<std::uint64_t>(ts.m[0]), static_cast<std::uint64_t>(ts.m[1]),
                                          static_cast<std::uint64_t>(ts.m[2]), static_cast<std::uint64_t>(ts.m[3])};
  for (int k = 0; k < n; ++k)
    acc = {acc[0] * base[0] + acc[1] * base[2], acc[0] * base[1] + acc[1] * base[3],
           acc[2] * base[0] + acc[3] * base[2], acc[2] * base[1] + acc[3] * base[3]};
  return acc[0] + acc[3];
}

double empirical_cylinder_frequency(std::span<const Word> points, const Cylinder& c) {
  if (points.empty()) throw DomainError("no periodic points given");
  std::size_t hits = 0;
  std::size_t trials = 0;
  for (const auto& w : points) {
    const std::size_t n = w.size();
    if (c.size() > n) throw DomainError("cylinder longer than the period");
    for (std::size_t o = 0; o < n; ++o) {
      bool match = true;
      for (std::size_t j = 0; j < c.size() && match; ++j) match = w[(o + j) % n] == c[j];
      hits += match ? 1 : 0;
    }
    trials += n;
  }
  return static_cast<double>(hits) / static_cast<double>(trials);
}

std::vector<Word> all_words(std::size_t length) {
  std::vector<Word> out;
  const std::size_t total = std::size_t{1} << length;
  out.reserve(total);
  for (std::size_t code = 0; code < total; ++code) {
    Word w(length);
    for (std::size_t k = 0; k < length; ++k) w[k] = static_cast<std::uint8_t>((code >> (length - 1 - k)) & 1u);
    out.push_back(std::move(w));
  }
  return out;
}

void write_matrix_csv(std::ostream& out, const MarkovMatrix& m, bool header) {
  out.precision(17);
  if (header) out << "p00,p01,p10,p11\n";
  out << m.p00() << ',' << m.p01() << ',' << m.p10() << ',' << m.p11() << '\n';
}

void write_cylinder_table_csv(std::ostream& out, const MarkovMatrix& m, std::size_t max_len) {
  out.precision(17);
  out << "word,measure\n";
  for (std::size_t n = 1; n <= max_len; ++n)
    for (const auto& w : all_words(n)) out << word_to_string(w) << ',' << cylinder_measure(m, w) << '\n';
}

}  // namespace traffic
