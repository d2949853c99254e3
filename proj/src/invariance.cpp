#include "traffic/invariance.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <ostream>

#include "traffic/config.hpp"

namespace traffic {

double one_step_cylinder_pushforward(const MarkovMatrix& m, const Cylinder& a, double p) {
  if (!(p >= 0.0 && p <= 1.0)) throw DomainError("p must lie in [0, 1]");
  const std::size_t n = a.size();
  const double coin_prob[2] = {1.0 - p, p};  // [fail, success]

  // Window sites 0..n+1, target sites 1..n. State before deciding target
  // site k: (w_{k-1}, c_{k-1}, w_k), indexed 4 w_{k-1} + 2 c_{k-1} + w_k.
  std::array<double, 8> state{};
  for (int w0 = 0; w0 < 2; ++w0)
    for (int c0 = 0; c0 < 2; ++c0)
      for (int w1 = 0; w1 < 2; ++w1)
        state[4 * w0 + 2 * c0 + w1] = m.stationary(w0) * m(w0, w1) * coin_prob[c0];

  for (std::size_t k = 1; k <= n; ++k) {
    std::array<double, 8> next{};
    const int target = a[k - 1];
    for (int s = 0; s < 8; ++s) {
      const double weight = state[s];
      if (weight == 0.0) continue;
      const int left = s >> 2;
      const int left_coin = (s >> 1) & 1;
      const int here = s & 1;
      for (int right = 0; right < 2; ++right) {
        const double wr = weight * m(here, right);
        if (wr == 0.0) continue;
        for (int coin = 0; coin < 2; ++coin) {
          // A particle stays if blocked or its coin fails; an empty site is
          // filled if its left neighbour jumps.
          const int occupied = here ? (right == 1 || coin == 0) : (left == 1 && left_coin == 1);
          if (occupied != target) continue;
          next[4 * here + 2 * coin + right] += wr * coin_prob[coin];
        }
      }
    }
    state = next;
  }
  double total = 0.0;
  for (double w : state) total += w;
  return total;
}

PushforwardReport verify_invariance(const MarkovMatrix& m, double p, std::size_t max_len, double tol) {
  if (max_len < 1 || max_len > 12) throw DomainError("cylinder length bound must lie in [1, 12]");
  PushforwardReport report;
  report.tolerance = tol;
  for (std::size_t len = 1; len <= max_len; ++len) {
    double mass = 0.0;
    for (auto& w : all_words(len)) {
      const Cylinder c(std::move(w));
      CylinderComparison row;
      row.word = c.str();
      row.mu = cylinder_measure(m, c);
      row.mu_pushed = one_step_cylinder_pushforward(m, c, p);
      row.abs_err = std::abs(row.mu - row.mu_pushed);
      mass += row.mu_pushed;
      if (report.worst_cylinder.empty() || row.abs_err > report.max_discrepancy) {
        report.max_discrepancy = row.abs_err;
        report.worst_cylinder = row.word;
      }
      report.cylinders.push_back(std::move(row));
    }
    report.mass_by_length.push_back(mass);
  }
  report.stationary = report.max_discrepancy <= tol;
  return report;
}

void write_invariance_csv(std::ostream& out, const PushforwardReport& report) {
  out.precision(17);
  out << "cylinder,mu,mu_pushed,abs_err\n";
  for (const auto& row : report.cylinders)
    out << row.word << ',' << row.mu << ',' << row.mu_pushed << ',' << row.abs_err << '\n';
  out << "# max_abs_err=" << report.max_discrepancy << " worst=" << report.worst_cylinder
      << " tol=" << report.tolerance << " verdict=" << (report.stationary ? "stationary" : "non-stationary")
      << '\n';
}

MarkovIdentityReport markov_identity_check(const MeasureEvaluator& mu, std::size_t max_len) {
  MarkovIdentityReport report;
  std::vector<Word> words;
  for (std::size_t len = 0; len <= max_len; ++len)
    for (auto& w : all_words(len)) words.push_back(std::move(w));
  for (std::uint8_t b = 0; b < 2; ++b) {
    const Word single{b};
    const double mu_b = mu(single);
    for (const auto& left : words) {
      Word ab = left;
      ab.push_back(b);
      const double mu_ab = mu(ab);
      for (const auto& right : words) {
        Word bc{b};
        bc.insert(bc.end(), right.begin(), right.end());
        Word abc = ab;
        abc.insert(abc.end(), right.begin(), right.end());
        const double residual = std::abs(mu_b * mu(abc) - mu_ab * mu(bc));
        ++report.checked;
        if (report.worst.empty() || residual > report.max_residual) {
          report.max_residual = residual;
          report.worst = word_to_string(left) + "|" + std::to_string(b) + "|" + word_to_string(right);
        }
      }
    }
  }
  return report;
}

}  // namespace traffic
