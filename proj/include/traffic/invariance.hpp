#pragma once

// Exact one-step pushforward of a Markov measure under the v = 1, r = 1/2
// lattice dynamics, and the resulting stationarity verdicts.

#include <cstddef>
#include <functional>
#include <iosfwd>
#include <span>
#include <string>
#include <vector>

#include "traffic/markov.hpp"

namespace traffic {

/// mu'(A): probability that the cylinder A is seen one step after sampling
/// from the Markov measure m, for movement probability p.
///
/// Evaluated by a transfer recursion over the window of |A| + 2 sites
/// around A: post-site k depends on its two time-t neighbours and on the
/// coins of the particles at k-1 and k.
double one_step_cylinder_pushforward(const MarkovMatrix& m, const Cylinder& a, double p);

struct CylinderComparison {
  std::string word;
  double mu = 0.0;
  double mu_pushed = 0.0;
  double abs_err = 0.0;
};

struct PushforwardReport {
  std::vector<CylinderComparison> cylinders;  // all words of length 1..max_len
  /// Sum of mu' over words of each length (index n-1).
  std::vector<double> mass_by_length;
  double max_discrepancy = 0.0;
  std::string worst_cylinder;
  double tolerance = 0.0;
  bool stationary = false;
};

/// Compares mu and mu' on every cylinder of length <= max_len (1..12).
PushforwardReport verify_invariance(const MarkovMatrix& m, double p, std::size_t max_len,
                                    double tol = 1e-10);

/// Report CSV: cylinder,mu,mu_pushed,abs_err followed by a summary comment line.
void write_invariance_csv(std::ostream& out, const PushforwardReport& report);

using MeasureEvaluator = std::function<double(std::span<const std::uint8_t>)>;

struct MarkovIdentityReport {
  double max_residual = 0.0;
  std::string worst;  // "A|b|C" of the largest residual
  std::size_t checked = 0;
};

/// Residuals of mu([b]) mu([AbC]) - mu([Ab]) mu([bC]) over b in {0,1} and
/// all words A, C of length 0..max_len.
MarkovIdentityReport markov_identity_check(const MeasureEvaluator& mu, std::size_t max_len = 3);

}  // namespace traffic
