#pragma once

#include <map>
#include <optional>
#include <vector>

#include "mmbeam/array_channel.hpp"
#include "mmbeam/codebooks.hpp"

namespace mmbeam {

// Predicted vs exhaustive-reference beam for one alignment, with normalized
// gains and the dB loss (clamped at 0; a noisy reference sweep can
// occasionally lose to the prediction).
struct AlignmentResult {
  int predicted = 0;
  int reference = 0;
  double gain_pred = 0.0;
  double gain_ref = 0.0;
  double loss_db = 0.0;
};

// Normalized post-alignment combining gain |h^H diag(e) w|^2 / ||h||^2.
// With identity impairment and unit-norm w this lies in [0, 1], with equality
// iff w steers exactly along h.
double bf_gain(const Eigen::VectorXcd& h, const ImpairmentVector& e, const Awv& w);

AlignmentResult make_alignment_result(const Eigen::VectorXcd& h,
                                      const ImpairmentVector& e,
                                      const Codebook& directional,
                                      int predicted, int reference);

// Fraction of exact index matches.
double accuracy(const std::vector<int>& predictions,
                const std::vector<int>& references);

// Nearest-rank percentile: sorted ascending, zero-based index
// ceil(q * n / 100), clamped to the last element.
double gain_loss_percentile(std::vector<double> losses_db, double q);

// Smallest M whose loss distribution has >= coverage fraction strictly below
// threshold_db; nullopt when no M qualifies.
std::optional<int> required_m(const std::map<int, std::vector<double>>& losses_by_m,
                              double threshold_db = 2.0, double coverage = 0.9);

// (K - M) / K.
double overhead_reduction(int k, int m);

}  // namespace mmbeam
