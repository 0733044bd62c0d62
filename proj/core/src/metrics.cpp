#include "mmbeam/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace mmbeam {

double bf_gain(const Eigen::VectorXcd& h, const ImpairmentVector& e, const Awv& w) {
  if (h.size() != w.size() || h.size() != e.e.size())
    throw std::invalid_argument("bf_gain: length mismatch");
  const double h_energy = h.squaredNorm();
  if (!(h_energy > 0.0)) throw std::invalid_argument("bf_gain: zero channel");
  return std::norm(h.dot(e.e.cwiseProduct(w))) / h_energy;
}

AlignmentResult make_alignment_result(const Eigen::VectorXcd& h,
                                      const ImpairmentVector& e,
                                      const Codebook& directional,
                                      int predicted, int reference) {
  if (predicted < 0 || predicted >= directional.size() || reference < 0 ||
      reference >= directional.size())
    throw std::invalid_argument("make_alignment_result: beam index out of range");
  AlignmentResult r;
  r.predicted = predicted;
  r.reference = reference;
  r.gain_pred = bf_gain(h, e, directional.codewords[predicted]);
  r.gain_ref = bf_gain(h, e, directional.codewords[reference]);
  if (!(r.gain_ref > 0.0))
    throw std::invalid_argument("make_alignment_result: reference gain is zero");
  r.loss_db = std::max(0.0, 10.0 * std::log10(r.gain_ref / r.gain_pred));
  return r;
}

double accuracy(const std::vector<int>& predictions,
                const std::vector<int>& references) {
  if (predictions.size() != references.size() || predictions.empty())
    throw std::invalid_argument("accuracy: need equal, nonzero lengths");
  long hits = 0;
  for (std::size_t i = 0; i < predictions.size(); ++i)
    if (predictions[i] == references[i]) ++hits;
  return static_cast<double>(hits) / static_cast<double>(predictions.size());
}

double gain_loss_percentile(std::vector<double> losses_db, double q) {
  if (losses_db.empty())
    throw std::invalid_argument("gain_loss_percentile: empty input");
  if (q < 0.0 || q > 100.0)
    throw std::invalid_argument("gain_loss_percentile: q must lie in [0, 100]");
  std::sort(losses_db.begin(), losses_db.end());
  const double n = static_cast<double>(losses_db.size());
  // Small guard so integral q*n/100 is not pushed up by binary rounding.
  const auto idx = static_cast<long>(std::ceil(q * n / 100.0 - 1e-9));
  const long clamped = std::clamp(idx, 0L, static_cast<long>(losses_db.size()) - 1);
  return losses_db[static_cast<std::size_t>(clamped)];
}

std::optional<int> required_m(const std::map<int, std::vector<double>>& losses_by_m,
                              double threshold_db, double coverage) {
  if (losses_by_m.empty())
    throw std::invalid_argument("required_m: empty map");
  for (const auto& [m, losses] : losses_by_m) {
    if (losses.empty()) continue;
    long below = 0;
    for (double v : losses)
      if (v < threshold_db) ++below;
    if (static_cast<double>(below) >= coverage * static_cast<double>(losses.size()))
      return m;
  }
  return std::nullopt;
}

double overhead_reduction(int k, int m) {
  if (k <= 0 || m < 0 || m > k)
    throw std::invalid_argument("overhead_reduction: need 0 <= M <= K, K > 0");
  return static_cast<double>(k - m) / static_cast<double>(k);
}

}  // namespace mmbeam
