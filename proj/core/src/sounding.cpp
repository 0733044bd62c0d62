#include "mmbeam/sounding.hpp"

#include <cmath>
#include <stdexcept>

namespace mmbeam {

std::complex<double> coherent_symbol(const Awv& w, const Eigen::VectorXcd& h,
                                     double sigma_n, Rng& rng) {
  if (w.size() != h.size())
    throw std::invalid_argument("coherent_symbol: length mismatch");
  if (sigma_n < 0.0)
    throw std::invalid_argument("coherent_symbol: sigma_n must be >= 0");

  const std::complex<double> y = w.dot(h);
  if (sigma_n == 0.0) return y;
  const double s = sigma_n / std::sqrt(2.0);
  return y + std::complex<double>(s * rng.normal(), s * rng.normal());
}

double rss_measure(const Awv& w_tilde, const Eigen::VectorXcd& h,
                   double sigma_rss, Rng& rng, long* clamp_count) {
  if (w_tilde.size() != h.size())
    throw std::invalid_argument("rss_measure: length mismatch");
  if (sigma_rss < 0.0)
    throw std::invalid_argument("rss_measure: sigma_rss must be >= 0");

  const double magnitude = std::abs(w_tilde.dot(h));
  if (sigma_rss == 0.0) return magnitude;
  const double noisy = magnitude + sigma_rss * rng.normal();
  if (noisy < 0.0) {
    if (clamp_count) ++*clamp_count;
    return 0.0;
  }
  return noisy;
}

Eigen::VectorXd sound_codebook(const Codebook& codebook,
                               const ImpairmentVector& e,
                               const Eigen::VectorXcd& h, double sigma_rss,
                               Rng& rng, long* clamp_count) {
  Eigen::VectorXd rss(codebook.size());
  for (int m = 0; m < codebook.size(); ++m)
    rss(m) = rss_measure(apply_impairment(e, codebook.codewords[m]), h,
                         sigma_rss, rng, clamp_count);
  return rss;
}

double sigma_from_rss_snr(const Eigen::VectorXcd& h, const Codebook& codebook,
                          const ImpairmentVector& e, double rss_snr_db) {
  if (codebook.size() == 0)
    throw std::invalid_argument("sigma_from_rss_snr: empty codebook");

  double mean_sq = 0.0;
  for (int m = 0; m < codebook.size(); ++m) {
    const double v = std::abs(apply_impairment(e, codebook.codewords[m]).dot(h));
    mean_sq += v * v;
  }
  mean_sq /= codebook.size();
  if (!(mean_sq > 0.0))
    throw std::invalid_argument("sigma_from_rss_snr: zero-energy channel");
  return std::sqrt(mean_sq / std::pow(10.0, rss_snr_db / 10.0));
}

}  // namespace mmbeam
