#pragma once

#include <complex>
#include <cstdint>

#include "mmbeam/array_channel.hpp"
#include "mmbeam/codebooks.hpp"
#include "mmbeam/rng.hpp"

namespace mmbeam {

struct SoundingConfig {
  double rss_snr_db = 20.0;
  std::uint64_t seed = 0;
};

// Coherent received symbol w^H h + n with circularly-symmetric complex
// Gaussian noise of total variance sigma_n^2.
std::complex<double> coherent_symbol(const Awv& w, const Eigen::VectorXcd& h,
                                     double sigma_n, Rng& rng);

// Noncoherent probe max(0, |w~^H h| + n), n ~ Normal(0, sigma_rss^2).
// Increments *clamp_count when the additive noise drives the value negative.
double rss_measure(const Awv& w_tilde, const Eigen::VectorXcd& h,
                   double sigma_rss, Rng& rng, long* clamp_count = nullptr);

// One RSS per codeword, in codebook order, each probed through the impaired
// combiner diag(e) * w_m. No adaptation between probes.
Eigen::VectorXd sound_codebook(const Codebook& codebook,
                               const ImpairmentVector& e,
                               const Eigen::VectorXcd& h, double sigma_rss,
                               Rng& rng, long* clamp_count = nullptr);

// sigma such that mean_m(|w~_m^H h|^2) / sigma^2 = 10^(rss_snr_db/10).
double sigma_from_rss_snr(const Eigen::VectorXcd& h, const Codebook& codebook,
                          const ImpairmentVector& e, double rss_snr_db);

}  // namespace mmbeam
