#pragma once

#include <Eigen/Dense>
#include <complex>
#include <cstdint>
#include <string>

namespace mmbeam {

// One analog beam: complex per-element weights of the receive array.
using Awv = Eigen::VectorXcd;

struct ArrayGeometry {
  int n_elements = 36;
  double spacing_over_wavelength = 0.5;

  // Throws std::invalid_argument on n_elements < 2 or non-positive spacing.
  void validate() const;
};

struct ImpairmentConfig {
  double gain_std_db = 1.0;
  double phase_std_deg = 30.0;
  std::uint64_t seed = 0;
};

// Per-element multiplicative gain/phase error of a physical array. The
// generating config is carried along for provenance.
struct ImpairmentVector {
  Eigen::VectorXcd e;
  ImpairmentConfig config;

  static ImpairmentVector identity(int n_elements);
};

// Single-path channel: true azimuth AoA plus the post-Tx-beam complex gain.
struct ChannelRealization {
  double aoa_deg = 0.0;
  std::complex<double> alpha{1.0, 0.0};
};

// ULA response a(angle); element n (1-based) is
// exp(j*2*pi*(n-1)*(d/lambda)*sin(angle)). Angle must lie in (-90, 90) deg.
Eigen::VectorXcd array_response(const ArrayGeometry& geometry, double angle_deg);

// Independent per-element log-normal gain (std in dB) and Gaussian phase
// (std in degrees). Zero stds give the identity vector. Deterministic in
// config.seed.
ImpairmentVector draw_impairment(const ImpairmentConfig& config,
                                 const ArrayGeometry& geometry);

// Elementwise product diag(e) * w.
Awv apply_impairment(const ImpairmentVector& e, const Awv& w);

ChannelRealization make_channel(double aoa_deg, std::complex<double> alpha);

// alpha * a(aoa); norm is |alpha| * sqrt(N).
Eigen::VectorXcd channel_vector(const ChannelRealization& channel,
                                const ArrayGeometry& geometry);

// Magnitude-squared response |w~^H a(theta_i)|^2 over an angle grid.
Eigen::VectorXd beam_pattern(const Awv& w_tilde, const ArrayGeometry& geometry,
                             const Eigen::VectorXd& angles_deg);

// JSON with e as [re, im] pairs and the generating config embedded.
std::string impairment_to_json(const ImpairmentVector& impairment);
ImpairmentVector impairment_from_json(const std::string& text);

}  // namespace mmbeam
