#include "mmbeam/array_channel.hpp"

#include "json.hpp"

#include <cmath>
#include <numbers>
#include <stdexcept>

#include "mmbeam/rng.hpp"

namespace mmbeam {

namespace {
constexpr double kDegToRad = std::numbers::pi / 180.0;
using json = nlohmann::ordered_json;
}  // namespace

void ArrayGeometry::validate() const {
  if (n_elements < 2)
    throw std::invalid_argument("ArrayGeometry: n_elements must be >= 2");
  if (!(spacing_over_wavelength > 0.0) || !std::isfinite(spacing_over_wavelength))
    throw std::invalid_argument("ArrayGeometry: spacing_over_wavelength must be > 0");
}

ImpairmentVector ImpairmentVector::identity(int n_elements) {
  ImpairmentVector out;
  out.e = Eigen::VectorXcd::Ones(n_elements);
  out.config = ImpairmentConfig{0.0, 0.0, 0};
  return out;
}

Eigen::VectorXcd array_response(const ArrayGeometry& geometry, double angle_deg) {
  geometry.validate();
  if (!(angle_deg > -90.0 && angle_deg < 90.0))
    throw std::domain_error("array_response: angle must lie in (-90, 90) deg");

  const double phase_step = 2.0 * std::numbers::pi *
                            geometry.spacing_over_wavelength *
                            std::sin(angle_deg * kDegToRad);
  Eigen::VectorXcd a(geometry.n_elements);
  for (int n = 0; n < geometry.n_elements; ++n)
    a(n) = std::polar(1.0, phase_step * n);
  return a;
}

ImpairmentVector draw_impairment(const ImpairmentConfig& config,
                                 const ArrayGeometry& geometry) {
  geometry.validate();
  if (config.gain_std_db < 0.0 || config.phase_std_deg < 0.0)
    throw std::invalid_argument("draw_impairment: stds must be nonnegative");

  Rng rng(config.seed);
  ImpairmentVector out;
  out.config = config;
  out.e.resize(geometry.n_elements);
  for (int n = 0; n < geometry.n_elements; ++n) {
    const double gain_db = config.gain_std_db * rng.normal();
    const double phase = config.phase_std_deg * kDegToRad * rng.normal();
    out.e(n) = std::polar(std::pow(10.0, gain_db / 20.0), phase);
  }
  return out;
}

Awv apply_impairment(const ImpairmentVector& e, const Awv& w) {
  if (e.e.size() != w.size())
    throw std::invalid_argument("apply_impairment: length mismatch");
  return e.e.cwiseProduct(w);
}

ChannelRealization make_channel(double aoa_deg, std::complex<double> alpha) {
  if (std::abs(alpha) <= 0.0)
    throw std::invalid_argument("make_channel: |alpha| must be > 0");
  return ChannelRealization{aoa_deg, alpha};
}

Eigen::VectorXcd channel_vector(const ChannelRealization& channel,
                                const ArrayGeometry& geometry) {
  return channel.alpha * array_response(geometry, channel.aoa_deg);
}

Eigen::VectorXd beam_pattern(const Awv& w_tilde, const ArrayGeometry& geometry,
                             const Eigen::VectorXd& angles_deg) {
  if (angles_deg.size() == 0)
    throw std::invalid_argument("beam_pattern: empty angle grid");
  Eigen::VectorXd pattern(angles_deg.size());
  for (Eigen::Index i = 0; i < angles_deg.size(); ++i) {
    const std::complex<double> response =
        w_tilde.dot(array_response(geometry, angles_deg(i)));
    pattern(i) = std::norm(response);
  }
  return pattern;
}

std::string impairment_to_json(const ImpairmentVector& impairment) {
  json j;
  j["config"] = {{"gain_std_db", impairment.config.gain_std_db},
                 {"phase_std_deg", impairment.config.phase_std_deg},
                 {"seed", impairment.config.seed}};
  json e = json::array();
  for (Eigen::Index n = 0; n < impairment.e.size(); ++n)
    e.push_back({impairment.e(n).real(), impairment.e(n).imag()});
  j["e"] = std::move(e);
  return j.dump();
}

ImpairmentVector impairment_from_json(const std::string& text) {
  const json j = json::parse(text);
  ImpairmentVector out;
  out.config.gain_std_db = j.at("config").at("gain_std_db").get<double>();
  out.config.phase_std_deg = j.at("config").at("phase_std_deg").get<double>();
  out.config.seed = j.at("config").at("seed").get<std::uint64_t>();
  const auto& e = j.at("e");
  out.e.resize(static_cast<Eigen::Index>(e.size()));
  for (std::size_t n = 0; n < e.size(); ++n)
    out.e(static_cast<Eigen::Index>(n)) =
        std::complex<double>(e[n].at(0).get<double>(), e[n].at(1).get<double>());
  return out;
}

}  // namespace mmbeam
