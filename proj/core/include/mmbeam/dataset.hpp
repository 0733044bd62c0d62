#pragma once

#include <cstdint>
#include <string>
#include <utility>
#include <vector>

#include "mmbeam/array_channel.hpp"
#include "mmbeam/codebooks.hpp"

namespace mmbeam {

// One alignment capture: exhaustive DFT sweep RSS (label source), PN sounding
// RSS (features), the true AoA, and the session SNR tag. `label` is a dense
// index into the dataset's label_map.
struct DataPoint {
  double aoa_true_deg = 0.0;
  Eigen::VectorXd dft_rss;
  Eigen::VectorXd pn_rss;
  int label = 0;
  double snr_tag_db = 0.0;
};

// Everything needed to rebuild the generating codebooks and impairment.
struct DatasetMeta {
  ArrayGeometry geometry;
  int k = 64;
  int m0 = 36;
  double angle_min_deg = -45.0;
  double angle_max_deg = 45.0;
  std::uint64_t pn_seed = 0;
  ImpairmentVector impairment;
  double rss_snr_db = 20.0;
  double sigma_rss = 0.0;
  double aoa_min_deg = -45.0;
  double aoa_max_deg = 45.0;
  std::uint64_t seed = 0;
  long clamp_events = 0;

  Codebook dft() const;
  Codebook pn() const;
};

struct Dataset {
  std::vector<DataPoint> points;
  DatasetMeta meta;
  // label_map[dense] = original DFT beam index; identity before filtering.
  std::vector<int> label_map;

  int n_labels() const { return static_cast<int>(label_map.size()); }
};

struct GenConfig {
  int n_points = 2000;
  double aoa_min_deg = -45.0;
  double aoa_max_deg = 45.0;
  int k = 64;
  int m0 = 36;
  int n_rx = 36;
  double spacing_over_wavelength = 0.5;
  double angle_min_deg = -45.0;
  double angle_max_deg = 45.0;
  ImpairmentConfig impairment;
  double rss_snr_db = 20.0;
  std::uint64_t seed = 0;
};

// PN codebook seed used by generate_dataset for a given dataset seed.
std::uint64_t derive_pn_seed(std::uint64_t dataset_seed);

// Synthetic learning-stage capture: per point, AoA ~ Uniform(aoa range),
// |alpha| = 1 with uniform random phase, one impairment vector for the whole
// dataset, RSS over the concatenated codebook, label = argmax of the DFT
// sweep. The RSS noise sigma is calibrated over the whole dataset so that
// mean |w~^H h|^2 / sigma^2 matches rss_snr_db.
Dataset generate_dataset(const GenConfig& config);

// Argmax index; ties broken toward the lowest index.
int assign_label(const Eigen::VectorXd& dft_rss);

// Drops points whose label occurs fewer than min_count times and re-indexes
// the surviving labels densely, composing label_map.
Dataset filter_labels(const Dataset& dataset, int min_count);

// Disjoint, exhaustive, label-stratified random split. Per-label train counts
// come from a largest-remainder allocation of round(fraction * n) slots, so
// per-label proportions stay within one point of the global fraction.
std::pair<Dataset, Dataset> split(const Dataset& dataset, double train_fraction,
                                  std::uint64_t seed);

// Prefix of pn_rss of length M (1 <= M <= M0); never reorders.
Eigen::VectorXd truncate_features(const DataPoint& point, int m);

// Row i = truncate_features(points[i], m); raw linear RSS, no normalization.
Eigen::MatrixXd feature_matrix(const Dataset& dataset, int m);

std::vector<int> labels_of(const Dataset& dataset);

// JSON-lines: a header record with metadata and label_map, then one point per
// line. Loading re-validates vector lengths and the label/argmax invariant.
void save_dataset(const Dataset& dataset, const std::string& path);
Dataset load_dataset(const std::string& path);

std::string dataset_to_jsonl(const Dataset& dataset);
Dataset dataset_from_jsonl(const std::string& text);

}  // namespace mmbeam
