#pragma once

#include <string>
#include <vector>

#include "mmbeam/codebooks.hpp"
#include "mmbeam/dataset.hpp"

namespace mmbeam {

enum class DictionarySource { model, estimated };

// Nonnegative M x K' matrix of sounding-beam response magnitudes over the AoA
// hypothesis grid; entry (m, k) approximates |w~_m^H a(theta_k)|.
struct MagnitudeDictionary {
  Eigen::MatrixXd values;
  DictionarySource source = DictionarySource::model;

  int n_measurements() const { return static_cast<int>(values.rows()); }
  int n_beams() const { return static_cast<int>(values.cols()); }
  void validate() const;
};

// Argmax of the exhaustive DFT sweep; the reference beam for gain-loss
// metrics. Ties break toward the lowest index.
int exhaustive_select(const Eigen::VectorXd& dft_rss);

// Impairment-free dictionary |w_m^H a(theta_k)| from the first M ideal PN
// codewords; what vanilla RSS-MP assumes about the hardware.
MagnitudeDictionary model_dictionary(const Codebook& pn, int m,
                                     const std::vector<double>& dft_angles_deg,
                                     const ArrayGeometry& geometry);

// Data-driven dictionary: per training point the path gain is estimated as
// max(dft_rss)/sqrt(N), and entry (m, k) is the mean of pn_rss[m]/gain over
// points labeled k. Columns follow the dataset's dense label order.
MagnitudeDictionary estimate_dictionary(const Dataset& train, int m);

// RSS matching pursuit: argmax_k <p, col_k> / ||col_k||, ties toward the
// lowest index.
int rss_mp(const Eigen::VectorXd& p, const MagnitudeDictionary& dict);

std::string dictionary_to_json(const MagnitudeDictionary& dict);
MagnitudeDictionary dictionary_from_json(const std::string& text);

}  // namespace mmbeam
