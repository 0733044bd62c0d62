#include "mmbeam/baseline.hpp"

#include "json.hpp"

#include <cmath>
#include <stdexcept>

namespace mmbeam {

namespace {
using json = nlohmann::ordered_json;
}

void MagnitudeDictionary::validate() const {
  if (values.size() == 0)
    throw std::invalid_argument("MagnitudeDictionary: empty");
  if ((values.array() < 0.0).any())
    throw std::invalid_argument("MagnitudeDictionary: negative entry");
  for (Eigen::Index k = 0; k < values.cols(); ++k)
    if (values.col(k).norm() == 0.0)
      throw std::invalid_argument("MagnitudeDictionary: all-zero column " +
                                  std::to_string(k));
}

int exhaustive_select(const Eigen::VectorXd& dft_rss) {
  return assign_label(dft_rss);
}

MagnitudeDictionary model_dictionary(const Codebook& pn, int m,
                                     const std::vector<double>& dft_angles_deg,
                                     const ArrayGeometry& geometry) {
  if (m < 1 || m > pn.size())
    throw std::invalid_argument("model_dictionary: M out of range");
  if (dft_angles_deg.empty())
    throw std::invalid_argument("model_dictionary: empty angle grid");

  MagnitudeDictionary dict;
  dict.source = DictionarySource::model;
  dict.values.resize(m, static_cast<Eigen::Index>(dft_angles_deg.size()));
  for (std::size_t k = 0; k < dft_angles_deg.size(); ++k) {
    const Eigen::VectorXcd a = array_response(geometry, dft_angles_deg[k]);
    for (int row = 0; row < m; ++row)
      dict.values(row, static_cast<Eigen::Index>(k)) =
          std::abs(pn.codewords[row].dot(a));
  }
  dict.validate();
  return dict;
}

MagnitudeDictionary estimate_dictionary(const Dataset& train, int m) {
  if (m < 1 || m > train.meta.m0)
    throw std::invalid_argument("estimate_dictionary: M out of range");

  const int n_labels = train.n_labels();
  const double sqrt_n = std::sqrt(static_cast<double>(train.meta.geometry.n_elements));
  Eigen::MatrixXd sums = Eigen::MatrixXd::Zero(m, n_labels);
  std::vector<long> counts(n_labels, 0);

  for (const auto& pt : train.points) {
    const double gain = pt.dft_rss.maxCoeff() / sqrt_n;
    if (!(gain > 0.0)) continue;  // degenerate all-zero sweep carries no information
    sums.col(pt.label) += pt.pn_rss.head(m) / gain;
    ++counts[pt.label];
  }
  for (int l = 0; l < n_labels; ++l)
    if (counts[l] == 0)
      throw std::runtime_error("estimate_dictionary: label " +
                               std::to_string(l) + " has no training points");

  MagnitudeDictionary dict;
  dict.source = DictionarySource::estimated;
  dict.values = sums;
  for (int l = 0; l < n_labels; ++l)
    dict.values.col(l) /= static_cast<double>(counts[l]);
  dict.validate();
  return dict;
}

int rss_mp(const Eigen::VectorXd& p, const MagnitudeDictionary& dict) {
  if (p.size() != dict.values.rows())
    throw std::invalid_argument("rss_mp: dimension mismatch");
  dict.validate();

  int best = 0;
  double best_score = -1.0;
  for (Eigen::Index k = 0; k < dict.values.cols(); ++k) {
    const double score = p.dot(dict.values.col(k)) / dict.values.col(k).norm();
    if (score > best_score) {
      best_score = score;
      best = static_cast<int>(k);
    }
  }
  return best;
}

std::string dictionary_to_json(const MagnitudeDictionary& dict) {
  json j;
  j["source"] = dict.source == DictionarySource::model ? "model" : "estimated";
  j["n_measurements"] = dict.n_measurements();
  j["n_beams"] = dict.n_beams();
  json rows = json::array();
  for (Eigen::Index r = 0; r < dict.values.rows(); ++r) {
    json row = json::array();
    for (Eigen::Index c = 0; c < dict.values.cols(); ++c)
      row.push_back(dict.values(r, c));
    rows.push_back(std::move(row));
  }
  j["values"] = std::move(rows);
  return j.dump();
}

MagnitudeDictionary dictionary_from_json(const std::string& text) {
  const json j = json::parse(text);
  MagnitudeDictionary dict;
  const std::string source = j.at("source").get<std::string>();
  if (source == "model")
    dict.source = DictionarySource::model;
  else if (source == "estimated")
    dict.source = DictionarySource::estimated;
  else
    throw std::invalid_argument("dictionary_from_json: unknown source " + source);
  const int rows = j.at("n_measurements").get<int>();
  const int cols = j.at("n_beams").get<int>();
  dict.values.resize(rows, cols);
  const auto& values = j.at("values");
  if (static_cast<int>(values.size()) != rows)
    throw std::invalid_argument("dictionary_from_json: row count mismatch");
  for (int r = 0; r < rows; ++r) {
    if (static_cast<int>(values[r].size()) != cols)
      throw std::invalid_argument("dictionary_from_json: column count mismatch");
    for (int c = 0; c < cols; ++c)
      dict.values(r, c) = values[r][c].get<double>();
  }
  dict.validate();
  return dict;
}

}  // namespace mmbeam
