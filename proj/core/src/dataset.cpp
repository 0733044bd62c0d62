#include "mmbeam/dataset.hpp"

#include "json.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <numbers>
#include <sstream>
#include <stdexcept>

#include "mmbeam/rng.hpp"
#include "mmbeam/sounding.hpp"

namespace mmbeam {

namespace {

using json = nlohmann::ordered_json;

// Stream tags for deriving independent per-point RNG streams from one seed.
enum : std::uint64_t { kStreamPn = 1, kStreamDraw = 2, kStreamNoise = 3, kStreamSplit = 4 };

json vector_to_json(const Eigen::VectorXd& v) {
  json out = json::array();
  for (Eigen::Index i = 0; i < v.size(); ++i) out.push_back(v(i));
  return out;
}

Eigen::VectorXd vector_from_json(const json& j) {
  Eigen::VectorXd v(static_cast<Eigen::Index>(j.size()));
  for (std::size_t i = 0; i < j.size(); ++i)
    v(static_cast<Eigen::Index>(i)) = j[i].get<double>();
  return v;
}

}  // namespace

std::uint64_t derive_pn_seed(std::uint64_t dataset_seed) {
  return hash_combine(dataset_seed, kStreamPn);
}

Codebook DatasetMeta::dft() const {
  return dft_codebook(geometry, k, angle_min_deg, angle_max_deg);
}

Codebook DatasetMeta::pn() const { return pn_codebook(geometry, m0, pn_seed); }

int assign_label(const Eigen::VectorXd& dft_rss) {
  if (dft_rss.size() == 0)
    throw std::invalid_argument("assign_label: empty vector");
  int best = 0;
  for (Eigen::Index i = 1; i < dft_rss.size(); ++i)
    if (dft_rss(i) > dft_rss(best)) best = static_cast<int>(i);
  return best;
}

Dataset generate_dataset(const GenConfig& config) {
  if (config.n_points < 1)
    throw std::invalid_argument("generate_dataset: n_points must be >= 1");
  if (!(config.aoa_min_deg < config.aoa_max_deg))
    throw std::invalid_argument("generate_dataset: empty AoA range");

  const ArrayGeometry geometry{config.n_rx, config.spacing_over_wavelength};
  geometry.validate();

  Dataset ds;
  ds.meta.geometry = geometry;
  ds.meta.k = config.k;
  ds.meta.m0 = config.m0;
  ds.meta.angle_min_deg = config.angle_min_deg;
  ds.meta.angle_max_deg = config.angle_max_deg;
  ds.meta.pn_seed = hash_combine(config.seed, kStreamPn);
  ds.meta.impairment = draw_impairment(config.impairment, geometry);
  ds.meta.rss_snr_db = config.rss_snr_db;
  ds.meta.aoa_min_deg = config.aoa_min_deg;
  ds.meta.aoa_max_deg = config.aoa_max_deg;
  ds.meta.seed = config.seed;

  const Codebook all = concat_codebook(ds.meta.dft(), ds.meta.pn());
  const int n_beams = all.size();

  // First pass: draw channels and noiseless RSS, then calibrate one sigma for
  // the whole dataset from the mean measurement energy.
  std::vector<double> aoas(config.n_points);
  Eigen::MatrixXd noiseless(config.n_points, n_beams);
  double energy = 0.0;
  for (int i = 0; i < config.n_points; ++i) {
    Rng rng(hash_combine(hash_combine(config.seed, kStreamDraw),
                         static_cast<std::uint64_t>(i)));
    aoas[i] = rng.uniform(config.aoa_min_deg, config.aoa_max_deg);
    const std::complex<double> alpha =
        std::polar(1.0, 2.0 * std::numbers::pi * rng.uniform());
    const Eigen::VectorXcd h =
        channel_vector(make_channel(aoas[i], alpha), geometry);
    for (int m = 0; m < n_beams; ++m) {
      const double v =
          std::abs(apply_impairment(ds.meta.impairment, all.codewords[m]).dot(h));
      noiseless(i, m) = v;
      energy += v * v;
    }
  }
  energy /= static_cast<double>(config.n_points) * n_beams;
  if (!(energy > 0.0))
    throw std::runtime_error("generate_dataset: zero-energy sounding");
  ds.meta.sigma_rss = std::sqrt(energy / std::pow(10.0, config.rss_snr_db / 10.0));

  ds.points.resize(config.n_points);
  for (int i = 0; i < config.n_points; ++i) {
    Rng rng(hash_combine(hash_combine(config.seed, kStreamNoise),
                         static_cast<std::uint64_t>(i)));
    DataPoint& pt = ds.points[i];
    pt.aoa_true_deg = aoas[i];
    pt.dft_rss.resize(config.k);
    pt.pn_rss.resize(config.m0);
    for (int m = 0; m < n_beams; ++m) {
      double v = noiseless(i, m) + ds.meta.sigma_rss * rng.normal();
      if (v < 0.0) {
        v = 0.0;
        ++ds.meta.clamp_events;
      }
      if (m < config.k)
        pt.dft_rss(m) = v;
      else
        pt.pn_rss(m - config.k) = v;
    }
    pt.label = assign_label(pt.dft_rss);
    pt.snr_tag_db = config.rss_snr_db;
  }

  ds.label_map.resize(config.k);
  for (int i = 0; i < config.k; ++i) ds.label_map[i] = i;
  return ds;
}

Dataset filter_labels(const Dataset& dataset, int min_count) {
  if (min_count < 1)
    throw std::invalid_argument("filter_labels: min_count must be >= 1");

  const int n_old = dataset.n_labels();
  std::vector<long> counts(n_old, 0);
  for (const auto& pt : dataset.points) ++counts[pt.label];

  std::vector<int> remap(n_old, -1);
  Dataset out;
  out.meta = dataset.meta;
  for (int l = 0; l < n_old; ++l) {
    if (counts[l] >= min_count) {
      remap[l] = static_cast<int>(out.label_map.size());
      out.label_map.push_back(dataset.label_map[l]);
    }
  }
  if (out.label_map.empty())
    throw std::runtime_error("filter_labels: no label reaches min_count");

  for (const auto& pt : dataset.points) {
    if (remap[pt.label] < 0) continue;
    out.points.push_back(pt);
    out.points.back().label = remap[pt.label];
  }
  return out;
}

std::pair<Dataset, Dataset> split(const Dataset& dataset, double train_fraction,
                                  std::uint64_t seed) {
  if (!(train_fraction > 0.0 && train_fraction < 1.0))
    throw std::invalid_argument("split: train_fraction must lie in (0, 1)");

  const int n_labels = dataset.n_labels();
  std::vector<std::vector<int>> by_label(n_labels);
  for (int i = 0; i < static_cast<int>(dataset.points.size()); ++i)
    by_label[dataset.points[i].label].push_back(i);
  for (int l = 0; l < n_labels; ++l)
    if (by_label[l].size() < 2)
      throw std::runtime_error("split: label " + std::to_string(l) +
                               " has fewer than 2 points, cannot stratify");

  const long total = static_cast<long>(dataset.points.size());
  const long target = std::lround(train_fraction * static_cast<double>(total));

  // Largest-remainder allocation; every label keeps at least one point on
  // each side so both halves retain the full label set.
  std::vector<long> take(n_labels);
  std::vector<double> remainder(n_labels);
  long assigned = 0;
  for (int l = 0; l < n_labels; ++l) {
    const double exact = train_fraction * static_cast<double>(by_label[l].size());
    take[l] = std::clamp(static_cast<long>(std::floor(exact)), 1L,
                         static_cast<long>(by_label[l].size()) - 1);
    remainder[l] = exact - std::floor(exact);
    assigned += take[l];
  }
  std::vector<int> order(n_labels);
  for (int l = 0; l < n_labels; ++l) order[l] = l;
  std::sort(order.begin(), order.end(), [&](int a, int b) {
    if (remainder[a] != remainder[b]) return remainder[a] > remainder[b];
    return a < b;
  });
  while (assigned != target) {
    bool changed = false;
    if (assigned < target) {
      for (int l : order) {
        if (assigned == target) break;
        if (take[l] < static_cast<long>(by_label[l].size()) - 1) {
          ++take[l];
          ++assigned;
          changed = true;
        }
      }
    } else {
      for (auto it = order.rbegin(); it != order.rend(); ++it) {
        if (assigned == target) break;
        if (take[*it] > 1) {
          --take[*it];
          --assigned;
          changed = true;
        }
      }
    }
    if (!changed) break;  // target unreachable under the 1..n-1 clamp
  }

  std::vector<char> in_train(dataset.points.size(), 0);
  for (int l = 0; l < n_labels; ++l) {
    std::vector<int> idx = by_label[l];
    Rng rng(hash_combine(hash_combine(seed, kStreamSplit),
                         static_cast<std::uint64_t>(l)));
    for (std::size_t i = idx.size(); i > 1; --i)
      std::swap(idx[i - 1], idx[rng.below(i)]);
    for (long t = 0; t < take[l]; ++t) in_train[idx[t]] = 1;
  }

  Dataset train, test;
  train.meta = dataset.meta;
  test.meta = dataset.meta;
  train.label_map = dataset.label_map;
  test.label_map = dataset.label_map;
  for (std::size_t i = 0; i < dataset.points.size(); ++i)
    (in_train[i] ? train : test).points.push_back(dataset.points[i]);
  return {std::move(train), std::move(test)};
}

Eigen::VectorXd truncate_features(const DataPoint& point, int m) {
  if (m < 1 || m > point.pn_rss.size())
    throw std::invalid_argument("truncate_features: M out of range");
  return point.pn_rss.head(m);
}

Eigen::MatrixXd feature_matrix(const Dataset& dataset, int m) {
  Eigen::MatrixXd x(dataset.points.size(), m);
  for (std::size_t i = 0; i < dataset.points.size(); ++i)
    x.row(static_cast<Eigen::Index>(i)) =
        truncate_features(dataset.points[i], m).transpose();
  return x;
}

std::vector<int> labels_of(const Dataset& dataset) {
  std::vector<int> y(dataset.points.size());
  for (std::size_t i = 0; i < dataset.points.size(); ++i)
    y[i] = dataset.points[i].label;
  return y;
}

std::string dataset_to_jsonl(const Dataset& dataset) {
  json header;
  header["type"] = "header";
  header["version"] = 1;
  header["geometry"] = {{"n_elements", dataset.meta.geometry.n_elements},
                        {"spacing_over_wavelength",
                         dataset.meta.geometry.spacing_over_wavelength}};
  header["k"] = dataset.meta.k;
  header["m0"] = dataset.meta.m0;
  header["angle_min_deg"] = dataset.meta.angle_min_deg;
  header["angle_max_deg"] = dataset.meta.angle_max_deg;
  header["pn_seed"] = dataset.meta.pn_seed;
  header["impairment"] = json::parse(impairment_to_json(dataset.meta.impairment));
  header["rss_snr_db"] = dataset.meta.rss_snr_db;
  header["sigma_rss"] = dataset.meta.sigma_rss;
  header["aoa_min_deg"] = dataset.meta.aoa_min_deg;
  header["aoa_max_deg"] = dataset.meta.aoa_max_deg;
  header["seed"] = dataset.meta.seed;
  header["clamp_events"] = dataset.meta.clamp_events;
  header["label_map"] = dataset.label_map;

  std::string out = header.dump();
  out.push_back('\n');
  for (const auto& pt : dataset.points) {
    json j;
    j["aoa_true_deg"] = pt.aoa_true_deg;
    j["dft_rss"] = vector_to_json(pt.dft_rss);
    j["pn_rss"] = vector_to_json(pt.pn_rss);
    j["label"] = pt.label;
    j["snr_tag_db"] = pt.snr_tag_db;
    out += j.dump();
    out.push_back('\n');
  }
  return out;
}

Dataset dataset_from_jsonl(const std::string& text) {
  std::istringstream in(text);
  std::string line;
  long line_no = 0;
  Dataset ds;
  bool have_header = false;

  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty()) continue;
    json j;
    try {
      j = json::parse(line);
    } catch (const json::parse_error& err) {
      throw std::runtime_error("dataset parse error at line " +
                               std::to_string(line_no) + ": " + err.what());
    }
    if (!have_header) {
      if (j.value("type", "") != "header")
        throw std::runtime_error("dataset parse error at line " +
                                 std::to_string(line_no) +
                                 ": expected header record");
      ds.meta.geometry.n_elements = j.at("geometry").at("n_elements").get<int>();
      ds.meta.geometry.spacing_over_wavelength =
          j.at("geometry").at("spacing_over_wavelength").get<double>();
      ds.meta.k = j.at("k").get<int>();
      ds.meta.m0 = j.at("m0").get<int>();
      ds.meta.angle_min_deg = j.at("angle_min_deg").get<double>();
      ds.meta.angle_max_deg = j.at("angle_max_deg").get<double>();
      ds.meta.pn_seed = j.at("pn_seed").get<std::uint64_t>();
      ds.meta.impairment = impairment_from_json(j.at("impairment").dump());
      ds.meta.rss_snr_db = j.at("rss_snr_db").get<double>();
      ds.meta.sigma_rss = j.at("sigma_rss").get<double>();
      ds.meta.aoa_min_deg = j.at("aoa_min_deg").get<double>();
      ds.meta.aoa_max_deg = j.at("aoa_max_deg").get<double>();
      ds.meta.seed = j.at("seed").get<std::uint64_t>();
      ds.meta.clamp_events = j.at("clamp_events").get<long>();
      ds.label_map = j.at("label_map").get<std::vector<int>>();
      have_header = true;
      continue;
    }

    DataPoint pt;
    try {
      pt.aoa_true_deg = j.at("aoa_true_deg").get<double>();
      pt.dft_rss = vector_from_json(j.at("dft_rss"));
      pt.pn_rss = vector_from_json(j.at("pn_rss"));
      pt.label = j.at("label").get<int>();
      pt.snr_tag_db = j.at("snr_tag_db").get<double>();
    } catch (const json::exception& err) {
      throw std::runtime_error("dataset parse error at line " +
                               std::to_string(line_no) + ": " + err.what());
    }
    if (pt.dft_rss.size() != ds.meta.k || pt.pn_rss.size() != ds.meta.m0)
      throw std::runtime_error("dataset parse error at line " +
                               std::to_string(line_no) +
                               ": RSS vector length mismatch");
    if (pt.label < 0 || pt.label >= ds.n_labels())
      throw std::runtime_error("dataset parse error at line " +
                               std::to_string(line_no) + ": label out of range");
    if (ds.label_map[pt.label] != assign_label(pt.dft_rss))
      throw std::runtime_error("dataset parse error at line " +
                               std::to_string(line_no) +
                               ": label does not match DFT argmax");
    ds.points.push_back(std::move(pt));
  }
  if (!have_header)
    throw std::runtime_error("dataset parse error: missing header record");
  return ds;
}

void save_dataset(const Dataset& dataset, const std::string& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("save_dataset: cannot open " + path);
  out << dataset_to_jsonl(dataset);
  if (!out) throw std::runtime_error("save_dataset: write failed for " + path);
}

Dataset load_dataset(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("load_dataset: cannot open " + path);
  std::ostringstream buf;
  buf << in.rdbuf();
  return dataset_from_jsonl(buf.str());
}

}  // namespace mmbeam
