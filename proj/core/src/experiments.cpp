#include "mmbeam/experiments.hpp"

#include "CLI11.hpp"
#include "json.hpp"

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <sstream>
#include <stdexcept>

#include "mmbeam/baseline.hpp"
#include "mmbeam/metrics.hpp"
#include "mmbeam/rng.hpp"
#include "mmbeam/sounding.hpp"
#include "text_util.hpp"

namespace mmbeam {

namespace {

using json = nlohmann::ordered_json;
using detail::format_double;

constexpr const char* kToolVersion = "0.1.0";

// Sweep tags for per-cell seed derivation.
enum : std::uint64_t {
  kTagAccuracy = 10,
  kTagGainloss = 11,
  kTagArray = 12,
  kTagSubsample = 20,
  kTagTrainSeed = 30,
  kTagSplit = 40,
  kTagCliSplit = 7,
  kTagCliTrain = 8,
};

void write_text(const std::string& path, const std::string& text) {
  if (const auto parent = std::filesystem::path(path).parent_path();
      !parent.empty())
    std::filesystem::create_directories(parent);
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot open " + path + " for writing");
  out << text;
  if (!out) throw std::runtime_error("write failed for " + path);
}

std::string read_text(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot open " + path);
  std::ostringstream buf;
  buf << in.rdbuf();
  return buf.str();
}

json impairment_config_json(const ImpairmentConfig& c) {
  return {{"gain_std_db", c.gain_std_db},
          {"phase_std_deg", c.phase_std_deg},
          {"seed", c.seed}};
}

ImpairmentConfig impairment_config_from(const json& j) {
  ImpairmentConfig c;
  c.gain_std_db = j.value("gain_std_db", c.gain_std_db);
  c.phase_std_deg = j.value("phase_std_deg", c.phase_std_deg);
  c.seed = j.value("seed", c.seed);
  return c;
}

GenConfig gen_config_from(const json& j) {
  GenConfig g;
  g.n_points = j.value("n_points", g.n_points);
  g.aoa_min_deg = j.value("aoa_min_deg", g.aoa_min_deg);
  g.aoa_max_deg = j.value("aoa_max_deg", g.aoa_max_deg);
  g.k = j.value("k", g.k);
  g.m0 = j.value("m0", g.m0);
  g.n_rx = j.value("n_rx", g.n_rx);
  g.spacing_over_wavelength =
      j.value("spacing_over_wavelength", g.spacing_over_wavelength);
  g.angle_min_deg = j.value("angle_min_deg", g.angle_min_deg);
  g.angle_max_deg = j.value("angle_max_deg", g.angle_max_deg);
  if (j.contains("impairment"))
    g.impairment = impairment_config_from(j.at("impairment"));
  g.rss_snr_db = j.value("rss_snr_db", g.rss_snr_db);
  g.seed = j.value("seed", g.seed);
  return g;
}

json gen_config_json(const GenConfig& g) {
  json j;
  j["n_points"] = g.n_points;
  j["aoa_min_deg"] = g.aoa_min_deg;
  j["aoa_max_deg"] = g.aoa_max_deg;
  j["k"] = g.k;
  j["m0"] = g.m0;
  j["n_rx"] = g.n_rx;
  j["spacing_over_wavelength"] = g.spacing_over_wavelength;
  j["angle_min_deg"] = g.angle_min_deg;
  j["angle_max_deg"] = g.angle_max_deg;
  j["impairment"] = impairment_config_json(g.impairment);
  j["rss_snr_db"] = g.rss_snr_db;
  j["seed"] = g.seed;
  return j;
}

TrainConfig train_config_from(const json& j) {
  TrainConfig t;
  t.learning_rate = j.value("learning_rate", t.learning_rate);
  t.rms_decay = j.value("rms_decay", t.rms_decay);
  t.epsilon = j.value("epsilon", t.epsilon);
  t.batch_size = j.value("batch_size", t.batch_size);
  t.max_epochs = j.value("max_epochs", t.max_epochs);
  t.early_stop_patience = j.value("early_stop_patience", t.early_stop_patience);
  t.val_fraction = j.value("val_fraction", t.val_fraction);
  t.seed = j.value("seed", t.seed);
  return t;
}

json train_config_json(const TrainConfig& t) {
  json j;
  j["learning_rate"] = t.learning_rate;
  j["rms_decay"] = t.rms_decay;
  j["epsilon"] = t.epsilon;
  j["batch_size"] = t.batch_size;
  j["max_epochs"] = t.max_epochs;
  j["early_stop_patience"] = t.early_stop_patience;
  j["val_fraction"] = t.val_fraction;
  j["seed"] = t.seed;
  return j;
}

// Channel, reference beam, and feature access for one evaluation split.
struct EvalContext {
  Dataset train;
  Dataset test;
  ArrayGeometry geometry;
  Codebook dft;
  Codebook pn;
  std::vector<double> retained_angles;
  std::vector<Eigen::VectorXcd> test_channels;
  std::vector<int> test_reference;  // original DFT index per test point
};

EvalContext make_eval_context(const GenConfig& gen, int min_label_count,
                              double train_fraction, std::uint64_t split_seed) {
  Dataset full = generate_dataset(gen);
  Dataset filtered = filter_labels(full, min_label_count);
  auto [train_set, test_set] = split(filtered, train_fraction, split_seed);

  EvalContext ctx;
  ctx.geometry = train_set.meta.geometry;
  ctx.dft = train_set.meta.dft();
  ctx.pn = train_set.meta.pn();
  for (int orig : train_set.label_map)
    ctx.retained_angles.push_back(ctx.dft.angles_deg[orig]);
  ctx.test_channels.reserve(test_set.points.size());
  ctx.test_reference.reserve(test_set.points.size());
  for (const auto& pt : test_set.points) {
    ctx.test_channels.push_back(
        channel_vector(make_channel(pt.aoa_true_deg, 1.0), ctx.geometry));
    ctx.test_reference.push_back(exhaustive_select(pt.dft_rss));
  }
  ctx.train = std::move(train_set);
  ctx.test = std::move(test_set);
  return ctx;
}

// Gain losses of dense-label predictions against the exhaustive reference.
std::vector<double> losses_of(const EvalContext& ctx,
                              const std::vector<int>& dense_predictions) {
  std::vector<double> losses;
  losses.reserve(dense_predictions.size());
  for (std::size_t i = 0; i < dense_predictions.size(); ++i) {
    const int pred_orig = ctx.test.label_map[dense_predictions[i]];
    const AlignmentResult r = make_alignment_result(
        ctx.test_channels[i], ctx.test.meta.impairment, ctx.dft, pred_orig,
        ctx.test_reference[i]);
    losses.push_back(r.loss_db);
  }
  return losses;
}

std::vector<int> rss_mp_predictions(const EvalContext& ctx,
                                    const MagnitudeDictionary& dict, int m) {
  std::vector<int> preds;
  preds.reserve(ctx.test.points.size());
  for (const auto& pt : ctx.test.points)
    preds.push_back(rss_mp(truncate_features(pt, m), dict));
  return preds;
}

// Label-stratified subsample of target size, largest-remainder allocation.
Dataset stratified_subsample(const Dataset& dataset, int target,
                             std::uint64_t seed) {
  const long total = static_cast<long>(dataset.points.size());
  if (target >= total) return dataset;
  const int n_labels = dataset.n_labels();
  std::vector<std::vector<int>> by_label(n_labels);
  for (int i = 0; i < static_cast<int>(dataset.points.size()); ++i)
    by_label[dataset.points[i].label].push_back(i);

  const double fraction = static_cast<double>(target) / static_cast<double>(total);
  std::vector<long> take(n_labels);
  std::vector<double> remainder(n_labels);
  long assigned = 0;
  for (int l = 0; l < n_labels; ++l) {
    const double exact = fraction * static_cast<double>(by_label[l].size());
    take[l] = std::clamp(static_cast<long>(std::floor(exact)), 1L,
                         static_cast<long>(by_label[l].size()));
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
        if (take[l] < static_cast<long>(by_label[l].size())) {
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
    if (!changed) break;
  }

  std::vector<char> keep(dataset.points.size(), 0);
  for (int l = 0; l < n_labels; ++l) {
    auto idx = by_label[l];
    Rng rng(hash_combine(hash_combine(seed, kTagSubsample),
                         static_cast<std::uint64_t>(l)));
    for (std::size_t i = idx.size(); i > 1; --i)
      std::swap(idx[i - 1], idx[rng.below(i)]);
    for (long t = 0; t < take[l]; ++t) keep[idx[t]] = 1;
  }
  Dataset out;
  out.meta = dataset.meta;
  out.label_map = dataset.label_map;
  for (std::size_t i = 0; i < dataset.points.size(); ++i)
    if (keep[i]) out.points.push_back(dataset.points[i]);
  return out;
}

std::string optional_to_csv(const std::optional<int>& v) {
  return v ? std::to_string(*v) : std::string("NA");
}

}  // namespace

ExperimentConfig experiment_config_from_json(const std::string& text) {
  json j;
  try {
    j = json::parse(text);
  } catch (const json::parse_error& err) {
    throw std::invalid_argument(std::string("experiment config: ") + err.what());
  }
  ExperimentConfig c;
  c.scenario = j.value("scenario", c.scenario);
  if (j.contains("gen")) c.gen = gen_config_from(j.at("gen"));
  if (j.contains("m_list")) c.m_list = j.at("m_list").get<std::vector<int>>();
  if (j.contains("train_sizes"))
    c.train_sizes = j.at("train_sizes").get<std::vector<int>>();
  if (j.contains("array_sizes"))
    c.array_sizes = j.at("array_sizes").get<std::vector<int>>();
  if (j.contains("train")) c.train_cfg = train_config_from(j.at("train"));
  c.trials = j.value("trials", c.trials);
  c.n_test = j.value("n_test", c.n_test);
  c.min_label_count = j.value("min_label_count", c.min_label_count);
  c.train_fraction = j.value("train_fraction", c.train_fraction);
  c.out_dir = j.value("out_dir", c.out_dir);
  c.master_seed = j.value("master_seed", c.master_seed);
  c.pattern_step_deg = j.value("pattern_step_deg", c.pattern_step_deg);
  c.pattern_dft_index = j.value("pattern_dft_index", c.pattern_dft_index);
  c.pattern_pn_index = j.value("pattern_pn_index", c.pattern_pn_index);
  if (c.m_list.empty() || c.train_sizes.empty() || c.array_sizes.empty())
    throw std::invalid_argument("experiment config: sweep lists must be non-empty");
  if (c.trials < 1)
    throw std::invalid_argument("experiment config: trials must be >= 1");
  return c;
}

std::string experiment_config_to_json(const ExperimentConfig& c) {
  json j;
  j["scenario"] = c.scenario;
  j["gen"] = gen_config_json(c.gen);
  j["m_list"] = c.m_list;
  j["train_sizes"] = c.train_sizes;
  j["array_sizes"] = c.array_sizes;
  j["train"] = train_config_json(c.train_cfg);
  j["trials"] = c.trials;
  j["n_test"] = c.n_test;
  j["min_label_count"] = c.min_label_count;
  j["train_fraction"] = c.train_fraction;
  j["out_dir"] = c.out_dir;
  j["master_seed"] = c.master_seed;
  j["pattern_step_deg"] = c.pattern_step_deg;
  j["pattern_dft_index"] = c.pattern_dft_index;
  j["pattern_pn_index"] = c.pattern_pn_index;
  return j.dump(2);
}

GenConfig gen_config_from_json(const std::string& text) {
  try {
    return gen_config_from(json::parse(text));
  } catch (const json::parse_error& err) {
    throw std::invalid_argument(std::string("gen config: ") + err.what());
  }
}

std::string gen_config_to_json(const GenConfig& config) {
  return gen_config_json(config).dump(2);
}

std::string beam_pattern_csv(const ExperimentConfig& config) {
  const ArrayGeometry geometry{config.gen.n_rx, config.gen.spacing_over_wavelength};
  const Codebook dft = dft_codebook(geometry, config.gen.k,
                                    config.gen.angle_min_deg,
                                    config.gen.angle_max_deg);
  const Codebook pn =
      pn_codebook(geometry, config.gen.m0, derive_pn_seed(config.gen.seed));
  const ImpairmentVector e = draw_impairment(config.gen.impairment, geometry);

  int dft_index = config.pattern_dft_index;
  if (dft_index < 0) {
    dft_index = 0;
    for (int k = 1; k < dft.size(); ++k)
      if (std::abs(dft.angles_deg[k]) < std::abs(dft.angles_deg[dft_index]))
        dft_index = k;
  }
  if (dft_index >= dft.size() || config.pattern_pn_index >= pn.size())
    throw std::invalid_argument("beam_pattern: codeword index out of range");

  const int n_grid =
      static_cast<int>(std::floor((config.gen.angle_max_deg -
                                   config.gen.angle_min_deg) /
                                      config.pattern_step_deg +
                                  1e-9)) +
      1;
  Eigen::VectorXd grid(n_grid);
  for (int i = 0; i < n_grid; ++i)
    grid(i) = config.gen.angle_min_deg + config.pattern_step_deg * i;

  const Awv& w_dft = dft.codewords[dft_index];
  const Awv& w_pn = pn.codewords[config.pattern_pn_index];
  const Eigen::VectorXd dft_model = beam_pattern(w_dft, geometry, grid);
  const Eigen::VectorXd dft_meas =
      beam_pattern(apply_impairment(e, w_dft), geometry, grid);
  const Eigen::VectorXd pn_model = beam_pattern(w_pn, geometry, grid);
  const Eigen::VectorXd pn_meas =
      beam_pattern(apply_impairment(e, w_pn), geometry, grid);

  std::string csv = "angle_deg,dft_model,dft_impaired,pn_model,pn_impaired\n";
  for (int i = 0; i < n_grid; ++i) {
    csv += format_double(grid(i));
    csv.push_back(',');
    csv += format_double(dft_model(i));
    csv.push_back(',');
    csv += format_double(dft_meas(i));
    csv.push_back(',');
    csv += format_double(pn_model(i));
    csv.push_back(',');
    csv += format_double(pn_meas(i));
    csv.push_back('\n');
  }
  return csv;
}

std::vector<AccuracyRow> accuracy_sweep(const ExperimentConfig& config) {
  std::vector<AccuracyRow> rows;
  const int max_train = *std::max_element(config.train_sizes.begin(),
                                          config.train_sizes.end());
  for (int trial = 0; trial < config.trials; ++trial) {
    const std::uint64_t cell_seed =
        hash_combine(hash_combine(config.master_seed, kTagAccuracy),
                     static_cast<std::uint64_t>(trial));
    GenConfig gen = config.gen;
    gen.n_points = max_train + config.n_test;
    gen.seed = cell_seed;
    gen.impairment.seed = hash_combine(cell_seed, 1);
    const double fraction =
        static_cast<double>(max_train) / static_cast<double>(gen.n_points);
    EvalContext ctx = make_eval_context(gen, config.min_label_count, fraction,
                                        hash_combine(cell_seed, kTagSplit));
    const std::vector<int> test_labels = labels_of(ctx.test);

    for (int size : config.train_sizes) {
      const Dataset subset = stratified_subsample(
          ctx.train, size, hash_combine(cell_seed, static_cast<std::uint64_t>(size)));
      for (int m : config.m_list) {
        TrainConfig tc = config.train_cfg;
        tc.seed = hash_combine(
            hash_combine(hash_combine(cell_seed, kTagTrainSeed),
                         static_cast<std::uint64_t>(size)),
            static_cast<std::uint64_t>(m));
        auto [params, history] = train(subset, m, tc);
        const std::vector<int> preds =
            predict_batch(params, feature_matrix(ctx.test, m));
        rows.push_back(AccuracyRow{"nn", m, size, trial,
                                   accuracy(preds, test_labels)});
      }
    }
  }
  return rows;
}

std::vector<LossRow> gainloss_sweep(const ExperimentConfig& config) {
  std::vector<LossRow> rows;
  for (int trial = 0; trial < config.trials; ++trial) {
    const std::uint64_t cell_seed =
        hash_combine(hash_combine(config.master_seed, kTagGainloss),
                     static_cast<std::uint64_t>(trial));
    GenConfig gen = config.gen;
    gen.seed = cell_seed;
    gen.impairment.seed = hash_combine(cell_seed, 1);
    EvalContext ctx =
        make_eval_context(gen, config.min_label_count, config.train_fraction,
                          hash_combine(cell_seed, kTagSplit));

    for (int m : config.m_list) {
      const MagnitudeDictionary vanilla =
          model_dictionary(ctx.pn, m, ctx.retained_angles, ctx.geometry);
      const MagnitudeDictionary refined = estimate_dictionary(ctx.train, m);
      TrainConfig tc = config.train_cfg;
      tc.seed = hash_combine(hash_combine(cell_seed, kTagTrainSeed),
                             static_cast<std::uint64_t>(m));
      auto [params, history] = train(ctx.train, m, tc);

      const auto emit = [&](const std::string& algo,
                            const std::vector<int>& preds) {
        std::vector<double> losses = losses_of(ctx, preds);
        rows.push_back(LossRow{algo, m, trial,
                               gain_loss_percentile(losses, 50.0),
                               gain_loss_percentile(losses, 90.0),
                               gain_loss_percentile(losses, 99.0)});
      };
      emit("rssmp_vanilla", rss_mp_predictions(ctx, vanilla, m));
      emit("rssmp_refined", rss_mp_predictions(ctx, refined, m));
      emit("nn", predict_batch(params, feature_matrix(ctx.test, m)));
    }
  }
  return rows;
}

int array_sweep_codebook_size(int n_rx) {
  return std::max(2, static_cast<int>(std::ceil(0.9 * n_rx)));
}

std::vector<ArraySweepCell> array_sweep(const ExperimentConfig& config) {
  std::vector<ArraySweepCell> cells;
  const int m0 = *std::max_element(config.m_list.begin(), config.m_list.end());

  for (int n_rx : config.array_sizes) {
    const int k = array_sweep_codebook_size(n_rx);
    std::map<std::string, std::vector<std::optional<int>>> votes;

    for (int trial = 0; trial < config.trials; ++trial) {
      const std::uint64_t cell_seed = hash_combine(
          hash_combine(hash_combine(config.master_seed, kTagArray),
                       static_cast<std::uint64_t>(n_rx)),
          static_cast<std::uint64_t>(trial));
      GenConfig gen = config.gen;
      gen.n_rx = n_rx;
      gen.k = k;
      gen.m0 = m0;
      gen.seed = cell_seed;
      // Fig. 3c track runs without hardware impairment.
      gen.impairment = ImpairmentConfig{0.0, 0.0, 0};
      EvalContext ctx =
          make_eval_context(gen, config.min_label_count, config.train_fraction,
                            hash_combine(cell_seed, kTagSplit));

      std::map<int, std::vector<double>> nn_losses, mp_losses;
      for (int m : config.m_list) {
        const MagnitudeDictionary dict =
            model_dictionary(ctx.pn, m, ctx.retained_angles, ctx.geometry);
        mp_losses[m] = losses_of(ctx, rss_mp_predictions(ctx, dict, m));

        TrainConfig tc = config.train_cfg;
        tc.seed = hash_combine(hash_combine(cell_seed, kTagTrainSeed),
                               static_cast<std::uint64_t>(m));
        auto [params, history] = train(ctx.train, m, tc);
        nn_losses[m] =
            losses_of(ctx, predict_batch(params, feature_matrix(ctx.test, m)));
      }
      votes["nn"].push_back(required_m(nn_losses));
      votes["rssmp"].push_back(required_m(mp_losses));
    }

    for (const std::string algo : {"nn", "rssmp"}) {
      // Majority vote across trials: median, with "none" sorting last.
      auto vs = votes[algo];
      std::sort(vs.begin(), vs.end(),
                [](const std::optional<int>& a, const std::optional<int>& b) {
                  if (a.has_value() != b.has_value()) return a.has_value();
                  return a.value_or(0) < b.value_or(0);
                });
      cells.push_back(ArraySweepCell{algo, n_rx, k, vs[vs.size() / 2]});
    }
  }
  return cells;
}

std::string accuracy_sweep_csv(const ExperimentConfig& config) {
  std::string csv = "scenario,algo,m,train_size,trial,accuracy\n";
  for (const auto& r : accuracy_sweep(config)) {
    csv += config.scenario + "," + r.algo + "," + std::to_string(r.m) + "," +
           std::to_string(r.train_size) + "," + std::to_string(r.trial) + "," +
           format_double(r.accuracy) + "\n";
  }
  return csv;
}

std::string gainloss_sweep_csv(const ExperimentConfig& config) {
  std::string csv = "scenario,algo,m,trial,p50_db,p90_db,p99_db\n";
  for (const auto& r : gainloss_sweep(config)) {
    csv += config.scenario + "," + r.algo + "," + std::to_string(r.m) + "," +
           std::to_string(r.trial) + "," + format_double(r.p50_db) + "," +
           format_double(r.p90_db) + "," + format_double(r.p99_db) + "\n";
  }
  return csv;
}

std::string array_sweep_csv(const ExperimentConfig& config) {
  std::string csv = "scenario,algo,n_rx,k,required_m\n";
  for (const auto& c : array_sweep(config)) {
    csv += config.scenario + "," + c.algo + "," + std::to_string(c.n_rx) + "," +
           std::to_string(c.k) + "," + optional_to_csv(c.required_m) + "\n";
  }
  return csv;
}

void run_beam_pattern(const ExperimentConfig& config, const std::string& out_csv) {
  write_text(out_csv, beam_pattern_csv(config));
}

void run_accuracy_vs_m(const ExperimentConfig& config, const std::string& out_csv) {
  write_text(out_csv, accuracy_sweep_csv(config));
}

void run_gainloss_vs_m(const ExperimentConfig& config, const std::string& out_csv) {
  write_text(out_csv, gainloss_sweep_csv(config));
}

void run_required_m_vs_array(const ExperimentConfig& config,
                             const std::string& out_csv) {
  write_text(out_csv, array_sweep_csv(config));
}

void write_run_manifest(const ExperimentConfig& config, const std::string& path) {
  json j;
  j["tool"] = "mmbeam";
  j["version"] = kToolVersion;
  j["scenario"] = config.scenario;
  j["master_seed"] = config.master_seed;
  j["config"] = json::parse(experiment_config_to_json(config));
  write_text(path, j.dump(2) + "\n");
}

namespace {

int cmd_gen_codebook(const std::string& config_path, const std::string& out_path,
                     std::optional<std::uint64_t> seed_override) {
  const json j = json::parse(read_text(config_path));
  const std::string kind = j.value("kind", "dft");
  ArrayGeometry geometry{j.value("n_rx", 36),
                         j.value("spacing_over_wavelength", 0.5)};
  std::uint64_t seed = j.value("seed", std::uint64_t{0});
  if (seed_override) seed = *seed_override;

  Codebook cb;
  if (kind == "dft") {
    cb = dft_codebook(geometry, j.value("k", 64), j.value("angle_min_deg", -45.0),
                      j.value("angle_max_deg", 45.0));
  } else if (kind == "pn") {
    cb = pn_codebook(geometry, j.value("m0", 36), seed);
  } else if (kind == "concatenated") {
    cb = concat_codebook(
        dft_codebook(geometry, j.value("k", 64), j.value("angle_min_deg", -45.0),
                     j.value("angle_max_deg", 45.0)),
        pn_codebook(geometry, j.value("m0", 36), seed));
  } else {
    throw std::invalid_argument("gen-codebook: unknown kind " + kind);
  }
  write_text(out_path, codebook_to_json(cb) + "\n");
  std::cout << "wrote " << out_path << " (" << cb.size() << " codewords)\n";
  return 0;
}

int cmd_gen_dataset(const std::string& config_path, const std::string& out_path,
                    std::optional<std::uint64_t> seed_override) {
  GenConfig gen = gen_config_from_json(read_text(config_path));
  if (seed_override) gen.seed = *seed_override;
  const Dataset ds = generate_dataset(gen);
  save_dataset(ds, out_path);
  std::cout << "wrote " << out_path << " (" << ds.points.size() << " points, "
            << ds.n_labels() << " labels, sigma_rss "
            << format_double(ds.meta.sigma_rss) << ")\n";
  return 0;
}

struct SplitOutcome {
  Dataset train;
  Dataset test;
};

SplitOutcome cli_filter_split(const Dataset& full, const ExperimentConfig& cfg) {
  const Dataset filtered = filter_labels(full, cfg.min_label_count);
  auto [train_set, test_set] =
      split(filtered, cfg.train_fraction, hash_combine(cfg.master_seed, kTagCliSplit));
  return SplitOutcome{std::move(train_set), std::move(test_set)};
}

int cmd_train(const std::string& config_path, const std::string& data_path,
              int m, const std::string& out_path, const std::string& history_path,
              const std::string& summary_path,
              std::optional<std::uint64_t> seed_override) {
  ExperimentConfig cfg = experiment_config_from_json(read_text(config_path));
  if (seed_override) cfg.master_seed = *seed_override;
  const Dataset full = load_dataset(data_path);
  SplitOutcome sp = cli_filter_split(full, cfg);

  TrainConfig tc = cfg.train_cfg;
  tc.seed = hash_combine(cfg.master_seed, kTagCliTrain);
  auto [params, history] = train(sp.train, m, tc);
  save_model(params, out_path);
  if (!history_path.empty()) write_text(history_path, history_to_csv(history));

  const std::vector<int> preds =
      predict_batch(params, feature_matrix(sp.test, m));
  const double test_acc = accuracy(preds, labels_of(sp.test));
  if (!summary_path.empty()) {
    json s;
    s["m"] = m;
    s["k_prime"] = sp.train.n_labels();
    s["n_train"] = sp.train.points.size();
    s["n_test"] = sp.test.points.size();
    s["epochs_run"] = history.epochs_run();
    s["test_accuracy"] = test_acc;
    write_text(summary_path, s.dump(2) + "\n");
  }
  std::cout << "test_accuracy=" << format_double(test_acc) << " (epochs "
            << history.epochs_run() << ", K' " << sp.train.n_labels() << ")\n";
  return 0;
}

int cmd_eval(const std::string& config_path, const std::string& model_path,
             const std::string& data_path, const std::string& out_path,
             std::optional<std::uint64_t> seed_override) {
  ExperimentConfig cfg = experiment_config_from_json(read_text(config_path));
  if (seed_override) cfg.master_seed = *seed_override;
  const NetworkParameters params = load_model(model_path);
  const int m = params.meta.input_dim;

  const Dataset full = load_dataset(data_path);
  SplitOutcome sp = cli_filter_split(full, cfg);
  if (sp.train.n_labels() != params.meta.n_classes)
    throw std::runtime_error("eval: model expects " +
                             std::to_string(params.meta.n_classes) +
                             " labels, dataset split has " +
                             std::to_string(sp.train.n_labels()));

  EvalContext ctx;
  ctx.geometry = sp.train.meta.geometry;
  ctx.dft = sp.train.meta.dft();
  ctx.pn = sp.train.meta.pn();
  for (int orig : sp.train.label_map)
    ctx.retained_angles.push_back(ctx.dft.angles_deg[orig]);
  for (const auto& pt : sp.test.points) {
    ctx.test_channels.push_back(
        channel_vector(make_channel(pt.aoa_true_deg, 1.0), ctx.geometry));
    ctx.test_reference.push_back(exhaustive_select(pt.dft_rss));
  }
  ctx.train = std::move(sp.train);
  ctx.test = std::move(sp.test);

  const std::vector<int> test_labels = labels_of(ctx.test);
  std::string csv = "algo,m,accuracy,p50_db,p90_db,p99_db\n";
  const auto emit = [&](const std::string& algo, const std::vector<int>& preds) {
    std::vector<double> losses = losses_of(ctx, preds);
    csv += algo + "," + std::to_string(m) + "," +
           format_double(accuracy(preds, test_labels)) + "," +
           format_double(gain_loss_percentile(losses, 50.0)) + "," +
           format_double(gain_loss_percentile(losses, 90.0)) + "," +
           format_double(gain_loss_percentile(losses, 99.0)) + "\n";
  };

  const std::vector<int> nn_preds =
      predict_batch(params, feature_matrix(ctx.test, m));
  emit("nn", nn_preds);
  emit("rssmp_vanilla",
       rss_mp_predictions(
           ctx, model_dictionary(ctx.pn, m, ctx.retained_angles, ctx.geometry), m));
  emit("rssmp_refined",
       rss_mp_predictions(ctx, estimate_dictionary(ctx.train, m), m));

  write_text(out_path, csv);
  std::cout << "test_accuracy=" << format_double(accuracy(nn_preds, test_labels))
            << "\n";
  return 0;
}

int cmd_sweep_m(const std::string& config_path, const std::string& out_dir,
                std::optional<std::uint64_t> seed_override) {
  ExperimentConfig cfg = experiment_config_from_json(read_text(config_path));
  if (seed_override) cfg.master_seed = *seed_override;
  if (!out_dir.empty()) cfg.out_dir = out_dir;
  std::filesystem::create_directories(cfg.out_dir);
  run_accuracy_vs_m(cfg, cfg.out_dir + "/accuracy_vs_m.csv");
  run_gainloss_vs_m(cfg, cfg.out_dir + "/gainloss_vs_m.csv");
  write_run_manifest(cfg, cfg.out_dir + "/manifest.json");
  std::cout << "wrote " << cfg.out_dir << "/accuracy_vs_m.csv, "
            << cfg.out_dir << "/gainloss_vs_m.csv\n";
  return 0;
}

int cmd_sweep_array(const std::string& config_path, const std::string& out_dir,
                    std::optional<std::uint64_t> seed_override) {
  ExperimentConfig cfg = experiment_config_from_json(read_text(config_path));
  if (seed_override) cfg.master_seed = *seed_override;
  if (!out_dir.empty()) cfg.out_dir = out_dir;
  std::filesystem::create_directories(cfg.out_dir);
  run_required_m_vs_array(cfg, cfg.out_dir + "/required_m_vs_array.csv");
  write_run_manifest(cfg, cfg.out_dir + "/manifest.json");
  std::cout << "wrote " << cfg.out_dir << "/required_m_vs_array.csv\n";
  return 0;
}

int cmd_beam_pattern(const std::string& config_path, const std::string& out_path,
                     std::optional<std::uint64_t> seed_override) {
  ExperimentConfig cfg = experiment_config_from_json(read_text(config_path));
  if (seed_override) cfg.gen.seed = *seed_override;
  run_beam_pattern(cfg, out_path);
  std::cout << "wrote " << out_path << "\n";
  return 0;
}

}  // namespace

int cli_main(int argc, const char* const* argv) {
  CLI::App app{"Noncoherent compressive mmWave beam alignment toolkit"};
  app.require_subcommand(1);

  std::string config_path, data_path, model_path, out_path, history_path,
      summary_path;
  int m = 5;
  std::optional<std::uint64_t> seed;

  auto add_common = [&](CLI::App* sub, bool need_out = true) {
    sub->add_option("--config", config_path, "JSON config file")->required();
    if (need_out)
      sub->add_option("--out", out_path, "output path")->required();
    sub->add_option("--seed", seed, "override the config seed");
  };

  CLI::App* gen_cb = app.add_subcommand("gen-codebook", "write a codebook JSON");
  add_common(gen_cb);
  CLI::App* gen_ds =
      app.add_subcommand("gen-dataset", "generate a synthetic dataset (JSONL)");
  add_common(gen_ds);
  CLI::App* tr = app.add_subcommand("train", "train the beam classifier");
  add_common(tr);
  tr->add_option("--data", data_path, "dataset JSONL")->required();
  tr->add_option("--m", m, "number of PN features")->required();
  tr->add_option("--history", history_path, "training history CSV");
  tr->add_option("--summary", summary_path, "summary JSON");
  CLI::App* ev = app.add_subcommand("eval", "evaluate a trained model");
  add_common(ev);
  ev->add_option("--data", data_path, "dataset JSONL")->required();
  ev->add_option("--model", model_path, "model JSON")->required();
  CLI::App* sm = app.add_subcommand("sweep-m", "accuracy and gain-loss vs M");
  add_common(sm);
  CLI::App* sa = app.add_subcommand("sweep-array", "required M vs array size");
  add_common(sa);
  CLI::App* bp = app.add_subcommand("beam-pattern", "model vs impaired patterns");
  add_common(bp);

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  }

  try {
    if (gen_cb->parsed()) return cmd_gen_codebook(config_path, out_path, seed);
    if (gen_ds->parsed()) return cmd_gen_dataset(config_path, out_path, seed);
    if (tr->parsed())
      return cmd_train(config_path, data_path, m, out_path, history_path,
                       summary_path, seed);
    if (ev->parsed())
      return cmd_eval(config_path, model_path, data_path, out_path, seed);
    if (sm->parsed()) return cmd_sweep_m(config_path, out_path, seed);
    if (sa->parsed()) return cmd_sweep_array(config_path, out_path, seed);
    if (bp->parsed()) return cmd_beam_pattern(config_path, out_path, seed);
  } catch (const std::invalid_argument& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 0;
}

}  // namespace mmbeam
