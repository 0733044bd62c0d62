#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "mmbeam/dataset.hpp"
#include "mmbeam/neural.hpp"

namespace mmbeam {

// One experiment description: base generation parameters plus the sweep axes.
// Per-cell seeds are derived by hashing master_seed with the cell coordinates,
// so every sweep output is a pure function of (config, master_seed).
struct ExperimentConfig {
  std::string scenario = "default";
  GenConfig gen;
  std::vector<int> m_list = {4, 5, 6, 8, 10, 12, 16, 20};
  std::vector<int> train_sizes = {500, 1000, 2000};
  std::vector<int> array_sizes = {8, 16, 32, 64};
  TrainConfig train_cfg;
  int trials = 3;
  int n_test = 1000;
  int min_label_count = 20;
  double train_fraction = 0.617;
  std::string out_dir = ".";
  std::uint64_t master_seed = 1;
  double pattern_step_deg = 0.25;
  int pattern_dft_index = -1;  // -1 selects the beam nearest broadside
  int pattern_pn_index = 0;
};

ExperimentConfig experiment_config_from_json(const std::string& text);
std::string experiment_config_to_json(const ExperimentConfig& config);
GenConfig gen_config_from_json(const std::string& text);
std::string gen_config_to_json(const GenConfig& config);

struct AccuracyRow {
  std::string algo;
  int m = 0;
  int train_size = 0;
  int trial = 0;
  double accuracy = 0.0;
};

struct LossRow {
  std::string algo;
  int m = 0;
  int trial = 0;
  double p50_db = 0.0, p90_db = 0.0, p99_db = 0.0;
};

struct ArraySweepCell {
  std::string algo;
  int n_rx = 0;
  int k = 0;
  std::optional<int> required_m;  // majority vote over trials
};

// Fig. 2 analog: model vs impaired patterns for one DFT and one PN codeword.
// CSV columns: angle_deg,dft_model,dft_impaired,pn_model,pn_impaired.
std::string beam_pattern_csv(const ExperimentConfig& config);

// Fig. 3a analog: NN test accuracy per (M, train size) cell. Within a trial
// every train size is a stratified subsample of one pool and all cells share
// one test set.
std::vector<AccuracyRow> accuracy_sweep(const ExperimentConfig& config);
std::string accuracy_sweep_csv(const ExperimentConfig& config);

// Fig. 3b analog: per-algorithm gain-loss percentiles vs M. All algorithms
// consume the identical test RSS vectors.
std::vector<LossRow> gainloss_sweep(const ExperimentConfig& config);
std::string gainloss_sweep_csv(const ExperimentConfig& config);

// Fig. 3c analog: required M per algorithm as the array grows; K scales as
// ceil(0.9 * N_rx) so the task stays comparable across sizes.
std::vector<ArraySweepCell> array_sweep(const ExperimentConfig& config);
std::string array_sweep_csv(const ExperimentConfig& config);

int array_sweep_codebook_size(int n_rx);

void run_beam_pattern(const ExperimentConfig& config, const std::string& out_csv);
void run_accuracy_vs_m(const ExperimentConfig& config, const std::string& out_csv);
void run_gainloss_vs_m(const ExperimentConfig& config, const std::string& out_csv);
void run_required_m_vs_array(const ExperimentConfig& config,
                             const std::string& out_csv);
void write_run_manifest(const ExperimentConfig& config, const std::string& path);

// Entry point behind the `mmbeam` binary: subcommands gen-codebook,
// gen-dataset, train, eval, sweep-m, sweep-array, beam-pattern.
int cli_main(int argc, const char* const* argv);

}  // namespace mmbeam
