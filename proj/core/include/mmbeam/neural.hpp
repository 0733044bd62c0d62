#pragma once

#include <cstdint>
#include <string>
#include <utility>
#include <vector>

#include "mmbeam/dataset.hpp"

namespace mmbeam {

// p / max(p); output lies in [0, 1] with maximum exactly 1.
Eigen::VectorXd normalize_features(const Eigen::VectorXd& p);

struct NetMeta {
  int input_dim = 0;   // M
  int n_classes = 0;   // K'
  std::uint64_t seed = 0;
  std::string normalization = "per-sample max";
};

// Dense 64 -> 128 -> K' classifier with batch normalization before the first
// two ReLU activations. Weight matrices are (units x fan_in); batches are
// (samples x features). Trainable parameter count is 64M + 129K' + 8768; the
// BN running statistics are state, not parameters.
struct NetworkParameters {
  Eigen::MatrixXd fc1_w;
  Eigen::VectorXd fc1_b;
  Eigen::VectorXd bn1_gamma, bn1_beta, bn1_run_mean, bn1_run_var;
  Eigen::MatrixXd fc2_w;
  Eigen::VectorXd fc2_b;
  Eigen::VectorXd bn2_gamma, bn2_beta, bn2_run_mean, bn2_run_var;
  Eigen::MatrixXd fc3_w;
  Eigen::VectorXd fc3_b;
  NetMeta meta;
};

// Gradients (and RMSprop accumulators) for the trainable tensors only.
struct NetworkGradients {
  Eigen::MatrixXd fc1_w;
  Eigen::VectorXd fc1_b, bn1_gamma, bn1_beta;
  Eigen::MatrixXd fc2_w;
  Eigen::VectorXd fc2_b, bn2_gamma, bn2_beta;
  Eigen::MatrixXd fc3_w;
  Eigen::VectorXd fc3_b;

  static NetworkGradients zeros_like(const NetworkParameters& params);
  double max_abs() const;
  bool all_finite() const;
};

struct TrainConfig {
  double learning_rate = 1e-3;
  double rms_decay = 0.9;
  double epsilon = 1e-7;
  int batch_size = 32;
  int max_epochs = 200;
  int early_stop_patience = 20;
  double val_fraction = 0.15;
  std::uint64_t seed = 0;
};

struct TrainHistory {
  std::vector<double> train_loss;
  std::vector<double> train_acc;
  std::vector<double> val_acc;

  int epochs_run() const { return static_cast<int>(train_loss.size()); }
};

enum class ForwardMode { train, infer };

// Intermediate activations kept for the backward pass.
struct ForwardCache {
  Eigen::MatrixXd x, z1, xhat1, y1, a1, z2, xhat2, y2, a2, logits;
  Eigen::VectorXd inv_std1, inv_std2;
};

NetworkParameters init_network(int m, int k_prime, std::uint64_t seed);

// 64M + 129K' + 8768.
long param_count(int m, int k_prime);
// Structural count over the trainable tensors; must equal param_count.
long count_trainable(const NetworkParameters& params);

// Train mode uses batch statistics (batch size >= 2 required) and updates the
// running statistics with momentum 0.99; infer mode uses running statistics
// and leaves the parameters untouched.
Eigen::MatrixXd forward(NetworkParameters& params, const Eigen::MatrixXd& x,
                        ForwardMode mode, ForwardCache* cache = nullptr);
// Pure inference path.
Eigen::MatrixXd forward_infer(const NetworkParameters& params,
                              const Eigen::MatrixXd& x);

// Mean sparse categorical cross entropy, -log softmax(logits)[label].
double loss(const Eigen::MatrixXd& logits, const std::vector<int>& labels);

NetworkGradients backward(const NetworkParameters& params,
                          const ForwardCache& cache,
                          const std::vector<int>& labels);

// One RMSprop step: v <- rho v + (1-rho) g^2, theta <- theta - lr g/(sqrt(v)+eps).
// Returns the batch loss before the step. Aborts on non-finite gradients.
double backward_and_step(NetworkParameters& params, const Eigen::MatrixXd& x,
                         const std::vector<int>& labels,
                         const TrainConfig& config, NetworkGradients& rms_state);

// Full training loop over a dataset: per-sample max normalization, prefix
// truncation to M features, seeded shuffling, early stopping on validation
// accuracy with best-checkpoint restore.
std::pair<NetworkParameters, TrainHistory> train(const Dataset& train_set, int m,
                                                 const TrainConfig& config);

// Argmax of infer-mode logits on raw (unnormalized) features of length M.
int predict(const NetworkParameters& params, const Eigen::VectorXd& raw_features);
std::vector<int> predict_batch(const NetworkParameters& params,
                               const Eigen::MatrixXd& raw_features);

void save_model(const NetworkParameters& params, const std::string& path);
NetworkParameters load_model(const std::string& path);
std::string model_to_json(const NetworkParameters& params);
NetworkParameters model_from_json(const std::string& text);

// CSV with columns epoch,train_loss,train_acc,val_acc.
std::string history_to_csv(const TrainHistory& history);

}  // namespace mmbeam
