#include "mmbeam/neural.hpp"

#include "json.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <sstream>
#include <stdexcept>

#include "mmbeam/rng.hpp"
#include "text_util.hpp"

namespace mmbeam {

namespace {

using json = nlohmann::ordered_json;

constexpr int kUnits1 = 64;
constexpr int kUnits2 = 128;
constexpr double kBnEps = 1e-3;
constexpr double kBnMomentum = 0.99;

enum : std::uint64_t { kStreamVal = 101, kStreamInit = 202, kStreamShuffle = 303 };

Eigen::MatrixXd uniform_fan_in(int rows, int cols, Rng& rng) {
  const double limit = std::sqrt(6.0 / static_cast<double>(cols));
  Eigen::MatrixXd w(rows, cols);
  for (int r = 0; r < rows; ++r)
    for (int c = 0; c < cols; ++c) w(r, c) = rng.uniform(-limit, limit);
  return w;
}

struct BnTrainResult {
  Eigen::MatrixXd xhat, y;
  Eigen::RowVectorXd mean, var;
  Eigen::VectorXd inv_std;
};

BnTrainResult bn_forward_train(const Eigen::MatrixXd& z,
                               const Eigen::VectorXd& gamma,
                               const Eigen::VectorXd& beta) {
  BnTrainResult out;
  out.mean = z.colwise().mean();
  Eigen::MatrixXd centered = z.rowwise() - out.mean;
  out.var = centered.array().square().colwise().mean().matrix();
  out.inv_std = (out.var.transpose().array() + kBnEps).rsqrt().matrix();
  out.xhat =
      (centered.array().rowwise() * out.inv_std.transpose().array()).matrix();
  out.y = ((out.xhat.array().rowwise() * gamma.transpose().array()).rowwise() +
           beta.transpose().array())
              .matrix();
  return out;
}

Eigen::MatrixXd bn_forward_infer(const Eigen::MatrixXd& z,
                                 const Eigen::VectorXd& gamma,
                                 const Eigen::VectorXd& beta,
                                 const Eigen::VectorXd& run_mean,
                                 const Eigen::VectorXd& run_var) {
  const Eigen::VectorXd inv_std = (run_var.array() + kBnEps).rsqrt().matrix();
  const Eigen::MatrixXd xhat = ((z.rowwise() - run_mean.transpose())
                                    .array()
                                    .rowwise() *
                                inv_std.transpose().array())
                                   .matrix();
  return ((xhat.array().rowwise() * gamma.transpose().array()).rowwise() +
          beta.transpose().array())
      .matrix();
}

// Gradient through batch statistics: standard fused batch-norm backward.
Eigen::MatrixXd bn_backward(const Eigen::MatrixXd& d_y,
                            const Eigen::MatrixXd& xhat,
                            const Eigen::VectorXd& inv_std,
                            const Eigen::VectorXd& gamma,
                            Eigen::VectorXd& d_gamma, Eigen::VectorXd& d_beta) {
  const double b = static_cast<double>(d_y.rows());
  d_gamma = (d_y.array() * xhat.array()).colwise().sum().matrix().transpose();
  d_beta = d_y.colwise().sum().transpose();
  const Eigen::MatrixXd d_xhat =
      (d_y.array().rowwise() * gamma.transpose().array()).matrix();
  const Eigen::RowVectorXd sum_dxhat = d_xhat.colwise().sum();
  const Eigen::RowVectorXd sum_dxhat_xhat =
      (d_xhat.array() * xhat.array()).colwise().sum().matrix();
  Eigen::MatrixXd d_z = b * d_xhat;
  d_z.rowwise() -= sum_dxhat;
  d_z -= (xhat.array().rowwise() * sum_dxhat_xhat.array()).matrix();
  d_z = (d_z.array().rowwise() * (inv_std.transpose().array() / b)).matrix();
  return d_z;
}

Eigen::MatrixXd softmax_rows(const Eigen::MatrixXd& logits) {
  Eigen::MatrixXd p(logits.rows(), logits.cols());
  for (Eigen::Index i = 0; i < logits.rows(); ++i) {
    const double mx = logits.row(i).maxCoeff();
    const Eigen::RowVectorXd e = (logits.row(i).array() - mx).exp().matrix();
    p.row(i) = e / e.sum();
  }
  return p;
}

int argmax_row(const Eigen::RowVectorXd& row) {
  int best = 0;
  for (Eigen::Index j = 1; j < row.size(); ++j)
    if (row(j) > row(best)) best = static_cast<int>(j);
  return best;
}

void rmsprop_tensor(Eigen::Ref<Eigen::MatrixXd> theta,
                    const Eigen::MatrixXd& grad, Eigen::Ref<Eigen::MatrixXd> v,
                    const TrainConfig& cfg) {
  v = cfg.rms_decay * v + (1.0 - cfg.rms_decay) * grad.array().square().matrix();
  theta -= (cfg.learning_rate * grad.array() / (v.array().sqrt() + cfg.epsilon))
               .matrix();
}

void rmsprop_vector(Eigen::VectorXd& theta, const Eigen::VectorXd& grad,
                    Eigen::VectorXd& v, const TrainConfig& cfg) {
  v = cfg.rms_decay * v + (1.0 - cfg.rms_decay) * grad.array().square().matrix();
  theta -= (cfg.learning_rate * grad.array() / (v.array().sqrt() + cfg.epsilon))
               .matrix();
}

void rmsprop_step(NetworkParameters& p, const NetworkGradients& g,
                  const TrainConfig& cfg, NetworkGradients& v) {
  rmsprop_tensor(p.fc1_w, g.fc1_w, v.fc1_w, cfg);
  rmsprop_vector(p.fc1_b, g.fc1_b, v.fc1_b, cfg);
  rmsprop_vector(p.bn1_gamma, g.bn1_gamma, v.bn1_gamma, cfg);
  rmsprop_vector(p.bn1_beta, g.bn1_beta, v.bn1_beta, cfg);
  rmsprop_tensor(p.fc2_w, g.fc2_w, v.fc2_w, cfg);
  rmsprop_vector(p.fc2_b, g.fc2_b, v.fc2_b, cfg);
  rmsprop_vector(p.bn2_gamma, g.bn2_gamma, v.bn2_gamma, cfg);
  rmsprop_vector(p.bn2_beta, g.bn2_beta, v.bn2_beta, cfg);
  rmsprop_tensor(p.fc3_w, g.fc3_w, v.fc3_w, cfg);
  rmsprop_vector(p.fc3_b, g.fc3_b, v.fc3_b, cfg);
}

json vec_json(const Eigen::VectorXd& v) {
  json out = json::array();
  for (Eigen::Index i = 0; i < v.size(); ++i) out.push_back(v(i));
  return out;
}

json mat_json(const Eigen::MatrixXd& m) {
  json out = json::array();
  for (Eigen::Index r = 0; r < m.rows(); ++r) {
    json row = json::array();
    for (Eigen::Index c = 0; c < m.cols(); ++c) row.push_back(m(r, c));
    out.push_back(std::move(row));
  }
  return out;
}

Eigen::VectorXd vec_from_json(const json& j, Eigen::Index expected,
                              const std::string& name) {
  if (static_cast<Eigen::Index>(j.size()) != expected)
    throw std::runtime_error("load_model: architecture mismatch in " + name);
  Eigen::VectorXd v(expected);
  for (Eigen::Index i = 0; i < expected; ++i)
    v(i) = j[static_cast<std::size_t>(i)].get<double>();
  return v;
}

Eigen::MatrixXd mat_from_json(const json& j, Eigen::Index rows,
                              Eigen::Index cols, const std::string& name) {
  if (static_cast<Eigen::Index>(j.size()) != rows)
    throw std::runtime_error("load_model: architecture mismatch in " + name);
  Eigen::MatrixXd m(rows, cols);
  for (Eigen::Index r = 0; r < rows; ++r) {
    const auto& row = j[static_cast<std::size_t>(r)];
    if (static_cast<Eigen::Index>(row.size()) != cols)
      throw std::runtime_error("load_model: architecture mismatch in " + name);
    for (Eigen::Index c = 0; c < cols; ++c)
      m(r, c) = row[static_cast<std::size_t>(c)].get<double>();
  }
  return m;
}

}  // namespace

Eigen::VectorXd normalize_features(const Eigen::VectorXd& p) {
  if (p.size() == 0) throw std::invalid_argument("normalize_features: empty");
  const double mx = p.maxCoeff();
  if (!(mx > 0.0))
    throw std::invalid_argument("normalize_features: max must be > 0");
  return p / mx;
}

namespace {

// Training/inference variant: an all-zero RSS vector (every probe clamped,
// possible at small M under heavy noise) carries no information but must
// still flow through the classifier.
Eigen::VectorXd normalize_or_zero(const Eigen::VectorXd& p) {
  const double mx = p.maxCoeff();
  return mx > 0.0 ? Eigen::VectorXd(p / mx) : Eigen::VectorXd::Zero(p.size());
}

}  // namespace

NetworkGradients NetworkGradients::zeros_like(const NetworkParameters& p) {
  NetworkGradients g;
  g.fc1_w = Eigen::MatrixXd::Zero(p.fc1_w.rows(), p.fc1_w.cols());
  g.fc1_b = Eigen::VectorXd::Zero(p.fc1_b.size());
  g.bn1_gamma = Eigen::VectorXd::Zero(p.bn1_gamma.size());
  g.bn1_beta = Eigen::VectorXd::Zero(p.bn1_beta.size());
  g.fc2_w = Eigen::MatrixXd::Zero(p.fc2_w.rows(), p.fc2_w.cols());
  g.fc2_b = Eigen::VectorXd::Zero(p.fc2_b.size());
  g.bn2_gamma = Eigen::VectorXd::Zero(p.bn2_gamma.size());
  g.bn2_beta = Eigen::VectorXd::Zero(p.bn2_beta.size());
  g.fc3_w = Eigen::MatrixXd::Zero(p.fc3_w.rows(), p.fc3_w.cols());
  g.fc3_b = Eigen::VectorXd::Zero(p.fc3_b.size());
  return g;
}

double NetworkGradients::max_abs() const {
  double mx = 0.0;
  const auto upd_m = [&mx](const Eigen::MatrixXd& m) {
    if (m.size()) mx = std::max(mx, m.cwiseAbs().maxCoeff());
  };
  const auto upd_v = [&mx](const Eigen::VectorXd& v) {
    if (v.size()) mx = std::max(mx, v.cwiseAbs().maxCoeff());
  };
  upd_m(fc1_w); upd_v(fc1_b); upd_v(bn1_gamma); upd_v(bn1_beta);
  upd_m(fc2_w); upd_v(fc2_b); upd_v(bn2_gamma); upd_v(bn2_beta);
  upd_m(fc3_w); upd_v(fc3_b);
  return mx;
}

bool NetworkGradients::all_finite() const {
  const auto ok_m = [](const Eigen::MatrixXd& m) { return m.allFinite(); };
  const auto ok_v = [](const Eigen::VectorXd& v) { return v.allFinite(); };
  return ok_m(fc1_w) && ok_v(fc1_b) && ok_v(bn1_gamma) && ok_v(bn1_beta) &&
         ok_m(fc2_w) && ok_v(fc2_b) && ok_v(bn2_gamma) && ok_v(bn2_beta) &&
         ok_m(fc3_w) && ok_v(fc3_b);
}

long param_count(int m, int k_prime) {
  if (m < 1 || k_prime < 1)
    throw std::invalid_argument("param_count: M and K' must be >= 1");
  return 64L * m + 129L * k_prime + 8768L;
}

long count_trainable(const NetworkParameters& p) {
  return static_cast<long>(p.fc1_w.size()) + p.fc1_b.size() +
         p.bn1_gamma.size() + p.bn1_beta.size() + p.fc2_w.size() +
         p.fc2_b.size() + p.bn2_gamma.size() + p.bn2_beta.size() +
         p.fc3_w.size() + p.fc3_b.size();
}

NetworkParameters init_network(int m, int k_prime, std::uint64_t seed) {
  if (m < 1) throw std::invalid_argument("init_network: M must be >= 1");
  if (k_prime < 2) throw std::invalid_argument("init_network: K' must be >= 2");

  Rng rng(hash_combine(seed, kStreamInit));
  NetworkParameters p;
  p.fc1_w = uniform_fan_in(kUnits1, m, rng);
  p.fc1_b = Eigen::VectorXd::Zero(kUnits1);
  p.bn1_gamma = Eigen::VectorXd::Ones(kUnits1);
  p.bn1_beta = Eigen::VectorXd::Zero(kUnits1);
  p.bn1_run_mean = Eigen::VectorXd::Zero(kUnits1);
  p.bn1_run_var = Eigen::VectorXd::Ones(kUnits1);
  p.fc2_w = uniform_fan_in(kUnits2, kUnits1, rng);
  p.fc2_b = Eigen::VectorXd::Zero(kUnits2);
  p.bn2_gamma = Eigen::VectorXd::Ones(kUnits2);
  p.bn2_beta = Eigen::VectorXd::Zero(kUnits2);
  p.bn2_run_mean = Eigen::VectorXd::Zero(kUnits2);
  p.bn2_run_var = Eigen::VectorXd::Ones(kUnits2);
  p.fc3_w = uniform_fan_in(k_prime, kUnits2, rng);
  p.fc3_b = Eigen::VectorXd::Zero(k_prime);
  p.meta = NetMeta{m, k_prime, seed, "per-sample max"};
  return p;
}

Eigen::MatrixXd forward(NetworkParameters& params, const Eigen::MatrixXd& x,
                        ForwardMode mode, ForwardCache* cache) {
  if (x.cols() != params.meta.input_dim)
    throw std::invalid_argument("forward: feature length mismatch");

  Eigen::MatrixXd z1 = (x * params.fc1_w.transpose()).rowwise() +
                       params.fc1_b.transpose();
  Eigen::MatrixXd y1, y2, a1, a2;
  Eigen::VectorXd inv_std1, inv_std2;
  Eigen::MatrixXd xhat1, xhat2;

  if (mode == ForwardMode::train) {
    if (x.rows() < 2)
      throw std::invalid_argument(
          "forward: train mode needs batch size >= 2 (batch variance undefined)");
    BnTrainResult bn1 = bn_forward_train(z1, params.bn1_gamma, params.bn1_beta);
    params.bn1_run_mean = kBnMomentum * params.bn1_run_mean +
                          (1.0 - kBnMomentum) * bn1.mean.transpose();
    params.bn1_run_var = kBnMomentum * params.bn1_run_var +
                         (1.0 - kBnMomentum) * bn1.var.transpose();
    y1 = std::move(bn1.y);
    xhat1 = std::move(bn1.xhat);
    inv_std1 = std::move(bn1.inv_std);
  } else {
    y1 = bn_forward_infer(z1, params.bn1_gamma, params.bn1_beta,
                          params.bn1_run_mean, params.bn1_run_var);
  }
  a1 = y1.cwiseMax(0.0);

  Eigen::MatrixXd z2 = (a1 * params.fc2_w.transpose()).rowwise() +
                       params.fc2_b.transpose();
  if (mode == ForwardMode::train) {
    BnTrainResult bn2 = bn_forward_train(z2, params.bn2_gamma, params.bn2_beta);
    params.bn2_run_mean = kBnMomentum * params.bn2_run_mean +
                          (1.0 - kBnMomentum) * bn2.mean.transpose();
    params.bn2_run_var = kBnMomentum * params.bn2_run_var +
                         (1.0 - kBnMomentum) * bn2.var.transpose();
    y2 = std::move(bn2.y);
    xhat2 = std::move(bn2.xhat);
    inv_std2 = std::move(bn2.inv_std);
  } else {
    y2 = bn_forward_infer(z2, params.bn2_gamma, params.bn2_beta,
                          params.bn2_run_mean, params.bn2_run_var);
  }
  a2 = y2.cwiseMax(0.0);

  Eigen::MatrixXd logits = (a2 * params.fc3_w.transpose()).rowwise() +
                           params.fc3_b.transpose();
  if (cache) {
    cache->x = x;
    cache->z1 = std::move(z1);
    cache->xhat1 = std::move(xhat1);
    cache->y1 = std::move(y1);
    cache->a1 = std::move(a1);
    cache->z2 = std::move(z2);
    cache->xhat2 = std::move(xhat2);
    cache->y2 = std::move(y2);
    cache->a2 = std::move(a2);
    cache->logits = logits;
    cache->inv_std1 = std::move(inv_std1);
    cache->inv_std2 = std::move(inv_std2);
  }
  return logits;
}

Eigen::MatrixXd forward_infer(const NetworkParameters& params,
                              const Eigen::MatrixXd& x) {
  // Infer mode never mutates; the const_cast only feeds the shared path.
  return forward(const_cast<NetworkParameters&>(params), x, ForwardMode::infer);
}

double loss(const Eigen::MatrixXd& logits, const std::vector<int>& labels) {
  if (static_cast<std::size_t>(logits.rows()) != labels.size())
    throw std::invalid_argument("loss: batch size mismatch");
  double total = 0.0;
  for (Eigen::Index i = 0; i < logits.rows(); ++i) {
    const int y = labels[static_cast<std::size_t>(i)];
    if (y < 0 || y >= logits.cols())
      throw std::invalid_argument("loss: label out of range");
    const double mx = logits.row(i).maxCoeff();
    const double lse = std::log((logits.row(i).array() - mx).exp().sum()) + mx;
    total += lse - logits(i, y);
  }
  return total / static_cast<double>(logits.rows());
}

NetworkGradients backward(const NetworkParameters& params,
                          const ForwardCache& cache,
                          const std::vector<int>& labels) {
  const Eigen::Index b = cache.logits.rows();
  NetworkGradients g;

  Eigen::MatrixXd d_logits = softmax_rows(cache.logits);
  for (Eigen::Index i = 0; i < b; ++i)
    d_logits(i, labels[static_cast<std::size_t>(i)]) -= 1.0;
  d_logits /= static_cast<double>(b);

  g.fc3_w = d_logits.transpose() * cache.a2;
  g.fc3_b = d_logits.colwise().sum().transpose();
  Eigen::MatrixXd d_a2 = d_logits * params.fc3_w;

  Eigen::MatrixXd d_y2 =
      (cache.y2.array() > 0.0).select(d_a2, Eigen::MatrixXd::Zero(b, d_a2.cols()));
  Eigen::MatrixXd d_z2 = bn_backward(d_y2, cache.xhat2, cache.inv_std2,
                                     params.bn2_gamma, g.bn2_gamma, g.bn2_beta);

  g.fc2_w = d_z2.transpose() * cache.a1;
  g.fc2_b = d_z2.colwise().sum().transpose();
  Eigen::MatrixXd d_a1 = d_z2 * params.fc2_w;

  Eigen::MatrixXd d_y1 =
      (cache.y1.array() > 0.0).select(d_a1, Eigen::MatrixXd::Zero(b, d_a1.cols()));
  Eigen::MatrixXd d_z1 = bn_backward(d_y1, cache.xhat1, cache.inv_std1,
                                     params.bn1_gamma, g.bn1_gamma, g.bn1_beta);

  g.fc1_w = d_z1.transpose() * cache.x;
  g.fc1_b = d_z1.colwise().sum().transpose();
  return g;
}

double backward_and_step(NetworkParameters& params, const Eigen::MatrixXd& x,
                         const std::vector<int>& labels,
                         const TrainConfig& config, NetworkGradients& rms_state) {
  ForwardCache cache;
  forward(params, x, ForwardMode::train, &cache);
  const double batch_loss = loss(cache.logits, labels);
  NetworkGradients grads = backward(params, cache, labels);
  if (!grads.all_finite())
    throw std::runtime_error(
        "backward_and_step: non-finite gradient (batch loss " +
        std::to_string(batch_loss) + ")");
  rmsprop_step(params, grads, config, rms_state);
  return batch_loss;
}

namespace {

void validate(const TrainConfig& c) {
  if (!(c.learning_rate > 0.0) || !(c.rms_decay > 0.0 && c.rms_decay < 1.0) ||
      !(c.epsilon > 0.0))
    throw std::invalid_argument("TrainConfig: optimizer constants must be positive");
  if (c.batch_size < 2 || c.max_epochs < 1 || c.early_stop_patience < 1)
    throw std::invalid_argument("TrainConfig: sizes must be positive");
  if (c.early_stop_patience >= c.max_epochs)
    throw std::invalid_argument("TrainConfig: patience must be < max_epochs");
  if (!(c.val_fraction >= 0.0 && c.val_fraction < 1.0))
    throw std::invalid_argument("TrainConfig: val_fraction must lie in [0, 1)");
}

}  // namespace

std::pair<NetworkParameters, TrainHistory> train(const Dataset& train_set, int m,
                                                 const TrainConfig& config) {
  validate(config);
  if (train_set.points.empty())
    throw std::invalid_argument("train: empty training set");
  const int n_labels = train_set.n_labels();
  std::vector<long> counts(n_labels, 0);
  for (const auto& pt : train_set.points) ++counts[pt.label];
  for (int l = 0; l < n_labels; ++l)
    if (counts[l] == 0)
      throw std::invalid_argument("train: label " + std::to_string(l) +
                                  " missing from training set");

  const int n = static_cast<int>(train_set.points.size());
  Eigen::MatrixXd features(n, m);
  for (int i = 0; i < n; ++i)
    features.row(i) =
        normalize_or_zero(truncate_features(train_set.points[i], m)).transpose();
  const std::vector<int> labels = labels_of(train_set);

  // Stratified validation carve-out; every label keeps at least one training
  // point.
  std::vector<char> in_val(n, 0);
  std::vector<std::vector<int>> by_label(n_labels);
  for (int i = 0; i < n; ++i) by_label[labels[i]].push_back(i);
  for (int l = 0; l < n_labels; ++l) {
    auto& idx = by_label[l];
    Rng rng(hash_combine(hash_combine(config.seed, kStreamVal),
                         static_cast<std::uint64_t>(l)));
    for (std::size_t i = idx.size(); i > 1; --i)
      std::swap(idx[i - 1], idx[rng.below(i)]);
    const long n_val = static_cast<long>(
        std::floor(config.val_fraction * static_cast<double>(idx.size())));
    for (long t = 0; t < n_val; ++t) in_val[idx[t]] = 1;
  }
  std::vector<int> fit_idx, val_idx;
  for (int i = 0; i < n; ++i) (in_val[i] ? val_idx : fit_idx).push_back(i);
  if (val_idx.empty()) val_idx = fit_idx;  // tiny sets: validate on the fit data

  Eigen::MatrixXd val_x(val_idx.size(), m);
  std::vector<int> val_y(val_idx.size());
  for (std::size_t i = 0; i < val_idx.size(); ++i) {
    val_x.row(static_cast<Eigen::Index>(i)) = features.row(val_idx[i]);
    val_y[i] = labels[val_idx[i]];
  }

  NetworkParameters params = init_network(m, n_labels, config.seed);
  NetworkGradients rms_state = NetworkGradients::zeros_like(params);
  NetworkParameters best = params;
  double best_val = -1.0;
  int since_best = 0;
  TrainHistory history;

  for (int epoch = 0; epoch < config.max_epochs; ++epoch) {
    Rng rng(hash_combine(hash_combine(config.seed, kStreamShuffle),
                         static_cast<std::uint64_t>(epoch)));
    std::vector<int> order = fit_idx;
    for (std::size_t i = order.size(); i > 1; --i)
      std::swap(order[i - 1], order[rng.below(i)]);

    double epoch_loss = 0.0;
    long correct = 0;
    std::size_t pos = 0;
    while (pos < order.size()) {
      std::size_t take = std::min<std::size_t>(config.batch_size,
                                               order.size() - pos);
      // A trailing singleton has no batch variance; fold it into this batch.
      if (order.size() - pos - take == 1) ++take;
      Eigen::MatrixXd bx(take, m);
      std::vector<int> by(take);
      for (std::size_t i = 0; i < take; ++i) {
        bx.row(static_cast<Eigen::Index>(i)) = features.row(order[pos + i]);
        by[i] = labels[order[pos + i]];
      }

      ForwardCache cache;
      forward(params, bx, ForwardMode::train, &cache);
      const double batch_loss = loss(cache.logits, by);
      NetworkGradients grads = backward(params, cache, by);
      if (!grads.all_finite() || !std::isfinite(batch_loss))
        throw std::runtime_error("train: diverged (non-finite loss or gradient)");
      rmsprop_step(params, grads, config, rms_state);

      epoch_loss += batch_loss * static_cast<double>(take);
      for (std::size_t i = 0; i < take; ++i)
        if (argmax_row(cache.logits.row(static_cast<Eigen::Index>(i))) == by[i])
          ++correct;
      pos += take;
    }
    epoch_loss /= static_cast<double>(order.size());

    const Eigen::MatrixXd val_logits = forward_infer(params, val_x);
    long val_correct = 0;
    for (std::size_t i = 0; i < val_y.size(); ++i)
      if (argmax_row(val_logits.row(static_cast<Eigen::Index>(i))) == val_y[i])
        ++val_correct;
    const double val_acc =
        static_cast<double>(val_correct) / static_cast<double>(val_y.size());

    history.train_loss.push_back(epoch_loss);
    history.train_acc.push_back(static_cast<double>(correct) /
                                static_cast<double>(order.size()));
    history.val_acc.push_back(val_acc);

    if (val_acc > best_val) {
      best_val = val_acc;
      best = params;
      since_best = 0;
    } else if (++since_best >= config.early_stop_patience) {
      break;
    }
  }
  return {std::move(best), std::move(history)};
}

int predict(const NetworkParameters& params, const Eigen::VectorXd& raw_features) {
  if (raw_features.size() != params.meta.input_dim)
    throw std::invalid_argument("predict: feature length mismatch");
  const Eigen::VectorXd f = normalize_or_zero(raw_features);
  const Eigen::MatrixXd logits = forward_infer(params, f.transpose());
  return argmax_row(logits.row(0));
}

std::vector<int> predict_batch(const NetworkParameters& params,
                               const Eigen::MatrixXd& raw_features) {
  if (raw_features.cols() != params.meta.input_dim)
    throw std::invalid_argument("predict_batch: feature length mismatch");
  Eigen::MatrixXd x(raw_features.rows(), raw_features.cols());
  for (Eigen::Index i = 0; i < raw_features.rows(); ++i)
    x.row(i) = normalize_or_zero(raw_features.row(i).transpose()).transpose();
  const Eigen::MatrixXd logits = forward_infer(params, x);
  std::vector<int> out(raw_features.rows());
  for (Eigen::Index i = 0; i < logits.rows(); ++i)
    out[static_cast<std::size_t>(i)] = argmax_row(logits.row(i));
  return out;
}

std::string model_to_json(const NetworkParameters& p) {
  json j;
  j["meta"] = {{"input_dim", p.meta.input_dim},
               {"n_classes", p.meta.n_classes},
               {"seed", p.meta.seed},
               {"normalization", p.meta.normalization}};
  j["fc1_w"] = mat_json(p.fc1_w);
  j["fc1_b"] = vec_json(p.fc1_b);
  j["bn1_gamma"] = vec_json(p.bn1_gamma);
  j["bn1_beta"] = vec_json(p.bn1_beta);
  j["bn1_run_mean"] = vec_json(p.bn1_run_mean);
  j["bn1_run_var"] = vec_json(p.bn1_run_var);
  j["fc2_w"] = mat_json(p.fc2_w);
  j["fc2_b"] = vec_json(p.fc2_b);
  j["bn2_gamma"] = vec_json(p.bn2_gamma);
  j["bn2_beta"] = vec_json(p.bn2_beta);
  j["bn2_run_mean"] = vec_json(p.bn2_run_mean);
  j["bn2_run_var"] = vec_json(p.bn2_run_var);
  j["fc3_w"] = mat_json(p.fc3_w);
  j["fc3_b"] = vec_json(p.fc3_b);
  return j.dump();
}

NetworkParameters model_from_json(const std::string& text) {
  const json j = json::parse(text);
  NetworkParameters p;
  p.meta.input_dim = j.at("meta").at("input_dim").get<int>();
  p.meta.n_classes = j.at("meta").at("n_classes").get<int>();
  p.meta.seed = j.at("meta").at("seed").get<std::uint64_t>();
  p.meta.normalization = j.at("meta").at("normalization").get<std::string>();
  if (p.meta.input_dim < 1 || p.meta.n_classes < 2)
    throw std::runtime_error("load_model: invalid architecture meta");

  const int m = p.meta.input_dim;
  const int kp = p.meta.n_classes;
  p.fc1_w = mat_from_json(j.at("fc1_w"), kUnits1, m, "fc1_w");
  p.fc1_b = vec_from_json(j.at("fc1_b"), kUnits1, "fc1_b");
  p.bn1_gamma = vec_from_json(j.at("bn1_gamma"), kUnits1, "bn1_gamma");
  p.bn1_beta = vec_from_json(j.at("bn1_beta"), kUnits1, "bn1_beta");
  p.bn1_run_mean = vec_from_json(j.at("bn1_run_mean"), kUnits1, "bn1_run_mean");
  p.bn1_run_var = vec_from_json(j.at("bn1_run_var"), kUnits1, "bn1_run_var");
  p.fc2_w = mat_from_json(j.at("fc2_w"), kUnits2, kUnits1, "fc2_w");
  p.fc2_b = vec_from_json(j.at("fc2_b"), kUnits2, "fc2_b");
  p.bn2_gamma = vec_from_json(j.at("bn2_gamma"), kUnits2, "bn2_gamma");
  p.bn2_beta = vec_from_json(j.at("bn2_beta"), kUnits2, "bn2_beta");
  p.bn2_run_mean = vec_from_json(j.at("bn2_run_mean"), kUnits2, "bn2_run_mean");
  p.bn2_run_var = vec_from_json(j.at("bn2_run_var"), kUnits2, "bn2_run_var");
  p.fc3_w = mat_from_json(j.at("fc3_w"), kp, kUnits2, "fc3_w");
  p.fc3_b = vec_from_json(j.at("fc3_b"), kp, "fc3_b");
  if ((p.bn1_run_var.array() <= 0.0).any() || (p.bn2_run_var.array() <= 0.0).any())
    throw std::runtime_error("load_model: running variances must be > 0");
  return p;
}

void save_model(const NetworkParameters& params, const std::string& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("save_model: cannot open " + path);
  out << model_to_json(params) << '\n';
  if (!out) throw std::runtime_error("save_model: write failed for " + path);
}

NetworkParameters load_model(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("load_model: cannot open " + path);
  std::ostringstream buf;
  buf << in.rdbuf();
  return model_from_json(buf.str());
}

std::string history_to_csv(const TrainHistory& history) {
  std::string out = "epoch,train_loss,train_acc,val_acc\n";
  for (int e = 0; e < history.epochs_run(); ++e) {
    out += std::to_string(e + 1);
    out.push_back(',');
    out += detail::format_double(history.train_loss[e]);
    out.push_back(',');
    out += detail::format_double(history.train_acc[e]);
    out.push_back(',');
    out += detail::format_double(history.val_acc[e]);
    out.push_back('\n');
  }
  return out;
}

}  // namespace mmbeam
