#include "fedsense/nn.hpp"

#include <cmath>
#include <stdexcept>

namespace fedsense {

namespace {

void check_table_shapes(const ModelParams& model) {
  if (model.layers.size() != kLayerShapes.size()) {
    throw std::invalid_argument("model has wrong layer count");
  }
  for (std::size_t l = 0; l < model.layers.size(); ++l) {
    auto [fan_in, fan_out] = kLayerShapes[l];
    if (model.layers[l].weights.rows() != fan_out ||
        model.layers[l].weights.cols() != fan_in ||
        model.layers[l].biases.size() != fan_out) {
      throw std::invalid_argument("model layer shape mismatch");
    }
  }
}

void check_train_config(const TrainConfig& cfg) {
  if (!(cfg.dropout_rate >= 0.0 && cfg.dropout_rate < 1.0)) {
    throw std::invalid_argument("dropout_rate must be in [0, 1)");
  }
  // Zero is allowed here (a no-op step); simulation configs require > 0.
  if (!(cfg.learning_rate >= 0.0)) {
    throw std::invalid_argument("learning_rate must not be negative");
  }
  if (cfg.batch_size < 1) throw std::invalid_argument("batch_size must be >= 1");
  if (cfg.local_epochs < 1) throw std::invalid_argument("local_epochs must be >= 1");
}

// Columnwise numerically stable softmax.
Eigen::MatrixXd softmax_cols(const Eigen::MatrixXd& logits) {
  Eigen::RowVectorXd max = logits.colwise().maxCoeff();
  Eigen::MatrixXd e = (logits.rowwise() - max).array().exp();
  Eigen::RowVectorXd sum = e.colwise().sum();
  return e.array().rowwise() / sum.array();
}

struct ForwardCache {
  // inputs[l] is what layer l consumed (inputs[0] is the feature batch,
  // later entries are post-ReLU, post-dropout activations).
  std::vector<Eigen::MatrixXd> inputs;
  std::vector<Eigen::MatrixXd> pre;    // pre-activations per layer
  std::vector<Eigen::MatrixXd> masks;  // inverted-dropout masks, empty when rate == 0
  Eigen::MatrixXd probs;               // 2 x n
};

// rng may be null only when dropout_rate == 0. Mask entries are drawn in a
// fixed (column-outer, row-inner) order so results do not depend on Eigen
// internals.
ForwardCache forward_cached(const ModelParams& model, const Eigen::MatrixXd& x,
                            double dropout_rate, Rng* rng) {
  const auto n_layers = model.layers.size();
  ForwardCache cache;
  cache.inputs.reserve(n_layers);
  cache.pre.reserve(n_layers);

  Eigen::MatrixXd a = x;
  for (std::size_t l = 0; l < n_layers; ++l) {
    cache.inputs.push_back(a);
    Eigen::MatrixXd z =
        (model.layers[l].weights * a).colwise() + model.layers[l].biases;
    cache.pre.push_back(z);
    if (l + 1 == n_layers) {
      cache.probs = softmax_cols(z);
      break;
    }
    a = z.cwiseMax(0.0);
    if (dropout_rate > 0.0) {
      const double keep_scale = 1.0 / (1.0 - dropout_rate);
      Eigen::MatrixXd mask(a.rows(), a.cols());
      for (Eigen::Index c = 0; c < mask.cols(); ++c) {
        for (Eigen::Index r = 0; r < mask.rows(); ++r) {
          mask(r, c) = rng->bernoulli(dropout_rate) ? 0.0 : keep_scale;
        }
      }
      a = a.cwiseProduct(mask);
      cache.masks.push_back(std::move(mask));
    }
  }
  return cache;
}

}  // namespace

ModelParams init_model(Rng& rng) {
  ModelParams model;
  model.layers.reserve(kLayerShapes.size());
  for (auto [fan_in, fan_out] : kLayerShapes) {
    ModelParams::Layer layer;
    layer.weights.resize(fan_out, fan_in);
    double bound = std::sqrt(6.0 / fan_in);
    // Row-major fill order, matching the serialization layout.
    for (int r = 0; r < fan_out; ++r) {
      for (int c = 0; c < fan_in; ++c) {
        layer.weights(r, c) = rng.uniform(-bound, bound);
      }
    }
    layer.biases = Eigen::VectorXd::Zero(fan_out);
    model.layers.push_back(std::move(layer));
  }
  return model;
}

OptimizerState init_optimizer(const ModelParams& model) {
  OptimizerState opt;
  opt.layers.reserve(model.layers.size());
  for (const auto& layer : model.layers) {
    opt.layers.push_back({Eigen::MatrixXd::Zero(layer.weights.rows(), layer.weights.cols()),
                          Eigen::VectorXd::Zero(layer.biases.size())});
  }
  return opt;
}

long long count_parameters(const ModelParams& model) {
  long long n = 0;
  for (const auto& layer : model.layers) {
    n += layer.weights.size() + layer.biases.size();
  }
  return n;
}

Eigen::Vector2d forward(const ModelParams& model, const Eigen::VectorXd& features) {
  if (features.size() != model.layers.front().weights.cols()) {
    throw std::invalid_argument("input dimension mismatch");
  }
  return forward_cached(model, features, 0.0, nullptr).probs.col(0);
}

Eigen::Vector2d forward_train(const ModelParams& model, const Eigen::VectorXd& features,
                              double dropout_rate, Rng& rng) {
  if (features.size() != model.layers.front().weights.cols()) {
    throw std::invalid_argument("input dimension mismatch");
  }
  return forward_cached(model, features, dropout_rate, &rng).probs.col(0);
}

Eigen::MatrixXd forward_batch(const ModelParams& model, const Eigen::MatrixXd& features) {
  if (features.rows() != model.layers.front().weights.cols()) {
    throw std::invalid_argument("input dimension mismatch");
  }
  return forward_cached(model, features, 0.0, nullptr).probs;
}

std::pair<Eigen::MatrixXd, std::vector<int>> pack_batch(
    std::span<const FeatureSample> data) {
  Eigen::MatrixXd x(kFeatureCount, static_cast<Eigen::Index>(data.size()));
  std::vector<int> labels(data.size());
  for (std::size_t k = 0; k < data.size(); ++k) {
    x.col(static_cast<Eigen::Index>(k)) =
        Eigen::Map<const Eigen::VectorXd>(data[k].features.data(), kFeatureCount);
    labels[k] = data[k].label;
  }
  return {std::move(x), std::move(labels)};
}

double mean_loss(const ModelParams& model, std::span<const FeatureSample> batch) {
  if (batch.empty()) throw std::invalid_argument("empty batch");
  auto [x, labels] = pack_batch(batch);
  // Log-softmax keeps the loss finite for any finite logits.
  Eigen::MatrixXd z = x;
  for (std::size_t l = 0; l < model.layers.size(); ++l) {
    z = ((model.layers[l].weights * z).colwise() + model.layers[l].biases).eval();
    if (l + 1 < model.layers.size()) z = z.cwiseMax(0.0);
  }
  double total = 0.0;
  for (Eigen::Index c = 0; c < z.cols(); ++c) {
    double m = z.col(c).maxCoeff();
    double lse = m + std::log((z.col(c).array() - m).exp().sum());
    total += lse - z(labels[static_cast<std::size_t>(c)], c);
  }
  return total / static_cast<double>(z.cols());
}

Gradients compute_gradients(const ModelParams& model, std::span<const FeatureSample> batch,
                            double dropout_rate, Rng& rng) {
  if (batch.empty()) throw std::invalid_argument("empty batch");
  auto [x, labels] = pack_batch(batch);
  const auto n = static_cast<double>(batch.size());
  ForwardCache cache = forward_cached(model, x, dropout_rate, &rng);

  Gradients grads;
  grads.layers.resize(model.layers.size());

  // d(mean crossentropy)/d(logits) = (probs - onehot) / n
  Eigen::MatrixXd delta = cache.probs;
  for (Eigen::Index c = 0; c < delta.cols(); ++c) {
    delta(labels[static_cast<std::size_t>(c)], c) -= 1.0;
  }
  delta /= n;

  for (std::size_t l = model.layers.size(); l-- > 0;) {
    grads.layers[l].weights.noalias() = delta * cache.inputs[l].transpose();
    grads.layers[l].biases = delta.rowwise().sum();
    if (l > 0) {
      Eigen::MatrixXd dh = model.layers[l].weights.transpose() * delta;
      if (!cache.masks.empty()) dh = dh.cwiseProduct(cache.masks[l - 1]);
      delta = dh.cwiseProduct(
          (cache.pre[l - 1].array() > 0.0).cast<double>().matrix());
    }
  }
  return grads;
}

void rmsprop_step(ModelParams& model, OptimizerState& opt, const Gradients& grads,
                  const TrainConfig& cfg) {
  const double d = cfg.rmsprop_decay;
  for (std::size_t l = 0; l < model.layers.size(); ++l) {
    auto& vw = opt.layers[l].weights;
    auto& vb = opt.layers[l].biases;
    const auto& gw = grads.layers[l].weights;
    const auto& gb = grads.layers[l].biases;
    vw.array() = d * vw.array() + (1.0 - d) * gw.array().square();
    vb.array() = d * vb.array() + (1.0 - d) * gb.array().square();
    model.layers[l].weights.array() -=
        cfg.learning_rate * gw.array() / (vw.array().sqrt() + cfg.rmsprop_epsilon);
    model.layers[l].biases.array() -=
        cfg.learning_rate * gb.array() / (vb.array().sqrt() + cfg.rmsprop_epsilon);
  }
}

void train_local(ModelParams& model, OptimizerState& opt,
                 std::span<const FeatureSample> data, const TrainConfig& cfg, Rng& rng) {
  if (data.empty()) throw std::invalid_argument("empty training dataset");
  check_train_config(cfg);

  std::vector<std::size_t> order(data.size());
  std::vector<FeatureSample> batch;
  batch.reserve(static_cast<std::size_t>(cfg.batch_size));
  for (int epoch = 0; epoch < cfg.local_epochs; ++epoch) {
    for (std::size_t k = 0; k < order.size(); ++k) order[k] = k;
    rng.shuffle(order);
    for (std::size_t start = 0; start < order.size();
         start += static_cast<std::size_t>(cfg.batch_size)) {
      std::size_t stop = std::min(order.size(), start + static_cast<std::size_t>(cfg.batch_size));
      batch.clear();
      for (std::size_t k = start; k < stop; ++k) batch.push_back(data[order[k]]);
      Gradients grads = compute_gradients(model, batch, cfg.dropout_rate, rng);
      rmsprop_step(model, opt, grads, cfg);
    }
  }
}

double evaluate(const ModelParams& model, std::span<const FeatureSample> data) {
  if (data.empty()) throw std::invalid_argument("empty evaluation dataset");
  auto [x, labels] = pack_batch(data);
  return evaluate_packed(model, x, labels);
}

double evaluate_packed(const ModelParams& model, const Eigen::MatrixXd& features,
                       std::span<const int> labels) {
  if (features.cols() == 0) throw std::invalid_argument("empty evaluation dataset");
  if (static_cast<std::size_t>(features.cols()) != labels.size()) {
    throw std::invalid_argument("feature/label size mismatch");
  }
  // Softmax is monotone, so argmax over logits matches argmax over probs.
  Eigen::MatrixXd z = features;
  for (std::size_t l = 0; l < model.layers.size(); ++l) {
    z = ((model.layers[l].weights * z).colwise() + model.layers[l].biases).eval();
    if (l + 1 < model.layers.size()) z = z.cwiseMax(0.0);
  }
  long long correct = 0;
  for (Eigen::Index c = 0; c < z.cols(); ++c) {
    int predicted = z(1, c) > z(0, c) ? 1 : 0;
    if (predicted == labels[static_cast<std::size_t>(c)]) ++correct;
  }
  return static_cast<double>(correct) / static_cast<double>(labels.size());
}

std::vector<double> to_flat(const ModelParams& model) {
  std::vector<double> flat;
  flat.reserve(static_cast<std::size_t>(count_parameters(model)));
  for (const auto& layer : model.layers) {
    for (Eigen::Index r = 0; r < layer.weights.rows(); ++r) {
      for (Eigen::Index c = 0; c < layer.weights.cols(); ++c) {
        flat.push_back(layer.weights(r, c));
      }
    }
    for (Eigen::Index r = 0; r < layer.biases.size(); ++r) {
      flat.push_back(layer.biases(r));
    }
  }
  return flat;
}

ModelParams from_flat(std::span<const double> flat) {
  if (flat.size() != static_cast<std::size_t>(kParameterCount)) {
    throw std::invalid_argument("flat parameter vector has wrong length");
  }
  ModelParams model;
  std::size_t pos = 0;
  for (auto [fan_in, fan_out] : kLayerShapes) {
    ModelParams::Layer layer;
    layer.weights.resize(fan_out, fan_in);
    for (int r = 0; r < fan_out; ++r) {
      for (int c = 0; c < fan_in; ++c) layer.weights(r, c) = flat[pos++];
    }
    layer.biases.resize(fan_out);
    for (int r = 0; r < fan_out; ++r) layer.biases(r) = flat[pos++];
    model.layers.push_back(std::move(layer));
  }
  check_table_shapes(model);
  return model;
}

}  // namespace fedsense
