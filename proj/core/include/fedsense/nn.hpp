#pragma once

#include <Eigen/Dense>
#include <array>
#include <span>
#include <utility>
#include <vector>

#include "fedsense/rng.hpp"
#include "fedsense/signal.hpp"

namespace fedsense {

// Fixed architecture: 32 -> 128 -> 64 -> 32 -> 2, ReLU hidden, softmax out.
inline constexpr std::array<std::pair<int, int>, 4> kLayerShapes{
    {{32, 128}, {128, 64}, {64, 32}, {32, 2}}};
inline constexpr int kParameterCount = 14626;

struct TrainConfig {
  double learning_rate = 1e-3;
  double rmsprop_decay = 0.9;
  double rmsprop_epsilon = 1e-7;
  double dropout_rate = 0.2;
  int batch_size = 32;
  int local_epochs = 1;

  friend bool operator==(const TrainConfig&, const TrainConfig&) = default;
};

/// Weight matrices are stored (fan_out x fan_in) so a forward step is
/// activations = W * x + b.
struct ModelParams {
  struct Layer {
    Eigen::MatrixXd weights;
    Eigen::VectorXd biases;
  };
  std::vector<Layer> layers;
};

/// RMSprop squared-gradient accumulators, same shapes as the model.
struct OptimizerState {
  struct Layer {
    Eigen::MatrixXd weights;
    Eigen::VectorXd biases;
  };
  std::vector<Layer> layers;
};

struct Gradients {
  std::vector<ModelParams::Layer> layers;
};

/// He-style uniform init, bound sqrt(6/fan_in); biases zero.
ModelParams init_model(Rng& rng);

/// Zero-initialized accumulators matching the model's shapes.
OptimizerState init_optimizer(const ModelParams& model);

long long count_parameters(const ModelParams& model);

/// Inference forward pass: class probabilities, no dropout.
/// Throws std::invalid_argument on a wrong input dimension.
Eigen::Vector2d forward(const ModelParams& model, const Eigen::VectorXd& features);

/// Train-mode forward pass: inverted dropout masks on the hidden
/// activations are drawn from rng.
Eigen::Vector2d forward_train(const ModelParams& model, const Eigen::VectorXd& features,
                              double dropout_rate, Rng& rng);

/// Columnwise inference over a batch; returns 2 x n probabilities.
Eigen::MatrixXd forward_batch(const ModelParams& model, const Eigen::MatrixXd& features);

/// Mean crossentropy of the batch under inference-mode activations.
double mean_loss(const ModelParams& model, std::span<const FeatureSample> batch);

/// Backpropagated mean-crossentropy gradients for one batch. Dropout masks
/// (if dropout_rate > 0) are drawn from rng; pass 0 for deterministic
/// gradients, in which case rng is not consumed.
Gradients compute_gradients(const ModelParams& model, std::span<const FeatureSample> batch,
                            double dropout_rate, Rng& rng);

/// One RMSprop step over the given gradients, in place.
void rmsprop_step(ModelParams& model, OptimizerState& opt, const Gradients& grads,
                  const TrainConfig& cfg);

/// cfg.local_epochs epochs of shuffled mini-batch RMSprop with inverted
/// dropout. Mutates model and opt in place; deterministic given rng.
/// Throws std::invalid_argument on empty data.
void train_local(ModelParams& model, OptimizerState& opt,
                 std::span<const FeatureSample> data, const TrainConfig& cfg, Rng& rng);

/// Fraction of samples whose argmax class equals the label (ties resolve
/// to class 0). Throws std::invalid_argument on empty data.
double evaluate(const ModelParams& model, std::span<const FeatureSample> data);

/// Same, over a pre-packed (32 x n) feature matrix; avoids re-packing the
/// shared test set for every sensor every round.
double evaluate_packed(const ModelParams& model, const Eigen::MatrixXd& features,
                       std::span<const int> labels);

/// Flat parameter vector in serialization order: per layer, weights
/// row-major, then biases.
std::vector<double> to_flat(const ModelParams& model);
ModelParams from_flat(std::span<const double> flat);

/// Pack a dataset as a (32 x n) column matrix plus labels.
std::pair<Eigen::MatrixXd, std::vector<int>> pack_batch(std::span<const FeatureSample> data);

}  // namespace fedsense
