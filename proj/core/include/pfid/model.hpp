#pragma once

#include <cstddef>
#include <cstdint>
#include <string>
#include <vector>

#include "pfid/data.hpp"
#include "pfid/losses.hpp"
#include "pfid/numerics.hpp"

namespace pfid {

class EmbeddingSet;

enum class Activation { kRelu };

struct NetworkConfig {
  std::size_t input_dim = 32;
  std::vector<std::size_t> hidden_dims = {64};
  std::size_t embedding_dim = 32;
  std::size_t num_classes = 2;
  Activation activation = Activation::kRelu;
  std::uint64_t seed = 1;

  friend bool operator==(const NetworkConfig&, const NetworkConfig&) = default;
};

/// Throws std::invalid_argument unless all widths are >= 1 and K >= 2.
void validate(const NetworkConfig& config);

/// Affine map y = weight * x + bias; weight is (outputs x inputs).
struct Layer {
  Matrix weight;
  Vector bias;
};

/// Feedforward network: rectified hidden layers, a linear embedding layer, and
/// a linear classification head producing K logits.
class Network {
 public:
  Network(NetworkConfig config, std::vector<Layer> layers);

  const NetworkConfig& config() const { return config_; }
  const std::vector<Layer>& layers() const { return layers_; }
  std::vector<Layer>& layers() { return layers_; }

  std::size_t parameter_count() const;

  /// Parameters flattened layer by layer (weight row-major, then bias).
  Vector flatten() const;
  void assign(const VectorRef& flat);

  bool all_finite() const;

  friend bool operator==(const Network& a, const Network& b);

 private:
  NetworkConfig config_;
  std::vector<Layer> layers_;
};

/// Uniform(-a, a) weights with a = sqrt(6 / fan_in); zero biases.
Network init_network(const NetworkConfig& config);

struct ForwardResult {
  Vector embedding;
  Vector logits;
};

ForwardResult forward(const Network& net, const VectorRef& input);

/// Batch forward pass keeping the activations backprop needs. Row i of every
/// matrix belongs to input row i.
struct ForwardCache {
  std::vector<Matrix> activations;  // layer inputs, then the logits
  std::vector<Matrix> pre_activations;

  const Matrix& embeddings() const { return activations[activations.size() - 2]; }
  const Matrix& logits() const { return activations.back(); }
};

ForwardCache forward_batch(const Network& net, const Matrix& inputs);

/// Same layout as Network::layers().
using Gradients = std::vector<Layer>;

/// Parameter gradients from loss gradients on the logits and, optionally, on
/// the embeddings (pass an empty matrix to skip).
Gradients backward(const Network& net, const ForwardCache& cache, const Matrix& grad_logits,
                   const Matrix& grad_embeddings = Matrix());

enum class LossMode { kCrossEntropy, kPfid, kSiamese };

std::string to_string(LossMode mode);
LossMode parse_loss_mode(const std::string& name);

struct TrainConfig {
  int epochs = 40;
  std::size_t pairs_per_batch = 8;
  double learning_rate = 1e-3;
  double weight_decay = 5e-4;
  double momentum = 0.9;
  double lr_decay_factor = 0.1;
  std::vector<int> lr_decay_epochs = {25, 35};
  LossMode loss_mode = LossMode::kPfid;
  double margin = 1.0;
  /// Hinge margin on embedding distances for LossMode::kSiamese.
  double siamese_margin = 1.0;
  std::uint64_t seed = 1;
};

void validate(const TrainConfig& config);

/// Learning rate for a 1-based epoch: base rate times the decay factor once
/// for every decay epoch <= epoch.
double learning_rate_at(const TrainConfig& config, int epoch);

/// Momentum SGD with coupled weight decay:
/// v <- momentum * v + grad + weight_decay * theta; theta <- theta - lr * v.
class SgdOptimizer {
 public:
  explicit SgdOptimizer(const Network& net);

  /// Throws std::runtime_error naming the layer if a gradient is non-finite.
  void step(Network& net, const Gradients& gradients, const TrainConfig& config, int epoch);

 private:
  std::vector<Layer> velocity_;
};

/// Loss and gradients for one batch under the configured objective.
struct BatchObjective {
  double value = 0.0;
  Gradients gradients;
};

BatchObjective batch_objective(const Network& net, const Matrix& inputs, std::span<const Label> labels,
                               const PairBatch& pairs, const TrainConfig& config);

struct TrainResult {
  Network network;
  std::vector<double> history;  // mean batch loss per epoch
};

/// floor(n / (2 * pairs_per_batch)) pair batches per epoch (at least one).
TrainResult train(const Dataset& dataset, const NetworkConfig& net_config, const TrainConfig& train_config);

/// l2-normalised embeddings of every sample; rejects a zero embedding.
EmbeddingSet embed_dataset(const Network& net, const Dataset& dataset);

}  // namespace pfid
