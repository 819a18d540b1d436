#include "pfid/model.hpp"

#include <cmath>
#include <sstream>
#include <stdexcept>

#include "pfid/eval.hpp"

namespace pfid {

void validate(const NetworkConfig& config) {
  if (config.input_dim < 1 || config.embedding_dim < 1) {
    throw std::invalid_argument("NetworkConfig: input and embedding widths must be >= 1");
  }
  for (const std::size_t width : config.hidden_dims) {
    if (width < 1) throw std::invalid_argument("NetworkConfig: hidden widths must be >= 1");
  }
  if (config.num_classes < 2) throw std::invalid_argument("NetworkConfig: need at least 2 classes");
}

Network::Network(NetworkConfig config, std::vector<Layer> layers)
    : config_(std::move(config)), layers_(std::move(layers)) {
  validate(config_);
  std::vector<std::size_t> widths = {config_.input_dim};
  widths.insert(widths.end(), config_.hidden_dims.begin(), config_.hidden_dims.end());
  widths.push_back(config_.embedding_dim);
  widths.push_back(config_.num_classes);
  if (layers_.size() != widths.size() - 1) {
    throw std::invalid_argument("Network: layer count does not match the configuration");
  }
  for (std::size_t l = 0; l < layers_.size(); ++l) {
    const auto rows = static_cast<Eigen::Index>(widths[l + 1]);
    const auto cols = static_cast<Eigen::Index>(widths[l]);
    if (layers_[l].weight.rows() != rows || layers_[l].weight.cols() != cols || layers_[l].bias.size() != rows) {
      std::ostringstream msg;
      msg << "Network: layer " << l << " expected " << rows << "x" << cols << " weights";
      throw std::invalid_argument(msg.str());
    }
  }
}

std::size_t Network::parameter_count() const {
  std::size_t count = 0;
  for (const auto& layer : layers_) count += static_cast<std::size_t>(layer.weight.size() + layer.bias.size());
  return count;
}

Vector Network::flatten() const {
  Vector flat(static_cast<Eigen::Index>(parameter_count()));
  Eigen::Index offset = 0;
  for (const auto& layer : layers_) {
    flat.segment(offset, layer.weight.size()) = Eigen::Map<const Vector>(layer.weight.data(), layer.weight.size());
    offset += layer.weight.size();
    flat.segment(offset, layer.bias.size()) = layer.bias;
    offset += layer.bias.size();
  }
  return flat;
}

void Network::assign(const VectorRef& flat) {
  if (flat.size() != static_cast<Eigen::Index>(parameter_count())) {
    throw std::invalid_argument("Network::assign: parameter count mismatch");
  }
  Eigen::Index offset = 0;
  for (auto& layer : layers_) {
    Eigen::Map<Vector>(layer.weight.data(), layer.weight.size()) = flat.segment(offset, layer.weight.size());
    offset += layer.weight.size();
    layer.bias = flat.segment(offset, layer.bias.size());
    offset += layer.bias.size();
  }
}

bool Network::all_finite() const {
  for (const auto& layer : layers_) {
    if (!layer.weight.allFinite() || !layer.bias.allFinite()) return false;
  }
  return true;
}

bool operator==(const Network& a, const Network& b) {
  if (!(a.config_ == b.config_) || a.layers_.size() != b.layers_.size()) return false;
  for (std::size_t l = 0; l < a.layers_.size(); ++l) {
    if (a.layers_[l].weight != b.layers_[l].weight || a.layers_[l].bias != b.layers_[l].bias) return false;
  }
  return true;
}

Network init_network(const NetworkConfig& config) {
  validate(config);
  Rng rng(config.seed);
  std::vector<std::size_t> widths = {config.input_dim};
  widths.insert(widths.end(), config.hidden_dims.begin(), config.hidden_dims.end());
  widths.push_back(config.embedding_dim);
  widths.push_back(config.num_classes);

  std::vector<Layer> layers;
  for (std::size_t l = 0; l + 1 < widths.size(); ++l) {
    const auto rows = static_cast<Eigen::Index>(widths[l + 1]);
    const auto cols = static_cast<Eigen::Index>(widths[l]);
    const double bound = std::sqrt(6.0 / static_cast<double>(cols));
    Layer layer{Matrix(rows, cols), Vector::Zero(rows)};
    for (Eigen::Index r = 0; r < rows; ++r) {
      for (Eigen::Index c = 0; c < cols; ++c) layer.weight(r, c) = rng.uniform(-bound, bound);
    }
    layers.push_back(std::move(layer));
  }
  return Network(config, std::move(layers));
}

ForwardCache forward_batch(const Network& net, const Matrix& inputs) {
  if (inputs.cols() != static_cast<Eigen::Index>(net.config().input_dim)) {
    std::ostringstream msg;
    msg << "forward: input has " << inputs.cols() << " features, network expects " << net.config().input_dim;
    throw std::invalid_argument(msg.str());
  }
  const auto& layers = net.layers();
  const std::size_t rectified = net.config().hidden_dims.size();
  ForwardCache cache;
  cache.activations.reserve(layers.size() + 1);
  cache.pre_activations.reserve(layers.size());
  cache.activations.push_back(inputs);
  for (std::size_t l = 0; l < layers.size(); ++l) {
    Matrix z = cache.activations.back() * layers[l].weight.transpose();
    z.rowwise() += layers[l].bias.transpose();
    cache.pre_activations.push_back(z);
    if (l < rectified) {
      cache.activations.push_back(z.cwiseMax(0.0));
    } else {
      cache.activations.push_back(std::move(z));
    }
  }
  return cache;
}

ForwardResult forward(const Network& net, const VectorRef& input) {
  if (input.size() != static_cast<Eigen::Index>(net.config().input_dim)) {
    std::ostringstream msg;
    msg << "forward: input has " << input.size() << " features, network expects " << net.config().input_dim;
    throw std::invalid_argument(msg.str());
  }
  const Matrix row = input.transpose();
  const ForwardCache cache = forward_batch(net, row);
  return {cache.embeddings().row(0).transpose(), cache.logits().row(0).transpose()};
}

Gradients backward(const Network& net, const ForwardCache& cache, const Matrix& grad_logits,
                   const Matrix& grad_embeddings) {
  const auto& layers = net.layers();
  const std::size_t count = layers.size();
  const std::size_t rectified = net.config().hidden_dims.size();
  Gradients grads(count);

  Matrix delta = grad_logits;
  for (std::size_t l = count; l-- > 0;) {
    grads[l].weight = delta.transpose() * cache.activations[l];
    grads[l].bias = delta.colwise().sum().transpose();
    if (l == 0) break;
    Matrix upstream = delta * layers[l].weight;
    if (l == count - 1 && grad_embeddings.size() > 0) upstream += grad_embeddings;
    if (l - 1 < rectified) {
      upstream = upstream.cwiseProduct(
          cache.pre_activations[l - 1].unaryExpr([](double z) { return z > 0.0 ? 1.0 : 0.0; }));
    }
    delta = std::move(upstream);
  }
  return grads;
}

std::string to_string(LossMode mode) {
  switch (mode) {
    case LossMode::kCrossEntropy: return "ce";
    case LossMode::kPfid: return "pfid";
    case LossMode::kSiamese: return "siamese";
  }
  return "unknown";
}

LossMode parse_loss_mode(const std::string& name) {
  if (name == "ce") return LossMode::kCrossEntropy;
  if (name == "pfid") return LossMode::kPfid;
  if (name == "siamese") return LossMode::kSiamese;
  throw std::invalid_argument("unknown loss mode '" + name + "' (expected ce, pfid or siamese)");
}

void validate(const TrainConfig& config) {
  if (config.epochs < 1) throw std::invalid_argument("TrainConfig: epochs must be >= 1");
  if (config.pairs_per_batch < 1) throw std::invalid_argument("TrainConfig: pairs_per_batch must be >= 1");
  if (!(config.learning_rate > 0.0)) throw std::invalid_argument("TrainConfig: learning rate must be > 0");
  if (!(config.momentum >= 0.0 && config.momentum < 1.0)) {
    throw std::invalid_argument("TrainConfig: momentum must lie in [0, 1)");
  }
  if (!(config.weight_decay >= 0.0)) throw std::invalid_argument("TrainConfig: weight decay must be >= 0");
  if (!(config.margin >= 0.0)) throw std::invalid_argument("TrainConfig: margin must be >= 0");
  if (!(config.siamese_margin > 0.0)) throw std::invalid_argument("TrainConfig: siamese margin must be > 0");
  for (std::size_t i = 0; i < config.lr_decay_epochs.size(); ++i) {
    const int e = config.lr_decay_epochs[i];
    if (e >= config.epochs || e < 1 || (i > 0 && e <= config.lr_decay_epochs[i - 1])) {
      throw std::invalid_argument("TrainConfig: decay epochs must be strictly increasing within [1, epochs)");
    }
  }
}

double learning_rate_at(const TrainConfig& config, int epoch) {
  double rate = config.learning_rate;
  for (const int decay_epoch : config.lr_decay_epochs) {
    if (decay_epoch <= epoch) rate *= config.lr_decay_factor;
  }
  return rate;
}

SgdOptimizer::SgdOptimizer(const Network& net) {
  for (const auto& layer : net.layers()) {
    velocity_.push_back({Matrix::Zero(layer.weight.rows(), layer.weight.cols()), Vector::Zero(layer.bias.size())});
  }
}

void SgdOptimizer::step(Network& net, const Gradients& gradients, const TrainConfig& config, int epoch) {
  auto& layers = net.layers();
  if (gradients.size() != layers.size()) throw std::invalid_argument("sgd step: gradient layer count mismatch");
  for (std::size_t l = 0; l < layers.size(); ++l) {
    if (gradients[l].weight.rows() != layers[l].weight.rows() || gradients[l].weight.cols() != layers[l].weight.cols() ||
        gradients[l].bias.size() != layers[l].bias.size()) {
      throw std::invalid_argument("sgd step: gradient shape mismatch at layer " + std::to_string(l));
    }
    if (!gradients[l].weight.allFinite() || !gradients[l].bias.allFinite()) {
      std::ostringstream msg;
      msg << "sgd step: non-finite gradient in layer " << l << " at epoch " << epoch
          << " (max |grad w| = " << gradients[l].weight.cwiseAbs().maxCoeff() << ")";
      throw std::runtime_error(msg.str());
    }
  }
  const double rate = learning_rate_at(config, epoch);
  for (std::size_t l = 0; l < layers.size(); ++l) {
    auto& v = velocity_[l];
    v.weight = config.momentum * v.weight + gradients[l].weight + config.weight_decay * layers[l].weight;
    v.bias = config.momentum * v.bias + gradients[l].bias + config.weight_decay * layers[l].bias;
    layers[l].weight -= rate * v.weight;
    layers[l].bias -= rate * v.bias;
  }
}

BatchObjective batch_objective(const Network& net, const Matrix& inputs, std::span<const Label> labels,
                               const PairBatch& pairs, const TrainConfig& config) {
  const ForwardCache cache = forward_batch(net, inputs);
  BatchObjective out;
  switch (config.loss_mode) {
    case LossMode::kCrossEntropy: {
      const LossOutput loss = cross_entropy_loss(cache.logits(), labels);
      out.value = loss.value;
      out.gradients = backward(net, cache, loss.grad_logits);
      break;
    }
    case LossMode::kPfid: {
      const LossOutput loss = pfid_loss(cache.logits(), labels, pairs, LossConfig{config.margin});
      out.value = loss.value;
      out.gradients = backward(net, cache, loss.grad_logits);
      break;
    }
    case LossMode::kSiamese: {
      const EmbeddingLossOutput loss = siamese_batch_loss(cache.embeddings(), pairs, config.siamese_margin);
      out.value = loss.value;
      out.gradients =
          backward(net, cache, Matrix::Zero(cache.logits().rows(), cache.logits().cols()), loss.grad_embeddings);
      break;
    }
  }
  return out;
}

TrainResult train(const Dataset& dataset, const NetworkConfig& net_config, const TrainConfig& train_config) {
  validate(train_config);
  if (dataset.size() == 0) throw std::invalid_argument("train: empty dataset");
  if (dataset.feature_dim() != net_config.input_dim) {
    std::ostringstream msg;
    msg << "train: dataset has " << dataset.feature_dim() << " features, network expects " << net_config.input_dim;
    throw std::invalid_argument(msg.str());
  }
  if (static_cast<std::size_t>(dataset.num_classes()) > net_config.num_classes) {
    std::ostringstream msg;
    msg << "train: dataset has " << dataset.num_classes() << " classes, network head has " << net_config.num_classes;
    throw std::invalid_argument(msg.str());
  }

  TrainResult result{init_network(net_config), {}};
  SgdOptimizer optimizer(result.network);
  Rng rng(train_config.seed);
  const std::size_t batch_size = 2 * train_config.pairs_per_batch;
  const std::size_t batches = std::max<std::size_t>(1, dataset.size() / batch_size);

  Matrix inputs(static_cast<Eigen::Index>(batch_size), static_cast<Eigen::Index>(dataset.feature_dim()));
  std::vector<Label> labels(batch_size);
  for (int epoch = 1; epoch <= train_config.epochs; ++epoch) {
    double total = 0.0;
    for (std::size_t b = 0; b < batches; ++b) {
      const PairBatch batch = build_pair_batch(dataset.labels(), train_config.pairs_per_batch, rng);
      for (std::size_t r = 0; r < batch.sample_indices.size(); ++r) {
        inputs.row(static_cast<Eigen::Index>(r)) = dataset.features().row(static_cast<Eigen::Index>(batch.sample_indices[r]));
        labels[r] = dataset.label(batch.sample_indices[r]);
      }
      const BatchObjective objective = batch_objective(result.network, inputs, labels, batch, train_config);
      if (!std::isfinite(objective.value)) {
        std::ostringstream msg;
        msg << "train: non-finite loss at epoch " << epoch << ", batch " << b;
        throw std::runtime_error(msg.str());
      }
      optimizer.step(result.network, objective.gradients, train_config, epoch);
      total += objective.value;
    }
    result.history.push_back(total / static_cast<double>(batches));
  }
  return result;
}

EmbeddingSet embed_dataset(const Network& net, const Dataset& dataset) {
  const ForwardCache cache = forward_batch(net, dataset.features());
  Matrix embeddings = cache.embeddings();
  for (Eigen::Index i = 0; i < embeddings.rows(); ++i) {
    const double norm = embeddings.row(i).norm();
    if (!(norm > 0.0) || !std::isfinite(norm)) {
      std::ostringstream msg;
      msg << "embed_dataset: sample " << i << " has a zero or non-finite embedding";
      throw std::invalid_argument(msg.str());
    }
    embeddings.row(i) /= norm;
  }
  return EmbeddingSet(std::move(embeddings), std::vector<Label>(dataset.labels().begin(), dataset.labels().end()));
}

}  // namespace pfid
