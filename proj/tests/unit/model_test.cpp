#include <gtest/gtest.h>

#include <cmath>

#include "pfid/checkpoint.hpp"
#include "pfid/data.hpp"
#include "pfid/eval.hpp"
#include "pfid/losses.hpp"
#include "pfid/model.hpp"
#include "support/generators.hpp"

namespace pfid {
namespace {

NetworkConfig small_net(std::size_t input = 6, std::size_t classes = 3) {
  NetworkConfig c;
  c.input_dim = input;
  c.hidden_dims = {5};
  c.embedding_dim = 4;
  c.num_classes = classes;
  c.seed = 17;
  return c;
}

TEST(InitNetwork, DeterministicShapesAndBound) {
  const NetworkConfig config = small_net();
  const Network a = init_network(config);
  const Network b = init_network(config);
  EXPECT_TRUE(a == b);
  ASSERT_EQ(a.layers().size(), 3u);
  EXPECT_EQ(a.layers().back().weight.rows(), 3);
  EXPECT_EQ(a.layers()[1].weight.rows(), 4);
  for (const Layer& layer : a.layers()) {
    const double bound = std::sqrt(6.0 / static_cast<double>(layer.weight.cols()));
    EXPECT_LE(layer.weight.cwiseAbs().maxCoeff(), bound);
    EXPECT_EQ(layer.bias.cwiseAbs().maxCoeff(), 0.0);
  }
  NetworkConfig other = config;
  other.seed = 18;
  EXPECT_FALSE(init_network(other) == a);
  EXPECT_EQ(a.parameter_count(), (6u * 5 + 5) + (5u * 4 + 4) + (4u * 3 + 3));
}

TEST(InitNetwork, RejectsInvalidConfig) {
  NetworkConfig c = small_net();
  c.num_classes = 1;
  EXPECT_THROW(init_network(c), std::invalid_argument);
  c = small_net();
  c.hidden_dims = {0};
  EXPECT_THROW(init_network(c), std::invalid_argument);
}

TEST(Forward, ZeroWeightsGiveUniformSoftmax) {
  Network net = init_network(small_net());
  net.assign(Vector::Zero(static_cast<Eigen::Index>(net.parameter_count())));
  const ForwardResult out = forward(net, Vector::Ones(6));
  const ProbDist p = softmax(out.logits);
  for (Eigen::Index k = 0; k < 3; ++k) EXPECT_DOUBLE_EQ(p[k], 1.0 / 3.0);
}

TEST(Forward, ShapesDeterminismAndBatchAgreement) {
  const Network net = init_network(small_net());
  Rng rng(1);
  const Matrix x = gen::gaussian_matrix(rng, 5, 6);
  const ForwardCache cache = forward_batch(net, x);
  for (Eigen::Index r = 0; r < 5; ++r) {
    const ForwardResult a = forward(net, x.row(r).transpose());
    const ForwardResult b = forward(net, x.row(r).transpose());
    EXPECT_EQ(a.embedding.size(), 4);
    EXPECT_EQ(a.logits, b.logits);
    EXPECT_LT((a.logits.transpose() - cache.logits().row(r)).cwiseAbs().maxCoeff(), 1e-14);
    EXPECT_LT((a.embedding.transpose() - cache.embeddings().row(r)).cwiseAbs().maxCoeff(), 1e-14);
  }
  EXPECT_THROW(forward(net, Vector::Ones(5)), std::invalid_argument);
}

TEST(Sgd, ZeroGradientNoDecayLeavesParameters) {
  Network net = init_network(small_net());
  const Network before = net;
  Gradients zero = net.layers();
  for (Layer& l : zero) {
    l.weight.setZero();
    l.bias.setZero();
  }
  TrainConfig config;
  config.weight_decay = 0.0;
  SgdOptimizer opt(net);
  opt.step(net, zero, config, 1);
  opt.step(net, zero, config, 2);
  EXPECT_TRUE(net == before);
}

TEST(Sgd, LearningRateSchedule) {
  const TrainConfig config;
  EXPECT_DOUBLE_EQ(learning_rate_at(config, 10), 1e-3);
  EXPECT_DOUBLE_EQ(learning_rate_at(config, 24), 1e-3);
  EXPECT_DOUBLE_EQ(learning_rate_at(config, 25), 1e-4);
  EXPECT_DOUBLE_EQ(learning_rate_at(config, 30), 1e-4);
  EXPECT_DOUBLE_EQ(learning_rate_at(config, 38), 1e-5);
  EXPECT_EQ(config.epochs, 40);
}

TEST(Sgd, QuadraticStepsMatchHandComputation) {
  // Every parameter minimises theta^2, so the gradient is 2 theta.
  Network net = init_network(small_net());
  TrainConfig config;
  config.learning_rate = 0.1;
  config.momentum = 0.5;
  config.weight_decay = 0.01;
  config.lr_decay_epochs = {};
  SgdOptimizer opt(net);
  const Vector theta0 = net.flatten();
  auto quadratic_grads = [](const Network& n) {
    Gradients g = n.layers();
    for (Layer& l : g) {
      l.weight *= 2.0;
      l.bias *= 2.0;
    }
    return g;
  };
  opt.step(net, quadratic_grads(net), config, 1);
  const Vector v1 = 2.01 * theta0;
  const Vector theta1 = theta0 - 0.1 * v1;
  EXPECT_LT((net.flatten() - theta1).cwiseAbs().maxCoeff(), 1e-15);
  opt.step(net, quadratic_grads(net), config, 2);
  const Vector theta2 = theta1 - 0.1 * (0.5 * v1 + 2.01 * theta1);
  EXPECT_LT((net.flatten() - theta2).cwiseAbs().maxCoeff(), 1e-15);
}

TEST(Sgd, NonFiniteGradientAborts) {
  Network net = init_network(small_net());
  Gradients g = net.layers();
  g[1].bias[0] = std::numeric_limits<double>::quiet_NaN();
  SgdOptimizer opt(net);
  try {
    opt.step(net, g, TrainConfig{}, 1);
    FAIL() << "expected an abort";
  } catch (const std::runtime_error& e) {
    EXPECT_NE(std::string(e.what()).find("layer 1"), std::string::npos) << e.what();
  }
}

TEST(TrainConfig, Validation) {
  TrainConfig c;
  c.learning_rate = 0.0;
  EXPECT_THROW(validate(c), std::invalid_argument);
  c = TrainConfig{};
  c.momentum = 1.0;
  EXPECT_THROW(validate(c), std::invalid_argument);
  c = TrainConfig{};
  c.lr_decay_epochs = {35, 25};
  EXPECT_THROW(validate(c), std::invalid_argument);
  c = TrainConfig{};
  c.lr_decay_epochs = {25, 40};
  EXPECT_THROW(validate(c), std::invalid_argument);
  EXPECT_EQ(parse_loss_mode("pfid"), LossMode::kPfid);
  EXPECT_EQ(to_string(LossMode::kSiamese), "siamese");
  EXPECT_THROW(parse_loss_mode("triplet"), std::invalid_argument);
}

// Kinks: ReLU pre-activations at zero, argmax ties feeding the gate, and
// hinge boundaries. Draws close to any of them are skipped.
bool near_kink(const Network& net, const Matrix& x, const std::vector<Label>& labels, const PairBatch& pairs,
               const TrainConfig& config) {
  const ForwardCache cache = forward_batch(net, x);
  for (std::size_t l = 0; l + 2 < net.layers().size(); ++l) {
    if (cache.pre_activations[l].cwiseAbs().minCoeff() < 1e-4) return true;
  }
  for (Eigen::Index r = 0; r < x.rows(); ++r) {
    if (gen::top_gap(cache.logits().row(r).transpose()) < 1e-4) return true;
  }
  for (const auto& p : pairs.dissimilar_pairs) {
    const Vector zi = cache.logits().row(static_cast<Eigen::Index>(p.first)).transpose();
    const Vector zj = cache.logits().row(static_cast<Eigen::Index>(p.second)).transpose();
    if (std::abs(kl_divergence_logits(zi, zj).value - config.margin) < 1e-4) return true;
    if (std::abs(kl_divergence_logits(zj, zi).value - config.margin) < 1e-4) return true;
    const double d = (cache.embeddings().row(static_cast<Eigen::Index>(p.first)) -
                      cache.embeddings().row(static_cast<Eigen::Index>(p.second))).norm();
    if (std::abs(d - config.siamese_margin) < 1e-4) return true;
  }
  (void)labels;
  return false;
}

TEST(Backward, EndToEndParameterGradients) {
  Rng rng(41);
  int checked = 0;
  for (int attempt = 0; attempt < 200 && checked < 30; ++attempt) {
    NetworkConfig nc = small_net(5, 2 + rng.uniform_index(3));
    nc.seed = rng.next();
    Network net = init_network(nc);
    const Matrix x = gen::gaussian_matrix(rng, 4, 5);
    const std::vector<Label> labels{1, 1, 2, 2};
    PairBatch pairs;
    pairs.sample_indices = {0, 1, 2, 3};
    pairs.similar_pairs = {{0, 1}, {2, 3}};
    pairs.dissimilar_pairs = {{0, 2}, {0, 3}, {1, 2}, {1, 3}};
    TrainConfig config;
    config.loss_mode = static_cast<LossMode>(checked % 3);
    config.margin = 0.05;  // keeps some hinges active on an untrained net
    if (near_kink(net, x, labels, pairs, config)) continue;

    const BatchObjective objective = batch_objective(net, x, labels, pairs, config);
    Network flat_grads(nc, objective.gradients);
    const Vector theta = net.flatten();
    Network probe = net;
    const auto f = [&](const Vector& v) {
      probe.assign(v);
      return batch_objective(probe, x, labels, pairs, config).value;
    };
    const gen::GradientCheck check = gen::check_gradient(f, theta, flat_grads.flatten());
    EXPECT_LT(check.max_relative_error, 1e-4) << "mode " << to_string(config.loss_mode);
    ++checked;
  }
  EXPECT_EQ(checked, 30);
}

// Two Gaussian blobs far apart along the first axis.
Dataset separable_toy(std::uint64_t seed) {
  Rng rng(seed);
  Matrix f(40, 2);
  std::vector<Label> labels;
  for (Eigen::Index i = 0; i < 40; ++i) {
    const Label l = i < 20 ? 1 : 2;
    f(i, 0) = (l == 1 ? -2.0 : 2.0) + 0.3 * rng.normal();
    f(i, 1) = rng.normal();
    labels.push_back(l);
  }
  return Dataset(f, labels, 2);
}

// Independent separability certificate: a perceptron reaching zero errors.
bool perceptron_separates(const Dataset& d) {
  Vector w = Vector::Zero(3);
  for (int pass = 0; pass < 1000; ++pass) {
    int errors = 0;
    for (std::size_t i = 0; i < d.size(); ++i) {
      Vector x(3);
      x << d.features()(static_cast<Eigen::Index>(i), 0), d.features()(static_cast<Eigen::Index>(i), 1), 1.0;
      const double y = d.label(i) == 1 ? -1.0 : 1.0;
      if (y * w.dot(x) <= 0) {
        w += y * x;
        ++errors;
      }
    }
    if (errors == 0) return true;
  }
  return false;
}

TEST(Train, CrossEntropySeparatesToySet) {
  const Dataset d = separable_toy(5);
  ASSERT_TRUE(perceptron_separates(d));
  NetworkConfig nc = small_net(2, 2);
  TrainConfig tc;
  tc.loss_mode = LossMode::kCrossEntropy;
  tc.epochs = 30;
  tc.learning_rate = 0.05;
  tc.lr_decay_epochs = {};
  const TrainResult r = train(d, nc, tc);
  ASSERT_EQ(r.history.size(), 30u);
  std::size_t correct = 0;
  for (std::size_t i = 0; i < d.size(); ++i) {
    correct += argmax(forward(r.network, d.sample(i)).logits) + 1 == d.label(i);
  }
  EXPECT_EQ(correct, d.size());
}

TEST(Train, DeterministicFiniteHistory) {
  SynthConfig sc;
  sc.num_identities = 6;
  sc.min_samples = 5;
  sc.max_samples = 9;
  sc.feature_dim = 8;
  sc.nuisance_dim = 2;
  const Dataset d = generate_synthetic(sc);
  NetworkConfig nc = small_net(8, 6);
  for (const LossMode mode : {LossMode::kCrossEntropy, LossMode::kPfid, LossMode::kSiamese}) {
    TrainConfig tc;
    tc.loss_mode = mode;
    tc.epochs = 6;
    tc.lr_decay_epochs = {4};
    const TrainResult a = train(d, nc, tc);
    const TrainResult b = train(d, nc, tc);
    EXPECT_TRUE(a.network == b.network) << to_string(mode);
    EXPECT_EQ(a.history, b.history);
    EXPECT_EQ(a.history.size(), 6u);
    for (const double v : a.history) EXPECT_TRUE(std::isfinite(v));
    EXPECT_TRUE(a.network.all_finite());
  }
}

TEST(Train, LossModesShareFirstBatch) {
  // Replays the first batch outside train(): both objectives must see the
  // same initial network and the same sampled pairs.
  const Dataset d = separable_toy(6);
  const NetworkConfig nc = small_net(2, 2);
  TrainConfig ce;
  ce.loss_mode = LossMode::kCrossEntropy;
  ce.epochs = 1;
  ce.lr_decay_epochs = {};
  ce.pairs_per_batch = 12;  // 40 samples -> a single batch per epoch
  TrainConfig pf = ce;
  pf.loss_mode = LossMode::kPfid;

  Rng rng(ce.seed);
  const PairBatch batch = build_pair_batch(d.labels(), ce.pairs_per_batch, rng);
  Matrix x(static_cast<Eigen::Index>(batch.sample_indices.size()), 2);
  std::vector<Label> labels;
  for (std::size_t r = 0; r < batch.sample_indices.size(); ++r) {
    x.row(static_cast<Eigen::Index>(r)) = d.features().row(static_cast<Eigen::Index>(batch.sample_indices[r]));
    labels.push_back(d.label(batch.sample_indices[r]));
  }
  const Matrix logits = forward_batch(init_network(nc), x).logits();
  EXPECT_EQ(train(d, nc, ce).history.front(), cross_entropy_loss(logits, labels).value);
  EXPECT_EQ(train(d, nc, pf).history.front(), pfid_loss(logits, labels, batch, LossConfig{pf.margin}).value);
}

TEST(Train, RejectsMismatchedDataset) {
  const Dataset d = separable_toy(7);
  EXPECT_THROW(train(d, small_net(3, 2), TrainConfig{}), std::invalid_argument);
  EXPECT_THROW(train(d, small_net(2, 1), TrainConfig{}), std::invalid_argument);
}

TEST(Embed, UnitNormRowsAndDeterminism) {
  const Dataset d = separable_toy(8);
  const Network net = init_network(small_net(2, 2));
  const EmbeddingSet e = embed_dataset(net, d);
  EXPECT_EQ(e.size(), d.size());
  for (std::size_t i = 0; i < e.size(); ++i) EXPECT_NEAR(e.row(i).norm(), 1.0, 1e-12);
  const EmbeddingSet again = embed_dataset(net, d);
  EXPECT_EQ(e.vectors(), again.vectors());
}

TEST(Embed, ZeroEmbeddingNamesSample) {
  Network net = init_network(small_net(2, 2));
  net.assign(Vector::Zero(static_cast<Eigen::Index>(net.parameter_count())));
  const Dataset d = separable_toy(9);
  try {
    embed_dataset(net, d);
    FAIL() << "expected rejection";
  } catch (const std::invalid_argument& e) {
    EXPECT_NE(std::string(e.what()).find("sample 0"), std::string::npos) << e.what();
  }
}

TEST(Checkpoint, RoundTripIsBitExact) {
  Network net = init_network(small_net());
  Rng rng(3);
  net.assign(gen::gaussian_vector(rng, static_cast<Eigen::Index>(net.parameter_count()), 1e-3) * 1234.5678);
  const CheckpointMetadata meta{{"loss", "pfid"}, {"margin", "1"}};
  const std::string text = serialize_checkpoint(net, meta);
  const Checkpoint back = parse_checkpoint(text);
  EXPECT_TRUE(back.network == net);
  EXPECT_EQ(back.network.config(), net.config());
  EXPECT_EQ(back.metadata, meta);
  EXPECT_EQ(serialize_checkpoint(back.network, back.metadata), text);
}

TEST(Checkpoint, MalformedRejected) {
  const std::string text = serialize_checkpoint(init_network(small_net()));
  EXPECT_THROW(parse_checkpoint("not a checkpoint\n"), std::invalid_argument);
  EXPECT_THROW(parse_checkpoint(text.substr(0, text.size() / 2)), std::invalid_argument);
  EXPECT_THROW(load_checkpoint("/nonexistent/pfid.ckpt"), std::runtime_error);
}

}  // namespace
}  // namespace pfid
