#include <benchmark/benchmark.h>

#include "pfid/data.hpp"
#include "pfid/losses.hpp"
#include "pfid/model.hpp"
#include "pfid/protocol.hpp"

namespace {

using namespace pfid;

const Dataset& dataset() {
  static const Dataset d = generate_synthetic(SynthConfig{});
  return d;
}

NetworkConfig net_config() {
  NetworkConfig c;
  c.input_dim = dataset().feature_dim();
  c.num_classes = static_cast<std::size_t>(dataset().num_classes());
  return c;
}

struct Batch {
  PairBatch pairs;
  Matrix inputs;
  std::vector<Label> labels;
};

Batch make_batch(std::size_t pairs_per_batch) {
  Rng rng(1);
  Batch b;
  b.pairs = build_pair_batch(dataset().labels(), pairs_per_batch, rng);
  b.inputs.resize(static_cast<Eigen::Index>(b.pairs.sample_indices.size()),
                  static_cast<Eigen::Index>(dataset().feature_dim()));
  for (std::size_t r = 0; r < b.pairs.sample_indices.size(); ++r) {
    b.inputs.row(static_cast<Eigen::Index>(r)) =
        dataset().features().row(static_cast<Eigen::Index>(b.pairs.sample_indices[r]));
    b.labels.push_back(dataset().label(b.pairs.sample_indices[r]));
  }
  return b;
}

void BM_PairBatch(benchmark::State& state) {
  Rng rng(2);
  for (auto _ : state) benchmark::DoNotOptimize(build_pair_batch(dataset().labels(), 8, rng));
}
BENCHMARK(BM_PairBatch);

void BM_PfidLoss(benchmark::State& state) {
  const Batch b = make_batch(static_cast<std::size_t>(state.range(0)));
  const Matrix logits = forward_batch(init_network(net_config()), b.inputs).logits();
  for (auto _ : state) benchmark::DoNotOptimize(pfid_loss(logits, b.labels, b.pairs, LossConfig{}));
}
BENCHMARK(BM_PfidLoss)->Arg(4)->Arg(8)->Arg(16);

void BM_TrainStep(benchmark::State& state) {
  const Batch b = make_batch(8);
  Network net = init_network(net_config());
  SgdOptimizer opt(net);
  TrainConfig config;
  config.loss_mode = static_cast<LossMode>(state.range(0));
  for (auto _ : state) {
    const BatchObjective objective = batch_objective(net, b.inputs, b.labels, b.pairs, config);
    opt.step(net, objective.gradients, config, 1);
  }
}
BENCHMARK(BM_TrainStep)->Arg(0)->Arg(1)->Arg(2);

EmbeddingSet test_embeddings() {
  const SplitPlan plan = identity_split(dataset().labels(), 0.2, 1);
  return embed_dataset(init_network(net_config()), dataset().subset(plan.test_indices));
}

void BM_Protocol(benchmark::State& state) {
  const EmbeddingSet e = test_embeddings();
  ProtocolConfig c;
  c.protocol = static_cast<Protocol>(state.range(0));
  c.splits = 1;
  c.trials = 10;
  c.all_identities = true;
  for (auto _ : state) benchmark::DoNotOptimize(run_protocol(e, c));
}
BENCHMARK(BM_Protocol)
    ->Arg(static_cast<int>(Protocol::kClosedSet))
    ->Arg(static_cast<int>(Protocol::kOpenSet))
    ->Arg(static_cast<int>(Protocol::kVerification))
    ->Arg(static_cast<int>(Protocol::kClustering))
    ->Unit(benchmark::kMillisecond);

}  // namespace

BENCHMARK_MAIN();
