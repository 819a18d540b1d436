#pragma once

#include <cstdint>
#include <functional>
#include <string>
#include <vector>

#include "pfid/data.hpp"
#include "pfid/eval.hpp"
#include "pfid/model.hpp"

namespace pfid {

enum class Protocol { kClassification, kClosedSet, kOpenSet, kVerification, kClustering };

std::string to_string(Protocol protocol);
/// Accepts classification, closed, open, verification, cluster.
Protocol parse_protocol(const std::string& name);

struct ProtocolConfig {
  Protocol protocol = Protocol::kClosedSet;
  int splits = 5;
  int trials = 100;
  double far = 0.01;
  double test_fraction = 0.2;
  std::uint64_t seed = 1;
  /// Evaluate every identity in the set rather than an identity split; used
  /// when the set is already a held-out population.
  bool all_identities = false;
  /// CMC length; 0 means the number of gallery identities.
  std::size_t max_rank = 0;
  int kmeans_restarts = 10;
};

void validate(const ProtocolConfig& config);

/// Seed of split s is seed + s; seed of trial t within it is split seed + 1000 + t.
inline std::uint64_t split_seed(std::uint64_t seed, int split) { return seed + static_cast<std::uint64_t>(split); }
inline std::uint64_t trial_seed(std::uint64_t split_seed_value, int trial) {
  return split_seed_value + 1000 + static_cast<std::uint64_t>(trial);
}

struct SplitResult {
  int split = 0;
  std::uint64_t seed = 0;
  std::size_t test_identities = 0;
  std::size_t test_samples = 0;
  std::vector<double> trial_values;
  double value = 0.0;  // mean of trial_values
};

struct Summary {
  double mean = 0.0;
  double std = 0.0;  // population standard deviation
};

Summary summarize(std::span<const double> values);

/// FAR grid (log-spaced, 1e-3 upward) on which averaged ROC / DIR curves are
/// reported.
std::vector<double> far_grid();

struct EvalReport {
  Protocol protocol = Protocol::kClosedSet;
  ProtocolConfig config;
  std::vector<SplitResult> splits;
  /// Values aggregated into mean/std: every trial for closed and open set,
  /// one per split otherwise. Split-major, ascending trial order.
  std::vector<double> values;
  double mean = 0.0;
  double std = 0.0;
  /// Mean CMC over all trials (closed set).
  std::vector<double> cmc;
  /// Mean TAR (verification) or DIR (open set) over splits/trials on far_grid().
  std::vector<CurvePoint> rate_curve;
};

/// Runs a protocol on frozen embeddings. Classification uses stratified
/// splits of the whole set; the other protocols evaluate the test identities
/// of an identity split (or every identity with all_identities).
EvalReport run_protocol(const EmbeddingSet& embeddings, const ProtocolConfig& config);

/// Produces a trained network for one split's training portion (labels
/// densified to 1..K').
using NetworkFactory = std::function<Network(const Dataset& train, std::uint64_t split_seed)>;

/// Split, train per split through `factory`, embed, evaluate, aggregate.
EvalReport run_protocol(const Dataset& dataset, const NetworkFactory& factory, const ProtocolConfig& config);

/// Embeds `target` with a network trained elsewhere and runs the closed-set,
/// open-set and verification protocols on it.
std::vector<EvalReport> transfer_eval(const Network& source_model, const Dataset& target, ProtocolConfig config);

}  // namespace pfid
