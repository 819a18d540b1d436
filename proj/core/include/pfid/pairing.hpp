#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <vector>

#include "pfid/rng.hpp"

namespace pfid {

/// Identity labels are dense integers starting at 1.
using Label = int;

/// Unordered pair of batch positions, stored with first < second for C_d.
struct IndexPair {
  std::size_t first = 0;
  std::size_t second = 0;

  friend bool operator==(const IndexPair&, const IndexPair&) = default;
};

/// A training mini-batch. Pair entries index into sample_indices (batch
/// positions), and sample_indices holds dataset indices.
///
/// Similar pairs occupy positions (2t, 2t + 1). Dissimilar pairs are every
/// unordered cross-label pair of batch positions, in lexicographic order.
struct PairBatch {
  std::vector<std::size_t> sample_indices;
  std::vector<IndexPair> similar_pairs;
  std::vector<IndexPair> dissimilar_pairs;
};

/// Draws `pairs_per_batch` anchors (without replacement while enough eligible
/// samples exist) from classes with at least two samples, gives each a
/// distinct same-class partner, and enumerates all cross-label pairs.
PairBatch build_pair_batch(std::span<const Label> labels, std::size_t pairs_per_batch, Rng& rng);

enum class SplitKind { kStratifiedBySample, kDisjointByIdentity };

struct SplitPlan {
  std::vector<std::size_t> train_indices;
  std::vector<std::size_t> test_indices;
  SplitKind kind = SplitKind::kStratifiedBySample;
  std::uint64_t seed = 0;
};

/// Per class, max(1, round(fraction * size)) samples go to test, capped at
/// size - 1. Every class needs at least two samples.
SplitPlan stratified_split(std::span<const Label> labels, double test_fraction, std::uint64_t seed);

/// max(1, round(fraction * identities)) identities go to test, capped at
/// identities - 1; all their samples follow them.
SplitPlan identity_split(std::span<const Label> labels, double test_fraction, std::uint64_t seed);

enum class TrialMode { kClosed, kOpen };

/// Indices into the evaluated embedding set.
struct ProbeGallerySplit {
  std::vector<std::size_t> gallery;
  std::vector<std::size_t> probe_known;
  std::vector<std::size_t> probe_unknown;
};

/// One probe/gallery trial. Gallery-enrolled identities contribute one
/// uniformly chosen sample to the gallery and the rest as known probes. In
/// open mode, identities at odd ordinal positions (1st, 3rd, ... in ascending
/// label order) are held out entirely as unknown probes.
ProbeGallerySplit probe_gallery_trial(std::span<const Label> labels, Rng& rng, TrialMode mode);

/// Distinct labels in ascending order.
std::vector<Label> distinct_labels(std::span<const Label> labels);

}  // namespace pfid
