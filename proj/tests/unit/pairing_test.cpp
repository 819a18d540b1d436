#include <gtest/gtest.h>

#include <algorithm>
#include <map>
#include <set>

#include "pfid/pairing.hpp"
#include "support/generators.hpp"

namespace pfid {
namespace {

std::vector<Label> blocks(std::initializer_list<std::size_t> sizes) {
  std::vector<Label> out;
  Label label = 1;
  for (const std::size_t n : sizes) {
    out.insert(out.end(), n, label);
    ++label;
  }
  return out;
}

// Every cross-label pair of batch positions, enumerated by brute force.
std::vector<IndexPair> cross_label_pairs(const std::vector<Label>& batch_labels) {
  std::vector<IndexPair> out;
  for (std::size_t i = 0; i < batch_labels.size(); ++i) {
    for (std::size_t j = i + 1; j < batch_labels.size(); ++j) {
      if (batch_labels[i] != batch_labels[j]) out.push_back({i, j});
    }
  }
  return out;
}

std::vector<Label> batch_labels(const PairBatch& b, const std::vector<Label>& labels) {
  std::vector<Label> out;
  for (const std::size_t i : b.sample_indices) out.push_back(labels[i]);
  return out;
}

TEST(PairBatch, BalancedTwoIdentityDraw) {
  const std::vector<Label> labels = blocks({8, 8});
  bool saw_balanced = false;
  for (std::uint64_t seed = 0; seed < 50; ++seed) {
    Rng rng(seed);
    const PairBatch b = build_pair_batch(labels, 8, rng);
    const auto bl = batch_labels(b, labels);
    EXPECT_EQ(b.similar_pairs.size(), 8u);
    EXPECT_EQ(b.dissimilar_pairs, cross_label_pairs(bl));
    if (std::count(bl.begin(), bl.end(), 1) == 8) {
      saw_balanced = true;
      EXPECT_EQ(b.dissimilar_pairs.size(), 64u);
    }
  }
  EXPECT_TRUE(saw_balanced);
}

TEST(PairBatch, SingleIdentityHasNoDissimilarPairs) {
  const std::vector<Label> labels = blocks({12});
  Rng rng(1);
  const PairBatch b = build_pair_batch(labels, 5, rng);
  EXPECT_EQ(b.similar_pairs.size(), 5u);
  EXPECT_TRUE(b.dissimilar_pairs.empty());
}

TEST(PairBatch, RejectsWhenNoClassHasTwoSamples) {
  const std::vector<Label> labels = blocks({1, 1, 1});
  Rng rng(1);
  EXPECT_THROW(build_pair_batch(labels, 2, rng), std::invalid_argument);
}

TEST(PairBatch, PropertyInvariantsOverRandomDatasets) {
  Rng rng(31);
  for (int trial = 0; trial < 300; ++trial) {
    const int k = 1 + static_cast<int>(rng.uniform_index(10));
    const std::size_t n = 2 * static_cast<std::size_t>(k) + rng.uniform_index(40);
    const std::vector<Label> labels = gen::labels(rng, n, k);
    const std::size_t pairs = 1 + rng.uniform_index(10);
    const PairBatch b = build_pair_batch(labels, pairs, rng);
    const auto bl = batch_labels(b, labels);
    ASSERT_EQ(b.sample_indices.size(), 2 * pairs);
    ASSERT_EQ(b.similar_pairs.size(), pairs);
    std::set<std::pair<std::size_t, std::size_t>> similar;
    for (std::size_t t = 0; t < pairs; ++t) {
      const IndexPair& p = b.similar_pairs[t];
      EXPECT_EQ(p, (IndexPair{2 * t, 2 * t + 1}));
      EXPECT_EQ(bl[p.first], bl[p.second]);
      EXPECT_NE(b.sample_indices[p.first], b.sample_indices[p.second]);
      similar.insert({p.first, p.second});
    }
    EXPECT_EQ(b.dissimilar_pairs, cross_label_pairs(bl));
    for (const auto& p : b.dissimilar_pairs) EXPECT_FALSE(similar.count({p.first, p.second}));
    for (const std::size_t idx : b.sample_indices) EXPECT_LT(idx, n);
  }
}

TEST(PairBatch, AnchorsDistinctWhenEnoughSamples) {
  const std::vector<Label> labels = blocks({10, 10, 10});
  Rng rng(2);
  const PairBatch b = build_pair_batch(labels, 8, rng);
  std::set<std::size_t> anchors;
  for (const auto& p : b.similar_pairs) anchors.insert(b.sample_indices[p.first]);
  EXPECT_EQ(anchors.size(), 8u);
}

std::map<Label, std::size_t> count_test(const SplitPlan& plan, const std::vector<Label>& labels) {
  std::map<Label, std::size_t> out;
  for (const std::size_t i : plan.test_indices) ++out[labels[i]];
  return out;
}

void expect_partition(const SplitPlan& plan, std::size_t n) {
  std::vector<std::size_t> all = plan.train_indices;
  all.insert(all.end(), plan.test_indices.begin(), plan.test_indices.end());
  std::sort(all.begin(), all.end());
  ASSERT_EQ(all.size(), n);
  for (std::size_t i = 0; i < n; ++i) EXPECT_EQ(all[i], i);
}

TEST(StratifiedSplit, RoundingRule) {
  const std::vector<Label> ten = blocks({10, 10, 10});
  const SplitPlan plan = stratified_split(ten, 0.2, 4);
  expect_partition(plan, ten.size());
  for (const auto& [label, n] : count_test(plan, ten)) EXPECT_EQ(n, 2u) << label;

  const std::vector<Label> uneven = blocks({5, 50});
  const auto counts = count_test(stratified_split(uneven, 0.2, 4), uneven);
  EXPECT_EQ(counts.at(1), 1u);
  EXPECT_EQ(counts.at(2), 10u);
}

TEST(StratifiedSplit, DeterministicPerSeed) {
  const std::vector<Label> labels = blocks({10, 7, 12});
  const SplitPlan a = stratified_split(labels, 0.2, 9);
  const SplitPlan b = stratified_split(labels, 0.2, 9);
  const SplitPlan c = stratified_split(labels, 0.2, 10);
  EXPECT_EQ(a.test_indices, b.test_indices);
  EXPECT_EQ(a.train_indices, b.train_indices);
  EXPECT_NE(a.test_indices, c.test_indices);
  EXPECT_EQ(count_test(a, labels), count_test(c, labels));
}

TEST(StratifiedSplit, SingletonClassNamed) {
  const std::vector<Label> labels = blocks({4, 1, 4});
  try {
    stratified_split(labels, 0.2, 1);
    FAIL() << "expected rejection";
  } catch (const std::invalid_argument& e) {
    EXPECT_NE(std::string(e.what()).find('2'), std::string::npos) << e.what();
  }
}

std::set<Label> labels_of(const std::vector<std::size_t>& idx, const std::vector<Label>& labels) {
  std::set<Label> out;
  for (const std::size_t i : idx) out.insert(labels[i]);
  return out;
}

TEST(IdentitySplit, CountsAndDisjointness) {
  std::vector<std::size_t> sizes(90, 3);
  std::vector<Label> ninety;
  for (std::size_t k = 0; k < sizes.size(); ++k) ninety.insert(ninety.end(), sizes[k], static_cast<Label>(k + 1));
  const SplitPlan plan = identity_split(ninety, 0.2, 3);
  expect_partition(plan, ninety.size());
  const auto test_ids = labels_of(plan.test_indices, ninety);
  const auto train_ids = labels_of(plan.train_indices, ninety);
  EXPECT_EQ(test_ids.size(), 18u);
  for (const Label l : test_ids) EXPECT_FALSE(train_ids.count(l));
  EXPECT_EQ(plan.test_indices.size(), 18u * 3);

  const std::vector<Label> ten = blocks({2, 2, 2, 2, 2, 2, 2, 2, 2, 2});
  EXPECT_EQ(labels_of(identity_split(ten, 0.2, 3).test_indices, ten).size(), 2u);
  EXPECT_THROW(identity_split(blocks({5}), 0.2, 3), std::invalid_argument);
}

TEST(ProbeGallery, ClosedModeTwoByTwo) {
  const std::vector<Label> labels = blocks({2, 2});
  Rng rng(5);
  const ProbeGallerySplit t = probe_gallery_trial(labels, rng, TrialMode::kClosed);
  ASSERT_EQ(t.gallery.size(), 2u);
  ASSERT_EQ(t.probe_known.size(), 2u);
  EXPECT_TRUE(t.probe_unknown.empty());
  std::set<std::size_t> all(t.gallery.begin(), t.gallery.end());
  all.insert(t.probe_known.begin(), t.probe_known.end());
  EXPECT_EQ(all.size(), 4u);
  EXPECT_EQ(labels_of(t.gallery, labels), (std::set<Label>{1, 2}));
  EXPECT_EQ(labels_of(t.probe_known, labels), (std::set<Label>{1, 2}));
}

TEST(ProbeGallery, ClosedModeEveryIdentityEnrolledInEveryTrial) {
  const std::vector<Label> labels = blocks({3, 5, 2, 8});
  for (int t = 0; t < 100; ++t) {
    Rng rng(static_cast<std::uint64_t>(t));
    const ProbeGallerySplit trial = probe_gallery_trial(labels, rng, TrialMode::kClosed);
    EXPECT_EQ(labels_of(trial.gallery, labels), (std::set<Label>{1, 2, 3, 4}));
    EXPECT_EQ(trial.gallery.size(), 4u);
    const auto probes = labels_of(trial.probe_known, labels);
    for (const Label l : probes) EXPECT_TRUE(labels_of(trial.gallery, labels).count(l));
  }
}

TEST(ProbeGallery, OpenModeHoldsOutOddOrdinals) {
  std::vector<Label> labels;
  for (Label k = 1; k <= 18; ++k) labels.insert(labels.end(), 4, 2 * k + 10);  // sparse labels
  Rng rng(6);
  const ProbeGallerySplit t = probe_gallery_trial(labels, rng, TrialMode::kOpen);
  const auto gallery = labels_of(t.gallery, labels);
  const auto unknown = labels_of(t.probe_unknown, labels);
  EXPECT_EQ(unknown.size(), 9u);
  EXPECT_EQ(gallery.size(), 9u);
  for (const Label l : unknown) EXPECT_FALSE(gallery.count(l));
  EXPECT_TRUE(unknown.count(12));  // first ordinal
  EXPECT_TRUE(gallery.count(14));
}

TEST(ProbeGallery, DeterministicAndSingletonRejected) {
  const std::vector<Label> labels = blocks({3, 4, 5});
  Rng a(8), b(8);
  const auto ta = probe_gallery_trial(labels, a, TrialMode::kClosed);
  const auto tb = probe_gallery_trial(labels, b, TrialMode::kClosed);
  EXPECT_EQ(ta.gallery, tb.gallery);
  EXPECT_EQ(ta.probe_known, tb.probe_known);
  Rng c(1);
  EXPECT_THROW(probe_gallery_trial(blocks({3, 1}), c, TrialMode::kClosed), std::invalid_argument);
}

TEST(DistinctLabels, SortedUnique) {
  const std::vector<Label> labels{5, 2, 5, 9, 2};
  EXPECT_EQ(distinct_labels(labels), (std::vector<Label>{2, 5, 9}));
}

}  // namespace
}  // namespace pfid
