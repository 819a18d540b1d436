#include "pfid/pairing.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <sstream>
#include <stdexcept>

namespace pfid {
namespace {

std::map<Label, std::vector<std::size_t>> group_by_label(std::span<const Label> labels) {
  std::map<Label, std::vector<std::size_t>> groups;
  for (std::size_t i = 0; i < labels.size(); ++i) groups[labels[i]].push_back(i);
  return groups;
}

void require_fraction(double test_fraction, const char* what) {
  if (!(test_fraction > 0.0 && test_fraction < 1.0)) {
    std::ostringstream msg;
    msg << what << ": test fraction must lie in (0, 1), got " << test_fraction;
    throw std::invalid_argument(msg.str());
  }
}

std::size_t held_out_count(double fraction, std::size_t total) {
  auto count = static_cast<std::size_t>(std::llround(fraction * static_cast<double>(total)));
  count = std::max<std::size_t>(count, 1);
  return std::min(count, total - 1);
}

}  // namespace

std::vector<Label> distinct_labels(std::span<const Label> labels) {
  std::vector<Label> out(labels.begin(), labels.end());
  std::sort(out.begin(), out.end());
  out.erase(std::unique(out.begin(), out.end()), out.end());
  return out;
}

PairBatch build_pair_batch(std::span<const Label> labels, std::size_t pairs_per_batch, Rng& rng) {
  if (pairs_per_batch == 0) throw std::invalid_argument("build_pair_batch: pairs_per_batch must be >= 1");

  const auto groups = group_by_label(labels);
  std::vector<std::size_t> eligible;
  for (std::size_t i = 0; i < labels.size(); ++i) {
    if (groups.at(labels[i]).size() >= 2) eligible.push_back(i);
  }
  if (eligible.empty()) {
    throw std::invalid_argument("build_pair_batch: no identity has at least two samples");
  }

  std::vector<std::size_t> anchors;
  anchors.reserve(pairs_per_batch);
  if (pairs_per_batch <= eligible.size()) {
    // Partial Fisher-Yates: the first pairs_per_batch slots are a uniform draw
    // without replacement.
    for (std::size_t t = 0; t < pairs_per_batch; ++t) {
      const std::size_t pick = t + rng.uniform_index(eligible.size() - t);
      std::swap(eligible[t], eligible[pick]);
      anchors.push_back(eligible[t]);
    }
  } else {
    for (std::size_t t = 0; t < pairs_per_batch; ++t) {
      anchors.push_back(eligible[rng.uniform_index(eligible.size())]);
    }
  }

  PairBatch batch;
  batch.sample_indices.reserve(2 * pairs_per_batch);
  for (const std::size_t anchor : anchors) {
    const auto& members = groups.at(labels[anchor]);
    // Uniform over the class minus the anchor itself.
    std::size_t pick = rng.uniform_index(members.size() - 1);
    const auto anchor_pos = static_cast<std::size_t>(
        std::find(members.begin(), members.end(), anchor) - members.begin());
    if (pick >= anchor_pos) ++pick;
    const std::size_t slot = batch.sample_indices.size();
    batch.sample_indices.push_back(anchor);
    batch.sample_indices.push_back(members[pick]);
    batch.similar_pairs.push_back({slot, slot + 1});
  }

  const std::size_t size = batch.sample_indices.size();
  for (std::size_t a = 0; a < size; ++a) {
    for (std::size_t b = a + 1; b < size; ++b) {
      if (labels[batch.sample_indices[a]] != labels[batch.sample_indices[b]]) {
        batch.dissimilar_pairs.push_back({a, b});
      }
    }
  }
  return batch;
}

SplitPlan stratified_split(std::span<const Label> labels, double test_fraction, std::uint64_t seed) {
  require_fraction(test_fraction, "stratified_split");
  const auto groups = group_by_label(labels);
  for (const auto& [label, members] : groups) {
    if (members.size() < 2) {
      std::ostringstream msg;
      msg << "stratified_split: identity " << label << " has only one sample";
      throw std::invalid_argument(msg.str());
    }
  }

  Rng rng(seed);
  SplitPlan plan;
  plan.kind = SplitKind::kStratifiedBySample;
  plan.seed = seed;
  for (const auto& [label, members] : groups) {
    std::vector<std::size_t> shuffled = members;
    rng.shuffle(std::span(shuffled));
    const std::size_t n_test = held_out_count(test_fraction, shuffled.size());
    plan.test_indices.insert(plan.test_indices.end(), shuffled.begin(), shuffled.begin() + n_test);
    plan.train_indices.insert(plan.train_indices.end(), shuffled.begin() + n_test, shuffled.end());
  }
  std::sort(plan.train_indices.begin(), plan.train_indices.end());
  std::sort(plan.test_indices.begin(), plan.test_indices.end());
  return plan;
}

SplitPlan identity_split(std::span<const Label> labels, double test_fraction, std::uint64_t seed) {
  require_fraction(test_fraction, "identity_split");
  std::vector<Label> identities = distinct_labels(labels);
  if (identities.size() < 2) {
    throw std::invalid_argument("identity_split: need at least two identities");
  }

  Rng rng(seed);
  rng.shuffle(std::span(identities));
  const std::size_t n_test = held_out_count(test_fraction, identities.size());
  std::vector<Label> test_ids(identities.begin(), identities.begin() + n_test);
  std::sort(test_ids.begin(), test_ids.end());

  SplitPlan plan;
  plan.kind = SplitKind::kDisjointByIdentity;
  plan.seed = seed;
  for (std::size_t i = 0; i < labels.size(); ++i) {
    if (std::binary_search(test_ids.begin(), test_ids.end(), labels[i])) {
      plan.test_indices.push_back(i);
    } else {
      plan.train_indices.push_back(i);
    }
  }
  return plan;
}

ProbeGallerySplit probe_gallery_trial(std::span<const Label> labels, Rng& rng, TrialMode mode) {
  const auto groups = group_by_label(labels);
  ProbeGallerySplit trial;
  std::size_t ordinal = 0;
  for (const auto& [label, members] : groups) {
    ++ordinal;
    if (mode == TrialMode::kOpen && ordinal % 2 == 1) {
      trial.probe_unknown.insert(trial.probe_unknown.end(), members.begin(), members.end());
      continue;
    }
    if (members.size() < 2) {
      std::ostringstream msg;
      msg << "probe_gallery_trial: identity " << label
          << " has a single sample and cannot supply both gallery and probe";
      throw std::invalid_argument(msg.str());
    }
    const std::size_t enrolled = rng.uniform_index(members.size());
    for (std::size_t m = 0; m < members.size(); ++m) {
      (m == enrolled ? trial.gallery : trial.probe_known).push_back(members[m]);
    }
  }
  return trial;
}

}  // namespace pfid
