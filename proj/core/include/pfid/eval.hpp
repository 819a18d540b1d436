#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <vector>

#include "pfid/numerics.hpp"
#include "pfid/pairing.hpp"

namespace pfid {

/// Unit-norm embeddings (one per row) with identity labels.
class EmbeddingSet {
 public:
  EmbeddingSet() = default;

  /// Throws std::invalid_argument if a row is not unit-norm within 1e-9 or
  /// the label count differs from the row count.
  EmbeddingSet(Matrix vectors, std::vector<Label> labels);

  const Matrix& vectors() const { return vectors_; }
  std::span<const Label> labels() const { return labels_; }
  Label label(std::size_t i) const { return labels_[i]; }
  auto row(std::size_t i) const { return vectors_.row(static_cast<Eigen::Index>(i)); }
  std::size_t size() const { return labels_.size(); }
  std::size_t dim() const { return static_cast<std::size_t>(vectors_.cols()); }
  bool empty() const { return labels_.empty(); }

  EmbeddingSet subset(std::span<const std::size_t> indices) const;

 private:
  Matrix vectors_;
  std::vector<Label> labels_;
};

/// Normalises every row; rejects zero rows.
EmbeddingSet make_embedding_set(const Matrix& raw, std::vector<Label> labels);

/// Cosine similarity table: rows index `queries`, columns index `references`.
Matrix similarity_matrix(const EmbeddingSet& queries, const EmbeddingSet& references);

/// 1-nearest-neighbour accuracy of `test` against `train` under cosine
/// similarity. Ties go to the lowest train index.
double classify_accuracy(const EmbeddingSet& train, const EmbeddingSet& test);

/// accuracy[k - 1] is the Rank-k identification rate.
struct CmcCurve {
  std::vector<double> accuracy;

  double rank(std::size_t k) const { return accuracy.at(k - 1); }
};

/// Closed-set identification. Each gallery identity scores the maximum
/// similarity over its gallery images; a probe's rank is one plus the number
/// of other identities scoring at least as high as its own.
CmcCurve closed_set_rank_k(const EmbeddingSet& gallery, const EmbeddingSet& probe, std::size_t max_rank);

struct CurvePoint {
  double far = 0.0;
  double rate = 0.0;
};

/// Acceptance threshold for a false-accept budget: the smallest observed
/// impostor score s with |{impostor >= s}| <= far * n. If even the largest
/// impostor score exceeds the budget, the next double above it is returned.
/// Scores equal to the threshold are accepted.
double threshold_at_far(std::span<const double> impostor_scores, double far);

/// Fraction of impostor scores at or above `threshold`.
double false_accept_rate(std::span<const double> impostor_scores, double threshold);

struct TarResult {
  double tar = 0.0;
  double threshold = 0.0;
  std::vector<CurvePoint> roc;  // far strictly increasing
};

/// Verification rate at a false-accept rate, plus the ROC sampled at every
/// distinct impostor score (and at zero FAR).
TarResult tar_at_far(std::span<const double> positives, std::span<const double> negatives, double far);

/// Per-probe open-set scores against a gallery.
struct OpenSetScores {
  std::vector<double> known_max;        // best gallery similarity per known probe
  std::vector<bool> known_top1_correct;
  std::vector<double> unknown_max;      // best gallery similarity per unknown probe
};

OpenSetScores open_set_scores(const EmbeddingSet& gallery, const EmbeddingSet& probe_known,
                              const EmbeddingSet& probe_unknown);

struct DirResult {
  double dir = 0.0;
  double threshold = 0.0;
  std::vector<CurvePoint> sweep;  // far -> DIR at every distinct unknown score
};

DirResult detection_identification_rate(const OpenSetScores& scores, double far);

/// Open-set detection and identification rate at `far`.
DirResult open_set_dir(const EmbeddingSet& gallery, const EmbeddingSet& probe_known,
                       const EmbeddingSet& probe_unknown, double far);

struct SampleVerificationScores {
  double positive = 0.0;
  std::vector<double> negatives;         // one per other identity
  std::vector<Label> negative_labels;    // ascending
};

/// Positive score: best similarity to another sample of the same identity.
/// Negative scores: best similarity to each other identity.
std::vector<SampleVerificationScores> verification_scores(const EmbeddingSet& test);

/// Entropy-normalised mutual information (arithmetic mean of the entropies).
/// Two single-cluster partitions score 1.
double normalized_mutual_information(std::span<const int> clusters, std::span<const Label> labels);

struct KMeansResult {
  std::vector<int> assignment;
  Matrix centroids;
  double inertia = 0.0;  // within-cluster sum of squares
};

/// Lloyd iterations from k-means++ seeding.
KMeansResult kmeans(const Matrix& points, std::size_t k, std::uint64_t seed, int max_iterations = 300);

/// Best of `restarts` k-means runs (by inertia; restart r uses seed + r),
/// scored by NMI against the labels.
double kmeans_nmi(const EmbeddingSet& embeddings, std::size_t k, std::uint64_t seed, int restarts = 10);

}  // namespace pfid
