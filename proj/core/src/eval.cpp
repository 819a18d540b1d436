#include "pfid/eval.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>
#include <sstream>
#include <stdexcept>

#include "pfid/rng.hpp"

namespace pfid {
namespace {

constexpr double kUnitNormTolerance = 1e-9;

void require_far(double far, const char* what) {
  if (!(far > 0.0 && far < 1.0)) {
    std::ostringstream msg;
    msg << what << ": FAR must lie in (0, 1), got " << far;
    throw std::invalid_argument(msg.str());
  }
}

void require_same_dim(const EmbeddingSet& a, const EmbeddingSet& b, const char* what) {
  if (a.dim() != b.dim()) {
    std::ostringstream msg;
    msg << what << ": embedding dimension mismatch (" << a.dim() << " vs " << b.dim() << ")";
    throw std::invalid_argument(msg.str());
  }
}

// Maximum similarity per gallery identity for one probe row.
std::map<Label, double> identity_scores(const Matrix& similarities, Eigen::Index probe,
                                        std::span<const Label> gallery_labels) {
  std::map<Label, double> scores;
  for (std::size_t g = 0; g < gallery_labels.size(); ++g) {
    const double s = similarities(probe, static_cast<Eigen::Index>(g));
    auto [it, inserted] = scores.try_emplace(gallery_labels[g], s);
    if (!inserted) it->second = std::max(it->second, s);
  }
  return scores;
}

std::size_t count_at_least(const std::vector<double>& descending, double threshold) {
  // descending order: elements >= threshold form a prefix.
  return static_cast<std::size_t>(
      std::partition_point(descending.begin(), descending.end(), [&](double s) { return s >= threshold; }) -
      descending.begin());
}

std::vector<double> sorted_descending(std::span<const double> values) {
  std::vector<double> out(values.begin(), values.end());
  std::sort(out.begin(), out.end(), std::greater<>());
  return out;
}

bool within_budget(std::size_t accepted, std::size_t total, double far) {
  return static_cast<double>(accepted) <= far * static_cast<double>(total) + 1e-9;
}

// Rate curve over every distinct impostor-score threshold, plus the threshold
// just above the largest impostor score (zero FAR).
template <typename AcceptedAt>
std::vector<CurvePoint> sweep_curve(const std::vector<double>& impostors_desc, AcceptedAt accepted_rate) {
  std::vector<CurvePoint> curve;
  const auto n = static_cast<double>(impostors_desc.size());
  curve.push_back({0.0, accepted_rate(std::nextafter(impostors_desc.front(), std::numeric_limits<double>::infinity()))});
  for (std::size_t i = 0; i < impostors_desc.size(); ++i) {
    if (i + 1 < impostors_desc.size() && impostors_desc[i + 1] == impostors_desc[i]) continue;
    curve.push_back({static_cast<double>(i + 1) / n, accepted_rate(impostors_desc[i])});
  }
  return curve;
}

}  // namespace

EmbeddingSet::EmbeddingSet(Matrix vectors, std::vector<Label> labels)
    : vectors_(std::move(vectors)), labels_(std::move(labels)) {
  if (static_cast<std::size_t>(vectors_.rows()) != labels_.size()) {
    std::ostringstream msg;
    msg << "EmbeddingSet: " << vectors_.rows() << " rows but " << labels_.size() << " labels";
    throw std::invalid_argument(msg.str());
  }
  for (Eigen::Index i = 0; i < vectors_.rows(); ++i) {
    const double norm = vectors_.row(i).norm();
    if (!(std::abs(norm - 1.0) <= kUnitNormTolerance)) {
      std::ostringstream msg;
      msg.precision(17);
      msg << "EmbeddingSet: row " << i << " has norm " << norm;
      throw std::invalid_argument(msg.str());
    }
  }
}

EmbeddingSet EmbeddingSet::subset(std::span<const std::size_t> indices) const {
  Matrix rows(static_cast<Eigen::Index>(indices.size()), vectors_.cols());
  std::vector<Label> labels;
  labels.reserve(indices.size());
  for (std::size_t r = 0; r < indices.size(); ++r) {
    if (indices[r] >= size()) throw std::out_of_range("EmbeddingSet::subset: index out of range");
    rows.row(static_cast<Eigen::Index>(r)) = vectors_.row(static_cast<Eigen::Index>(indices[r]));
    labels.push_back(labels_[indices[r]]);
  }
  return EmbeddingSet(std::move(rows), std::move(labels));
}

EmbeddingSet make_embedding_set(const Matrix& raw, std::vector<Label> labels) {
  Matrix rows = raw;
  for (Eigen::Index i = 0; i < rows.rows(); ++i) {
    const double norm = rows.row(i).norm();
    if (!(norm > 0.0) || !std::isfinite(norm)) {
      throw std::invalid_argument("make_embedding_set: row " + std::to_string(i) + " has zero or non-finite norm");
    }
    rows.row(i) /= norm;
  }
  return EmbeddingSet(std::move(rows), std::move(labels));
}

Matrix similarity_matrix(const EmbeddingSet& queries, const EmbeddingSet& references) {
  require_same_dim(queries, references, "similarity_matrix");
  Matrix sims = queries.vectors() * references.vectors().transpose();
  return sims.cwiseMax(-1.0).cwiseMin(1.0);
}

double classify_accuracy(const EmbeddingSet& train, const EmbeddingSet& test) {
  if (train.empty() || test.empty()) throw std::invalid_argument("classify_accuracy: empty embedding set");
  const Matrix sims = similarity_matrix(test, train);
  std::size_t correct = 0;
  for (Eigen::Index i = 0; i < sims.rows(); ++i) {
    Eigen::Index best = 0;
    for (Eigen::Index j = 1; j < sims.cols(); ++j) {
      if (sims(i, j) > sims(i, best)) best = j;
    }
    if (train.label(static_cast<std::size_t>(best)) == test.label(static_cast<std::size_t>(i))) ++correct;
  }
  return static_cast<double>(correct) / static_cast<double>(test.size());
}

CmcCurve closed_set_rank_k(const EmbeddingSet& gallery, const EmbeddingSet& probe, std::size_t max_rank) {
  if (gallery.empty() || probe.empty()) throw std::invalid_argument("closed_set_rank_k: empty gallery or probe set");
  if (max_rank < 1) throw std::invalid_argument("closed_set_rank_k: max_rank must be >= 1");
  const Matrix sims = similarity_matrix(probe, gallery);

  std::vector<std::size_t> rank_hist(max_rank + 1, 0);
  for (std::size_t p = 0; p < probe.size(); ++p) {
    const auto scores = identity_scores(sims, static_cast<Eigen::Index>(p), gallery.labels());
    const auto truth = scores.find(probe.label(p));
    if (truth == scores.end()) {
      std::ostringstream msg;
      msg << "closed_set_rank_k: probe identity " << probe.label(p) << " is absent from the gallery";
      throw std::invalid_argument(msg.str());
    }
    std::size_t rank = 1;
    for (const auto& [label, score] : scores) {
      if (label != truth->first && score >= truth->second) ++rank;
    }
    if (rank <= max_rank) ++rank_hist[rank];
  }

  CmcCurve curve;
  std::size_t cumulative = 0;
  for (std::size_t k = 1; k <= max_rank; ++k) {
    cumulative += rank_hist[k];
    curve.accuracy.push_back(static_cast<double>(cumulative) / static_cast<double>(probe.size()));
  }
  return curve;
}

double threshold_at_far(std::span<const double> impostor_scores, double far) {
  if (impostor_scores.empty()) throw std::invalid_argument("threshold_at_far: no impostor scores");
  require_far(far, "threshold_at_far");
  const std::vector<double> desc = sorted_descending(impostor_scores);
  double threshold = std::nextafter(desc.front(), std::numeric_limits<double>::infinity());
  for (std::size_t i = 0; i < desc.size(); ++i) {
    if (i + 1 < desc.size() && desc[i + 1] == desc[i]) continue;
    if (!within_budget(i + 1, desc.size(), far)) break;
    threshold = desc[i];
  }
  return threshold;
}

double false_accept_rate(std::span<const double> impostor_scores, double threshold) {
  if (impostor_scores.empty()) throw std::invalid_argument("false_accept_rate: no impostor scores");
  const auto accepted = std::count_if(impostor_scores.begin(), impostor_scores.end(),
                                      [&](double s) { return s >= threshold; });
  return static_cast<double>(accepted) / static_cast<double>(impostor_scores.size());
}

TarResult tar_at_far(std::span<const double> positives, std::span<const double> negatives, double far) {
  if (positives.empty() || negatives.empty()) throw std::invalid_argument("tar_at_far: empty score list");
  require_far(far, "tar_at_far");
  const std::vector<double> pos_desc = sorted_descending(positives);
  const std::vector<double> neg_desc = sorted_descending(negatives);
  const auto tar_at = [&](double threshold) {
    return static_cast<double>(count_at_least(pos_desc, threshold)) / static_cast<double>(pos_desc.size());
  };

  TarResult result;
  result.threshold = threshold_at_far(negatives, far);
  result.tar = tar_at(result.threshold);
  result.roc = sweep_curve(neg_desc, tar_at);
  return result;
}

OpenSetScores open_set_scores(const EmbeddingSet& gallery, const EmbeddingSet& probe_known,
                              const EmbeddingSet& probe_unknown) {
  if (gallery.empty()) throw std::invalid_argument("open_set_scores: empty gallery");
  OpenSetScores out;
  if (!probe_known.empty()) {
    const Matrix sims = similarity_matrix(probe_known, gallery);
    for (std::size_t p = 0; p < probe_known.size(); ++p) {
      const auto scores = identity_scores(sims, static_cast<Eigen::Index>(p), gallery.labels());
      const auto truth = scores.find(probe_known.label(p));
      if (truth == scores.end()) {
        std::ostringstream msg;
        msg << "open_set_scores: known probe identity " << probe_known.label(p) << " is absent from the gallery";
        throw std::invalid_argument(msg.str());
      }
      double best = truth->second;
      bool correct = true;
      for (const auto& [label, score] : scores) {
        if (label == truth->first) continue;
        best = std::max(best, score);
        if (score >= truth->second) correct = false;
      }
      out.known_max.push_back(best);
      out.known_top1_correct.push_back(correct);
    }
  }
  if (!probe_unknown.empty()) {
    const Matrix sims = similarity_matrix(probe_unknown, gallery);
    const std::vector<Label> enrolled = distinct_labels(gallery.labels());
    for (std::size_t p = 0; p < probe_unknown.size(); ++p) {
      if (std::binary_search(enrolled.begin(), enrolled.end(), probe_unknown.label(p))) {
        std::ostringstream msg;
        msg << "open_set_scores: unknown probe identity " << probe_unknown.label(p) << " is enrolled in the gallery";
        throw std::invalid_argument(msg.str());
      }
      out.unknown_max.push_back(sims.row(static_cast<Eigen::Index>(p)).maxCoeff());
    }
  }
  return out;
}

DirResult detection_identification_rate(const OpenSetScores& scores, double far) {
  if (scores.unknown_max.empty()) {
    throw std::invalid_argument("open_set_dir: no unknown probes, so FAR is undefined");
  }
  if (scores.known_max.empty()) throw std::invalid_argument("open_set_dir: no known probes");
  require_far(far, "open_set_dir");
  const std::vector<double> unknown_desc = sorted_descending(scores.unknown_max);
  const auto dir_at = [&](double threshold) {
    std::size_t hits = 0;
    for (std::size_t p = 0; p < scores.known_max.size(); ++p) {
      if (scores.known_top1_correct[p] && scores.known_max[p] >= threshold) ++hits;
    }
    return static_cast<double>(hits) / static_cast<double>(scores.known_max.size());
  };

  DirResult result;
  result.threshold = threshold_at_far(scores.unknown_max, far);
  result.dir = dir_at(result.threshold);
  result.sweep = sweep_curve(unknown_desc, dir_at);
  return result;
}

DirResult open_set_dir(const EmbeddingSet& gallery, const EmbeddingSet& probe_known,
                       const EmbeddingSet& probe_unknown, double far) {
  return detection_identification_rate(open_set_scores(gallery, probe_known, probe_unknown), far);
}

std::vector<SampleVerificationScores> verification_scores(const EmbeddingSet& test) {
  std::map<Label, std::size_t> counts;
  for (const Label label : test.labels()) ++counts[label];
  for (const auto& [label, count] : counts) {
    if (count < 2) {
      std::ostringstream msg;
      msg << "verification_scores: identity " << label << " has a single sample, so it has no positive score";
      throw std::invalid_argument(msg.str());
    }
  }

  const Matrix sims = similarity_matrix(test, test);
  std::vector<SampleVerificationScores> out(test.size());
  for (std::size_t i = 0; i < test.size(); ++i) {
    std::map<Label, double> best;
    double positive = -std::numeric_limits<double>::infinity();
    for (std::size_t j = 0; j < test.size(); ++j) {
      const double s = sims(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j));
      if (test.label(j) == test.label(i)) {
        if (j != i) positive = std::max(positive, s);
        continue;
      }
      auto [it, inserted] = best.try_emplace(test.label(j), s);
      if (!inserted) it->second = std::max(it->second, s);
    }
    out[i].positive = positive;
    for (const auto& [label, score] : best) {
      out[i].negative_labels.push_back(label);
      out[i].negatives.push_back(score);
    }
  }
  return out;
}

double normalized_mutual_information(std::span<const int> clusters, std::span<const Label> labels) {
  if (clusters.size() != labels.size() || clusters.empty()) {
    throw std::invalid_argument("normalized_mutual_information: assignments and labels must be non-empty and aligned");
  }
  std::map<int, double> cluster_mass;
  std::map<Label, double> label_mass;
  std::map<std::pair<int, Label>, double> joint;
  for (std::size_t i = 0; i < clusters.size(); ++i) {
    cluster_mass[clusters[i]] += 1.0;
    label_mass[labels[i]] += 1.0;
    joint[{clusters[i], labels[i]}] += 1.0;
  }
  const auto n = static_cast<double>(clusters.size());
  const auto entropy = [n](const auto& mass) {
    double h = 0.0;
    for (const auto& [key, count] : mass) h -= count / n * std::log(count / n);
    return h;
  };
  double mutual = 0.0;
  for (const auto& [key, count] : joint) {
    mutual += count / n * std::log(n * count / (cluster_mass[key.first] * label_mass[key.second]));
  }
  const double normaliser = 0.5 * (entropy(cluster_mass) + entropy(label_mass));
  if (normaliser <= 0.0) return 1.0;
  return std::clamp(mutual / normaliser, 0.0, 1.0);
}

KMeansResult kmeans(const Matrix& points, std::size_t k, std::uint64_t seed, int max_iterations) {
  const auto n = static_cast<std::size_t>(points.rows());
  if (k < 1 || k > n) {
    std::ostringstream msg;
    msg << "kmeans: k = " << k << " must lie in [1, " << n << "]";
    throw std::invalid_argument(msg.str());
  }
  Rng rng(seed);
  const auto kk = static_cast<Eigen::Index>(k);
  KMeansResult result;
  result.centroids.resize(kk, points.cols());

  // k-means++ seeding.
  Vector nearest(static_cast<Eigen::Index>(n));
  result.centroids.row(0) = points.row(static_cast<Eigen::Index>(rng.uniform_index(n)));
  for (Eigen::Index i = 0; i < static_cast<Eigen::Index>(n); ++i) {
    nearest[i] = (points.row(i) - result.centroids.row(0)).squaredNorm();
  }
  for (Eigen::Index c = 1; c < kk; ++c) {
    const double total = nearest.sum();
    std::size_t pick = 0;
    if (total > 0.0) {
      const double target = rng.uniform() * total;
      double cumulative = 0.0;
      pick = n - 1;
      for (std::size_t i = 0; i < n; ++i) {
        cumulative += nearest[static_cast<Eigen::Index>(i)];
        if (cumulative > target) {
          pick = i;
          break;
        }
      }
    } else {
      pick = rng.uniform_index(n);
    }
    result.centroids.row(c) = points.row(static_cast<Eigen::Index>(pick));
    for (Eigen::Index i = 0; i < static_cast<Eigen::Index>(n); ++i) {
      nearest[i] = std::min(nearest[i], (points.row(i) - result.centroids.row(c)).squaredNorm());
    }
  }

  result.assignment.assign(n, -1);
  Vector distance(static_cast<Eigen::Index>(n));
  for (int iteration = 0; iteration < max_iterations; ++iteration) {
    bool changed = false;
    for (Eigen::Index i = 0; i < static_cast<Eigen::Index>(n); ++i) {
      int best = 0;
      double best_distance = (points.row(i) - result.centroids.row(0)).squaredNorm();
      for (Eigen::Index c = 1; c < kk; ++c) {
        const double d = (points.row(i) - result.centroids.row(c)).squaredNorm();
        if (d < best_distance) {
          best_distance = d;
          best = static_cast<int>(c);
        }
      }
      distance[i] = best_distance;
      if (result.assignment[static_cast<std::size_t>(i)] != best) {
        result.assignment[static_cast<std::size_t>(i)] = best;
        changed = true;
      }
    }
    if (!changed) break;

    Matrix sums = Matrix::Zero(kk, points.cols());
    std::vector<std::size_t> sizes(k, 0);
    for (std::size_t i = 0; i < n; ++i) {
      sums.row(result.assignment[i]) += points.row(static_cast<Eigen::Index>(i));
      ++sizes[static_cast<std::size_t>(result.assignment[i])];
    }
    for (Eigen::Index c = 0; c < kk; ++c) {
      if (sizes[static_cast<std::size_t>(c)] > 0) {
        result.centroids.row(c) = sums.row(c) / static_cast<double>(sizes[static_cast<std::size_t>(c)]);
      } else {
        // Re-seed an empty cluster at the worst-fit point.
        Eigen::Index worst = 0;
        distance.maxCoeff(&worst);
        result.centroids.row(c) = points.row(worst);
        distance[worst] = 0.0;
      }
    }
  }

  result.inertia = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    result.inertia += (points.row(static_cast<Eigen::Index>(i)) - result.centroids.row(result.assignment[i])).squaredNorm();
  }
  return result;
}

double kmeans_nmi(const EmbeddingSet& embeddings, std::size_t k, std::uint64_t seed, int restarts) {
  if (k > embeddings.size()) {
    std::ostringstream msg;
    msg << "kmeans_nmi: k = " << k << " exceeds the " << embeddings.size() << " embeddings";
    throw std::invalid_argument(msg.str());
  }
  if (restarts < 1) throw std::invalid_argument("kmeans_nmi: restarts must be >= 1");
  KMeansResult best;
  for (int r = 0; r < restarts; ++r) {
    KMeansResult run = kmeans(embeddings.vectors(), k, seed + static_cast<std::uint64_t>(r));
    if (r == 0 || run.inertia < best.inertia) best = std::move(run);
  }
  return normalized_mutual_information(best.assignment, embeddings.labels());
}

}  // namespace pfid
