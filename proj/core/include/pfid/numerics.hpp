#pragma once

#include <functional>

#include <Eigen/Dense>

namespace pfid {

using Vector = Eigen::VectorXd;
using Matrix = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
using VectorRef = Eigen::Ref<const Vector>;

/// Probabilities are clamped to [kProbabilityFloor, 1] before any logarithm.
inline constexpr double kProbabilityFloor = 1e-12;

/// Normalisation tolerance accepted by ProbDist.
inline constexpr double kProbabilitySumTolerance = 1e-9;

/// A categorical distribution over K >= 2 identities.
class ProbDist {
 public:
  /// Validates non-negativity, K >= 2 and unit sum; throws std::invalid_argument.
  explicit ProbDist(Vector probs);

  const Vector& probs() const { return probs_; }
  Eigen::Index size() const { return probs_.size(); }
  double operator[](Eigen::Index k) const { return probs_[k]; }

  /// Index of the first maximal entry.
  Eigen::Index argmax() const;

 private:
  Vector probs_;
};

/// Index of the first maximal entry of a non-empty vector.
Eigen::Index argmax(const VectorRef& values);

/// Shift-invariant softmax; rejects K < 2 and non-finite logits.
ProbDist softmax(const VectorRef& logits);

/// log(softmax(logits)) computed without forming the probabilities first.
Vector log_softmax(const VectorRef& logits);

/// Elementwise clamp of probabilities to [kProbabilityFloor, 1].
Vector clamp_probabilities(const VectorRef& probs);

/// KL(p || q) in nats, after clamping both arguments.
double kl_divergence(const ProbDist& p, const ProbDist& q);

Vector l2_normalize(const VectorRef& v);

/// Dot product of two unit vectors, clipped to [-1, 1].
double cosine_similarity(const VectorRef& u, const VectorRef& v);

using ScalarFunction = std::function<double(const Vector&)>;

/// Central-difference gradient (f(x + h e_k) - f(x - h e_k)) / 2h.
Vector finite_difference_gradient(const ScalarFunction& f, const VectorRef& x, double h);

/// |a - b| / max(|a|, |b|, floor). The floor keeps near-zero components from
/// being judged on round-off alone.
double relative_error(double a, double b, double floor = 1e-3);

}  // namespace pfid
