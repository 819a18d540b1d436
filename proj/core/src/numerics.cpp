#include "pfid/numerics.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>
#include <stdexcept>
#include <string>

namespace pfid {
namespace {

void require_same_size(Eigen::Index a, Eigen::Index b, const char* what) {
  if (a != b) {
    std::ostringstream msg;
    msg << what << ": dimension mismatch (" << a << " vs " << b << ")";
    throw std::invalid_argument(msg.str());
  }
}

void require_finite_logits(const VectorRef& logits, const char* what) {
  if (logits.size() < 2) {
    throw std::invalid_argument(std::string(what) + ": need at least 2 classes");
  }
  for (Eigen::Index k = 0; k < logits.size(); ++k) {
    if (!std::isfinite(logits[k])) {
      std::ostringstream msg;
      msg << what << ": non-finite logit " << logits[k] << " at index " << k;
      throw std::invalid_argument(msg.str());
    }
  }
}

}  // namespace

ProbDist::ProbDist(Vector probs) : probs_(std::move(probs)) {
  if (probs_.size() < 2) throw std::invalid_argument("ProbDist: need at least 2 classes");
  double sum = 0.0;
  for (Eigen::Index k = 0; k < probs_.size(); ++k) {
    if (!(probs_[k] >= 0.0) || !std::isfinite(probs_[k])) {
      std::ostringstream msg;
      msg << "ProbDist: invalid probability " << probs_[k] << " at index " << k;
      throw std::invalid_argument(msg.str());
    }
    sum += probs_[k];
  }
  if (std::abs(sum - 1.0) > kProbabilitySumTolerance) {
    std::ostringstream msg;
    msg.precision(17);
    msg << "ProbDist: probabilities sum to " << sum;
    throw std::invalid_argument(msg.str());
  }
}

Eigen::Index ProbDist::argmax() const { return pfid::argmax(probs_); }

Eigen::Index argmax(const VectorRef& values) {
  if (values.size() == 0) throw std::invalid_argument("argmax: empty vector");
  Eigen::Index best = 0;
  for (Eigen::Index k = 1; k < values.size(); ++k) {
    if (values[k] > values[best]) best = k;
  }
  return best;
}

ProbDist softmax(const VectorRef& logits) {
  require_finite_logits(logits, "softmax");
  const double shift = logits.maxCoeff();
  Vector probs = (logits.array() - shift).exp().matrix();
  probs /= probs.sum();
  return ProbDist(std::move(probs));
}

Vector log_softmax(const VectorRef& logits) {
  require_finite_logits(logits, "log_softmax");
  const double shift = logits.maxCoeff();
  const Vector shifted = logits.array() - shift;
  const double log_sum = std::log(shifted.array().exp().sum());
  return shifted.array() - log_sum;
}

Vector clamp_probabilities(const VectorRef& probs) {
  return probs.array().max(kProbabilityFloor).min(1.0).matrix();
}

double kl_divergence(const ProbDist& p, const ProbDist& q) {
  require_same_size(p.size(), q.size(), "kl_divergence");
  const Vector pc = clamp_probabilities(p.probs());
  const Vector qc = clamp_probabilities(q.probs());
  double total = 0.0;
  for (Eigen::Index k = 0; k < pc.size(); ++k) {
    total += pc[k] * (std::log(pc[k]) - std::log(qc[k]));
  }
  return total;
}

Vector l2_normalize(const VectorRef& v) {
  const double norm = v.norm();
  if (!(norm > 0.0) || !std::isfinite(norm)) {
    throw std::invalid_argument("l2_normalize: vector has zero or non-finite norm");
  }
  return v / norm;
}

double cosine_similarity(const VectorRef& u, const VectorRef& v) {
  require_same_size(u.size(), v.size(), "cosine_similarity");
  return std::clamp(u.dot(v), -1.0, 1.0);
}

Vector finite_difference_gradient(const ScalarFunction& f, const VectorRef& x, double h) {
  if (!(h > 0.0)) throw std::invalid_argument("finite_difference_gradient: step must be positive");
  Vector probe = x;
  Vector grad(x.size());
  for (Eigen::Index k = 0; k < x.size(); ++k) {
    const double original = probe[k];
    probe[k] = original + h;
    const double forward = f(probe);
    probe[k] = original - h;
    const double backward = f(probe);
    probe[k] = original;
    grad[k] = (forward - backward) / (2.0 * h);
  }
  return grad;
}

double relative_error(double a, double b, double floor) {
  const double scale = std::max({std::abs(a), std::abs(b), floor});
  return std::abs(a - b) / scale;
}

}  // namespace pfid
