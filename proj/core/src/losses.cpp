#include "pfid/losses.hpp"

#include <cmath>
#include <sstream>
#include <stdexcept>

namespace pfid {
namespace {

void require_same_size(Eigen::Index a, Eigen::Index b, const char* what) {
  if (a != b) {
    std::ostringstream msg;
    msg << what << ": dimension mismatch (" << a << " vs " << b << ")";
    throw std::invalid_argument(msg.str());
  }
}

Eigen::Index class_index(Label label, Eigen::Index num_classes, const char* what) {
  if (label < 1 || label > num_classes) {
    std::ostringstream msg;
    msg << what << ": label " << label << " outside 1.." << num_classes;
    throw std::invalid_argument(msg.str());
  }
  return static_cast<Eigen::Index>(label - 1);
}

// Pulls a gradient on the probability vector back to the logits:
// dz_a = p_a * (g_a - sum_k p_k g_k).
Vector softmax_backward(const Vector& probs, const Vector& grad_probs) {
  const double weighted = probs.dot(grad_probs);
  return probs.cwiseProduct((grad_probs.array() - weighted).matrix());
}

void check_pairs(const std::vector<IndexPair>& pairs, Eigen::Index rows, const char* which) {
  for (std::size_t t = 0; t < pairs.size(); ++t) {
    const auto& pair = pairs[t];
    if (pair.first >= static_cast<std::size_t>(rows) || pair.second >= static_cast<std::size_t>(rows)) {
      std::ostringstream msg;
      msg << "pfid_loss: " << which << " pair " << t << " (" << pair.first << ", " << pair.second
          << ") indexes outside a batch of " << rows;
      throw std::invalid_argument(msg.str());
    }
  }
}

}  // namespace

LossOutput cross_entropy_loss(const Matrix& logits, std::span<const Label> labels) {
  const auto rows = logits.rows();
  if (rows == 0) throw std::invalid_argument("cross_entropy_loss: empty batch");
  if (static_cast<std::size_t>(rows) != labels.size()) {
    std::ostringstream msg;
    msg << "cross_entropy_loss: " << rows << " logit rows but " << labels.size() << " labels";
    throw std::invalid_argument(msg.str());
  }

  LossOutput out;
  out.grad_logits = Matrix::Zero(rows, logits.cols());
  const double scale = 1.0 / static_cast<double>(rows);
  for (Eigen::Index i = 0; i < rows; ++i) {
    const Vector row = logits.row(i).transpose();
    const Eigen::Index target = class_index(labels[i], logits.cols(), "cross_entropy_loss");
    const Vector log_probs = log_softmax(row);
    out.value -= log_probs[target] * scale;
    Vector grad = log_probs.array().exp();
    grad[target] -= 1.0;
    out.grad_logits.row(i) = grad.transpose() * scale;
  }
  return out;
}

double similar_pair_loss(const ProbDist& p, const ProbDist& q) {
  require_same_size(p.size(), q.size(), "similar_pair_loss");
  return kl_divergence(p, q) + kl_divergence(q, p);
}

double dissimilar_pair_loss(const ProbDist& p, const ProbDist& q, double margin) {
  require_same_size(p.size(), q.size(), "dissimilar_pair_loss");
  if (!(margin >= 0.0)) throw std::invalid_argument("dissimilar_pair_loss: margin must be >= 0");
  return std::max(0.0, margin - kl_divergence(p, q)) + std::max(0.0, margin - kl_divergence(q, p));
}

bool guide_gate(const ProbDist& p, const ProbDist& q, Label label_i, Label label_j) {
  return p.argmax() + 1 == label_i || q.argmax() + 1 == label_j;
}

PairGradient kl_divergence_logits(const VectorRef& logits_p, const VectorRef& logits_q) {
  require_same_size(logits_p.size(), logits_q.size(), "kl_divergence_logits");
  const ProbDist p = softmax(logits_p);
  const ProbDist q = softmax(logits_q);
  const Vector pc = clamp_probabilities(p.probs());
  const Vector qc = clamp_probabilities(q.probs());

  const auto k = pc.size();
  Vector grad_p(k);
  Vector grad_q(k);
  double value = 0.0;
  for (Eigen::Index c = 0; c < k; ++c) {
    const double log_ratio = std::log(pc[c]) - std::log(qc[c]);
    value += pc[c] * log_ratio;
    grad_p[c] = p[c] > kProbabilityFloor ? log_ratio + 1.0 : 0.0;
    grad_q[c] = q[c] > kProbabilityFloor ? -pc[c] / qc[c] : 0.0;
  }

  PairGradient out;
  out.value = value;
  out.grad_first = softmax_backward(p.probs(), grad_p);
  out.grad_second = softmax_backward(q.probs(), grad_q);
  return out;
}

PairGradient similar_pair_term(const VectorRef& logits_i, const VectorRef& logits_j) {
  const PairGradient forward = kl_divergence_logits(logits_i, logits_j);
  const PairGradient reverse = kl_divergence_logits(logits_j, logits_i);
  PairGradient out;
  out.value = forward.value + reverse.value;
  out.grad_first = forward.grad_first + reverse.grad_second;
  out.grad_second = forward.grad_second + reverse.grad_first;
  return out;
}

PairGradient dissimilar_pair_term(const VectorRef& logits_i, const VectorRef& logits_j, double margin) {
  if (!(margin >= 0.0)) throw std::invalid_argument("dissimilar_pair_term: margin must be >= 0");
  const PairGradient forward = kl_divergence_logits(logits_i, logits_j);
  const PairGradient reverse = kl_divergence_logits(logits_j, logits_i);

  PairGradient out;
  out.grad_first = Vector::Zero(logits_i.size());
  out.grad_second = Vector::Zero(logits_j.size());
  if (forward.value < margin) {
    out.value += margin - forward.value;
    out.grad_first -= forward.grad_first;
    out.grad_second -= forward.grad_second;
  }
  if (reverse.value < margin) {
    out.value += margin - reverse.value;
    out.grad_first -= reverse.grad_second;
    out.grad_second -= reverse.grad_first;
  }
  return out;
}

LossOutput pfid_loss(const Matrix& logits, std::span<const Label> labels, const PairBatch& pairs,
                     const LossConfig& config) {
  if (!(config.margin >= 0.0)) throw std::invalid_argument("pfid_loss: margin must be >= 0");
  check_pairs(pairs.similar_pairs, logits.rows(), "similar");
  check_pairs(pairs.dissimilar_pairs, logits.rows(), "dissimilar");

  LossOutput out = cross_entropy_loss(logits, labels);

  std::vector<ProbDist> probs;
  probs.reserve(static_cast<std::size_t>(logits.rows()));
  for (Eigen::Index i = 0; i < logits.rows(); ++i) probs.push_back(softmax(logits.row(i).transpose()));
  const auto gate = [&](const IndexPair& pair) {
    return guide_gate(probs[pair.first], probs[pair.second], labels[pair.first], labels[pair.second]);
  };
  const auto accumulate = [&](const IndexPair& pair, const PairGradient& term, double weight) {
    out.value += weight * term.value;
    out.grad_logits.row(static_cast<Eigen::Index>(pair.first)) += weight * term.grad_first.transpose();
    out.grad_logits.row(static_cast<Eigen::Index>(pair.second)) += weight * term.grad_second.transpose();
  };

  if (!pairs.similar_pairs.empty()) {
    const double weight = 1.0 / static_cast<double>(pairs.similar_pairs.size());
    for (const auto& pair : pairs.similar_pairs) {
      if (!gate(pair)) continue;
      ++out.active_similar;
      accumulate(pair,
                 similar_pair_term(logits.row(static_cast<Eigen::Index>(pair.first)).transpose(),
                                   logits.row(static_cast<Eigen::Index>(pair.second)).transpose()),
                 weight);
    }
  }
  if (!pairs.dissimilar_pairs.empty()) {
    const double weight = 1.0 / static_cast<double>(pairs.dissimilar_pairs.size());
    for (const auto& pair : pairs.dissimilar_pairs) {
      if (!gate(pair)) continue;
      ++out.active_dissimilar;
      accumulate(pair,
                 dissimilar_pair_term(logits.row(static_cast<Eigen::Index>(pair.first)).transpose(),
                                      logits.row(static_cast<Eigen::Index>(pair.second)).transpose(),
                                      config.margin),
                 weight);
    }
  }
  return out;
}

PairGradient siamese_hinge_loss(const VectorRef& emb_i, const VectorRef& emb_j, bool same, double margin) {
  require_same_size(emb_i.size(), emb_j.size(), "siamese_hinge_loss");
  if (!(margin > 0.0)) throw std::invalid_argument("siamese_hinge_loss: margin must be > 0");

  const Vector diff = emb_i - emb_j;
  PairGradient out;
  if (same) {
    out.value = diff.squaredNorm();
    out.grad_first = 2.0 * diff;
  } else {
    const double distance = diff.norm();
    const double slack = margin - distance;
    if (slack > 0.0) {
      out.value = slack * slack;
      // At zero distance the direction is undefined; take the zero subgradient.
      out.grad_first = distance > 0.0 ? Vector(-2.0 * slack / distance * diff) : Vector::Zero(diff.size());
    } else {
      out.grad_first = Vector::Zero(diff.size());
    }
  }
  out.grad_second = -out.grad_first;
  return out;
}

EmbeddingLossOutput siamese_batch_loss(const Matrix& embeddings, const PairBatch& pairs, double margin) {
  check_pairs(pairs.similar_pairs, embeddings.rows(), "similar");
  check_pairs(pairs.dissimilar_pairs, embeddings.rows(), "dissimilar");

  EmbeddingLossOutput out;
  out.grad_embeddings = Matrix::Zero(embeddings.rows(), embeddings.cols());
  const auto run = [&](const std::vector<IndexPair>& set, bool same) {
    if (set.empty()) return;
    const double weight = 1.0 / static_cast<double>(set.size());
    for (const auto& pair : set) {
      const auto a = static_cast<Eigen::Index>(pair.first);
      const auto b = static_cast<Eigen::Index>(pair.second);
      const PairGradient term =
          siamese_hinge_loss(embeddings.row(a).transpose(), embeddings.row(b).transpose(), same, margin);
      out.value += weight * term.value;
      out.grad_embeddings.row(a) += weight * term.grad_first.transpose();
      out.grad_embeddings.row(b) += weight * term.grad_second.transpose();
    }
  };
  run(pairs.similar_pairs, true);
  run(pairs.dissimilar_pairs, false);
  return out;
}

}  // namespace pfid
