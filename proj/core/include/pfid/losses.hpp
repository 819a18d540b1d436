#pragma once

#include <cstddef>
#include <span>

#include "pfid/numerics.hpp"
#include "pfid/pairing.hpp"

namespace pfid {

struct LossConfig {
  /// Dissimilar-pair KL margin, in nats.
  double margin = 1.0;
};

/// Loss value and its gradient with respect to the batch logits (one row per
/// sample, same shape as the logits).
struct LossOutput {
  double value = 0.0;
  Matrix grad_logits;
  std::size_t active_similar = 0;
  std::size_t active_dissimilar = 0;
};

/// Value and gradients of a two-argument term with respect to each argument.
struct PairGradient {
  double value = 0.0;
  Vector grad_first;
  Vector grad_second;
};

/// Mean over the batch of -log softmax(logits_i)[label_i]. Labels are 1-based.
LossOutput cross_entropy_loss(const Matrix& logits, std::span<const Label> labels);

/// KL(p || q) + KL(q || p).
double similar_pair_loss(const ProbDist& p, const ProbDist& q);

/// max(0, m - KL(p || q)) + max(0, m - KL(q || p)).
double dissimilar_pair_loss(const ProbDist& p, const ProbDist& q, double margin);

/// True iff argmax(p) == label_i or argmax(q) == label_j (labels 1-based).
bool guide_gate(const ProbDist& p, const ProbDist& q, Label label_i, Label label_j);

/// KL(softmax(z_p) || softmax(z_q)) and its gradient with respect to both
/// logit vectors. Probabilities are clamped as in kl_divergence; coordinates
/// sitting on the clamp receive no gradient through it.
PairGradient kl_divergence_logits(const VectorRef& logits_p, const VectorRef& logits_q);

/// similar_pair_loss on softmax outputs, differentiated through both softmaxes.
PairGradient similar_pair_term(const VectorRef& logits_i, const VectorRef& logits_j);

/// dissimilar_pair_loss on softmax outputs, differentiated through both
/// softmaxes. A saturated hinge (KL >= m) contributes no gradient.
PairGradient dissimilar_pair_term(const VectorRef& logits_i, const VectorRef& logits_j, double margin);

/// Cross entropy plus the gated pairwise KL terms, each pair set averaged by
/// its own size. The gate is evaluated once from the current logits and held
/// constant. Pairs are accumulated in their construction order.
LossOutput pfid_loss(const Matrix& logits, std::span<const Label> labels, const PairBatch& pairs,
                     const LossConfig& config);

/// Contrastive hinge on raw embeddings: ||e_i - e_j||^2 for same-identity
/// pairs, max(0, margin - ||e_i - e_j||)^2 otherwise.
PairGradient siamese_hinge_loss(const VectorRef& emb_i, const VectorRef& emb_j, bool same, double margin);

/// Embedding-space loss and gradient over a PairBatch: mean hinge over similar
/// pairs plus mean hinge over dissimilar pairs.
struct EmbeddingLossOutput {
  double value = 0.0;
  Matrix grad_embeddings;
};

EmbeddingLossOutput siamese_batch_loss(const Matrix& embeddings, const PairBatch& pairs, double margin);

}  // namespace pfid
