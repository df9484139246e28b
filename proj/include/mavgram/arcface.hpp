#pragma once

#include <vector>

#include "mavgram/autograd.hpp"
#include "mavgram/params.hpp"

namespace mavgram {

struct ArcFaceConfig {
  double margin = 0.7;  // radians
  double scale = 30.0;

  void validate() const;
};

// Creates the head weight "arcface.w" of shape {classes, embed_dim} in the
// arcface_head group, fan-in uniform init.
nn::TensorPtr arcface_build(ParamStore& params, int classes, int embed_dim,
                            const Rng& init_rng);

// Margin logits, {B, E} embeddings x {C, E} weight -> {B, C}.
// Embeddings and weight rows are L2-normalized; non-target logits are
// scale*cos(theta); the target logit gets the additive angular margin,
// falling back to the stabilized linear form past the branch point.
// Empty `targets` selects the inference path (pure scaled cosines).
nn::TensorPtr arcface_logits(nn::Tape* tape, const nn::TensorPtr& emb,
                             const nn::TensorPtr& weight,
                             const std::vector<int>& targets,
                             const ArcFaceConfig& cfg);

// Stabilized softmax cross-entropy of one logit row (double precision).
double cross_entropy(const std::vector<double>& logits, int target);

// Mean softmax cross-entropy over a {B, C} logit tensor. Acts as the loss
// root: when recorded on a tape its backward seeds (softmax - onehot)/B
// into the logit gradients.
double softmax_ce_mean(nn::Tape* tape, const nn::TensorPtr& logits,
                       const std::vector<int>& targets);

}  // namespace mavgram
