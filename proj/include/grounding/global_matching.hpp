#ifndef GROUNDING_GLOBAL_MATCHING_HPP
#define GROUNDING_GLOBAL_MATCHING_HPP

#include <vector>

#include "grounding/autodiff.hpp"
#include "grounding/layers.hpp"

namespace grounding {

// S_Ic = cos(MLP(caption embedding), r_hat_c). The caption head is a 2-layer
// MLP mapping d_s into the joint space d_e.
ad::Var pair_score(ad::Tape& tape, ad::Var caption_conditioned_repr, ad::Var caption_embedding,
                   const Mlp& caption_head);

// Bidirectional max-margin hinge with the hardest in-batch negatives
// (one caption negative per row, one image negative per column), averaged
// over the batch. Masked entries never serve as negatives. B=1 (or a fully
// masked row/column) contributes no hinge.
struct RankingLossInfo {
  ad::Var loss = -1;
  std::vector<int> hardest_caption;  // per row i: argmax_j S[i][j] over valid negatives, -1 if none
  std::vector<int> hardest_image;    // per column i: argmax_j S[j][i] over valid negatives
  bool had_negatives = false;
};

RankingLossInfo ranking_loss(ad::Tape& tape, const std::vector<std::vector<ad::Var>>& scores,
                             const std::vector<std::vector<char>>& negative_mask, double margin);

// Negative-pair mask for a batch: entry (i, j) is usable as a negative iff
// image i and caption j are not a true pair (duplicates masked out).
std::vector<std::vector<char>> negative_mask_for_batch(
    const std::vector<std::string>& scene_ids,
    const std::vector<const std::vector<std::vector<std::string>>*>& scene_captions,
    const std::vector<std::vector<std::string>>& batch_captions);

}  // namespace grounding

#endif
