#ifndef GROUNDING_LOCAL_MATCHING_HPP
#define GROUNDING_LOCAL_MATCHING_HPP

#include <string>
#include <vector>

#include "grounding/autodiff.hpp"
#include "grounding/types.hpp"

namespace grounding {

class Rng;

enum class MatchStrategy { Max, TopK, Attention };
enum class Mode { Train, Infer };

MatchStrategy match_strategy_from_name(const std::string& name);  // max|topk|attention
const char* match_strategy_name(MatchStrategy s);

// Region features of one scene staged on a tape: raw features as constants
// (d_v x R matrix and per-region columns) plus their W_l projections.
struct ProjectedImage {
  ad::Var raw_matrix = -1;           // d_v x R constant
  std::vector<ad::Var> raw;          // per-region d_v x 1 constants
  std::vector<ad::Var> projected;    // x_hat_j = W_l^T x_j
};

ProjectedImage project_regions(ad::Tape& tape, ad::Var w_l_param, const SceneRecord& scene);

// Cosine scores for every (region, phrase) pair; result[k] is the R x 1
// similarity column for phrase k. Zero-norm pairs score 0 (counted on tape).
std::vector<ad::Var> score_pairs(ad::Tape& tape, const ProjectedImage& image,
                                 const std::vector<ad::Var>& phrase_embeddings);

// Value-level selection; ties break to the lowest index.
int select_max(const Eigen::VectorXd& row);
// Uniform draw among the top-k scores (k clamped to R). Training only.
int select_topk_random(const Eigen::VectorXd& row, int k, Rng& rng);

// Softmax attention over one phrase's score column and the attended blend of
// the raw region features.
struct AttentionOutcome {
  ad::Var weights = -1;   // R x 1, sums to 1
  ad::Var attended = -1;  // d_v x 1
};
AttentionOutcome select_attention(ad::Tape& tape, ad::Var score_column, const ProjectedImage& image,
                                  double temperature = 1.0);

// Per-caption matching outcome: one matched RoI per phrase.
struct MatchOutcome {
  MatchStrategy strategy = MatchStrategy::Max;
  std::vector<int> selected;            // region index per phrase (max/topk; argmax of alpha for attention)
  std::vector<ad::Var> score_columns;   // per phrase
  std::vector<ad::Var> attention;       // per phrase weights (attention only)
  std::vector<ad::Var> rois;            // I_rois^c, feature-space vectors
};

// Matched vectors are the raw region features for max/topk and the attended
// blend for attention; inference forces deterministic max selection.
// `frozen_selection`, when given, overrides selection (gradient checks).
MatchOutcome match_caption(ad::Tape& tape, const ProjectedImage& image,
                           const std::vector<ad::Var>& phrase_embeddings, MatchStrategy strategy,
                           Mode mode, int top_k, double temperature, Rng* rng,
                           const std::vector<int>* frozen_selection = nullptr);

}  // namespace grounding

#endif
