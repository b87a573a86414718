#include "grounding/global_matching.hpp"

#include "grounding/error.hpp"

namespace grounding {

ad::Var pair_score(ad::Tape& tape, ad::Var caption_conditioned_repr, ad::Var caption_embedding,
                   const Mlp& caption_head) {
  const ad::Var c_hat = caption_head.apply(tape, caption_embedding);
  return tape.cosine(c_hat, caption_conditioned_repr);
}

RankingLossInfo ranking_loss(ad::Tape& tape, const std::vector<std::vector<ad::Var>>& scores,
                             const std::vector<std::vector<char>>& negative_mask, double margin) {
  if (margin <= 0.0) throw Error(ErrorKind::InvalidArgument, "margin must be > 0");
  const size_t B = scores.size();
  if (B == 0) throw Error(ErrorKind::InvalidArgument, "ranking_loss on empty batch");
  for (const auto& row : scores)
    if (row.size() != B) throw Error(ErrorKind::InvalidArgument, "score matrix must be square");

  RankingLossInfo info;
  info.hardest_caption.assign(B, -1);
  info.hardest_image.assign(B, -1);

  std::vector<ad::Var> per_pair;
  per_pair.reserve(B);
  for (size_t i = 0; i < B; ++i) {
    // hardest caption negative in row i, hardest image negative in column i
    int hc = -1, hi = -1;
    for (size_t j = 0; j < B; ++j) {
      if (negative_mask[i][j] && (hc < 0 || tape.scalar_val(scores[i][j]) >
                                                tape.scalar_val(scores[i][static_cast<size_t>(hc)])))
        hc = static_cast<int>(j);
      if (negative_mask[j][i] && (hi < 0 || tape.scalar_val(scores[j][i]) >
                                                tape.scalar_val(scores[static_cast<size_t>(hi)][i])))
        hi = static_cast<int>(j);
    }
    info.hardest_caption[i] = hc;
    info.hardest_image[i] = hi;

    std::vector<ad::Var> hinges;
    if (hc >= 0)
      hinges.push_back(tape.relu(
          tape.scale_shift(tape.sub(scores[i][static_cast<size_t>(hc)], scores[i][i]), 1.0, margin)));
    if (hi >= 0)
      hinges.push_back(tape.relu(
          tape.scale_shift(tape.sub(scores[static_cast<size_t>(hi)][i], scores[i][i]), 1.0, margin)));
    if (!hinges.empty()) info.had_negatives = true;

    ad::Var pair_loss;
    if (hinges.empty()) pair_loss = tape.scalar(0.0);
    else if (hinges.size() == 1) pair_loss = hinges[0];
    else pair_loss = tape.add(hinges[0], hinges[1]);
    per_pair.push_back(pair_loss);
  }
  info.loss = tape.mean(per_pair);
  return info;
}

std::vector<std::vector<char>> negative_mask_for_batch(
    const std::vector<std::string>& scene_ids,
    const std::vector<const std::vector<std::vector<std::string>>*>& scene_captions,
    const std::vector<std::vector<std::string>>& batch_captions) {
  const size_t B = scene_ids.size();
  if (scene_captions.size() != B || batch_captions.size() != B)
    throw Error(ErrorKind::InvalidArgument, "negative mask inputs disagree on batch size");
  std::vector<std::vector<char>> mask(B, std::vector<char>(B, 0));
  for (size_t i = 0; i < B; ++i) {
    for (size_t j = 0; j < B; ++j) {
      if (i == j) continue;
      if (scene_ids[i] == scene_ids[j]) continue;  // same image: caption j belongs to C_I
      bool paired = false;
      for (const auto& cap : *scene_captions[i]) {
        if (cap == batch_captions[j]) {
          paired = true;  // duplicate caption text: treat as a true pair
          break;
        }
      }
      if (!paired) mask[i][j] = 1;
    }
  }
  return mask;
}

}  // namespace grounding
