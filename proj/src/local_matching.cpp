#include "grounding/local_matching.hpp"

#include <algorithm>

#include "grounding/error.hpp"
#include "grounding/rng.hpp"

namespace grounding {

MatchStrategy match_strategy_from_name(const std::string& name) {
  if (name == "max") return MatchStrategy::Max;
  if (name == "topk") return MatchStrategy::TopK;
  if (name == "attention") return MatchStrategy::Attention;
  throw Error(ErrorKind::InvalidArgument, "unknown match strategy: " + name);
}

const char* match_strategy_name(MatchStrategy s) {
  switch (s) {
    case MatchStrategy::Max: return "max";
    case MatchStrategy::TopK: return "topk";
    case MatchStrategy::Attention: return "attention";
  }
  return "?";
}

ProjectedImage project_regions(ad::Tape& tape, ad::Var w_l_param, const SceneRecord& scene) {
  if (scene.regions.empty()) throw Error(ErrorKind::InvalidArgument, "scene has no regions");
  const long dv = scene.regions[0].feature.size();
  ad::Mat raw(dv, static_cast<long>(scene.regions.size()));
  for (size_t j = 0; j < scene.regions.size(); ++j) {
    if (scene.regions[j].feature.size() != dv)
      throw Error(ErrorKind::Schema, "inconsistent feature widths within scene " + scene.scene_id);
    raw.col(static_cast<long>(j)) = scene.regions[j].feature.cast<double>();
  }
  ProjectedImage out;
  out.raw_matrix = tape.constant(raw);
  out.raw.reserve(scene.regions.size());
  out.projected.reserve(scene.regions.size());
  for (size_t j = 0; j < scene.regions.size(); ++j) {
    const ad::Var x = tape.constant(raw.col(static_cast<long>(j)));
    out.raw.push_back(x);
    out.projected.push_back(tape.mat_t_vec(w_l_param, x));
  }
  return out;
}

std::vector<ad::Var> score_pairs(ad::Tape& tape, const ProjectedImage& image,
                                 const std::vector<ad::Var>& phrase_embeddings) {
  if (image.projected.empty() || phrase_embeddings.empty())
    throw Error(ErrorKind::InvalidArgument, "score_pairs needs R >= 1 and P >= 1");
  std::vector<ad::Var> columns;
  columns.reserve(phrase_embeddings.size());
  for (ad::Var p : phrase_embeddings) {
    std::vector<ad::Var> col;
    col.reserve(image.projected.size());
    for (ad::Var xhat : image.projected) col.push_back(tape.cosine(xhat, p));
    columns.push_back(tape.stack(col));
  }
  return columns;
}

int select_max(const Eigen::VectorXd& row) {
  if (row.size() == 0) throw Error(ErrorKind::InvalidArgument, "select_max on empty row");
  int best = 0;
  for (int j = 1; j < row.size(); ++j)
    if (row[j] > row[best]) best = j;
  return best;
}

int select_topk_random(const Eigen::VectorXd& row, int k, Rng& rng) {
  if (row.size() == 0) throw Error(ErrorKind::InvalidArgument, "select_topk_random on empty row");
  if (k < 1) throw Error(ErrorKind::InvalidArgument, "select_topk_random needs k >= 1");
  const int n = static_cast<int>(row.size());
  const int kk = std::min(k, n);
  std::vector<int> order(static_cast<size_t>(n));
  for (int j = 0; j < n; ++j) order[static_cast<size_t>(j)] = j;
  // Stable partial sort keeps the lowest-index-first convention among ties.
  std::stable_sort(order.begin(), order.end(), [&](int a, int b) { return row[a] > row[b]; });
  return order[rng.index(static_cast<size_t>(kk))];
}

AttentionOutcome select_attention(ad::Tape& tape, ad::Var score_column, const ProjectedImage& image,
                                  double temperature) {
  if (temperature <= 0.0) throw Error(ErrorKind::InvalidArgument, "softmax temperature must be > 0");
  AttentionOutcome out;
  ad::Var scaled = score_column;
  if (temperature != 1.0) scaled = tape.scale_shift(score_column, 1.0 / temperature, 0.0);
  out.weights = tape.softmax(scaled);
  out.attended = tape.matvec(image.raw_matrix, out.weights);
  return out;
}

MatchOutcome match_caption(ad::Tape& tape, const ProjectedImage& image,
                           const std::vector<ad::Var>& phrase_embeddings, MatchStrategy strategy,
                           Mode mode, int top_k, double temperature, Rng* rng,
                           const std::vector<int>* frozen_selection) {
  if (phrase_embeddings.empty()) throw Error(ErrorKind::InvalidArgument, "match_caption: P = 0");
  MatchOutcome out;
  out.strategy = strategy;
  out.score_columns = score_pairs(tape, image, phrase_embeddings);

  const size_t P = phrase_embeddings.size();
  for (size_t k = 0; k < P; ++k) {
    const ad::Var col = out.score_columns[k];
    if (strategy == MatchStrategy::Attention && frozen_selection == nullptr) {
      const AttentionOutcome att = select_attention(tape, col, image, temperature);
      out.attention.push_back(att.weights);
      out.selected.push_back(select_max(tape.val(att.weights)));
      out.rois.push_back(att.attended);
      continue;
    }
    int j;
    if (frozen_selection != nullptr) {
      j = (*frozen_selection)[k];
    } else if (strategy == MatchStrategy::TopK && mode == Mode::Train) {
      if (rng == nullptr) throw Error(ErrorKind::InvalidArgument, "topk training selection needs an rng");
      j = select_topk_random(tape.val(col), top_k, *rng);
    } else {
      j = select_max(tape.val(col));
    }
    if (j < 0 || j >= static_cast<int>(image.raw.size()))
      throw Error(ErrorKind::InvalidArgument, "selected region index out of range");
    out.selected.push_back(j);
    out.rois.push_back(image.raw[static_cast<size_t>(j)]);
  }
  return out;
}

}  // namespace grounding
