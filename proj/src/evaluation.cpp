#include "grounding/evaluation.hpp"

#include <algorithm>
#include <cstdio>

#include <json.hpp>

#include "grounding/autodiff.hpp"
#include "grounding/error.hpp"
#include "grounding/model.hpp"
#include "grounding/text_pipeline.hpp"

namespace grounding {

using nlohmann::json;

double iou(const BoundingBox& a, const BoundingBox& b) {
  if (a.degenerate() || b.degenerate()) throw Error(ErrorKind::InvalidArgument, "iou on degenerate box");
  const double ix = std::max(0.0, std::min(a.x2, b.x2) - std::max(a.x1, b.x1));
  const double iy = std::max(0.0, std::min(a.y2, b.y2) - std::max(a.y1, b.y1));
  const double inter = ix * iy;
  const double uni = a.area() + b.area() - inter;
  return uni <= 0.0 ? 0.0 : inter / uni;
}

double det_percent(const std::vector<LocalizationResult>& results) {
  if (results.empty()) return 0.0;
  long hits = 0;
  for (const auto& r : results) hits += r.det_hit ? 1 : 0;
  return 100.0 * static_cast<double>(hits) / static_cast<double>(results.size());
}

double point_percent(const std::vector<LocalizationResult>& results) {
  if (results.empty()) return 0.0;
  long hits = 0;
  for (const auto& r : results) hits += r.point_hit ? 1 : 0;
  return 100.0 * static_cast<double>(hits) / static_cast<double>(results.size());
}

LocalizationReport eval_localization(const Model& model, const World& world,
                                     std::vector<LocalizationResult>* details) {
  bool any_gold = false;
  for (const auto& s : world.scenes)
    if (!s.gold.empty()) {
      any_gold = true;
      break;
    }
  if (!any_gold)
    throw Error(ErrorKind::Schema,
                "split '" + world.split + "' carries no gold alignments; localization needs an eval split");

  LocalizationReport rep;
  double iou_sum = 0.0;
  double chance_sum = 0.0;
  long chance_n = 0;
  for (const auto& scene : world.scenes) {
    if (!scene.regions.empty()) {
      chance_sum += 100.0 / static_cast<double>(scene.regions.size());
      ++chance_n;
    }
    if (scene.gold.empty()) continue;
    // Chunk each caption once.
    std::vector<std::vector<PhraseRecord>> chunked;
    chunked.reserve(scene.captions.size());
    for (const auto& cap : scene.captions) chunked.push_back(chunk_caption(cap));

    for (const auto& g : scene.gold) {
      const auto& phrases = chunked[static_cast<size_t>(g.caption_index)];
      if (g.phrase_index < 0 || g.phrase_index >= static_cast<int>(phrases.size())) {
        ++rep.phrase_index_mismatches;
        ++rep.total;
        continue;
      }
      LocalizationResult res;
      res.scene_id = scene.scene_id;
      res.caption_index = g.caption_index;
      res.phrase_index = g.phrase_index;
      res.gold = g.box;
      res.predicted = model.localize(scene, phrases[static_cast<size_t>(g.phrase_index)].tokens);
      res.iou = iou(res.predicted, res.gold);
      res.det_hit = res.iou >= 0.5;
      res.point_hit = res.gold.contains(res.predicted.center_x(), res.predicted.center_y());
      ++rep.total;
      rep.det_hits += res.det_hit ? 1 : 0;
      rep.point_hits += res.point_hit ? 1 : 0;
      iou_sum += res.iou;
      if (details) details->push_back(std::move(res));
    }
  }
  if (rep.total > 0) {
    rep.det_pct = 100.0 * static_cast<double>(rep.det_hits) / static_cast<double>(rep.total);
    rep.point_pct = 100.0 * static_cast<double>(rep.point_hits) / static_cast<double>(rep.total);
    rep.mean_iou = iou_sum / static_cast<double>(rep.total);
  }
  if (chance_n > 0) rep.chance_pct = chance_sum / static_cast<double>(chance_n);
  return rep;
}

RetrievalResult retrieval_eval(const Eigen::MatrixXd& scores, const std::vector<int>& gt) {
  const long Q = scores.rows();
  const long N = scores.cols();
  if (Q == 0 || N == 0) throw Error(ErrorKind::InvalidArgument, "retrieval_eval on empty score matrix");
  if (static_cast<long>(gt.size()) != Q)
    throw Error(ErrorKind::InvalidArgument, "retrieval_eval: gt size must match query count");

  RetrievalResult res;
  res.gallery = static_cast<int>(N);
  res.ranks.reserve(static_cast<size_t>(Q));
  for (long q = 0; q < Q; ++q) {
    const int g = gt[static_cast<size_t>(q)];
    if (g < 0 || g >= N) throw Error(ErrorKind::InvalidArgument, "retrieval_eval: gt index out of range");
    const double gt_score = scores(q, g);
    int greater = 0;
    for (long i = 0; i < N; ++i)
      if (scores(q, i) > gt_score) ++greater;
    res.ranks.push_back(1 + greater);
  }
  long h1 = 0, h5 = 0, h10 = 0;
  for (int r : res.ranks) {
    h1 += r <= 1 ? 1 : 0;
    h5 += r <= 5 ? 1 : 0;
    h10 += r <= 10 ? 1 : 0;
  }
  const double qn = static_cast<double>(Q);
  res.r_at_1 = 100.0 * static_cast<double>(h1) / qn;
  res.r_at_5 = 100.0 * static_cast<double>(h5) / qn;
  res.r_at_10 = 100.0 * static_cast<double>(h10) / qn;
  std::vector<int> sorted = res.ranks;
  std::sort(sorted.begin(), sorted.end());
  res.median_rank = sorted[(sorted.size() - 1) / 2];  // lower median
  return res;
}

RetrievalResult eval_retrieval(const Model& model, const World& world, int gallery_size) {
  long N = static_cast<long>(world.scenes.size());
  if (gallery_size > 0) N = std::min<long>(N, gallery_size);
  if (N < 2) throw Error(ErrorKind::InvalidArgument, "retrieval needs a gallery of >= 2 scenes");

  // One query caption per gallery scene (its first caption).
  std::vector<int> gt;
  std::vector<const std::vector<std::string>*> queries;
  for (long i = 0; i < N; ++i) {
    const auto& scene = world.scenes[static_cast<size_t>(i)];
    if (scene.captions.empty())
      throw Error(ErrorKind::Schema, scene.scene_id + ": scene has no captions");
    queries.push_back(&scene.captions[0]);
    gt.push_back(static_cast<int>(i));
  }

  Eigen::MatrixXd S(N, N);
  for (long q = 0; q < N; ++q) {
    // Score one caption against the whole gallery on a per-query tape.
    ad::Tape tape(&const_cast<ad::ParamStore&>(model.store()));
    const auto cap = model.stage_caption(tape, *queries[static_cast<size_t>(q)]);
    for (long i = 0; i < N; ++i) {
      const auto img = model.stage_image(tape, world.scenes[static_cast<size_t>(i)]);
      S(q, i) = tape.scalar_val(model.score(tape, img, cap, Mode::Infer, nullptr));
    }
  }
  return retrieval_eval(S, gt);
}

std::string localization_report_json(const LocalizationReport& r) {
  json j;
  j["task"] = "localization";
  j["total_phrases"] = r.total;
  j["det_hits"] = r.det_hits;
  j["point_hits"] = r.point_hits;
  j["phrase_index_mismatches"] = r.phrase_index_mismatches;
  j["det_percent"] = r.det_pct;
  j["point_percent"] = r.point_pct;
  j["mean_iou"] = r.mean_iou;
  j["chance_percent"] = r.chance_pct;
  j["det_rule"] = "iou >= 0.5";
  j["point_rule"] = "predicted-box center in gold box, boundary-inclusive";
  return j.dump();
}

std::string retrieval_report_json(const RetrievalResult& r) {
  json j;
  j["task"] = "retrieval";
  j["num_captions"] = r.ranks.size();
  j["gallery"] = r.gallery;
  j["r_at_1"] = r.r_at_1;
  j["r_at_5"] = r.r_at_5;
  j["r_at_10"] = r.r_at_10;
  j["median_rank"] = r.median_rank;
  j["tie_rule"] = "rank = 1 + count(strictly greater); optimistic ties";
  return j.dump();
}

std::string render_table(const std::vector<TableRow>& rows) {
  std::string out;
  char line[160];
  std::snprintf(line, sizeof(line), "%-28s %7s %7s %7s %7s %8s\n", "model", "R@1", "R@5", "R@10",
                "Med r", "Det%");
  out += line;
  out += std::string(68, '-') + "\n";
  for (const auto& r : rows) {
    std::snprintf(line, sizeof(line), "%-28s %7.1f %7.1f %7.1f %7.1f %8.1f\n", r.label.c_str(), r.r1,
                  r.r5, r.r10, r.med_r, r.det);
    out += line;
  }
  return out;
}

}  // namespace grounding
