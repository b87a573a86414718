#ifndef GROUNDING_EVALUATION_HPP
#define GROUNDING_EVALUATION_HPP

#include <Eigen/Core>
#include <string>
#include <vector>

#include "grounding/types.hpp"

namespace grounding {

class Model;

// Intersection-over-union; 0 for disjoint boxes.
double iou(const BoundingBox& a, const BoundingBox& b);

struct LocalizationResult {
  std::string scene_id;
  int caption_index = 0;
  int phrase_index = 0;
  BoundingBox predicted;
  BoundingBox gold;
  double iou = 0.0;
  bool det_hit = false;    // IoU >= 0.5
  bool point_hit = false;  // predicted-box center inside gold (boundary-inclusive)
};

// 100 * hits / total over per-phrase results.
double det_percent(const std::vector<LocalizationResult>& results);
double point_percent(const std::vector<LocalizationResult>& results);

struct LocalizationReport {
  long total = 0;
  long det_hits = 0;
  long point_hits = 0;
  long phrase_index_mismatches = 0;  // gold rows whose phrase index exceeds the chunker's P
  double det_pct = 0.0;
  double point_pct = 0.0;
  double mean_iou = 0.0;
  double chance_pct = 0.0;  // 100 / R, averaged over scenes
};

// Runs the model's deterministic localization over every gold alignment in
// the world. Throws Error{Schema} when the split carries no gold alignments.
LocalizationReport eval_localization(const Model& model, const World& world,
                                     std::vector<LocalizationResult>* details = nullptr);

struct RetrievalResult {
  std::vector<int> ranks;  // 1-based rank of the ground-truth image per caption
  int gallery = 0;
  double r_at_1 = 0.0, r_at_5 = 0.0, r_at_10 = 0.0;
  double median_rank = 0.0;  // lower median
};

// Ranks with optimistic ties: rank = 1 + #(strictly greater scores).
// scores(q, i) = score of caption q against image i; gt[q] = column of the
// ground-truth image.
RetrievalResult retrieval_eval(const Eigen::MatrixXd& scores, const std::vector<int>& gt);

// Scores one caption per query against a gallery of the world's first
// `gallery_size` scenes (<= 0 means all scenes).
RetrievalResult eval_retrieval(const Model& model, const World& world, int gallery_size = 0);

std::string localization_report_json(const LocalizationReport& r);
std::string retrieval_report_json(const RetrievalResult& r);

// One table row per model variant, mirroring the retrieval/localization
// report columns (R@1, R@5, R@10, Med r, Det%).
struct TableRow {
  std::string label;
  double r1 = 0.0, r5 = 0.0, r10 = 0.0;
  double med_r = 0.0;
  double det = 0.0;
};
std::string render_table(const std::vector<TableRow>& rows);

}  // namespace grounding

#endif
