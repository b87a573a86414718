#ifndef GROUNDING_TRAINER_HPP
#define GROUNDING_TRAINER_HPP

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include "grounding/model.hpp"
#include "grounding/types.hpp"

namespace grounding {

struct TrainConfig {
  std::string model = "align2ground";
  std::string match = "topk";
  std::string agg = "permInv";
  int epochs = 30;
  int batch_size = 16;
  double learning_rate = 2e-4;
  double margin = 0.1;
  int top_k = 3;
  double temperature = 1.0;
  std::string activation = "relu";
  ModelDims dims;  // desk-scale defaults; paper-scale values are valid settings
  bool warm_start = true;
  double warm_start_fraction = 0.2;
  uint64_t seed = 1;
  int eval_every = 3;
  int checkpoint_every = 0;          // > 0: autosave best-so-far every k epochs
  std::string checkpoint_path;       // target for autosaves
  int val_gallery = 100;

  void validate() const;
  std::string to_canonical_json() const;
  static TrainConfig from_json(const std::string& text);
  std::string digest() const;
};

struct EpochStat {
  int epoch = 0;
  std::string phase;  // "warm" or "main"
  double mean_loss = 0.0;
  double val_r1 = -1.0;   // -1 when not evaluated this epoch
  double val_det = -1.0;
};

struct TrainResult {
  std::optional<Model> model;  // best-on-validation checkpoint
  std::vector<EpochStat> curve;
  int best_epoch = -1;
  double best_r1 = -1.0;
  double best_det = -1.0;
  bool diverged = false;
  std::string divergence_note;
  long zero_norm_pairs = 0;
  int warm_epochs = 0;
  std::string meta_json() const;
};

// Full training run; single-threaded and bit-reproducible for a fixed
// config. `log`, when given, receives one line per epoch.
TrainResult train(const TrainConfig& config, const World& train_world, const World& val_world,
                  std::ostream* log = nullptr);

// Runs the {max,topk,attention} x {permInv,sequence} grid plus the three
// baselines, evaluates each on `test_world`, and reports the grid table
// together with the full-vs-pooling localization trend (majority over up to
// three seeds when the first disagrees).
std::string run_ablation(const TrainConfig& base, const World& train_world, const World& val_world,
                         const World& test_world, std::ostream* log = nullptr, int max_workers = 2);

}  // namespace grounding

#endif
