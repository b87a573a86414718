#ifndef GROUNDING_MODEL_HPP
#define GROUNDING_MODEL_HPP

#include <memory>
#include <string>
#include <vector>

#include "grounding/autodiff.hpp"
#include "grounding/global_matching.hpp"
#include "grounding/local_aggregator.hpp"
#include "grounding/local_matching.hpp"
#include "grounding/text_pipeline.hpp"
#include "grounding/types.hpp"

namespace grounding {

enum class ModelKind { Align2Ground, Global, PoolWords, PoolPhrases };
ModelKind model_kind_from_name(const std::string& name);  // align2ground|global|pool-words|pool-phrases
const char* model_kind_name(ModelKind k);

struct ModelDims {
  int word = 32;
  int gru_hidden = 32;
  int gru_layers = 2;
  int set_hidden = 64;
  int caption_hidden = 64;
  int joint = 64;  // d_e

  int d_s() const { return 2 * gru_hidden; }
};

struct ModelConfig {
  ModelKind kind = ModelKind::Align2Ground;
  MatchStrategy strategy = MatchStrategy::TopK;
  AggKind agg = AggKind::PermInv;
  int top_k = 3;
  double temperature = 1.0;
  Activation activation = Activation::Relu;
  ModelDims dims;
  int d_v = 0;
  std::vector<std::string> vocabulary;

  std::string to_json() const;
  static ModelConfig from_json(const std::string& text);
};

// One trainable system: the caption-conditioned matching model or one of the
// comparison baselines, all sharing the same text encoder design and loss.
class Model {
 public:
  Model(const ModelConfig& config, uint64_t init_seed);

  const ModelConfig& config() const { return cfg_; }
  ad::ParamStore& store() { return store_; }
  const ad::ParamStore& store() const { return store_; }
  const Vocab& vocab() const { return vocab_; }

  struct CaptionCtx {
    const std::vector<std::string>* tokens = nullptr;
    std::vector<PhraseRecord> phrases;
    std::vector<ad::Var> phrase_embeddings;  // kinds that match phrases
    std::vector<ad::Var> word_embeddings;    // contextual, pool-words only
    ad::Var caption_embedding = -1;          // kinds with a caption head
  };

  struct StagedImage {
    ProjectedImage proj;             // kinds with a projection head
    ad::Var image_embedding = -1;    // global baseline head output
  };

  CaptionCtx stage_caption(ad::Tape& tape, const std::vector<std::string>& tokens) const;
  StagedImage stage_image(ad::Tape& tape, const SceneRecord& scene) const;

  // Image-caption score S_Ic under this model. For the main model the
  // training mode draws topk selections from `rng`; inference is
  // deterministic. `frozen_selection` pins region choices (gradient checks).
  ad::Var score(ad::Tape& tape, const StagedImage& image, const CaptionCtx& caption, Mode mode, Rng* rng,
                const std::vector<int>* frozen_selection = nullptr,
                MatchOutcome* outcome_out = nullptr) const;

  // Phrase-conditioned region scores used for localization (deterministic).
  Eigen::VectorXd region_scores(const SceneRecord& scene,
                                const std::vector<std::string>& phrase_tokens) const;
  int localize_region(const SceneRecord& scene, const std::vector<std::string>& phrase_tokens) const;
  BoundingBox localize(const SceneRecord& scene, const std::vector<std::string>& phrase_tokens) const;

  // Average-of-best local scores (the pooling objective); also the phase-1
  // warm-start objective of the main model.
  ad::Var pooling_phrase_score(ad::Tape& tape, const StagedImage& image, const CaptionCtx& caption) const;

  void save(const std::string& path, const std::string& meta_json = "{}") const;
  static Model load(const std::string& path, std::string* meta_json_out = nullptr);

 private:
  Model(const ModelConfig& config);  // layout only, no init

  void build_layout();

  ModelConfig cfg_;
  ad::ParamStore store_;
  Vocab vocab_;
  TextEncoder text_;
  int w_l_ = -1;
  SetEncoder set_enc_;
  SequenceEncoder seq_enc_;
  Mlp caption_head_;
  int img_w_ = -1, img_b_ = -1;
};

// S[i][j] = score of image i against caption j. Diagonal entries use
// `diagonal_mode` selection; off-diagonal negatives always use deterministic
// max selection so hard-negative mining is noise-free.
std::vector<std::vector<ad::Var>> batch_scores(ad::Tape& tape, const Model& model,
                                               const std::vector<const SceneRecord*>& scenes,
                                               const std::vector<std::vector<std::string>>& captions,
                                               Mode diagonal_mode, Rng* rng);

void save_checkpoint(const Model& model, const std::string& meta_json, const std::string& path);

}  // namespace grounding

#endif
