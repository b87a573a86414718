#include "grounding/model.hpp"

#include <cmath>
#include <fstream>
#include <sstream>

#include <json.hpp>

#include "grounding/error.hpp"
#include "grounding/rng.hpp"
#include "grounding/tensor_io.hpp"

namespace grounding {

using nlohmann::json;

ModelKind model_kind_from_name(const std::string& name) {
  if (name == "align2ground") return ModelKind::Align2Ground;
  if (name == "global") return ModelKind::Global;
  if (name == "pool-words") return ModelKind::PoolWords;
  if (name == "pool-phrases") return ModelKind::PoolPhrases;
  throw Error(ErrorKind::InvalidArgument, "unknown model kind: " + name);
}

const char* model_kind_name(ModelKind k) {
  switch (k) {
    case ModelKind::Align2Ground: return "align2ground";
    case ModelKind::Global: return "global";
    case ModelKind::PoolWords: return "pool-words";
    case ModelKind::PoolPhrases: return "pool-phrases";
  }
  return "?";
}

std::string ModelConfig::to_json() const {
  json j;
  j["kind"] = model_kind_name(kind);
  j["strategy"] = match_strategy_name(strategy);
  j["agg"] = agg_kind_name(agg);
  j["top_k"] = top_k;
  j["temperature"] = temperature;
  j["activation"] = activation_name(activation);
  j["d_v"] = d_v;
  j["dims"] = {{"word", dims.word},
               {"gru_hidden", dims.gru_hidden},
               {"gru_layers", dims.gru_layers},
               {"set_hidden", dims.set_hidden},
               {"caption_hidden", dims.caption_hidden},
               {"joint", dims.joint}};
  j["vocabulary"] = vocabulary;
  return j.dump();
}

ModelConfig ModelConfig::from_json(const std::string& text) {
  json j;
  try {
    j = json::parse(text);
  } catch (const json::exception& e) {
    throw Error(ErrorKind::Parse, std::string("model config: ") + e.what());
  }
  ModelConfig c;
  try {
    c.kind = model_kind_from_name(j.at("kind").get<std::string>());
    c.strategy = match_strategy_from_name(j.at("strategy").get<std::string>());
    c.agg = agg_kind_from_name(j.at("agg").get<std::string>());
    c.top_k = j.at("top_k").get<int>();
    c.temperature = j.at("temperature").get<double>();
    c.activation = activation_from_name(j.at("activation").get<std::string>());
    c.d_v = j.at("d_v").get<int>();
    const auto& d = j.at("dims");
    c.dims.word = d.at("word").get<int>();
    c.dims.gru_hidden = d.at("gru_hidden").get<int>();
    c.dims.gru_layers = d.at("gru_layers").get<int>();
    c.dims.set_hidden = d.at("set_hidden").get<int>();
    c.dims.caption_hidden = d.at("caption_hidden").get<int>();
    c.dims.joint = d.at("joint").get<int>();
    c.vocabulary = j.at("vocabulary").get<std::vector<std::string>>();
  } catch (const json::exception& e) {
    throw Error(ErrorKind::Schema, std::string("model config: ") + e.what());
  }
  return c;
}

Model::Model(const ModelConfig& config) : cfg_(config), vocab_(config.vocabulary) { build_layout(); }

Model::Model(const ModelConfig& config, uint64_t init_seed) : Model(config) {
  Rng rng(init_seed);
  text_.init_params(store_, rng);
  if (w_l_ >= 0) init_uniform_param(store_, w_l_, 1.0 / std::sqrt(static_cast<double>(cfg_.d_v)), rng);
  if (cfg_.kind == ModelKind::Align2Ground) {
    if (cfg_.agg == AggKind::PermInv) set_enc_.init_params(store_, rng);
    else seq_enc_.init_params(store_, rng);
  }
  if (caption_head_.w1 >= 0) caption_head_.init_params(store_, rng);
  if (img_w_ >= 0) init_uniform_param(store_, img_w_, 1.0 / std::sqrt(static_cast<double>(cfg_.d_v)), rng);
}

void Model::build_layout() {
  if (cfg_.d_v < 1) throw Error(ErrorKind::InvalidArgument, "model config: d_v must be positive");
  if (cfg_.top_k < 1) throw Error(ErrorKind::InvalidArgument, "model config: top_k must be >= 1");
  if (cfg_.temperature <= 0.0)
    throw Error(ErrorKind::InvalidArgument, "model config: temperature must be > 0");

  text_ = TextEncoder(store_, "text", vocab_.size_with_unk(), cfg_.dims.word, cfg_.dims.gru_hidden,
                      cfg_.dims.gru_layers);
  const int d_s = text_.d_s();

  const bool has_projection = cfg_.kind != ModelKind::Global;
  if (has_projection) w_l_ = store_.add("w_l", cfg_.d_v, d_s);

  if (cfg_.kind == ModelKind::Align2Ground) {
    if (cfg_.agg == AggKind::PermInv)
      set_enc_ = SetEncoder(store_, "agg.set", cfg_.d_v, cfg_.dims.set_hidden, cfg_.dims.joint,
                            cfg_.activation);
    else
      seq_enc_ = SequenceEncoder(store_, "agg.seq", cfg_.d_v, cfg_.dims.joint, 2);
  }
  if (cfg_.kind == ModelKind::Align2Ground || cfg_.kind == ModelKind::Global)
    caption_head_ = Mlp(store_, "cap_head", d_s, cfg_.dims.caption_hidden, cfg_.dims.joint,
                        cfg_.activation);
  if (cfg_.kind == ModelKind::Global) {
    img_w_ = store_.add("img.w", cfg_.dims.joint, cfg_.d_v);
    img_b_ = store_.add("img.b", cfg_.dims.joint, 1);
  }
}

Model::CaptionCtx Model::stage_caption(ad::Tape& tape, const std::vector<std::string>& tokens) const {
  CaptionCtx ctx;
  ctx.tokens = &tokens;
  ctx.phrases = chunk_caption(tokens);

  const bool wants_phrases =
      cfg_.kind == ModelKind::Align2Ground || cfg_.kind == ModelKind::PoolPhrases;
  const bool wants_caption = cfg_.kind == ModelKind::Align2Ground || cfg_.kind == ModelKind::Global;
  const bool wants_words = cfg_.kind == ModelKind::PoolWords;

  if (wants_phrases)
    for (const auto& p : ctx.phrases)
      ctx.phrase_embeddings.push_back(text_.encode(tape, vocab_.encode(p.tokens)).final_state);
  if (wants_caption || wants_words) {
    const TextEncoder::Run run = text_.encode(tape, vocab_.encode(tokens));
    if (wants_caption) ctx.caption_embedding = run.final_state;
    if (wants_words) ctx.word_embeddings = run.per_position;
  }
  return ctx;
}

Model::StagedImage Model::stage_image(ad::Tape& tape, const SceneRecord& scene) const {
  StagedImage staged;
  if (cfg_.kind == ModelKind::Global) {
    if (scene.regions.empty()) throw Error(ErrorKind::InvalidArgument, "scene has no regions");
    // Whole-image stand-in: mean of the region features.
    ad::Vec mean = ad::Vec::Zero(cfg_.d_v);
    for (const auto& r : scene.regions) mean += r.feature.cast<double>();
    mean /= static_cast<double>(scene.regions.size());
    const ad::Var m = tape.constant(mean);
    staged.image_embedding = tape.add(tape.matvec(tape.param(img_w_), m), tape.param(img_b_));
    return staged;
  }
  staged.proj = project_regions(tape, tape.param(w_l_), scene);
  return staged;
}

ad::Var Model::pooling_phrase_score(ad::Tape& tape, const StagedImage& image,
                                    const CaptionCtx& caption) const {
  if (caption.phrase_embeddings.empty())
    throw Error(ErrorKind::InvalidArgument, "pooling score needs phrase embeddings");
  const auto cols = score_pairs(tape, image.proj, caption.phrase_embeddings);
  std::vector<ad::Var> best;
  best.reserve(cols.size());
  for (ad::Var col : cols) best.push_back(tape.reduce_max(col));
  return tape.mean(best);
}

ad::Var Model::score(ad::Tape& tape, const StagedImage& image, const CaptionCtx& caption, Mode mode,
                     Rng* rng, const std::vector<int>* frozen_selection,
                     MatchOutcome* outcome_out) const {
  switch (cfg_.kind) {
    case ModelKind::Align2Ground: {
      MatchOutcome mo = match_caption(tape, image.proj, caption.phrase_embeddings, cfg_.strategy, mode,
                                      cfg_.top_k, cfg_.temperature, rng, frozen_selection);
      const ad::Var r_hat = cfg_.agg == AggKind::PermInv ? set_enc_.encode(tape, mo.rois)
                                                         : seq_enc_.encode(tape, mo.rois);
      if (outcome_out) *outcome_out = std::move(mo);
      return pair_score(tape, r_hat, caption.caption_embedding, caption_head_);
    }
    case ModelKind::Global: {
      const ad::Var c_hat = caption_head_.apply(tape, caption.caption_embedding);
      return tape.cosine(c_hat, image.image_embedding);
    }
    case ModelKind::PoolPhrases:
      return pooling_phrase_score(tape, image, caption);
    case ModelKind::PoolWords: {
      const auto cols = score_pairs(tape, image.proj, caption.word_embeddings);
      std::vector<ad::Var> best;
      best.reserve(cols.size());
      for (ad::Var col : cols) best.push_back(tape.reduce_max(col));
      return tape.mean(best);
    }
  }
  throw Error(ErrorKind::Internal, "bad model kind");
}

Eigen::VectorXd Model::region_scores(const SceneRecord& scene,
                                     const std::vector<std::string>& phrase_tokens) const {
  if (phrase_tokens.empty()) throw Error(ErrorKind::InvalidArgument, "empty phrase");
  // Forward-only tape; backward is never invoked on it.
  ad::Tape tape(&const_cast<ad::ParamStore&>(store_));
  const ad::Var p = text_.encode(tape, vocab_.encode(phrase_tokens)).final_state;
  const long R = static_cast<long>(scene.regions.size());
  Eigen::VectorXd out(R);
  if (cfg_.kind == ModelKind::Global) {
    const ad::Var p_hat = caption_head_.apply(tape, p);
    for (long j = 0; j < R; ++j) {
      const ad::Var x = tape.constant(scene.regions[static_cast<size_t>(j)].feature.cast<double>());
      const ad::Var e = tape.add(tape.matvec(tape.param(img_w_), x), tape.param(img_b_));
      out[j] = tape.scalar_val(tape.cosine(p_hat, e));
    }
    return out;
  }
  const ad::Var w = tape.param(w_l_);
  for (long j = 0; j < R; ++j) {
    const ad::Var x = tape.constant(scene.regions[static_cast<size_t>(j)].feature.cast<double>());
    out[j] = tape.scalar_val(tape.cosine(tape.mat_t_vec(w, x), p));
  }
  return out;
}

int Model::localize_region(const SceneRecord& scene,
                           const std::vector<std::string>& phrase_tokens) const {
  return select_max(region_scores(scene, phrase_tokens));
}

BoundingBox Model::localize(const SceneRecord& scene,
                            const std::vector<std::string>& phrase_tokens) const {
  return scene.regions[static_cast<size_t>(localize_region(scene, phrase_tokens))].box;
}

std::vector<std::vector<ad::Var>> batch_scores(ad::Tape& tape, const Model& model,
                                               const std::vector<const SceneRecord*>& scenes,
                                               const std::vector<std::vector<std::string>>& captions,
                                               Mode diagonal_mode, Rng* rng) {
  const size_t B = scenes.size();
  if (captions.size() != B) throw Error(ErrorKind::InvalidArgument, "batch scenes/captions mismatch");
  if (B == 0) throw Error(ErrorKind::InvalidArgument, "empty batch");

  std::vector<Model::StagedImage> images;
  std::vector<Model::CaptionCtx> caps;
  images.reserve(B);
  caps.reserve(B);
  for (size_t i = 0; i < B; ++i) {
    images.push_back(model.stage_image(tape, *scenes[i]));
    caps.push_back(model.stage_caption(tape, captions[i]));
  }
  std::vector<std::vector<ad::Var>> S(B, std::vector<ad::Var>(B, -1));
  for (size_t i = 0; i < B; ++i)
    for (size_t j = 0; j < B; ++j) {
      const Mode mode = i == j ? diagonal_mode : Mode::Infer;
      S[i][j] = model.score(tape, images[i], caps[j], mode, rng);
    }
  return S;
}

void Model::save(const std::string& path, const std::string& meta_json) const {
  json meta;
  try {
    meta = json::parse(meta_json);
  } catch (const json::exception& e) {
    throw Error(ErrorKind::InvalidArgument, std::string("checkpoint meta must be JSON: ") + e.what());
  }
  json header;
  header["format"] = "grounding-checkpoint-v1";
  header["config"] = json::parse(cfg_.to_json());
  header["meta"] = meta;
  json tensors = json::array();
  for (size_t i = 0; i < store_.size(); ++i) {
    const auto& t = store_.at(static_cast<int>(i));
    tensors.push_back({{"name", t.name}, {"rows", t.value.rows()}, {"cols", t.value.cols()}});
  }
  header["tensors"] = std::move(tensors);

  std::ostringstream os(std::ios::binary);
  os << header.dump() << '\n';
  for (size_t i = 0; i < store_.size(); ++i) write_blob_f64(os, store_.at(static_cast<int>(i)).value);
  write_file(path, os.str());
}

Model Model::load(const std::string& path, std::string* meta_json_out) {
  std::istringstream is(read_file(path), std::ios::binary);
  std::string header_line;
  if (!std::getline(is, header_line))
    throw Error(ErrorKind::Parse, path + ": missing checkpoint header");
  json header;
  try {
    header = json::parse(header_line);
  } catch (const json::exception& e) {
    throw Error(ErrorKind::Parse, path + ": bad checkpoint header: " + e.what());
  }
  if (header.value("format", "") != "grounding-checkpoint-v1")
    throw Error(ErrorKind::Schema, path + ": not a checkpoint file");

  Model model(ModelConfig::from_json(header.at("config").dump()));
  const auto& tensors = header.at("tensors");
  if (tensors.size() != model.store_.size())
    throw Error(ErrorKind::Schema, path + ": checkpoint tensor count differs from model layout");
  for (size_t i = 0; i < model.store_.size(); ++i) {
    auto& t = model.store_.at(static_cast<int>(i));
    const auto& tj = tensors[i];
    if (tj.at("name").get<std::string>() != t.name)
      throw Error(ErrorKind::Schema, path + ": tensor order mismatch at " + t.name);
    const ad::Mat m = read_blob_f64(is, path + ":" + t.name);
    if (m.rows() != t.value.rows() || m.cols() != t.value.cols())
      throw Error(ErrorKind::Schema, path + ": tensor shape mismatch at " + t.name);
    t.value = m;
  }
  if (meta_json_out) *meta_json_out = header.at("meta").dump();
  return model;
}

void save_checkpoint(const Model& model, const std::string& meta_json, const std::string& path) {
  model.save(path, meta_json);
}

}  // namespace grounding
