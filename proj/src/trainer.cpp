#include "grounding/trainer.hpp"

#include <atomic>
#include <cmath>
#include <ostream>
#include <set>
#include <sstream>
#include <thread>

#include <json.hpp>

#include "grounding/digest.hpp"
#include "grounding/error.hpp"
#include "grounding/evaluation.hpp"
#include "grounding/global_matching.hpp"
#include "grounding/rng.hpp"

namespace grounding {

using nlohmann::json;

void TrainConfig::validate() const {
  model_kind_from_name(model);
  match_strategy_from_name(match);
  agg_kind_from_name(agg);
  activation_from_name(activation);
  if (epochs < 1) throw Error(ErrorKind::Schema, "train config: epochs must be >= 1");
  if (batch_size < 2) throw Error(ErrorKind::Schema, "train config: batch_size must be >= 2");
  if (learning_rate <= 0.0) throw Error(ErrorKind::Schema, "train config: learning_rate must be > 0");
  if (margin <= 0.0) throw Error(ErrorKind::Schema, "train config: margin must be > 0");
  if (top_k < 1) throw Error(ErrorKind::Schema, "train config: top_k must be >= 1");
  if (temperature <= 0.0) throw Error(ErrorKind::Schema, "train config: temperature must be > 0");
  if (warm_start_fraction < 0.0 || warm_start_fraction > 1.0)
    throw Error(ErrorKind::Schema, "train config: warm_start_fraction must lie in [0,1]");
  if (eval_every < 1) throw Error(ErrorKind::Schema, "train config: eval_every must be >= 1");
  if (val_gallery < 2) throw Error(ErrorKind::Schema, "train config: val_gallery must be >= 2");
  if (dims.word < 1 || dims.gru_hidden < 1 || dims.gru_layers < 1 || dims.set_hidden < 1 ||
      dims.caption_hidden < 1 || dims.joint < 1)
    throw Error(ErrorKind::Schema, "train config: dims must be positive");
  if (dims.joint % 2 != 0) throw Error(ErrorKind::Schema, "train config: joint dim must be even");
}

std::string TrainConfig::to_canonical_json() const {
  json j;
  j["model"] = model;
  j["match"] = match;
  j["agg"] = agg;
  j["epochs"] = epochs;
  j["batch_size"] = batch_size;
  j["learning_rate"] = learning_rate;
  j["margin"] = margin;
  j["top_k"] = top_k;
  j["temperature"] = temperature;
  j["activation"] = activation;
  j["dims"] = {{"word", dims.word},
               {"gru_hidden", dims.gru_hidden},
               {"gru_layers", dims.gru_layers},
               {"set_hidden", dims.set_hidden},
               {"caption_hidden", dims.caption_hidden},
               {"joint", dims.joint}};
  j["warm_start"] = warm_start;
  j["warm_start_fraction"] = warm_start_fraction;
  j["seed"] = seed;
  j["eval_every"] = eval_every;
  j["checkpoint_every"] = checkpoint_every;
  j["checkpoint_path"] = checkpoint_path;
  j["val_gallery"] = val_gallery;
  return j.dump();
}

TrainConfig TrainConfig::from_json(const std::string& text) {
  json j;
  try {
    j = json::parse(text);
  } catch (const json::exception& e) {
    throw Error(ErrorKind::Parse, std::string("train config: ") + e.what());
  }
  TrainConfig c;
  try {
    static const std::set<std::string> known = {
        "model", "match", "agg", "epochs", "batch_size", "learning_rate", "margin",
        "top_k", "temperature", "activation", "dims", "warm_start", "warm_start_fraction",
        "seed", "eval_every", "checkpoint_every", "checkpoint_path", "val_gallery"};
    for (const auto& [key, _] : j.items())
      if (!known.count(key)) throw Error(ErrorKind::Schema, "train config: unknown field '" + key + "'");
    if (j.contains("model")) c.model = j["model"].get<std::string>();
    if (j.contains("match")) c.match = j["match"].get<std::string>();
    if (j.contains("agg")) c.agg = j["agg"].get<std::string>();
    if (j.contains("epochs")) c.epochs = j["epochs"].get<int>();
    if (j.contains("batch_size")) c.batch_size = j["batch_size"].get<int>();
    if (j.contains("learning_rate")) c.learning_rate = j["learning_rate"].get<double>();
    if (j.contains("margin")) c.margin = j["margin"].get<double>();
    if (j.contains("top_k")) c.top_k = j["top_k"].get<int>();
    if (j.contains("temperature")) c.temperature = j["temperature"].get<double>();
    if (j.contains("activation")) c.activation = j["activation"].get<std::string>();
    if (j.contains("dims")) {
      const auto& d = j["dims"];
      if (d.contains("word")) c.dims.word = d["word"].get<int>();
      if (d.contains("gru_hidden")) c.dims.gru_hidden = d["gru_hidden"].get<int>();
      if (d.contains("gru_layers")) c.dims.gru_layers = d["gru_layers"].get<int>();
      if (d.contains("set_hidden")) c.dims.set_hidden = d["set_hidden"].get<int>();
      if (d.contains("caption_hidden")) c.dims.caption_hidden = d["caption_hidden"].get<int>();
      if (d.contains("joint")) c.dims.joint = d["joint"].get<int>();
    }
    if (j.contains("warm_start")) c.warm_start = j["warm_start"].get<bool>();
    if (j.contains("warm_start_fraction")) c.warm_start_fraction = j["warm_start_fraction"].get<double>();
    if (j.contains("seed")) c.seed = j["seed"].get<uint64_t>();
    if (j.contains("eval_every")) c.eval_every = j["eval_every"].get<int>();
    if (j.contains("checkpoint_every")) c.checkpoint_every = j["checkpoint_every"].get<int>();
    if (j.contains("checkpoint_path")) c.checkpoint_path = j["checkpoint_path"].get<std::string>();
    if (j.contains("val_gallery")) c.val_gallery = j["val_gallery"].get<int>();
  } catch (const json::exception& e) {
    throw Error(ErrorKind::Schema, std::string("train config: ") + e.what());
  }
  c.validate();
  return c;
}

std::string TrainConfig::digest() const { return digest_hex(to_canonical_json()); }

std::string TrainResult::meta_json() const {
  json j;
  j["best_epoch"] = best_epoch;
  j["val"] = {{"r_at_1", best_r1}, {"det_percent", best_det}};
  j["diverged"] = diverged;
  j["zero_norm_pairs"] = zero_norm_pairs;
  j["warm_epochs"] = warm_epochs;
  json curve_j = json::array();
  for (const auto& e : curve)
    curve_j.push_back({{"epoch", e.epoch},
                       {"phase", e.phase},
                       {"mean_loss", e.mean_loss},
                       {"val_r1", e.val_r1},
                       {"val_det", e.val_det}});
  j["curve"] = std::move(curve_j);
  return j.dump();
}

namespace {

struct ValMetrics {
  double r1 = 0.0;
  double det = 0.0;
  bool has_gold = false;
};

ValMetrics evaluate_validation(const Model& model, const World& val_world, int gallery) {
  ValMetrics m;
  const RetrievalResult rr =
      eval_retrieval(model, val_world, std::min<int>(gallery, static_cast<int>(val_world.scenes.size())));
  m.r1 = rr.r_at_1;
  bool any_gold = false;
  for (const auto& s : val_world.scenes)
    if (!s.gold.empty()) {
      any_gold = true;
      break;
    }
  if (any_gold) {
    m.det = eval_localization(model, val_world).det_pct;
    m.has_gold = true;
  }
  return m;
}

}  // namespace

TrainResult train(const TrainConfig& config, const World& train_world, const World& val_world,
                  std::ostream* log) {
  config.validate();
  if (train_world.scenes.empty()) throw Error(ErrorKind::InvalidArgument, "empty training split");
  if (val_world.scenes.size() < 2) throw Error(ErrorKind::InvalidArgument, "validation split too small");
  if (train_world.d_v != val_world.d_v)
    throw Error(ErrorKind::Schema, "train/val feature width mismatch");

  ModelConfig mc;
  mc.kind = model_kind_from_name(config.model);
  mc.strategy = match_strategy_from_name(config.match);
  mc.agg = agg_kind_from_name(config.agg);
  mc.top_k = config.top_k;
  mc.temperature = config.temperature;
  mc.activation = activation_from_name(config.activation);
  mc.dims = config.dims;
  mc.d_v = train_world.d_v;
  mc.vocabulary = train_world.vocabulary;

  Model model(mc, derive_seed(config.seed, 0));
  Rng shuffle_rng(derive_seed(config.seed, 1));
  Rng select_rng(derive_seed(config.seed, 2));
  Rng caption_rng(derive_seed(config.seed, 3));

  TrainResult result;
  const bool warm_applicable = mc.kind == ModelKind::Align2Ground && config.warm_start;
  result.warm_epochs = warm_applicable
                           ? std::min(config.epochs,
                                      static_cast<int>(std::lround(config.warm_start_fraction *
                                                                   config.epochs)))
                           : 0;

  std::optional<Model> last_finite = model;
  const size_t n = train_world.scenes.size();
  std::vector<size_t> order(n);
  for (size_t i = 0; i < n; ++i) order[i] = i;

  for (int epoch = 0; epoch < config.epochs; ++epoch) {
    const bool warm_phase = epoch < result.warm_epochs;
    shuffle_rng.shuffle(order);

    double loss_sum = 0.0;
    long batches = 0;
    for (size_t start = 0; start + 2 <= n; start += static_cast<size_t>(config.batch_size)) {
      const size_t bsz = std::min<size_t>(static_cast<size_t>(config.batch_size), n - start);
      if (bsz < 2) break;  // a single positive has no in-batch negatives

      std::vector<const SceneRecord*> scenes;
      std::vector<std::vector<std::string>> captions;
      std::vector<std::string> scene_ids;
      std::vector<const std::vector<std::vector<std::string>>*> caption_lists;
      for (size_t b = 0; b < bsz; ++b) {
        const SceneRecord& s = train_world.scenes[order[start + b]];
        if (s.captions.empty()) throw Error(ErrorKind::Schema, s.scene_id + ": scene has no captions");
        scenes.push_back(&s);
        captions.push_back(s.captions[caption_rng.index(s.captions.size())]);
        scene_ids.push_back(s.scene_id);
        caption_lists.push_back(&s.captions);
      }

      ad::Tape tape(&model.store());
      std::vector<std::vector<ad::Var>> S;
      if (warm_phase) {
        std::vector<Model::StagedImage> images;
        std::vector<Model::CaptionCtx> caps;
        for (size_t b = 0; b < bsz; ++b) {
          images.push_back(model.stage_image(tape, *scenes[b]));
          caps.push_back(model.stage_caption(tape, captions[b]));
        }
        S.assign(bsz, std::vector<ad::Var>(bsz, -1));
        for (size_t i = 0; i < bsz; ++i)
          for (size_t j = 0; j < bsz; ++j) S[i][j] = model.pooling_phrase_score(tape, images[i], caps[j]);
      } else {
        S = batch_scores(tape, model, scenes, captions, Mode::Train, &select_rng);
      }
      const auto mask = negative_mask_for_batch(scene_ids, caption_lists, captions);
      const RankingLossInfo info = ranking_loss(tape, S, mask, config.margin);
      const double loss_val = tape.scalar_val(info.loss);
      if (!std::isfinite(loss_val)) {
        result.diverged = true;
        result.divergence_note = "non-finite loss at epoch " + std::to_string(epoch) + ", batch " +
                                 std::to_string(batches);
        if (log) *log << "[train] abort: " << result.divergence_note << "\n";
        if (!result.model) result.model = std::move(last_finite);
        return result;
      }
      model.store().zero_grad();
      tape.backward(info.loss);
      model.store().adam_step(config.learning_rate);
      if (!model.store().all_finite()) {
        result.diverged = true;
        result.divergence_note = "non-finite parameters after update at epoch " +
                                 std::to_string(epoch) + ", batch " + std::to_string(batches);
        if (log) *log << "[train] abort: " << result.divergence_note << "\n";
        if (!result.model) result.model = std::move(last_finite);
        return result;
      }
      loss_sum += loss_val;
      ++batches;
      result.zero_norm_pairs += tape.zero_norm_count();
    }

    EpochStat stat;
    stat.epoch = epoch;
    stat.phase = warm_phase ? "warm" : "main";
    stat.mean_loss = batches > 0 ? loss_sum / static_cast<double>(batches) : 0.0;

    const bool do_eval = (epoch + 1) % config.eval_every == 0 || epoch + 1 == config.epochs;
    if (do_eval) {
      const ValMetrics vm = evaluate_validation(model, val_world, config.val_gallery);
      stat.val_r1 = vm.r1;
      stat.val_det = vm.det;
      if (vm.r1 > result.best_r1 ||
          (vm.r1 == result.best_r1 && vm.det > result.best_det)) {
        result.best_r1 = vm.r1;
        result.best_det = vm.det;
        result.best_epoch = epoch;
        result.model = model;  // snapshot
      }
      if (config.checkpoint_every > 0 && !config.checkpoint_path.empty() &&
          (epoch + 1) % config.checkpoint_every == 0 && result.model) {
        save_checkpoint(*result.model, result.meta_json(), config.checkpoint_path);
      }
    }
    last_finite = model;
    result.curve.push_back(stat);
    if (log) {
      *log << "[train] epoch " << epoch << " (" << stat.phase << ") loss " << stat.mean_loss;
      if (stat.val_r1 >= 0) *log << " val_r1 " << stat.val_r1 << " val_det " << stat.val_det;
      *log << "\n";
    }
  }
  if (!result.model) result.model = std::move(last_finite);
  return result;
}

namespace {

struct VariantSpec {
  std::string label;
  std::string model;
  std::string match;
  std::string agg;
};

struct VariantOutcome {
  TableRow row;
  double det = 0.0;
  bool diverged = false;
};

VariantOutcome run_variant(const TrainConfig& base, const VariantSpec& spec, uint64_t seed,
                           const World& train_world, const World& val_world, const World& test_world) {
  TrainConfig cfg = base;
  cfg.model = spec.model;
  cfg.match = spec.match;
  cfg.agg = spec.agg;
  cfg.seed = seed;
  cfg.checkpoint_every = 0;
  const TrainResult tr = train(cfg, train_world, val_world, nullptr);
  VariantOutcome out;
  out.diverged = tr.diverged;
  if (!tr.model) return out;
  const RetrievalResult rr = eval_retrieval(*tr.model, test_world, 0);
  const LocalizationReport lr = eval_localization(*tr.model, test_world);
  out.row.label = spec.label;
  out.row.r1 = rr.r_at_1;
  out.row.r5 = rr.r_at_5;
  out.row.r10 = rr.r_at_10;
  out.row.med_r = rr.median_rank;
  out.row.det = lr.det_pct;
  out.det = lr.det_pct;
  return out;
}

}  // namespace

std::string run_ablation(const TrainConfig& base, const World& train_world, const World& val_world,
                         const World& test_world, std::ostream* log, int max_workers) {
  base.validate();
  std::vector<VariantSpec> specs;
  for (const char* agg : {"permInv", "sequence"})
    for (const char* match : {"max", "topk", "attention"})
      specs.push_back({std::string(agg) + "-" + match, "align2ground", match, agg});
  specs.push_back({"global", "global", "max", "permInv"});
  specs.push_back({"pool-words", "pool-words", "max", "permInv"});
  specs.push_back({"pool-phrases", "pool-phrases", "max", "permInv"});

  std::vector<VariantOutcome> outcomes(specs.size());
  std::atomic<size_t> next{0};
  const int workers = std::max(1, std::min<int>(max_workers, static_cast<int>(specs.size())));
  auto worker = [&] {
    for (;;) {
      const size_t i = next.fetch_add(1);
      if (i >= specs.size()) return;
      outcomes[i] = run_variant(base, specs[i], base.seed, train_world, val_world, test_world);
    }
  };
  {
    std::vector<std::thread> pool;
    for (int w = 0; w < workers; ++w) pool.emplace_back(worker);
    for (auto& t : pool) t.join();
  }
  if (log)
    for (size_t i = 0; i < specs.size(); ++i)
      *log << "[ablate] " << specs[i].label << " det " << outcomes[i].row.det << " r1 "
           << outcomes[i].row.r1 << (outcomes[i].diverged ? " (diverged)" : "") << "\n";

  // Trend: the full model's localization vs the pooling baseline, majority
  // over up to three seeds.
  const auto find_label = [&](const std::string& label) -> const VariantOutcome& {
    for (size_t i = 0; i < specs.size(); ++i)
      if (specs[i].label == label) return outcomes[i];
    throw Error(ErrorKind::Internal, "missing ablation row " + label);
  };
  json checks = json::array();
  int passes = 0, total = 0;
  {
    const double full_det = find_label("permInv-topk").det;
    const double pool_det = find_label("pool-phrases").det;
    const bool pass = full_det >= pool_det;
    checks.push_back({{"seed", base.seed}, {"full_det", full_det}, {"pool_det", pool_det}, {"pass", pass}});
    passes += pass ? 1 : 0;
    ++total;
    if (!pass) {
      for (uint64_t ds = 1; ds <= 2; ++ds) {
        const uint64_t seed = base.seed + ds;
        const VariantSpec full{"permInv-topk", "align2ground", "topk", "permInv"};
        const VariantSpec pool{"pool-phrases", "pool-phrases", "max", "permInv"};
        VariantOutcome of, op;
        std::thread tf([&] { of = run_variant(base, full, seed, train_world, val_world, test_world); });
        op = run_variant(base, pool, seed, train_world, val_world, test_world);
        tf.join();
        const bool p = of.det >= op.det;
        checks.push_back({{"seed", seed}, {"full_det", of.det}, {"pool_det", op.det}, {"pass", p}});
        passes += p ? 1 : 0;
        ++total;
        if (log) *log << "[ablate] trend recheck seed " << seed << ": " << (p ? "pass" : "fail") << "\n";
      }
    }
  }

  json rep;
  std::vector<TableRow> rows;
  json rows_j = json::array();
  for (size_t i = 0; i < specs.size(); ++i) {
    const auto& o = outcomes[i];
    rows.push_back(o.row.label.empty() ? TableRow{specs[i].label, 0, 0, 0, 0, 0} : o.row);
    rows_j.push_back({{"label", specs[i].label},
                      {"model", specs[i].model},
                      {"match", specs[i].match},
                      {"agg", specs[i].agg},
                      {"r_at_1", o.row.r1},
                      {"r_at_5", o.row.r5},
                      {"r_at_10", o.row.r10},
                      {"median_rank", o.row.med_r},
                      {"det_percent", o.row.det},
                      {"diverged", o.diverged}});
  }
  rep["rows"] = std::move(rows_j);
  rep["trend"] = {{"metric", "det_percent"},
                  {"comparison", "permInv-topk >= pool-phrases"},
                  {"checks", std::move(checks)},
                  {"majority_pass", passes * 2 > total}};
  rep["table"] = render_table(rows);
  return rep.dump();
}

}  // namespace grounding
