// Command-line front end; all work goes through the C API in grounding.h.
#include <cstdint>
#include <cstdio>
#include <fstream>
#include <iostream>
#include <memory>
#include <sstream>
#include <string>

#include <CLI11.hpp>
#include <json.hpp>

#include "grounding.h"

namespace {

using nlohmann::json;

struct WorldDeleter {
  void operator()(grd_world* w) const { grd_world_free(w); }
};
struct ModelDeleter {
  void operator()(grd_model* m) const { grd_model_free(m); }
};
using WorldPtr = std::unique_ptr<grd_world, WorldDeleter>;
using ModelPtr = std::unique_ptr<grd_model, ModelDeleter>;

std::string take_string(char* s) {
  std::string out = s ? s : "";
  grd_string_free(s);
  return out;
}

[[noreturn]] void fail(grd_status st) {
  std::cerr << "error (" << grd_status_name(st) << "): " << grd_last_error() << "\n";
  std::exit(1);
}

void check(grd_status st) {
  if (st != GRD_OK) fail(st);
}

std::string read_text_file(const std::string& path) {
  std::ifstream f(path);
  if (!f) {
    std::cerr << "error (io): cannot open " << path << "\n";
    std::exit(1);
  }
  std::ostringstream ss;
  ss << f.rdbuf();
  return ss.str();
}

void write_text_file(const std::string& path, const std::string& text) {
  std::ofstream f(path);
  if (!f) {
    std::cerr << "error (io): cannot write " << path << "\n";
    std::exit(1);
  }
  f << text;
}

WorldPtr load_world(const std::string& manifest) {
  grd_world* w = nullptr;
  check(grd_world_load(manifest.c_str(), &w));
  return WorldPtr(w);
}

ModelPtr load_model(const std::string& path) {
  grd_model* m = nullptr;
  check(grd_model_load(path.c_str(), &m));
  return ModelPtr(m);
}

json parse_config_file(const std::string& path) {
  if (path.empty()) return json::object();
  try {
    return json::parse(read_text_file(path));
  } catch (const json::exception& e) {
    std::cerr << "error (parse): " << path << ": " << e.what() << "\n";
    std::exit(1);
  }
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"synthetic-world phrase grounding: data generation, training, evaluation"};
  app.require_subcommand(1);

  // ---- gen ----
  std::string gen_config, gen_out = "data", gen_split = "train";
  uint64_t gen_seed = 7;
  int gen_scenes = -1;
  double gen_sigma = -1.0;
  bool gen_vocab = true;
  auto* gen = app.add_subcommand("gen", "generate a synthetic world split");
  gen->add_option("--config", gen_config, "world config JSON file (defaults used when omitted)");
  gen->add_option("--seed", gen_seed, "generator seed");
  gen->add_option("--out", gen_out, "output directory");
  gen->add_option("--split", gen_split, "split name; 'train' strips gold alignments");
  gen->add_option("--scenes", gen_scenes, "override num_scenes");
  gen->add_option("--sigma", gen_sigma, "override feature noise sigma");
  gen->add_flag("!--no-vocab", gen_vocab, "skip writing vocab.txt");

  // ---- train ----
  std::string tr_config, tr_train, tr_val, tr_out = "model.ckpt", tr_report;
  std::string tr_model, tr_match, tr_agg;
  int tr_epochs = -1, tr_batch = -1, tr_topk = -1;
  double tr_lr = -1.0, tr_margin = -1.0;
  int64_t tr_seed = -1;
  int tr_warm = -1;  // -1 default, 0 off, 1 on
  auto* tr = app.add_subcommand("train", "train a model variant");
  tr->add_option("--config", tr_config, "train config JSON file");
  tr->add_option("--train", tr_train, "train manifest")->required();
  tr->add_option("--val", tr_val, "validation manifest")->required();
  tr->add_option("--out", tr_out, "checkpoint output path");
  tr->add_option("--report", tr_report, "write the training report JSON here");
  tr->add_option("--model", tr_model)->check(CLI::IsMember({"align2ground", "global", "pool-words", "pool-phrases"}));
  tr->add_option("--match", tr_match)->check(CLI::IsMember({"max", "topk", "attention"}));
  tr->add_option("--agg", tr_agg)->check(CLI::IsMember({"permInv", "sequence"}));
  tr->add_option("--epochs", tr_epochs);
  tr->add_option("--batch", tr_batch);
  tr->add_option("--lr", tr_lr);
  tr->add_option("--margin", tr_margin, "triplet-ranking margin");
  tr->add_option("--topk", tr_topk, "k for the topk matching strategy");
  tr->add_option("--seed", tr_seed);
  tr->add_option("--warm-start", tr_warm, "1 to enable, 0 to disable");

  // ---- eval-loc ----
  std::string el_model, el_data, el_out;
  auto* el = app.add_subcommand("eval-loc", "phrase localization metrics");
  el->add_option("--model", el_model)->required();
  el->add_option("--data", el_data, "manifest of an eval split with gold alignments")->required();
  el->add_option("--out", el_out, "write metrics JSON here");

  // ---- eval-retrieval ----
  std::string er_model, er_data, er_out;
  int er_gallery = 0;
  auto* er = app.add_subcommand("eval-retrieval", "caption-to-image retrieval metrics");
  er->add_option("--model", er_model)->required();
  er->add_option("--data", er_data)->required();
  er->add_option("--gallery", er_gallery, "gallery size (0 = all scenes)");
  er->add_option("--out", er_out, "write metrics JSON here");

  // ---- ablate ----
  std::string ab_config, ab_train, ab_val, ab_test, ab_out;
  auto* ab = app.add_subcommand("ablate", "run the matching x aggregator grid plus baselines");
  ab->add_option("--config", ab_config, "base train config JSON file");
  ab->add_option("--train", ab_train)->required();
  ab->add_option("--val", ab_val)->required();
  ab->add_option("--test", ab_test)->required();
  ab->add_option("--out", ab_out, "write the report JSON here");

  // ---- visualize ----
  std::string vz_model, vz_data, vz_out = "overlays";
  int vz_scenes = 8;
  auto* vz = app.add_subcommand("visualize", "write box-overlay PNGs");
  vz->add_option("--model", vz_model)->required();
  vz->add_option("--data", vz_data)->required();
  vz->add_option("--out", vz_out, "output directory");
  vz->add_option("--scenes", vz_scenes, "number of scenes to render");

  CLI11_PARSE(app, argc, argv);

  if (gen->parsed()) {
    json cfg = parse_config_file(gen_config);
    if (gen_scenes >= 0) cfg["num_scenes"] = gen_scenes;
    if (gen_sigma >= 0.0) cfg["sigma"] = gen_sigma;
    grd_world* w = nullptr;
    check(grd_world_generate(cfg.dump().c_str(), gen_seed, &w));
    WorldPtr world(w);
    char* manifest = nullptr;
    check(grd_world_save(world.get(), gen_out.c_str(), gen_split.c_str(), &manifest));
    const std::string manifest_path = take_string(manifest);
    if (gen_vocab) check(grd_world_write_vocab(world.get(), (gen_out + "/vocab.txt").c_str()));
    char* digest = nullptr;
    check(grd_world_digest(world.get(), &digest));
    std::cout << "manifest: " << manifest_path << "\n";
    std::cout << "digest: " << take_string(digest) << "\n";
    return 0;
  }

  if (tr->parsed()) {
    json cfg = parse_config_file(tr_config);
    if (!tr_model.empty()) cfg["model"] = tr_model;
    if (!tr_match.empty()) cfg["match"] = tr_match;
    if (!tr_agg.empty()) cfg["agg"] = tr_agg;
    if (tr_epochs > 0) cfg["epochs"] = tr_epochs;
    if (tr_batch > 0) cfg["batch_size"] = tr_batch;
    if (tr_lr > 0) cfg["learning_rate"] = tr_lr;
    if (tr_margin > 0) cfg["margin"] = tr_margin;
    if (tr_topk > 0) cfg["top_k"] = tr_topk;
    if (tr_seed >= 0) cfg["seed"] = static_cast<uint64_t>(tr_seed);
    if (tr_warm >= 0) cfg["warm_start"] = tr_warm != 0;

    WorldPtr train_world = load_world(tr_train);
    WorldPtr val_world = load_world(tr_val);
    grd_model* m = nullptr;
    char* report = nullptr;
    check(grd_train(cfg.dump().c_str(), train_world.get(), val_world.get(), &m, &report));
    ModelPtr model(m);
    const std::string report_text = take_string(report);
    check(grd_model_save(model.get(), tr_out.c_str()));
    if (!tr_report.empty()) write_text_file(tr_report, report_text);
    const json rep = json::parse(report_text);
    std::cout << "checkpoint: " << tr_out << "\n";
    std::cout << "best epoch: " << rep["best_epoch"] << "  val R@1: " << rep["val"]["r_at_1"]
              << "  val Det%: " << rep["val"]["det_percent"] << "\n";
    return 0;
  }

  if (el->parsed()) {
    ModelPtr model = load_model(el_model);
    WorldPtr world = load_world(el_data);
    char* metrics = nullptr;
    check(grd_eval_localization(model.get(), world.get(), &metrics));
    const std::string text = take_string(metrics);
    if (!el_out.empty()) write_text_file(el_out, text);
    std::cout << text << "\n";
    return 0;
  }

  if (er->parsed()) {
    ModelPtr model = load_model(er_model);
    WorldPtr world = load_world(er_data);
    char* metrics = nullptr;
    check(grd_eval_retrieval(model.get(), world.get(), er_gallery, &metrics));
    const std::string text = take_string(metrics);
    if (!er_out.empty()) write_text_file(er_out, text);
    std::cout << text << "\n";
    return 0;
  }

  if (ab->parsed()) {
    const json cfg = parse_config_file(ab_config);
    WorldPtr train_world = load_world(ab_train);
    WorldPtr val_world = load_world(ab_val);
    WorldPtr test_world = load_world(ab_test);
    char* report = nullptr;
    check(grd_ablate(cfg.dump().c_str(), train_world.get(), val_world.get(), test_world.get(), &report));
    const std::string report_text = take_string(report);
    if (!ab_out.empty()) write_text_file(ab_out, report_text);
    char* table = nullptr;
    check(grd_render_table(report_text.c_str(), &table));
    std::cout << take_string(table);
    const json rep = json::parse(report_text);
    std::cout << "trend (" << rep["trend"]["comparison"].get<std::string>()
              << "): " << (rep["trend"]["majority_pass"].get<bool>() ? "pass" : "FAIL") << "\n";
    return 0;
  }

  if (vz->parsed()) {
    ModelPtr model = load_model(vz_model);
    WorldPtr world = load_world(vz_data);
    int files = 0;
    check(grd_visualize(model.get(), world.get(), vz_out.c_str(), vz_scenes, &files));
    std::cout << "wrote " << files << " overlays to " << vz_out << "\n";
    return 0;
  }

  return 0;
}
