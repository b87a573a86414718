#include "grounding.h"

#include <cstring>
#include <new>
#include <sstream>
#include <string>

#include <json.hpp>

#include "grounding/dataset.hpp"
#include "grounding/error.hpp"
#include "grounding/evaluation.hpp"
#include "grounding/model.hpp"
#include "grounding/trainer.hpp"
#include "grounding/visualize.hpp"

using grounding::Error;
using grounding::ErrorKind;

struct grd_world {
  grounding::World world;
};

struct grd_model {
  grounding::Model model;
};

namespace {

thread_local std::string g_last_error;

grd_status status_from_kind(ErrorKind k) {
  switch (k) {
    case ErrorKind::InvalidArgument: return GRD_ERR_INVALID_ARGUMENT;
    case ErrorKind::Io: return GRD_ERR_IO;
    case ErrorKind::Parse: return GRD_ERR_PARSE;
    case ErrorKind::Schema: return GRD_ERR_SCHEMA;
    case ErrorKind::Numeric: return GRD_ERR_NUMERIC;
    case ErrorKind::Internal: return GRD_ERR_INTERNAL;
  }
  return GRD_ERR_INTERNAL;
}

char* dup_string(const std::string& s) {
  char* out = new (std::nothrow) char[s.size() + 1];
  if (!out) return nullptr;
  std::memcpy(out, s.c_str(), s.size() + 1);
  return out;
}

template <typename F>
grd_status guarded(F&& f) {
  try {
    f();
    g_last_error.clear();
    return GRD_OK;
  } catch (const Error& e) {
    g_last_error = e.what();
    return status_from_kind(e.kind());
  } catch (const std::bad_alloc&) {
    g_last_error = "out of memory";
    return GRD_ERR_INTERNAL;
  } catch (const std::exception& e) {
    g_last_error = e.what();
    return GRD_ERR_INTERNAL;
  }
}

grd_status invalid(const char* message) {
  g_last_error = message;
  return GRD_ERR_INVALID_ARGUMENT;
}

}  // namespace

extern "C" {

const char* grd_status_name(grd_status status) {
  switch (status) {
    case GRD_OK: return "ok";
    case GRD_ERR_INVALID_ARGUMENT: return "invalid_argument";
    case GRD_ERR_IO: return "io";
    case GRD_ERR_PARSE: return "parse";
    case GRD_ERR_SCHEMA: return "schema";
    case GRD_ERR_NUMERIC: return "numeric";
    case GRD_ERR_INTERNAL: return "internal";
  }
  return "unknown";
}

const char* grd_last_error(void) { return g_last_error.c_str(); }

void grd_string_free(char* s) { delete[] s; }

grd_status grd_world_generate(const char* config_json, uint64_t seed, grd_world** out) {
  if (!config_json || !out) return invalid("grd_world_generate: null argument");
  return guarded([&] {
    const grounding::WorldConfig cfg = grounding::WorldConfig::from_json(config_json);
    auto* w = new grd_world{grounding::generate_world(cfg, seed)};
    *out = w;
  });
}

grd_status grd_world_load(const char* manifest_path, grd_world** out) {
  if (!manifest_path || !out) return invalid("grd_world_load: null argument");
  return guarded([&] { *out = new grd_world{grounding::load_dataset(manifest_path)}; });
}

grd_status grd_world_save(const grd_world* world, const char* dir, const char* split,
                          char** manifest_path_out) {
  if (!world || !dir || !split) return invalid("grd_world_save: null argument");
  return guarded([&] {
    const std::string path = grounding::save_dataset(world->world, dir, split);
    if (manifest_path_out) *manifest_path_out = dup_string(path);
  });
}

grd_status grd_world_num_scenes(const grd_world* world, int64_t* out) {
  if (!world || !out) return invalid("grd_world_num_scenes: null argument");
  *out = static_cast<int64_t>(world->world.scenes.size());
  return GRD_OK;
}

grd_status grd_world_digest(const grd_world* world, char** hex_out) {
  if (!world || !hex_out) return invalid("grd_world_digest: null argument");
  return guarded([&] { *hex_out = dup_string(grounding::world_digest(world->world)); });
}

grd_status grd_world_write_vocab(const grd_world* world, const char* path) {
  if (!world || !path) return invalid("grd_world_write_vocab: null argument");
  return guarded([&] { grounding::write_vocab_file(world->world.vocabulary, path); });
}

void grd_world_free(grd_world* world) { delete world; }

grd_status grd_train(const char* train_config_json, const grd_world* train_world,
                     const grd_world* val_world, grd_model** model_out, char** report_json_out) {
  if (!train_config_json || !train_world || !val_world) return invalid("grd_train: null argument");
  return guarded([&] {
    const grounding::TrainConfig cfg = grounding::TrainConfig::from_json(train_config_json);
    std::ostringstream log;
    grounding::TrainResult res = grounding::train(cfg, train_world->world, val_world->world, &log);
    if (!res.model) throw Error(ErrorKind::Numeric, "training produced no checkpoint: " + res.divergence_note);
    if (report_json_out) {
      nlohmann::json rep = nlohmann::json::parse(res.meta_json());
      rep["train_config_digest"] = cfg.digest();
      rep["log"] = log.str();
      *report_json_out = dup_string(rep.dump());
    }
    if (model_out) *model_out = new grd_model{std::move(*res.model)};
  });
}

grd_status grd_model_save(const grd_model* model, const char* path) {
  if (!model || !path) return invalid("grd_model_save: null argument");
  return guarded([&] { model->model.save(path); });
}

grd_status grd_model_load(const char* path, grd_model** out) {
  if (!path || !out) return invalid("grd_model_load: null argument");
  return guarded([&] { *out = new grd_model{grounding::Model::load(path)}; });
}

grd_status grd_model_config(const grd_model* model, char** json_out) {
  if (!model || !json_out) return invalid("grd_model_config: null argument");
  return guarded([&] { *json_out = dup_string(model->model.config().to_json()); });
}

void grd_model_free(grd_model* model) { delete model; }

grd_status grd_eval_localization(const grd_model* model, const grd_world* world,
                                 char** metrics_json_out) {
  if (!model || !world || !metrics_json_out) return invalid("grd_eval_localization: null argument");
  return guarded([&] {
    const grounding::LocalizationReport rep = grounding::eval_localization(model->model, world->world);
    *metrics_json_out = dup_string(grounding::localization_report_json(rep));
  });
}

grd_status grd_eval_retrieval(const grd_model* model, const grd_world* world, int gallery_size,
                              char** metrics_json_out) {
  if (!model || !world || !metrics_json_out) return invalid("grd_eval_retrieval: null argument");
  return guarded([&] {
    const grounding::RetrievalResult rep =
        grounding::eval_retrieval(model->model, world->world, gallery_size);
    *metrics_json_out = dup_string(grounding::retrieval_report_json(rep));
  });
}

grd_status grd_ablate(const char* train_config_json, const grd_world* train_world,
                      const grd_world* val_world, const grd_world* test_world,
                      char** report_json_out) {
  if (!train_config_json || !train_world || !val_world || !test_world || !report_json_out)
    return invalid("grd_ablate: null argument");
  return guarded([&] {
    const grounding::TrainConfig cfg = grounding::TrainConfig::from_json(train_config_json);
    *report_json_out = dup_string(
        grounding::run_ablation(cfg, train_world->world, val_world->world, test_world->world));
  });
}

grd_status grd_render_table(const char* report_json, char** table_out) {
  if (!report_json || !table_out) return invalid("grd_render_table: null argument");
  return guarded([&] {
    nlohmann::json rep;
    try {
      rep = nlohmann::json::parse(report_json);
    } catch (const nlohmann::json::exception& e) {
      throw Error(ErrorKind::Parse, std::string("report JSON: ") + e.what());
    }
    std::vector<grounding::TableRow> rows;
    if (rep.contains("table") && !rep.contains("rows")) {
      *table_out = dup_string(rep["table"].get<std::string>());
      return;
    }
    for (const auto& r : rep.at("rows")) {
      grounding::TableRow row;
      row.label = r.at("label").get<std::string>();
      row.r1 = r.at("r_at_1").get<double>();
      row.r5 = r.at("r_at_5").get<double>();
      row.r10 = r.at("r_at_10").get<double>();
      row.med_r = r.at("median_rank").get<double>();
      row.det = r.at("det_percent").get<double>();
      rows.push_back(row);
    }
    *table_out = dup_string(grounding::render_table(rows));
  });
}

grd_status grd_visualize(const grd_model* model, const grd_world* world, const char* out_dir,
                         int max_scenes, int* files_written_out) {
  if (!model || !world || !out_dir) return invalid("grd_visualize: null argument");
  return guarded([&] {
    const int n = grounding::visualize_predictions(model->model, world->world, out_dir, max_scenes);
    if (files_written_out) *files_written_out = n;
  });
}

}  // extern "C"
