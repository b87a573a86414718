/* C API for the grounding shared library.
 *
 * All functions return grd_status; on failure grd_last_error() holds a
 * message for the calling thread. Strings returned through char** are
 * heap-allocated and must be released with grd_string_free().
 */
#ifndef GROUNDING_H
#define GROUNDING_H

#include <stdint.h>

#ifdef __cplusplus
extern "C" {
#endif

typedef enum grd_status {
  GRD_OK = 0,
  GRD_ERR_INVALID_ARGUMENT = 1,
  GRD_ERR_IO = 2,
  GRD_ERR_PARSE = 3,
  GRD_ERR_SCHEMA = 4,
  GRD_ERR_NUMERIC = 5,
  GRD_ERR_INTERNAL = 6,
} grd_status;

typedef struct grd_world grd_world;  /* a dataset split */
typedef struct grd_model grd_model;  /* a trained model */

const char* grd_status_name(grd_status status);
const char* grd_last_error(void);
void grd_string_free(char* s);

/* --- datasets ------------------------------------------------------- */

/* Generates a synthetic world from a config JSON document (see README for
 * the schema). Deterministic for a fixed (config, seed). */
grd_status grd_world_generate(const char* config_json, uint64_t seed, grd_world** out);

grd_status grd_world_load(const char* manifest_path, grd_world** out);

/* Writes <dir>/<split>.json plus the feature blob; split "train" strips
 * gold alignments. Returns the manifest path. */
grd_status grd_world_save(const grd_world* world, const char* dir, const char* split,
                          char** manifest_path_out);

grd_status grd_world_num_scenes(const grd_world* world, int64_t* out);
grd_status grd_world_digest(const grd_world* world, char** hex_out);
grd_status grd_world_write_vocab(const grd_world* world, const char* path);
void grd_world_free(grd_world* world);

/* --- training ------------------------------------------------------- */

/* Trains per the train-config JSON document and returns the checkpoint
 * selected on validation, plus a JSON training report (curve, best epoch).
 * Either output pointer may be NULL. */
grd_status grd_train(const char* train_config_json, const grd_world* train_world,
                     const grd_world* val_world, grd_model** model_out, char** report_json_out);

grd_status grd_model_save(const grd_model* model, const char* path);
grd_status grd_model_load(const char* path, grd_model** out);
grd_status grd_model_config(const grd_model* model, char** json_out);
void grd_model_free(grd_model* model);

/* --- evaluation ----------------------------------------------------- */

/* Phrase localization over the world's gold alignments (eval splits only). */
grd_status grd_eval_localization(const grd_model* model, const grd_world* world,
                                 char** metrics_json_out);

/* Caption-to-image retrieval over a gallery of the first `gallery_size`
 * scenes (<= 0 for all). */
grd_status grd_eval_retrieval(const grd_model* model, const grd_world* world, int gallery_size,
                              char** metrics_json_out);

/* Runs the matching x aggregator grid plus baselines and reports the
 * combined table with the localization trend check. */
grd_status grd_ablate(const char* train_config_json, const grd_world* train_world,
                      const grd_world* val_world, const grd_world* test_world,
                      char** report_json_out);

/* Renders the rows of an ablation report JSON as a plain-text table. */
grd_status grd_render_table(const char* report_json, char** table_out);

/* Writes box-overlay PNGs for up to max_scenes scenes. */
grd_status grd_visualize(const grd_model* model, const grd_world* world, const char* out_dir,
                         int max_scenes, int* files_written_out);

#ifdef __cplusplus
} /* extern "C" */
#endif

#endif /* GROUNDING_H */
