#ifndef GROUNDING_DATASET_HPP
#define GROUNDING_DATASET_HPP

#include <cstdint>
#include <string>
#include <vector>

#include "grounding/types.hpp"

namespace grounding {

// Generator configuration. Canvas coordinates are pixels; every scene gets
// exactly `regions` RoIs: one per placed object, the rest distractors.
struct WorldConfig {
  double canvas_w = 128.0;
  double canvas_h = 128.0;
  int objects_min = 1;
  int objects_max = 3;
  int distractors = 3;
  int regions = 6;  // R; must equal objects_max + distractors
  std::vector<std::string> colors = {"red", "green", "blue", "yellow", "purple", "orange"};
  std::vector<std::string> shapes = {"circle", "square", "triangle", "star", "diamond"};
  std::vector<std::string> sizes = {"small", "large"};
  double sigma = 0.0;
  int num_scenes = 1;
  int captions_per_scene = 1;
  double size_word_prob = 0.5;     // chance a phrase mentions the object's size
  double next_to_prob = 0.25;      // chance a 2-object caption joins with "next to"
  double noise_phrase_prob = 0.0;  // chance a caption gets an unlocalizable phrase
  std::vector<std::string> noise_tokens = {"blicket", "dax", "fep", "toma"};

  int d_v() const;
  // Throws Error{Schema} on inconsistent settings (see spec'd rejections).
  void validate() const;

  std::string to_canonical_json() const;
  static WorldConfig from_json(const std::string& json_text);
  std::string digest() const;
};

// Deterministic for fixed (config, seed); scene i derives its own stream from
// derive_seed(seed, i), so generation order never matters.
World generate_world(const WorldConfig& config, uint64_t seed);

// Writes <dir>/<split>.json plus a sibling feature blob and returns the
// manifest path. split=="train" strips gold alignments.
std::string save_dataset(const World& world, const std::string& dir, const std::string& split);

World load_dataset(const std::string& manifest_path);

// Canonical bytes (manifest text + feature blob) used for digests and the
// byte-identity determinism contract.
std::string serialize_manifest(const World& world, const std::string& split, const std::string& blob_name);
std::string serialize_features(const World& world);
std::string world_digest(const World& world);

// Vocabulary file: one token per line, line number = id (UNK is reserved id 0
// and not listed).
void write_vocab_file(const std::vector<std::string>& vocabulary, const std::string& path);
std::vector<std::string> read_vocab_file(const std::string& path);

}  // namespace grounding

#endif
