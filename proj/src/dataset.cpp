#include "grounding/dataset.hpp"

#include <algorithm>
#include <cstdio>
#include <filesystem>
#include <set>
#include <sstream>

#include <json.hpp>

#include "grounding/digest.hpp"
#include "grounding/error.hpp"
#include "grounding/rng.hpp"
#include "grounding/tensor_io.hpp"

namespace grounding {

using nlohmann::json;

namespace {

constexpr double kMinSide = 8.0;

json config_to_json(const WorldConfig& c) {
  json j;
  j["canvas"] = {{"width", c.canvas_w}, {"height", c.canvas_h}};
  j["objects_min"] = c.objects_min;
  j["objects_max"] = c.objects_max;
  j["distractors"] = c.distractors;
  j["regions_per_scene"] = c.regions;
  j["colors"] = c.colors;
  j["shapes"] = c.shapes;
  j["sizes"] = c.sizes;
  j["sigma"] = c.sigma;
  j["num_scenes"] = c.num_scenes;
  j["captions_per_scene"] = c.captions_per_scene;
  j["size_word_prob"] = c.size_word_prob;
  j["next_to_prob"] = c.next_to_prob;
  j["noise_phrase_prob"] = c.noise_phrase_prob;
  j["noise_tokens"] = c.noise_tokens;
  return j;
}

json box_to_json(const BoundingBox& b) { return json::array({b.x1, b.y1, b.x2, b.y2}); }

BoundingBox box_from_json(const json& j, const std::string& where) {
  if (!j.is_array() || j.size() != 4)
    throw Error(ErrorKind::Schema, where + ": box must be an array [x1,y1,x2,y2]");
  BoundingBox b{j[0].get<double>(), j[1].get<double>(), j[2].get<double>(), j[3].get<double>()};
  return b;
}

std::vector<std::string> build_vocabulary(const WorldConfig& c) {
  std::set<std::string> toks = {"a", "and", ",", "next", "to"};
  toks.insert(c.colors.begin(), c.colors.end());
  toks.insert(c.shapes.begin(), c.shapes.end());
  toks.insert(c.sizes.begin(), c.sizes.end());
  toks.insert(c.noise_tokens.begin(), c.noise_tokens.end());
  return {toks.begin(), toks.end()};
}

struct PlacedObject {
  int color = 0, shape = 0, size = 0;
  int region_index = 0;
};

BoundingBox random_box(Rng& rng, const WorldConfig& c, double side_lo, double side_hi) {
  const double w = rng.uniform(side_lo, side_hi);
  const double h = rng.uniform(side_lo, side_hi);
  const double x1 = rng.uniform(0.0, c.canvas_w - w);
  const double y1 = rng.uniform(0.0, c.canvas_h - h);
  return BoundingBox{x1, y1, x1 + w, y1 + h};
}

// Size attribute i of k picks the i-th band of [kMinSide, 72].
void size_band(int size_index, int num_sizes, double* lo, double* hi) {
  const double span_lo = kMinSide, span_hi = 72.0;
  if (num_sizes <= 0) {
    *lo = span_lo;
    *hi = span_hi;
    return;
  }
  const double step = (span_hi - span_lo) / num_sizes;
  *lo = span_lo + step * size_index;
  *hi = span_lo + step * (size_index + 1);
}

std::vector<std::string> object_phrase(const WorldConfig& c, const PlacedObject& o, bool with_size) {
  std::vector<std::string> toks = {"a"};
  if (with_size && !c.sizes.empty()) toks.push_back(c.sizes[static_cast<size_t>(o.size)]);
  toks.push_back(c.colors[static_cast<size_t>(o.color)]);
  toks.push_back(c.shapes[static_cast<size_t>(o.shape)]);
  return toks;
}

SceneRecord generate_scene(const WorldConfig& c, uint64_t scene_seed, size_t index) {
  Rng rng(scene_seed);
  SceneRecord scene;
  char idbuf[32];
  std::snprintf(idbuf, sizeof(idbuf), "scene_%06zu", index);
  scene.scene_id = idbuf;

  const int n_obj = static_cast<int>(rng.uniform_int(c.objects_min, c.objects_max));
  const int n_regions = c.regions;
  const int dv = c.d_v();

  std::vector<PlacedObject> objects(static_cast<size_t>(n_obj));
  for (auto& o : objects) {
    o.color = static_cast<int>(rng.index(c.colors.size()));
    o.shape = static_cast<int>(rng.index(c.shapes.size()));
    o.size = c.sizes.empty() ? 0 : static_cast<int>(rng.index(c.sizes.size()));
  }

  // Object regions occupy a random subset of the region slots so gold
  // indices carry no positional bias.
  std::vector<int> slots(static_cast<size_t>(n_regions));
  for (int i = 0; i < n_regions; ++i) slots[static_cast<size_t>(i)] = i;
  rng.shuffle(slots);

  scene.regions.resize(static_cast<size_t>(n_regions));
  std::vector<bool> is_object(static_cast<size_t>(n_regions), false);
  for (int i = 0; i < n_obj; ++i) {
    auto& o = objects[static_cast<size_t>(i)];
    o.region_index = slots[static_cast<size_t>(i)];
    is_object[static_cast<size_t>(o.region_index)] = true;

    double lo, hi;
    size_band(o.size, static_cast<int>(c.sizes.size()), &lo, &hi);
    RegionFeature rf;
    rf.box = random_box(rng, c, lo, hi);
    Eigen::VectorXf f = Eigen::VectorXf::Zero(dv);
    f[o.color] = 1.0f;
    f[static_cast<int>(c.colors.size()) + o.shape] = 1.0f;
    if (!c.sizes.empty()) f[static_cast<int>(c.colors.size() + c.shapes.size()) + o.size] = 1.0f;
    if (c.sigma > 0.0)
      for (int d = 0; d < dv; ++d) f[d] += static_cast<float>(rng.normal(0.0, c.sigma));
    rf.feature = f;
    scene.regions[static_cast<size_t>(o.region_index)] = std::move(rf);
  }
  for (int r = 0; r < n_regions; ++r) {
    if (is_object[static_cast<size_t>(r)]) continue;
    RegionFeature rf;
    rf.box = random_box(rng, c, kMinSide, 72.0);
    Eigen::VectorXf f(dv);
    for (int d = 0; d < dv; ++d) f[d] = static_cast<float>(rng.normal(0.0, 1.0));
    const float n = f.norm();
    if (n > 0.0f) f /= n;
    rf.feature = f;
    scene.regions[static_cast<size_t>(r)] = std::move(rf);
  }

  for (int ci = 0; ci < c.captions_per_scene; ++ci) {
    std::vector<int> order(static_cast<size_t>(n_obj));
    for (int i = 0; i < n_obj; ++i) order[static_cast<size_t>(i)] = i;
    rng.shuffle(order);

    std::vector<std::vector<std::string>> phrases;
    for (int k = 0; k < n_obj; ++k) {
      const auto& o = objects[static_cast<size_t>(order[static_cast<size_t>(k)])];
      const bool with_size = !c.sizes.empty() && rng.uniform() < c.size_word_prob;
      phrases.push_back(object_phrase(c, o, with_size));
    }

    std::vector<std::string> caption;
    const bool next_to = n_obj == 2 && rng.uniform() < c.next_to_prob;
    for (size_t k = 0; k < phrases.size(); ++k) {
      if (k > 0) {
        if (next_to) {
          caption.push_back("next");
          caption.push_back("to");
        } else if (k + 1 == phrases.size()) {
          caption.push_back("and");
        } else {
          caption.push_back(",");
        }
      }
      caption.insert(caption.end(), phrases[k].begin(), phrases[k].end());
    }
    if (c.noise_phrase_prob > 0.0 && rng.uniform() < c.noise_phrase_prob) {
      caption.push_back("and");
      caption.push_back("a");
      caption.push_back(c.noise_tokens[rng.index(c.noise_tokens.size())]);
      caption.push_back(c.noise_tokens[rng.index(c.noise_tokens.size())]);
    }

    for (int k = 0; k < n_obj; ++k) {
      const auto& o = objects[static_cast<size_t>(order[static_cast<size_t>(k)])];
      GoldAlignment g;
      g.caption_index = ci;
      g.phrase_index = k;
      g.region_index = o.region_index;
      g.box = scene.regions[static_cast<size_t>(o.region_index)].box;
      scene.gold.push_back(g);
    }
    scene.captions.push_back(std::move(caption));
  }
  return scene;
}

}  // namespace

int WorldConfig::d_v() const {
  return static_cast<int>(colors.size() + shapes.size() + sizes.size());
}

void WorldConfig::validate() const {
  if (canvas_w < 2 * kMinSide || canvas_h < 2 * kMinSide)
    throw Error(ErrorKind::Schema, "canvas too small for minimum box side");
  if (objects_min < 1 || objects_min > objects_max)
    throw Error(ErrorKind::Schema, "objects_min must satisfy 1 <= objects_min <= objects_max");
  if (distractors < 0) throw Error(ErrorKind::Schema, "distractors must be >= 0");
  if (regions < objects_max)
    throw Error(ErrorKind::Schema, "regions_per_scene smaller than maximum object count");
  if (regions != objects_max + distractors)
    throw Error(ErrorKind::Schema, "regions_per_scene must equal objects_max + distractors");
  if (colors.empty() || shapes.empty())
    throw Error(ErrorKind::Schema, "empty vocabulary: colors and shapes must be non-empty");
  if (sigma < 0.0) throw Error(ErrorKind::Schema, "sigma must be >= 0");
  if (num_scenes < 0) throw Error(ErrorKind::Schema, "num_scenes must be >= 0");
  if (captions_per_scene < 1) throw Error(ErrorKind::Schema, "captions_per_scene must be >= 1");
  for (double p : {size_word_prob, next_to_prob, noise_phrase_prob})
    if (p < 0.0 || p > 1.0) throw Error(ErrorKind::Schema, "probabilities must lie in [0,1]");
  if (noise_phrase_prob > 0.0 && noise_tokens.empty())
    throw Error(ErrorKind::Schema, "noise_phrase_prob > 0 requires noise_tokens");
}

std::string WorldConfig::to_canonical_json() const { return config_to_json(*this).dump(); }

WorldConfig WorldConfig::from_json(const std::string& json_text) {
  json j;
  try {
    j = json::parse(json_text);
  } catch (const json::exception& e) {
    throw Error(ErrorKind::Parse, std::string("world config: ") + e.what());
  }
  WorldConfig c;
  try {
    static const std::set<std::string> known = {
        "canvas", "objects_min", "objects_max", "distractors", "regions_per_scene",
        "colors", "shapes", "sizes", "sigma", "num_scenes", "captions_per_scene",
        "size_word_prob", "next_to_prob", "noise_phrase_prob", "noise_tokens"};
    for (const auto& [key, _] : j.items())
      if (!known.count(key)) throw Error(ErrorKind::Schema, "world config: unknown field '" + key + "'");
    if (j.contains("canvas")) {
      c.canvas_w = j["canvas"].at("width").get<double>();
      c.canvas_h = j["canvas"].at("height").get<double>();
    }
    if (j.contains("objects_min")) c.objects_min = j["objects_min"].get<int>();
    if (j.contains("objects_max")) c.objects_max = j["objects_max"].get<int>();
    if (j.contains("distractors")) c.distractors = j["distractors"].get<int>();
    if (j.contains("regions_per_scene")) c.regions = j["regions_per_scene"].get<int>();
    if (j.contains("colors")) c.colors = j["colors"].get<std::vector<std::string>>();
    if (j.contains("shapes")) c.shapes = j["shapes"].get<std::vector<std::string>>();
    if (j.contains("sizes")) c.sizes = j["sizes"].get<std::vector<std::string>>();
    if (j.contains("sigma")) c.sigma = j["sigma"].get<double>();
    if (j.contains("num_scenes")) c.num_scenes = j["num_scenes"].get<int>();
    if (j.contains("captions_per_scene")) c.captions_per_scene = j["captions_per_scene"].get<int>();
    if (j.contains("size_word_prob")) c.size_word_prob = j["size_word_prob"].get<double>();
    if (j.contains("next_to_prob")) c.next_to_prob = j["next_to_prob"].get<double>();
    if (j.contains("noise_phrase_prob")) c.noise_phrase_prob = j["noise_phrase_prob"].get<double>();
    if (j.contains("noise_tokens")) c.noise_tokens = j["noise_tokens"].get<std::vector<std::string>>();
  } catch (const json::exception& e) {
    throw Error(ErrorKind::Schema, std::string("world config: ") + e.what());
  }
  c.validate();
  return c;
}

std::string WorldConfig::digest() const { return digest_hex(to_canonical_json()); }

World generate_world(const WorldConfig& config, uint64_t seed) {
  config.validate();
  World w;
  w.split = "";
  w.d_v = config.d_v();
  w.canvas_w = config.canvas_w;
  w.canvas_h = config.canvas_h;
  w.vocabulary = build_vocabulary(config);
  w.generator_seed = seed;
  w.config_digest = config.digest();
  w.scenes.reserve(static_cast<size_t>(config.num_scenes));
  for (int i = 0; i < config.num_scenes; ++i)
    w.scenes.push_back(generate_scene(config, derive_seed(seed, static_cast<uint64_t>(i)), static_cast<size_t>(i)));
  return w;
}

std::string serialize_manifest(const World& world, const std::string& split, const std::string& blob_name) {
  const bool strip_gold = split == "train";
  json j;
  j["split"] = split;
  j["d_v"] = world.d_v;
  j["canvas"] = {{"width", world.canvas_w}, {"height", world.canvas_h}};
  j["vocabulary"] = world.vocabulary;
  j["generator_seed"] = world.generator_seed;
  j["config_digest"] = world.config_digest;
  j["blob"] = blob_name;
  json scenes = json::array();
  long row = 0;
  for (const auto& s : world.scenes) {
    json js;
    js["scene_id"] = s.scene_id;
    js["feature_row"] = row;
    json boxes = json::array();
    for (const auto& r : s.regions) boxes.push_back(box_to_json(r.box));
    js["regions"] = std::move(boxes);
    js["captions"] = s.captions;
    if (!strip_gold) {
      json gold = json::array();
      for (const auto& g : s.gold)
        gold.push_back({{"caption", g.caption_index},
                        {"phrase", g.phrase_index},
                        {"region", g.region_index},
                        {"box", box_to_json(g.box)}});
      js["gold"] = std::move(gold);
    }
    scenes.push_back(std::move(js));
    row += static_cast<long>(s.regions.size());
  }
  j["scenes"] = std::move(scenes);
  return j.dump();
}

std::string serialize_features(const World& world) {
  long rows = 0;
  for (const auto& s : world.scenes) rows += static_cast<long>(s.regions.size());
  Eigen::MatrixXf m(rows, world.d_v);
  long r = 0;
  for (const auto& s : world.scenes)
    for (const auto& reg : s.regions) {
      if (reg.feature.size() != world.d_v)
        throw Error(ErrorKind::Schema, "region feature length differs from manifest d_v");
      m.row(r++) = reg.feature.transpose();
    }
  std::ostringstream os(std::ios::binary);
  write_blob_f32(os, m);
  return os.str();
}

std::string world_digest(const World& world) {
  Fnv1a f;
  f.update(serialize_manifest(world, world.split.empty() ? "eval" : world.split, "features.bin"));
  f.update(serialize_features(world));
  return f.hex();
}

std::string save_dataset(const World& world, const std::string& dir, const std::string& split) {
  std::filesystem::create_directories(dir);
  const std::string blob_name = split + "_features.bin";
  const std::string manifest_path = (std::filesystem::path(dir) / (split + ".json")).string();
  const std::string blob_path = (std::filesystem::path(dir) / blob_name).string();
  write_file(manifest_path, serialize_manifest(world, split, blob_name));
  write_file(blob_path, serialize_features(world));
  return manifest_path;
}

World load_dataset(const std::string& manifest_path) {
  const std::string text = read_file(manifest_path);
  json j;
  try {
    j = json::parse(text);
  } catch (const json::exception& e) {
    throw Error(ErrorKind::Parse, manifest_path + ": " + e.what());
  }

  World w;
  try {
    w.split = j.at("split").get<std::string>();
    w.d_v = j.at("d_v").get<int>();
    w.canvas_w = j.at("canvas").at("width").get<double>();
    w.canvas_h = j.at("canvas").at("height").get<double>();
    w.vocabulary = j.at("vocabulary").get<std::vector<std::string>>();
    w.generator_seed = j.at("generator_seed").get<uint64_t>();
    w.config_digest = j.at("config_digest").get<std::string>();
  } catch (const json::exception& e) {
    throw Error(ErrorKind::Schema, manifest_path + ": " + e.what());
  }
  if (!std::is_sorted(w.vocabulary.begin(), w.vocabulary.end()))
    throw Error(ErrorKind::Schema, manifest_path + ": vocabulary is not sorted");
  if (std::adjacent_find(w.vocabulary.begin(), w.vocabulary.end()) != w.vocabulary.end())
    throw Error(ErrorKind::Schema, manifest_path + ": vocabulary has duplicates");

  const std::string blob_name = j.at("blob").get<std::string>();
  const std::string blob_path = (std::filesystem::path(manifest_path).parent_path() / blob_name).string();
  std::istringstream is(read_file(blob_path), std::ios::binary);
  const Eigen::MatrixXf features = read_blob_f32(is, blob_path);
  if (features.cols() != w.d_v)
    throw Error(ErrorKind::Schema, "feature width mismatch: manifest d_v=" + std::to_string(w.d_v) +
                                       ", blob columns=" + std::to_string(features.cols()));

  try {
    for (const auto& js : j.at("scenes")) {
      SceneRecord s;
      s.scene_id = js.at("scene_id").get<std::string>();
      const long row0 = js.at("feature_row").get<long>();
      const auto& boxes = js.at("regions");
      const long n_regions = static_cast<long>(boxes.size());
      if (n_regions < 1) throw Error(ErrorKind::Schema, s.scene_id + ": scene has no regions");
      if (row0 < 0 || row0 + n_regions > features.rows())
        throw Error(ErrorKind::Schema,
                    s.scene_id + ": feature rows [" + std::to_string(row0) + ", " +
                        std::to_string(row0 + n_regions) + ") exceed blob rows " +
                        std::to_string(features.rows()));
      for (long r = 0; r < n_regions; ++r) {
        RegionFeature rf;
        rf.box = box_from_json(boxes[static_cast<size_t>(r)], s.scene_id);
        if (rf.box.degenerate()) throw Error(ErrorKind::Schema, s.scene_id + ": degenerate region box");
        rf.feature = features.row(row0 + r).transpose();
        if (!rf.feature.allFinite()) throw Error(ErrorKind::Schema, s.scene_id + ": non-finite feature");
        s.regions.push_back(std::move(rf));
      }
      s.captions = js.at("captions").get<std::vector<std::vector<std::string>>>();
      if (js.contains("gold")) {
        for (const auto& gj : js.at("gold")) {
          GoldAlignment g;
          g.caption_index = gj.at("caption").get<int>();
          g.phrase_index = gj.at("phrase").get<int>();
          g.region_index = gj.at("region").get<int>();
          g.box = box_from_json(gj.at("box"), s.scene_id + " gold");
          if (g.region_index < 0 || g.region_index >= static_cast<int>(s.regions.size()))
            throw Error(ErrorKind::Schema, s.scene_id + ": gold region index out of range");
          if (g.caption_index < 0 || g.caption_index >= static_cast<int>(s.captions.size()))
            throw Error(ErrorKind::Schema, s.scene_id + ": gold caption index out of range");
          s.gold.push_back(g);
        }
      }
      w.scenes.push_back(std::move(s));
    }
  } catch (const json::exception& e) {
    throw Error(ErrorKind::Schema, manifest_path + ": " + e.what());
  }
  return w;
}

void write_vocab_file(const std::vector<std::string>& vocabulary, const std::string& path) {
  std::string out;
  for (const auto& t : vocabulary) {
    out += t;
    out += '\n';
  }
  write_file(path, out);
}

std::vector<std::string> read_vocab_file(const std::string& path) {
  std::istringstream is(read_file(path));
  std::vector<std::string> vocab;
  std::string line;
  while (std::getline(is, line))
    if (!line.empty()) vocab.push_back(line);
  return vocab;
}

}  // namespace grounding
