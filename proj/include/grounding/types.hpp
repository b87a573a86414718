#ifndef GROUNDING_TYPES_HPP
#define GROUNDING_TYPES_HPP

#include <Eigen/Core>
#include <cstdint>
#include <string>
#include <vector>

namespace grounding {

struct BoundingBox {
  double x1 = 0.0, y1 = 0.0, x2 = 0.0, y2 = 0.0;

  double width() const { return x2 - x1; }
  double height() const { return y2 - y1; }
  double area() const { return width() * height(); }
  double center_x() const { return 0.5 * (x1 + x2); }
  double center_y() const { return 0.5 * (y1 + y2); }

  bool degenerate() const { return !(x1 < x2 && y1 < y2); }

  // Boundary-inclusive point test.
  bool contains(double x, double y) const {
    return x >= x1 && x <= x2 && y >= y1 && y <= y2;
  }

  bool operator==(const BoundingBox& o) const {
    return x1 == o.x1 && y1 == o.y1 && x2 == o.x2 && y2 == o.y2;
  }
};

// One RoI: a box plus its precomputed feature vector. Features are stored as
// float32 (the on-disk blob dtype) and widened to double at compute time.
struct RegionFeature {
  BoundingBox box;
  Eigen::VectorXf feature;

  bool operator==(const RegionFeature& o) const {
    return box == o.box && feature.size() == o.feature.size() && feature == o.feature;
  }
};

// Gold region for one phrase of one caption. Present only in evaluation
// splits; no training code path may read it.
struct GoldAlignment {
  int caption_index = 0;
  int phrase_index = 0;
  int region_index = 0;
  BoundingBox box;

  bool operator==(const GoldAlignment& o) const {
    return caption_index == o.caption_index && phrase_index == o.phrase_index &&
           region_index == o.region_index && box == o.box;
  }
};

struct SceneRecord {
  std::string scene_id;
  std::vector<RegionFeature> regions;
  std::vector<std::vector<std::string>> captions;
  std::vector<GoldAlignment> gold;

  bool operator==(const SceneRecord& o) const {
    return scene_id == o.scene_id && regions == o.regions && captions == o.captions &&
           gold == o.gold;
  }
};

// An in-memory dataset split together with its manifest-level metadata.
struct World {
  std::string split;
  int d_v = 0;
  double canvas_w = 0.0, canvas_h = 0.0;
  std::vector<std::string> vocabulary;  // sorted, deduplicated; UNK is implicit id 0
  uint64_t generator_seed = 0;
  std::string config_digest;
  std::vector<SceneRecord> scenes;
};

}  // namespace grounding

#endif
