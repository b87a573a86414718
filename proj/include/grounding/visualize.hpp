#ifndef GROUNDING_VISUALIZE_HPP
#define GROUNDING_VISUALIZE_HPP

#include <string>

#include "grounding/types.hpp"

namespace grounding {

class Model;

// Writes one PNG per (scene, caption) with region boxes in light gray, gold
// boxes in black, and each phrase's predicted box in a per-phrase color.
// Returns the number of files written.
int visualize_predictions(const Model& model, const World& world, const std::string& out_dir,
                          int max_scenes);

}  // namespace grounding

#endif
