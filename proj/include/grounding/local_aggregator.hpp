#ifndef GROUNDING_LOCAL_AGGREGATOR_HPP
#define GROUNDING_LOCAL_AGGREGATOR_HPP

#include <string>
#include <vector>

#include "grounding/autodiff.hpp"
#include "grounding/layers.hpp"
#include "grounding/text_pipeline.hpp"

namespace grounding {

enum class AggKind { PermInv, Sequence };
AggKind agg_kind_from_name(const std::string& name);  // permInv|sequence
const char* agg_kind_name(AggKind a);

// Deep-Sets style caption-conditioned encoder: per-element 2-layer perceptron
// followed by a mean. The summation order is canonicalized (lexicographic on
// the encoded vectors) so permuted inputs give bit-identical outputs.
struct SetEncoder {
  Mlp mlp;

  SetEncoder() = default;
  SetEncoder(ad::ParamStore& store, const std::string& prefix, int d_v, int hidden, int d_e, Activation act);
  void init_params(ad::ParamStore& store, Rng& rng) const;
  ad::Var encode(ad::Tape& tape, const std::vector<ad::Var>& rois) const;
};

// Order-sensitive ablation arm: 2-layer bidirectional GRU over the RoI list,
// final-state concatenation (output dim = 2 * hidden = d_e).
struct SequenceEncoder {
  std::vector<GruCell> cells;  // [layer][direction]
  int d_v = 0, hidden = 0, layers = 0;

  SequenceEncoder() = default;
  SequenceEncoder(ad::ParamStore& store, const std::string& prefix, int d_v, int d_e, int layers);
  void init_params(ad::ParamStore& store, Rng& rng) const;
  ad::Var encode(ad::Tape& tape, const std::vector<ad::Var>& rois) const;
};

}  // namespace grounding

#endif
