#ifndef GROUNDING_LAYERS_HPP
#define GROUNDING_LAYERS_HPP

#include <string>

#include "grounding/autodiff.hpp"

namespace grounding {

class Rng;

enum class Activation { Relu, Tanh, Identity };
Activation activation_from_name(const std::string& name);
const char* activation_name(Activation a);
ad::Var apply_activation(ad::Tape& tape, Activation act, ad::Var x);

void init_uniform_param(ad::ParamStore& store, int id, double bound, Rng& rng);

// Two affine layers with a nonlinearity between.
struct Mlp {
  int w1 = -1, b1 = -1, w2 = -1, b2 = -1;
  Activation act = Activation::Relu;

  Mlp() = default;
  Mlp(ad::ParamStore& store, const std::string& prefix, int in, int hidden, int out, Activation act);
  void init_params(ad::ParamStore& store, Rng& rng) const;
  ad::Var apply(ad::Tape& tape, ad::Var x) const;
};

}  // namespace grounding

#endif
