#include "grounding/layers.hpp"

#include <cmath>

#include "grounding/error.hpp"
#include "grounding/rng.hpp"

namespace grounding {

Activation activation_from_name(const std::string& name) {
  if (name == "relu") return Activation::Relu;
  if (name == "tanh") return Activation::Tanh;
  if (name == "identity") return Activation::Identity;
  throw Error(ErrorKind::InvalidArgument, "unknown activation: " + name);
}

const char* activation_name(Activation a) {
  switch (a) {
    case Activation::Relu: return "relu";
    case Activation::Tanh: return "tanh";
    case Activation::Identity: return "identity";
  }
  return "?";
}

ad::Var apply_activation(ad::Tape& tape, Activation act, ad::Var x) {
  switch (act) {
    case Activation::Relu: return tape.relu(x);
    case Activation::Tanh: return tape.tanh(x);
    case Activation::Identity: return x;
  }
  throw Error(ErrorKind::Internal, "bad activation");
}

void init_uniform_param(ad::ParamStore& store, int id, double bound, Rng& rng) {
  auto& t = store.at(id);
  for (long r = 0; r < t.value.rows(); ++r)
    for (long c = 0; c < t.value.cols(); ++c) t.value(r, c) = rng.uniform(-bound, bound);
}

Mlp::Mlp(ad::ParamStore& store, const std::string& prefix, int in, int hidden, int out, Activation act)
    : act(act) {
  if (in < 1 || hidden < 1 || out < 1) throw Error(ErrorKind::InvalidArgument, "mlp dims must be positive");
  w1 = store.add(prefix + ".w1", hidden, in);
  b1 = store.add(prefix + ".b1", hidden, 1);
  w2 = store.add(prefix + ".w2", out, hidden);
  b2 = store.add(prefix + ".b2", out, 1);
}

void Mlp::init_params(ad::ParamStore& store, Rng& rng) const {
  init_uniform_param(store, w1, 1.0 / std::sqrt(static_cast<double>(store.at(w1).value.cols())), rng);
  init_uniform_param(store, w2, 1.0 / std::sqrt(static_cast<double>(store.at(w2).value.cols())), rng);
}

ad::Var Mlp::apply(ad::Tape& tape, ad::Var x) const {
  const ad::Var h = apply_activation(tape, act, tape.add(tape.matvec(tape.param(w1), x), tape.param(b1)));
  return tape.add(tape.matvec(tape.param(w2), h), tape.param(b2));
}

}  // namespace grounding
