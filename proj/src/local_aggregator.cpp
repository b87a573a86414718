#include "grounding/local_aggregator.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "grounding/error.hpp"
#include "grounding/rng.hpp"

namespace grounding {

namespace {

// Strict weak order on vectors; total for finite values.
bool lex_less(const ad::Mat& a, const ad::Mat& b) {
  for (long i = 0; i < a.rows(); ++i) {
    if (a(i, 0) < b(i, 0)) return true;
    if (a(i, 0) > b(i, 0)) return false;
  }
  return false;
}

}  // namespace

AggKind agg_kind_from_name(const std::string& name) {
  if (name == "permInv") return AggKind::PermInv;
  if (name == "sequence") return AggKind::Sequence;
  throw Error(ErrorKind::InvalidArgument, "unknown aggregator: " + name);
}

const char* agg_kind_name(AggKind a) { return a == AggKind::PermInv ? "permInv" : "sequence"; }

SetEncoder::SetEncoder(ad::ParamStore& store, const std::string& prefix, int d_v, int hidden, int d_e,
                       Activation act)
    : mlp(store, prefix, d_v, hidden, d_e, act) {}

void SetEncoder::init_params(ad::ParamStore& store, Rng& rng) const { mlp.init_params(store, rng); }

ad::Var SetEncoder::encode(ad::Tape& tape, const std::vector<ad::Var>& rois) const {
  if (rois.empty()) throw Error(ErrorKind::InvalidArgument, "encode_set: empty RoI list");
  std::vector<ad::Var> encoded;
  encoded.reserve(rois.size());
  for (ad::Var r : rois) encoded.push_back(mlp.apply(tape, r));

  // Canonical summation order: float addition is not associative, so sorting
  // before the mean is what makes permuted inputs bit-identical.
  std::vector<size_t> order(encoded.size());
  std::iota(order.begin(), order.end(), size_t{0});
  std::stable_sort(order.begin(), order.end(),
                   [&](size_t a, size_t b) { return lex_less(tape.val(encoded[a]), tape.val(encoded[b])); });
  std::vector<ad::Var> sorted;
  sorted.reserve(encoded.size());
  for (size_t i : order) sorted.push_back(encoded[i]);
  return tape.mean(sorted);
}

SequenceEncoder::SequenceEncoder(ad::ParamStore& store, const std::string& prefix, int d_v, int d_e,
                                 int layers)
    : d_v(d_v), layers(layers) {
  if (d_e % 2 != 0) throw Error(ErrorKind::InvalidArgument, "sequence aggregator needs even d_e");
  hidden = d_e / 2;
  for (int l = 0; l < layers; ++l) {
    const int in_dim = l == 0 ? d_v : 2 * hidden;
    for (int dir = 0; dir < 2; ++dir) {
      const std::string base = prefix + ".l" + std::to_string(l) + (dir == 0 ? ".fwd" : ".bwd");
      GruCell cell;
      cell.w_i = store.add(base + ".w_i", 3 * hidden, in_dim);
      cell.w_h = store.add(base + ".w_h", 3 * hidden, hidden);
      cell.b_i = store.add(base + ".b_i", 3 * hidden, 1);
      cell.b_h = store.add(base + ".b_h", 3 * hidden, 1);
      cells.push_back(cell);
    }
  }
}

void SequenceEncoder::init_params(ad::ParamStore& store, Rng& rng) const {
  for (int l = 0; l < layers; ++l) {
    const int in_dim = l == 0 ? d_v : 2 * hidden;
    for (int dir = 0; dir < 2; ++dir) {
      const GruCell& cell = cells[static_cast<size_t>(2 * l + dir)];
      init_uniform_param(store, cell.w_i, 1.0 / std::sqrt(static_cast<double>(in_dim)), rng);
      init_uniform_param(store, cell.w_h, 1.0 / std::sqrt(static_cast<double>(hidden)), rng);
    }
  }
}

ad::Var SequenceEncoder::encode(ad::Tape& tape, const std::vector<ad::Var>& rois) const {
  if (rois.empty()) throw Error(ErrorKind::InvalidArgument, "encode_sequence: empty RoI list");
  const size_t T = rois.size();
  std::vector<ad::Var> inputs = rois;
  std::vector<ad::Var> fwd(T), bwd(T);
  ad::Var fwd_final = -1, bwd_final = -1;
  for (int l = 0; l < layers; ++l) {
    const GruCell& cf = cells[static_cast<size_t>(2 * l)];
    const GruCell& cb = cells[static_cast<size_t>(2 * l + 1)];
    ad::Var h = tape.constant(ad::Mat::Zero(hidden, 1));
    for (size_t t = 0; t < T; ++t) {
      h = gru_step(tape, cf, inputs[t], h, hidden);
      fwd[t] = h;
    }
    fwd_final = h;
    h = tape.constant(ad::Mat::Zero(hidden, 1));
    for (size_t t = T; t-- > 0;) {
      h = gru_step(tape, cb, inputs[t], h, hidden);
      bwd[t] = h;
    }
    bwd_final = h;
    for (size_t t = 0; t < T; ++t) inputs[t] = tape.concat(fwd[t], bwd[t]);
  }
  return tape.concat(fwd_final, bwd_final);
}

}  // namespace grounding
