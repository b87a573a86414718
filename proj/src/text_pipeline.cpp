#include "grounding/text_pipeline.hpp"

#include <algorithm>
#include <cmath>

#include "grounding/error.hpp"
#include "grounding/layers.hpp"
#include "grounding/rng.hpp"

namespace grounding {

namespace {

bool is_split_unigram(const std::string& t) {
  return t == "and" || t == "," || t == "in" || t == "on" || t == "from" || t == "with";
}

bool is_split_bigram(const std::string& a, const std::string& b) { return a == "next" && b == "to"; }

}  // namespace

std::vector<PhraseRecord> chunk_caption(const std::vector<std::string>& tokens) {
  if (tokens.empty()) throw Error(ErrorKind::InvalidArgument, "chunk_caption: empty caption");

  std::vector<std::vector<std::string>> spans;
  std::vector<std::string> current;
  size_t i = 0;
  while (i < tokens.size()) {
    if (i + 1 < tokens.size() && is_split_bigram(tokens[i], tokens[i + 1])) {
      if (!current.empty()) spans.push_back(std::move(current));
      current.clear();
      i += 2;
      continue;
    }
    if (is_split_unigram(tokens[i])) {
      if (!current.empty()) spans.push_back(std::move(current));
      current.clear();
      ++i;
      continue;
    }
    current.push_back(tokens[i]);
    ++i;
  }
  if (!current.empty()) spans.push_back(std::move(current));

  // A caption of connectives only still yields one phrase.
  if (spans.empty()) spans.push_back(tokens);

  std::vector<PhraseRecord> out;
  out.reserve(spans.size());
  for (size_t k = 0; k < spans.size(); ++k)
    out.push_back(PhraseRecord{std::move(spans[k]), static_cast<int>(k)});
  return out;
}

Vocab::Vocab(std::vector<std::string> tokens) : tokens_(std::move(tokens)) {
  for (size_t i = 0; i < tokens_.size(); ++i) ids_[tokens_[i]] = static_cast<int>(i) + 1;
}

int Vocab::id(const std::string& token) const {
  auto it = ids_.find(token);
  return it == ids_.end() ? 0 : it->second;
}

std::vector<int> Vocab::encode(const std::vector<std::string>& tokens) const {
  std::vector<int> ids;
  ids.reserve(tokens.size());
  for (const auto& t : tokens) ids.push_back(id(t));
  return ids;
}

TextEncoder::TextEncoder(ad::ParamStore& store, const std::string& prefix, int vocab_size_with_unk,
                         int word_dim, int hidden, int layers)
    : vocab_size_(vocab_size_with_unk), word_dim_(word_dim), hidden_(hidden), layers_(layers) {
  if (layers < 1 || hidden < 1 || word_dim < 1 || vocab_size_with_unk < 1)
    throw Error(ErrorKind::InvalidArgument, "text encoder dims must be positive");
  embedding_ = store.add(prefix + ".embed", vocab_size_, word_dim_);
  for (int l = 0; l < layers_; ++l) {
    const int in_dim = l == 0 ? word_dim_ : 2 * hidden_;
    for (int dir = 0; dir < 2; ++dir) {
      const std::string base = prefix + ".gru.l" + std::to_string(l) + (dir == 0 ? ".fwd" : ".bwd");
      GruCell cell;
      cell.w_i = store.add(base + ".w_i", 3 * hidden_, in_dim);
      cell.w_h = store.add(base + ".w_h", 3 * hidden_, hidden_);
      cell.b_i = store.add(base + ".b_i", 3 * hidden_, 1);
      cell.b_h = store.add(base + ".b_h", 3 * hidden_, 1);
      cells_.push_back(cell);
    }
  }
}

void TextEncoder::init_params(ad::ParamStore& store, Rng& rng) const {
  init_uniform_param(store, embedding_, 1.0 / std::sqrt(static_cast<double>(word_dim_)), rng);
  for (int l = 0; l < layers_; ++l) {
    const int in_dim = l == 0 ? word_dim_ : 2 * hidden_;
    for (int dir = 0; dir < 2; ++dir) {
      const GruCell& cell = cells_[static_cast<size_t>(2 * l + dir)];
      init_uniform_param(store, cell.w_i, 1.0 / std::sqrt(static_cast<double>(in_dim)), rng);
      init_uniform_param(store, cell.w_h, 1.0 / std::sqrt(static_cast<double>(hidden_)), rng);
      // biases start at zero
    }
  }
}

ad::Var gru_step(ad::Tape& tape, const GruCell& cell, ad::Var x, ad::Var h_prev, int hidden) {
  const int h = hidden;
  const ad::Var gi = tape.add(tape.matvec(tape.param(cell.w_i), x), tape.param(cell.b_i));
  const ad::Var gh = tape.add(tape.matvec(tape.param(cell.w_h), h_prev), tape.param(cell.b_h));
  const ad::Var r = tape.sigmoid(tape.add(tape.segment(gi, 0, h), tape.segment(gh, 0, h)));
  const ad::Var z = tape.sigmoid(tape.add(tape.segment(gi, h, h), tape.segment(gh, h, h)));
  const ad::Var n =
      tape.tanh(tape.add(tape.segment(gi, 2 * h, h), tape.hadamard(r, tape.segment(gh, 2 * h, h))));
  return tape.add(tape.hadamard(tape.scale_shift(z, -1.0, 1.0), n), tape.hadamard(z, h_prev));
}

TextEncoder::Run TextEncoder::encode(ad::Tape& tape, const std::vector<int>& token_ids) const {
  if (token_ids.empty()) throw Error(ErrorKind::InvalidArgument, "encode: empty token sequence");
  const size_t T = token_ids.size();

  const ad::Var embed = tape.param(embedding_);
  std::vector<ad::Var> inputs;
  inputs.reserve(T);
  for (int id : token_ids) {
    if (id < 0 || id >= vocab_size_)
      throw Error(ErrorKind::InvalidArgument, "token id out of vocabulary range");
    inputs.push_back(tape.embed_row(embed, id));
  }

  std::vector<ad::Var> fwd(T), bwd(T);
  ad::Var fwd_final = -1, bwd_final = -1;
  for (int l = 0; l < layers_; ++l) {
    const GruCell& cf = cells_[static_cast<size_t>(2 * l)];
    const GruCell& cb = cells_[static_cast<size_t>(2 * l + 1)];
    ad::Var h = tape.constant(ad::Mat::Zero(hidden_, 1));
    for (size_t t = 0; t < T; ++t) {
      h = gru_step(tape, cf, inputs[t], h, hidden_);
      fwd[t] = h;
    }
    fwd_final = h;
    h = tape.constant(ad::Mat::Zero(hidden_, 1));
    for (size_t t = T; t-- > 0;) {
      h = gru_step(tape, cb, inputs[t], h, hidden_);
      bwd[t] = h;
    }
    bwd_final = h;
    for (size_t t = 0; t < T; ++t) inputs[t] = tape.concat(fwd[t], bwd[t]);
  }

  Run run;
  run.per_position = inputs;
  run.final_state = tape.concat(fwd_final, bwd_final);
  return run;
}

}  // namespace grounding
