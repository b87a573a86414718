#ifndef GROUNDING_TEXT_PIPELINE_HPP
#define GROUNDING_TEXT_PIPELINE_HPP

#include <string>
#include <unordered_map>
#include <vector>

#include "grounding/autodiff.hpp"

namespace grounding {

class Rng;

struct PhraseRecord {
  std::vector<std::string> tokens;
  int k = 0;  // positional index within the caption
};

// Rule-based shallow-parse stand-in: splits at coordinating tokens and at
// prepositions that open a new noun group, drops the connectives, and never
// returns zero phrases. Throws on empty input.
std::vector<PhraseRecord> chunk_caption(const std::vector<std::string>& tokens);

// Token ids: reserved UNK = 0, then vocabulary order + 1.
class Vocab {
 public:
  Vocab() = default;
  explicit Vocab(std::vector<std::string> tokens);

  int id(const std::string& token) const;  // UNK (0) when absent
  int size_with_unk() const { return static_cast<int>(tokens_.size()) + 1; }
  const std::vector<std::string>& tokens() const { return tokens_; }

  std::vector<int> encode(const std::vector<std::string>& tokens) const;

 private:
  std::vector<std::string> tokens_;
  std::unordered_map<std::string, int> ids_;
};

struct GruCell {
  int w_i = -1;  // 3h x in
  int w_h = -1;  // 3h x h
  int b_i = -1;  // 3h x 1
  int b_h = -1;  // 3h x 1
};

// One GRU step h_t = GRU(x_t, h_{t-1}) on the tape.
ad::Var gru_step(ad::Tape& tape, const GruCell& cell, ad::Var x, ad::Var h_prev, int hidden);

// Shared phrase/caption encoder: trained-from-scratch word embeddings into a
// 2-layer bidirectional GRU. The sequence embedding is the concatenation of
// the top layer's final forward and backward states (d_s = 2*hidden).
class TextEncoder {
 public:
  using GruCell = grounding::GruCell;

  struct Run {
    std::vector<ad::Var> per_position;  // top-layer fwd/bwd concat at each token
    ad::Var final_state = -1;           // phrase/caption embedding, length 2h
  };

  TextEncoder() = default;
  TextEncoder(ad::ParamStore& store, const std::string& prefix, int vocab_size_with_unk, int word_dim,
              int hidden, int layers);

  void init_params(ad::ParamStore& store, Rng& rng) const;

  Run encode(ad::Tape& tape, const std::vector<int>& token_ids) const;

  int d_s() const { return 2 * hidden_; }
  int hidden() const { return hidden_; }
  int layers() const { return layers_; }
  int word_dim() const { return word_dim_; }
  int embedding_param() const { return embedding_; }

 private:
  int vocab_size_ = 0;
  int word_dim_ = 0;
  int hidden_ = 0;
  int layers_ = 0;
  int embedding_ = -1;
  std::vector<GruCell> cells_;  // [layer][direction], direction 0 = forward
};

}  // namespace grounding

#endif
