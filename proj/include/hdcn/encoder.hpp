#pragma once

#include <span>
#include <vector>

#include "hdcn/autodiff.hpp"
#include "hdcn/corpus.hpp"
#include "hdcn/lstm.hpp"
#include "hdcn/model.hpp"

namespace hdcn {

// One encoded turn. Row i of `states` is [forward_i ; backward_i] from the top
// layer (width 2d). Rows past the real length are zero padding with mask
// false.
struct TurnEncoding {
  ad::Var states;
  std::vector<ad::Var> rows;
  std::vector<bool> mask;
  std::size_t length = 0;
  // Final states per layer, after the last real token.
  std::vector<ad::LstmState> last_forward;
  std::vector<ad::LstmState> last_backward;
};

struct EncodedDialogue {
  std::vector<TurnEncoding> turns;
  std::size_t width = 0;
};

std::vector<int> token_ids(const Vocab& vocab, std::span<const std::string> tokens);
// Encoder input tokens of every turn (sentry included), and their ids.
std::vector<std::vector<std::string>> turn_tokens(const Dialogue& d);
std::vector<std::vector<int>> turn_token_ids(const Vocab& vocab, std::span<const std::vector<std::string>> turns);

// BiLSTM over one turn. init_forward (one state per layer) seeds the forward
// direction; null means zero. The backward direction always starts from
// zero. pad_to > length appends masked zero rows.
TurnEncoding encode_turn(ad::Graph& g, Model& model, std::span<const int> ids,
                         const std::vector<ad::LstmState>* init_forward, bool train,
                         std::size_t pad_to = 0);

// zero_init: every turn starts from zero. last_init: turn j's forward
// direction (hidden and cell, every layer) starts where turn j-1's forward
// direction ended; the sentry starts from zero.
EncodedDialogue encode_dialogue(ad::Graph& g, Model& model, std::span<const std::vector<int>> turn_ids,
                                EncoderInit strategy, bool train, std::size_t pad_to = 0);

// Element-wise max over every unmasked row of turns [0, n_turns).
ad::Var pool_states(const EncodedDialogue& enc, std::size_t n_turns);
// pool_proj * pooled: the initial decoder hidden state for every slot.
ad::Var init_decoder_state(Model& model, const EncodedDialogue& enc, std::size_t n_turns);

}  // namespace hdcn
