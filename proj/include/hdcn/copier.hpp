#pragma once

#include <optional>
#include <span>
#include <string>
#include <vector>

#include "hdcn/autodiff.hpp"
#include "hdcn/corpus.hpp"
#include "hdcn/encoder.hpp"
#include "hdcn/model.hpp"

namespace hdcn {

// ---- attention building blocks -------------------------------------------
// Scores are bilinear: score(s, h) = s W h with W of shape d x 2d. Callers
// compute key = s W once per step (bilinear_key) and reuse it.

ad::Var bilinear_key(ad::Var s, ad::Var w);

// alpha over the positions of one turn: masked_softmax(H key).
// Throws if the mask leaves no position.
ad::Var word_attention(ad::Var key, ad::Var turn_states, const std::vector<bool>& mask);

// g = sum_i alpha_i h_i
ad::Var turn_repr(ad::Var alpha, ad::Var turn_states);

// Carries what turn attention needs across decoding steps.
struct TurnAttentionState {
  std::size_t step = 0;
  std::optional<ad::Var> first_beta;  // freeze
  std::optional<ad::Var> coverage;    // cover: sum of betas from earlier steps
};

// plain:  beta = softmax_j(key_t . g_j)
// freeze: plain at step 0, then the stored step-0 beta verbatim
// cover:  beta = softmax_j(key_t . g_j + w_c * coverage_j), coverage_0 = 0
// Advances state.step. Not defined for CopyMode::flat.
ad::Var turn_attention(ad::Var turn_key, std::span<const ad::Var> turn_reprs, CopyMode mode,
                       TurnAttentionState& state, std::optional<ad::Var> coverage_weight);

// gamma_j = beta_j * alpha_j, concatenated over turns in order.
ad::Var renormalize_copy(ad::Var beta, std::span<const ad::Var> alphas);

// Single softmax over every position of the flattened history.
ad::Var flat_copy_attention(ad::Var key, ad::Var all_states, const std::vector<bool>& mask);

// softmax(E s)
ad::Var vocab_dist(ad::Var s, ad::Var embedding);

// sigmoid(W_p . [s; e; c])
ad::Var gen_gate(ad::Var s, ad::Var e, ad::Var c, ad::Var w_p);

// p_gen * [P_vocab; 0] + (1 - p_gen) * scatter(copy, ext_ids). Sized to the
// extended vocabulary (vocab plus this dialogue's out-of-vocabulary tokens).
ad::Var final_dist(ad::Var p_vocab, ad::Var copy, ad::Var p_gen, std::span<const int> ext_ids,
                   std::size_t ext_size);

// softmax(W c + b) over {ptr, none, dontcare}.
ad::Var slot_gate(ad::Var context, ad::Var weight, ad::Var bias);

// ---- decoding ------------------------------------------------------------

struct StepTrace {
  std::vector<std::vector<double>> alpha;  // per turn
  std::vector<double> beta;
  std::vector<std::vector<double>> gamma;  // per turn
  std::vector<double> coverage;            // cover mode only
  double p_gen = 0.0;
};

// In flat mode alpha and gamma hold the flat copy distribution split by
// turn, and beta holds each turn's share of it.
struct AttentionTrace {
  std::vector<StepTrace> steps;

  std::vector<double> summed_beta() const;
};

// Everything slot decoding needs from one dialogue prefix.
struct CopyContext {
  const EncodedDialogue* encoded = nullptr;
  std::size_t n_turns = 0;
  // Extended-vocabulary id of every position, per turn (padding -> PAD).
  std::vector<std::vector<int>> ext_ids;
  std::vector<int> flat_ext_ids;
  std::vector<std::string> oov_tokens;
  std::size_t ext_size = 0;
  ad::Var decoder_init;
  // Flat mode: all rows of turns [0, n_turns) stacked.
  std::optional<ad::Var> flat_states;
  std::vector<bool> flat_mask;

  // Extended id of a token as a decoding target: vocab id, else the
  // dialogue OOV slot, else UNK.
  int target_id(const Vocab& vocab, const std::string& token) const;
  std::string token(const Vocab& vocab, int ext_id) const;
};

CopyContext make_copy_context(Model& model, const EncodedDialogue& enc, std::size_t n_turns,
                              std::span<const std::vector<std::string>> turn_tokens);

struct SlotQuery {
  std::string slot;
  std::vector<int> word_ids;
};

SlotQuery make_slot_query(const Vocab& vocab, const std::string& slot);
// Emb(domain) + Emb(slot word) [+ ...]
ad::Var slot_embedding(ad::Graph& g, Model& model, const SlotQuery& q);

struct DecodeOptions {
  bool train = false;
  // Gold extended ids ending in EOS; enables teacher forcing.
  std::optional<std::vector<int>> teacher;
  // Probability of feeding the gold token rather than the model's argmax.
  double teacher_forcing = 1.0;
  bool record_trace = true;
  // Overrides ModelConfig::max_decode_len when nonzero.
  std::size_t max_decode_len = 0;
};

struct SlotDecode {
  // Emitted extended ids, EOS excluded.
  std::vector<int> tokens;
  std::vector<std::string> words;
  Gate gate = Gate::ptr;
  ad::Var gate_dist;
  std::vector<ad::Var> step_dists;
  std::vector<ad::Var> betas;  // empty in flat mode
  // Token fed at each step; -1 marks the slot embedding at step 0.
  std::vector<int> inputs;
  AttentionTrace trace;

  // Value string after gate overrides: none -> "none", dontcare ->
  // "dontcare", ptr -> decoded words ("none" if nothing was emitted).
  std::string value() const;
};

SlotDecode decode_slot_value(ad::Graph& g, Model& model, const CopyContext& ctx, const SlotQuery& query,
                             const DecodeOptions& opts);

}  // namespace hdcn
