#include "hdcn/encoder.hpp"

#include <stdexcept>

namespace hdcn {

std::vector<int> token_ids(const Vocab& vocab, std::span<const std::string> tokens) {
  std::vector<int> ids;
  ids.reserve(tokens.size());
  for (const auto& t : tokens) ids.push_back(vocab.id(t));
  return ids;
}

std::vector<std::vector<std::string>> turn_tokens(const Dialogue& d) {
  std::vector<std::vector<std::string>> out;
  out.reserve(d.turns.size());
  for (const Turn& t : d.turns) out.push_back(t.tokens());
  return out;
}

std::vector<std::vector<int>> turn_token_ids(const Vocab& vocab, std::span<const std::vector<std::string>> turns) {
  std::vector<std::vector<int>> out;
  out.reserve(turns.size());
  for (const auto& t : turns) out.push_back(token_ids(vocab, t));
  return out;
}

TurnEncoding encode_turn(ad::Graph& g, Model& model, std::span<const int> ids,
                         const std::vector<ad::LstmState>* init_forward, bool train,
                         std::size_t pad_to) {
  if (ids.empty()) throw std::invalid_argument("encode_turn: empty turn");
  const ModelConfig& cfg = model.config();
  const std::size_t d = cfg.hidden_dim;
  const std::size_t layers = cfg.encoder_layers;
  if (init_forward && init_forward->size() != layers) {
    throw ad::ShapeError("encode_turn: init state has " + std::to_string(init_forward->size()) +
                         " layers, encoder has " + std::to_string(layers));
  }
  const std::size_t n = ids.size();

  std::vector<ad::Var> inputs;
  inputs.reserve(n);
  for (int id : ids) {
    inputs.push_back(ad::dropout(ad::embedding_lookup(g, model.embedding(), static_cast<std::size_t>(id)),
                                 cfg.dropout, train, g.rng()));
  }

  TurnEncoding out;
  out.length = n;
  for (std::size_t l = 0; l < layers; ++l) {
    std::vector<ad::Var> fwd(n), bwd(n);
    ad::LstmState s = init_forward ? (*init_forward)[l] : ad::zero_state(g, d);
    for (std::size_t i = 0; i < n; ++i) {
      s = ad::lstm_cell(inputs[i], s, model.encoder_forward(l));
      fwd[i] = s.h;
    }
    out.last_forward.push_back(s);
    s = ad::zero_state(g, d);
    for (std::size_t i = n; i-- > 0;) {
      s = ad::lstm_cell(inputs[i], s, model.encoder_backward(l));
      bwd[i] = s.h;
    }
    out.last_backward.push_back(s);
    for (std::size_t i = 0; i < n; ++i) {
      ad::Var h = ad::concat({fwd[i], bwd[i]});
      // Dropout between stacked layers and on the top-layer outputs.
      inputs[i] = ad::dropout(h, cfg.dropout, train, g.rng());
    }
  }
  out.rows = std::move(inputs);
  out.mask.assign(n, true);
  for (std::size_t i = n; i < pad_to; ++i) {
    out.rows.push_back(g.zeros(ad::Shape(2 * d)));
    out.mask.push_back(false);
  }
  out.states = ad::stack_rows(out.rows);
  return out;
}

EncodedDialogue encode_dialogue(ad::Graph& g, Model& model, std::span<const std::vector<int>> turn_ids,
                                EncoderInit strategy, bool train, std::size_t pad_to) {
  EncodedDialogue enc;
  enc.width = 2 * model.config().hidden_dim;
  for (std::size_t j = 0; j < turn_ids.size(); ++j) {
    const std::vector<ad::LstmState>* init = nullptr;
    if (strategy == EncoderInit::last_init && j > 0) init = &enc.turns[j - 1].last_forward;
    enc.turns.push_back(encode_turn(g, model, turn_ids[j], init, train, pad_to));
  }
  return enc;
}

ad::Var pool_states(const EncodedDialogue& enc, std::size_t n_turns) {
  if (n_turns == 0 || n_turns > enc.turns.size()) {
    throw std::invalid_argument("pool_states: n_turns " + std::to_string(n_turns) + " outside encoded dialogue");
  }
  std::vector<ad::Var> pooled;
  for (std::size_t j = 0; j < n_turns; ++j) {
    pooled.push_back(ad::max_pool_rows(enc.turns[j].states, enc.turns[j].mask));
  }
  if (pooled.size() == 1) return pooled[0];
  return ad::max_pool_rows(ad::stack_rows(pooled));
}

ad::Var init_decoder_state(Model& model, const EncodedDialogue& enc, std::size_t n_turns) {
  ad::Var pooled = pool_states(enc, n_turns);
  return ad::matmul(pooled.graph().param(model.pool_proj()), pooled);
}

}  // namespace hdcn
