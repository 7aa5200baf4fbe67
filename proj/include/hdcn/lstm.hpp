#pragma once

#include <random>
#include <string>

#include "hdcn/autodiff.hpp"
#include "hdcn/params.hpp"

namespace hdcn::ad {

// One LSTM layer. weight is [4h x (in + h)] with gate blocks ordered
// input, forget, candidate, output; bias is [4h].
struct LstmLayer {
  Parameter* weight = nullptr;
  Parameter* bias = nullptr;
  std::size_t input_dim = 0;
  std::size_t hidden_dim = 0;
};

struct LstmState {
  Var h;
  Var c;
};

LstmLayer add_lstm_layer(ParamStore& store, const std::string& prefix, std::size_t input_dim,
                         std::size_t hidden_dim);
// Resolves an existing layer by prefix (after a checkpoint load, say).
LstmLayer find_lstm_layer(ParamStore& store, const std::string& prefix);

LstmState zero_state(Graph& g, std::size_t hidden_dim);

// i = s(W_i[x;h]+b_i), f = s(..), g = tanh(..), o = s(..)
// c' = f*c + i*g, h' = o*tanh(c')
LstmState lstm_cell(Var x, const LstmState& prev, const LstmLayer& layer);

}  // namespace hdcn::ad
