#include "hdcn/lstm.hpp"

namespace hdcn::ad {

LstmLayer add_lstm_layer(ParamStore& store, const std::string& prefix, std::size_t input_dim,
                         std::size_t hidden_dim) {
  store.add(prefix + ".weight", Shape(4 * hidden_dim, input_dim + hidden_dim));
  store.add(prefix + ".bias", Shape(4 * hidden_dim));
  return find_lstm_layer(store, prefix);
}

LstmLayer find_lstm_layer(ParamStore& store, const std::string& prefix) {
  LstmLayer l;
  l.weight = &store.get(prefix + ".weight");
  l.bias = &store.get(prefix + ".bias");
  if (l.weight->shape.rank() != 2 || l.weight->shape.rows() % 4 != 0) {
    throw ShapeError("lstm layer " + prefix + ": bad weight shape " + l.weight->shape.str());
  }
  l.hidden_dim = l.weight->shape.rows() / 4;
  if (l.weight->shape.cols() < l.hidden_dim) {
    throw ShapeError("lstm layer " + prefix + ": bad weight shape " + l.weight->shape.str());
  }
  l.input_dim = l.weight->shape.cols() - l.hidden_dim;
  if (!(l.bias->shape == Shape(4 * l.hidden_dim))) {
    throw ShapeError("lstm layer " + prefix + ": bad bias shape " + l.bias->shape.str());
  }
  return l;
}

LstmState zero_state(Graph& g, std::size_t hidden_dim) {
  return {g.zeros(Shape(hidden_dim)), g.zeros(Shape(hidden_dim))};
}

LstmState lstm_cell(Var x, const LstmState& prev, const LstmLayer& layer) {
  const std::size_t d = layer.hidden_dim;
  if (x.shape() != Shape(layer.input_dim) || prev.h.shape() != Shape(d) ||
      prev.c.shape() != Shape(d)) {
    throw ShapeError("lstm_cell: input " + x.shape().str() + ", h " + prev.h.shape().str() +
                     ", c " + prev.c.shape().str() + " vs layer " + std::to_string(layer.input_dim) +
                     "->" + std::to_string(d));
  }
  Graph& g = x.graph();
  Var z = add(matmul(g.param(*layer.weight), concat({x, prev.h})), g.param(*layer.bias));
  Var i = sigmoid(slice(z, 0, d));
  Var f = sigmoid(slice(z, d, d));
  Var cand = tanh(slice(z, 2 * d, d));
  Var o = sigmoid(slice(z, 3 * d, d));
  Var c = add(mul(f, prev.c), mul(i, cand));
  Var h = mul(o, tanh(c));
  return {h, c};
}

}  // namespace hdcn::ad
