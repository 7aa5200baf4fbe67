#include "hdcn/validation.hpp"

#include <functional>
#include <random>

#include "hdcn/copier.hpp"
#include "hdcn/encoder.hpp"
#include "hdcn/losses.hpp"
#include "hdcn/synthetic.hpp"
#include "hdcn/vocab.hpp"

namespace hdcn {

namespace {

using ad::Graph;
using ad::Parameter;
using ad::Shape;
using ad::Var;

// Projects an op's output onto fixed random weights so every output entry
// contributes a distinct gradient.
Var readout(Graph& g, Var out, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  std::vector<double> w(out.size());
  for (double& x : w) x = u(rng);
  return ad::sum(ad::mul(out, g.constant(out.shape(), std::move(w))));
}

}  // namespace

std::vector<OpCheck> check_ops(std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  ad::ParamStore ps;
  auto fill = [&](Parameter& p, double lo, double hi) {
    std::uniform_real_distribution<double> u(lo, hi);
    for (double& x : p.value) x = u(rng);
    return &p;
  };
  Parameter* m = fill(ps.add("m", Shape(3, 4)), -1, 1);
  Parameter* n = fill(ps.add("n", Shape(4, 2)), -1, 1);
  Parameter* a = fill(ps.add("a", Shape(4)), -1, 1);
  Parameter* b = fill(ps.add("b", Shape(4)), -1, 1);
  Parameter* pos = fill(ps.add("pos", Shape(4)), 0.5, 2.0);
  Parameter* s = fill(ps.add("s", Shape(1)), -1, 1);
  Parameter* table = fill(ps.add("table", Shape(5, 4)), -1, 1);
  const ad::LstmLayer cell = ad::add_lstm_layer(ps, "cell", 4, 3);
  for (Parameter* p : {&ps.get("cell.weight"), &ps.get("cell.bias")}) fill(*p, -0.5, 0.5);
  // Distinct entries keep max-pool away from ties.
  Parameter* pool = &ps.add("pool", Shape(3, 4));
  for (std::size_t i = 0; i < pool->value.size(); ++i) pool->value[i] = 0.37 * static_cast<double>((i * 7) % 12) - 2.0;

  using Build = std::function<Var(Graph&)>;
  const std::vector<std::pair<std::string, Build>> cases = {
      {"matmul_mm", [&](Graph& g) { return ad::matmul(g.param(*m), g.param(*n)); }},
      {"matmul_mv", [&](Graph& g) { return ad::matmul(g.param(*m), g.param(*a)); }},
      {"matmul_vm", [&](Graph& g) { return ad::matmul(g.param(*a), g.param(*n)); }},
      {"add", [&](Graph& g) { return ad::add(g.param(*a), g.param(*b)); }},
      {"sub", [&](Graph& g) { return ad::sub(g.param(*a), g.param(*b)); }},
      {"mul", [&](Graph& g) { return ad::mul(g.param(*a), g.param(*b)); }},
      {"affine", [&](Graph& g) { return ad::affine(g.param(*a), -0.7, 1.0); }},
      {"mul_scalar", [&](Graph& g) { return ad::mul_scalar(g.param(*a), g.param(*s)); }},
      {"dot", [&](Graph& g) { return ad::dot(g.param(*a), g.param(*b)); }},
      {"concat", [&](Graph& g) { return ad::concat({g.param(*a), g.param(*s), g.param(*b)}); }},
      {"stack_rows", [&](Graph& g) { return ad::stack_rows(std::vector<Var>{g.param(*a), g.param(*b)}); }},
      {"slice", [&](Graph& g) { return ad::slice(g.param(*a), 1, 2); }},
      {"sigmoid", [&](Graph& g) { return ad::sigmoid(g.param(*a)); }},
      {"tanh", [&](Graph& g) { return ad::tanh(g.param(*a)); }},
      {"log", [&](Graph& g) { return ad::log(g.param(*pos)); }},
      {"sum", [&](Graph& g) { return ad::sum(g.param(*m)); }},
      {"mean", [&](Graph& g) { return ad::mean(g.param(*a)); }},
      {"pick", [&](Graph& g) { return ad::pick(g.param(*a), 2); }},
      {"softmax", [&](Graph& g) { return ad::softmax(g.param(*a)); }},
      {"masked_softmax", [&](Graph& g) { return ad::masked_softmax(g.param(*a), {true, false, true, true}); }},
      {"max_pool_rows", [&](Graph& g) { return ad::max_pool_rows(g.param(*pool), {true, true, false}); }},
      {"embedding_lookup",
       [&](Graph& g) { return ad::add(ad::embedding_lookup(g, *table, 1), ad::embedding_lookup(g, *table, 3)); }},
      {"scatter_add",
       [&](Graph& g) {
         const std::vector<int> idx = {0, 2, 2, 5};
         return ad::scatter_add(g.param(*a), idx, 6);
       }},
      {"lstm_cell",
       [&](Graph& g) {
         ad::LstmState st{ad::slice(g.param(*b), 0, 3), ad::slice(g.param(*b), 1, 3)};
         ad::LstmState out = ad::lstm_cell(g.param(*a), st, cell);
         return ad::concat({out.h, out.c});
       }},
  };

  std::vector<OpCheck> out;
  std::uint64_t k = seed;
  for (const auto& [name, build] : cases) {
    const std::uint64_t w = ++k;
    auto loss = [&, w](Graph& g) { return readout(g, build(g), w); };
    out.push_back({name, ad::grad_check(loss, ps)});
  }
  return out;
}

ad::GradCheckResult check_full_loss(std::uint64_t seed, CopyMode mode, double focus_ratio) {
  SyntheticConfig sc;
  sc.n_dialogues = 1;
  sc.min_turns = 2;
  sc.max_turns = 2;
  sc.n_slots = 2;
  sc.vocab_size = 30;
  sc.values_per_slot = 3;
  sc.slot_active_rate = 1.0;
  sc.dontcare_rate = 0.0;
  sc.min_filler = 1;
  sc.max_filler = 2;
  const Corpus corpus = generate_synthetic(sc, seed);

  ModelConfig mc;
  mc.embed_dim = mc.hidden_dim = 4;
  mc.mode = mode;
  mc.dropout = 0.0;
  Model model(mc, build_vocab(corpus, 1), corpus.slots, seed);
  model.coverage_weight().value[0] = 0.5;

  const Dialogue& d = corpus.dialogues.at(0);
  const auto tokens = turn_tokens(d);
  ExampleOptions opts;
  opts.weights.focus_ratio = focus_ratio;
  auto loss = [&](Graph& g) {
    const auto ids = turn_token_ids(model.vocab(), tokens);
    EncodedDialogue enc = encode_dialogue(g, model, ids, mc.encoder_init, false);
    std::vector<Var> totals;
    for (std::size_t t = 1; t <= d.num_real_turns(); ++t) {
      CopyContext ctx = make_copy_context(model, enc, t + 1, tokens);
      totals.push_back(example_loss(g, model, ctx, d, t, opts).total);
    }
    return ad::sum(ad::concat(totals));
  };
  return ad::grad_check(loss, model.params());
}

}  // namespace hdcn
