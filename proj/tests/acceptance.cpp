// Acceptance suite. Prints one PASS/FAIL line per criterion; exit status is
// nonzero if any selected criterion fails.
//
// Training runs are cached as JSON in the cache directory so criteria that
// share a run (learnability, focus effect, coverage trend) train it once per
// ctest session. ctest clears the directory before the suite starts.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iostream>
#include <numeric>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "hdcn/copier.hpp"
#include "hdcn/encoder.hpp"
#include "hdcn/evaluation.hpp"
#include "hdcn/losses.hpp"
#include "hdcn/lstm.hpp"
#include "hdcn/synthetic.hpp"
#include "hdcn/training.hpp"
#include "json.hpp"

namespace fs = std::filesystem;
using namespace hdcn;
using nlohmann::json;

namespace {

struct Outcome {
  bool pass = false;
  std::string detail;
};

std::string fmt(const char* f, auto... args) {
  char buf[512];
  std::snprintf(buf, sizeof buf, f, args...);
  return buf;
}

fs::path g_cache;

// ---- finite differences ---------------------------------------------------

struct FdResult {
  double max_rel = 0.0;
  std::string worst;
  std::size_t entries = 0;
};

// Five-point central differences against reverse-mode gradients of every
// parameter entry. Relative error uses max(|analytic|, |numeric|, floor).
FdResult fd_compare(ad::ParamStore& ps, const std::function<ad::Var(ad::Graph&)>& f, double h = 1e-4,
                    double floor = 1e-6) {
  ps.zero_grad();
  {
    ad::Graph g(true);
    g.backward(f(g));
  }
  std::vector<std::vector<double>> analytic;
  for (ad::Parameter* p : ps.all()) analytic.push_back(p->grad);
  ps.zero_grad();
  const auto eval = [&] {
    ad::Graph g(false);
    return f(g).scalar();
  };
  FdResult r;
  const auto params = ps.all();
  for (std::size_t pi = 0; pi < params.size(); ++pi) {
    ad::Parameter& p = *params[pi];
    for (std::size_t i = 0; i < p.value.size(); ++i) {
      const double x = p.value[i];
      p.value[i] = x + 2 * h;
      const double f2 = eval();
      p.value[i] = x + h;
      const double f1 = eval();
      p.value[i] = x - h;
      const double m1 = eval();
      p.value[i] = x - 2 * h;
      const double m2 = eval();
      p.value[i] = x;
      const double numeric = (-f2 + 8 * f1 - 8 * m1 + m2) / (12 * h);
      const double a = analytic[pi].empty() ? 0.0 : analytic[pi][i];
      const double rel = std::abs(a - numeric) / std::max({std::abs(a), std::abs(numeric), floor});
      ++r.entries;
      if (rel > r.max_rel) {
        r.max_rel = rel;
        r.worst = p.name + "[" + std::to_string(i) + "]";
      }
    }
  }
  return r;
}

ad::Var weighted_sum(ad::Var out, std::mt19937_64& rng) {
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  std::vector<double> w(out.size());
  for (double& v : w) v = u(rng);
  return ad::sum(ad::mul(out, out.graph().constant(out.shape(), w)));
}

// ---- shared corpora and training runs ---------------------------------------

struct Splits {
  Corpus train, dev, test;
};

Splits make_splits(SyntheticConfig cfg, std::uint64_t seed, std::size_t n_dev, std::size_t n_test) {
  Splits s;
  s.train = generate_synthetic(cfg, seed);
  cfg.n_dialogues = n_dev;
  s.dev = generate_synthetic(cfg, seed + 1000003);
  cfg.n_dialogues = n_test;
  s.test = generate_synthetic(cfg, seed + 2000003);
  return s;
}

// 200 dialogues, 3-6 turns, 5 slots, vocabulary 200, distractor rate 0.3.
SyntheticConfig standard_corpus() { return SyntheticConfig{}; }

// 100 dialogues of 8-12 turns with a distractor in half the turns. Half of
// those echo a value set in an earlier turn, which the information turn must
// still win over.
SyntheticConfig long_corpus() {
  SyntheticConfig c;
  c.n_dialogues = 100;
  c.min_turns = 8;
  c.max_turns = 12;
  c.distractor_rate = 0.5;
  return c;
}

const Splits& standard_splits() {
  static const Splits s = make_splits(standard_corpus(), 7, 50, 100);
  return s;
}

const Splits& long_splits() {
  static const Splits s = make_splits(long_corpus(), 7, 50, 100);
  return s;
}

TrainConfig desk_config(CopyMode mode, double xi, std::uint64_t seed) {
  TrainConfig c;
  c.model.embed_dim = c.model.hidden_dim = 64;
  c.model.mode = mode;
  c.model.encoder_init = EncoderInit::last_init;
  c.model.dropout = 0.0;
  c.focus_ratio = xi;
  c.epochs = 50;
  c.patience = 6;
  c.seed = seed;
  return c;
}

struct RunSummary {
  double test_joint = 0.0;
  double test_focus = 0.0;
  double test_focus_mentioned = 0.0;
  std::size_t best_epoch = 0;
  std::size_t epochs = 0;
  double seconds = 0.0;
  fs::path metrics;
};

RunSummary train_run(const std::string& name, const Splits& data, const TrainConfig& cfg) {
  const fs::path meta = g_cache / (name + ".json");
  const fs::path csv = g_cache / (name + ".metrics.csv");
  RunSummary s;
  s.metrics = csv;
  if (fs::exists(meta) && fs::exists(csv)) {
    std::ifstream in(meta);
    const json j = json::parse(in);
    s.test_joint = j.at("test_joint");
    s.test_focus = j.at("test_focus");
    s.test_focus_mentioned = j.at("test_focus_mentioned");
    s.best_epoch = j.at("best_epoch");
    s.epochs = j.at("epochs");
    s.seconds = j.at("seconds");
    std::cerr << "  " << name << ": reusing run from this session\n";
    return s;
  }
  const auto t0 = std::chrono::steady_clock::now();
  TrainHooks hooks;
  hooks.on_epoch = [&](const EpochMetrics& m) {
    std::cerr << fmt("  %s epoch %2zu  loss %.4f  dev joint %.4f  dev focus %.4f  w_c %.4f\n", name.c_str(), m.epoch,
                     m.train_loss, m.dev_joint_acc, m.dev_focus_acc, m.w_c);
  };
  TrainResult r = train(cfg, data.train, data.dev, hooks);
  const Predictions p = predict_corpus(r.model, data.test);
  s.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  s.test_joint = joint_accuracy(p.records);
  s.test_focus = focus_accuracy(p.focus);
  s.test_focus_mentioned = focus_accuracy(p.focus, true);
  s.best_epoch = r.best_epoch;
  s.epochs = r.log.back().epoch;
  fs::create_directories(g_cache);
  save_metrics_csv(csv.string(), r.log);
  std::ofstream(meta) << json{{"test_joint", s.test_joint},
                              {"test_focus", s.test_focus},
                              {"test_focus_mentioned", s.test_focus_mentioned},
                              {"best_epoch", s.best_epoch},
                              {"epochs", s.epochs},
                              {"seconds", s.seconds}}
                             .dump(1);
  return s;
}

RunSummary learnability_run() {
  return train_run("standard_cover_xi0.1_seed1", standard_splits(), desk_config(CopyMode::hierarchical_cover, 0.1, 1));
}

// ---- 1: gradients ---------------------------------------------------------

std::vector<std::pair<std::string, FdResult>> op_checks() {
  std::vector<std::pair<std::string, FdResult>> out;
  std::mt19937_64 rng(11);
  std::uniform_real_distribution<double> u(-1.0, 1.0), pos(0.5, 2.0);
  auto fill = [&](ad::Parameter& p, bool positive = false) {
    for (double& v : p.value) v = positive ? pos(rng) : u(rng);
  };
  auto check = [&](const std::string& op, const std::function<void(ad::ParamStore&)>& make,
                   const std::function<ad::Var(ad::Graph&, ad::ParamStore&)>& body) {
    ad::ParamStore ps;
    make(ps);
    const std::uint64_t wseed = rng();
    out.emplace_back(op, fd_compare(ps, [&](ad::Graph& g) {
                       std::mt19937_64 wr(wseed);
                       return weighted_sum(body(g, ps), wr);
                     }));
  };
  auto two = [&](ad::Shape a, ad::Shape b) {
    return [&, a, b](ad::ParamStore& ps) {
      fill(ps.add("a", a));
      fill(ps.add("b", b));
    };
  };
  auto one = [&](ad::Shape a, bool positive = false) {
    return [&, a, positive](ad::ParamStore& ps) { fill(ps.add("a", a), positive); };
  };
  auto A = [](ad::Graph& g, ad::ParamStore& ps) { return g.param(ps.get("a")); };
  auto B = [](ad::Graph& g, ad::ParamStore& ps) { return g.param(ps.get("b")); };

  check("matmul mm", two(ad::Shape(3, 4), ad::Shape(4, 2)), [&](auto& g, auto& ps) { return ad::matmul(A(g, ps), B(g, ps)); });
  check("matmul mv", two(ad::Shape(3, 4), ad::Shape(4)), [&](auto& g, auto& ps) { return ad::matmul(A(g, ps), B(g, ps)); });
  check("matmul vm", two(ad::Shape(4), ad::Shape(4, 3)), [&](auto& g, auto& ps) { return ad::matmul(A(g, ps), B(g, ps)); });
  check("add", two(ad::Shape(5), ad::Shape(5)), [&](auto& g, auto& ps) { return ad::add(A(g, ps), B(g, ps)); });
  check("sub", two(ad::Shape(2, 3), ad::Shape(2, 3)), [&](auto& g, auto& ps) { return ad::sub(A(g, ps), B(g, ps)); });
  check("mul", two(ad::Shape(5), ad::Shape(5)), [&](auto& g, auto& ps) { return ad::mul(A(g, ps), B(g, ps)); });
  check("scale", one(ad::Shape(4)), [&](auto& g, auto& ps) { return ad::scale(A(g, ps), -1.7); });
  check("affine", one(ad::Shape(4)), [&](auto& g, auto& ps) { return ad::affine(A(g, ps), 0.3, 2.0); });
  check("mul_scalar", two(ad::Shape(4), ad::Shape(1)), [&](auto& g, auto& ps) { return ad::mul_scalar(A(g, ps), B(g, ps)); });
  check("dot", two(ad::Shape(6), ad::Shape(6)), [&](auto& g, auto& ps) { return ad::dot(A(g, ps), B(g, ps)); });
  check("concat", two(ad::Shape(2), ad::Shape(3)), [&](auto& g, auto& ps) { return ad::concat({A(g, ps), B(g, ps), A(g, ps)}); });
  check("stack_rows", two(ad::Shape(3), ad::Shape(3)), [&](auto& g, auto& ps) {
    std::vector<ad::Var> rows = {A(g, ps), B(g, ps)};
    return ad::stack_rows(rows);
  });
  check("slice", one(ad::Shape(6)), [&](auto& g, auto& ps) { return ad::slice(A(g, ps), 2, 3); });
  check("pick", one(ad::Shape(4)), [&](auto& g, auto& ps) { return ad::pick(A(g, ps), 2); });
  check("sigmoid", one(ad::Shape(5)), [&](auto& g, auto& ps) { return ad::sigmoid(A(g, ps)); });
  check("tanh", one(ad::Shape(5)), [&](auto& g, auto& ps) { return ad::tanh(A(g, ps)); });
  check("log", one(ad::Shape(5), true), [&](auto& g, auto& ps) { return ad::log(A(g, ps)); });
  check("sum", one(ad::Shape(2, 3)), [&](auto& g, auto& ps) { return ad::sum(A(g, ps)); });
  check("mean", one(ad::Shape(5)), [&](auto& g, auto& ps) { return ad::mean(A(g, ps)); });
  check("softmax", one(ad::Shape(5)), [&](auto& g, auto& ps) { return ad::softmax(A(g, ps)); });
  check("masked_softmax", one(ad::Shape(5)),
        [&](auto& g, auto& ps) { return ad::masked_softmax(A(g, ps), {true, false, true, true, false}); });
  check("max_pool_rows", one(ad::Shape(4, 3)),
        [&](auto& g, auto& ps) { return ad::max_pool_rows(A(g, ps), {true, true, false, true}); });
  check("embedding_lookup", one(ad::Shape(4, 3)),
        [&](auto& g, auto& ps) { return ad::concat({ad::embedding_lookup(g, ps.get("a"), 1), ad::embedding_lookup(g, ps.get("a"), 3)}); });
  check("scatter_add", one(ad::Shape(5)), [&](auto& g, auto& ps) {
    const std::vector<int> idx = {0, 2, 2, 4, 0};
    return ad::scatter_add(A(g, ps), idx, 6);
  });
  check("lstm_cell",
        [&](ad::ParamStore& ps) {
          ad::add_lstm_layer(ps, "cell", 3, 2);
          for (ad::Parameter* p : ps.all()) fill(*p);
          fill(ps.add("x", ad::Shape(3)));
          fill(ps.add("h", ad::Shape(2)));
          fill(ps.add("c", ad::Shape(2)));
        },
        [&](auto& g, auto& ps) {
          const ad::LstmLayer layer = ad::find_lstm_layer(ps, "cell");
          ad::LstmState s = ad::lstm_cell(g.param(ps.get("x")), {g.param(ps.get("h")), g.param(ps.get("c"))}, layer);
          return ad::concat({s.h, s.c});
        });
  return out;
}

// Two-turn, two-slot synthetic dialogue; loss summed over both prefixes.
FdResult full_loss_check(CopyMode mode, double xi, double* w_c_grad) {
  SyntheticConfig sc;
  sc.n_dialogues = 1;
  sc.min_turns = sc.max_turns = 2;
  sc.n_slots = 2;
  sc.vocab_size = 30;
  sc.values_per_slot = 3;
  sc.slot_active_rate = 1.0;
  sc.dontcare_rate = 0.0;
  sc.min_filler = 1;
  sc.max_filler = 2;
  const Corpus c = generate_synthetic(sc, 19);
  ModelConfig mc;
  mc.embed_dim = mc.hidden_dim = 4;
  mc.mode = mode;
  mc.dropout = 0.0;
  Model m(mc, build_vocab(c, 1), c.slots, 19);
  m.coverage_weight().value[0] = 0.5;
  const Dialogue& d = c.dialogues[0];
  const auto tokens = turn_tokens(d);
  ExampleOptions opts;
  opts.weights.focus_ratio = xi;
  const auto loss = [&](ad::Graph& g) {
    EncodedDialogue enc = encode_dialogue(g, m, turn_token_ids(m.vocab(), tokens), mc.encoder_init, false);
    std::vector<ad::Var> totals;
    for (std::size_t t = 1; t <= d.num_real_turns(); ++t) {
      CopyContext ctx = make_copy_context(m, enc, t + 1, tokens);
      totals.push_back(example_loss(g, m, ctx, d, t, opts).total);
    }
    return ad::sum(ad::concat(totals));
  };
  m.params().zero_grad();
  {
    ad::Graph g(true);
    g.backward(loss(g));
  }
  *w_c_grad = m.coverage_weight().grad[0];
  return fd_compare(m.params(), loss);
}

Outcome criterion1() {
  double worst_op = 0.0;
  std::string worst_name;
  const auto ops = op_checks();
  for (const auto& [op, r] : ops) {
    if (r.max_rel >= worst_op) {
      worst_op = r.max_rel;
      worst_name = op;
    }
  }
  double w_c_grad = 0.0;
  const FdResult full = full_loss_check(CopyMode::hierarchical_cover, 0.1, &w_c_grad);
  const bool pass = worst_op < 1e-4 && full.max_rel < 1e-3 && std::abs(w_c_grad) > 0.0;
  return {pass, fmt("full cover loss max rel err %.2e over %zu entries (worst %s, < 1e-3); w_c grad %.3e; "
                    "%zu ops max rel err %.2e (%s, < 1e-4)",
                    full.max_rel, full.entries, full.worst.c_str(), w_c_grad, ops.size(), worst_op,
                    worst_name.c_str())};
}

// ---- 2: normalization and linearity -----------------------------------------

Outcome criterion2() {
  SyntheticConfig sc;
  sc.n_dialogues = 40;
  sc.min_turns = 2;
  sc.max_turns = 6;
  const Corpus pool = generate_synthetic(sc, 23);
  const Vocab vocab = build_vocab(pool, 1);
  const CopyMode modes[] = {CopyMode::hierarchical_plain, CopyMode::hierarchical_freeze, CopyMode::hierarchical_cover,
                            CopyMode::flat};
  double max_norm = 0.0, max_product = 0.0, max_linear = 0.0;
  std::size_t steps = 0, linear_checks = 0;
  constexpr std::size_t kStates = 1000;
  for (std::size_t i = 0; i < kStates; ++i) {
    std::mt19937_64 rng(1000 + i);
    ModelConfig mc;
    mc.embed_dim = mc.hidden_dim = 6;
    mc.mode = modes[i % 4];
    mc.dropout = 0.0;
    Model m(mc, vocab, pool.slots, rng());
    // Spread parameter scales so some states saturate.
    const double gain = std::uniform_real_distribution<double>(0.25, 4.0)(rng);
    for (ad::Parameter* p : m.params().all())
      for (double& v : p->value) v *= gain;
    const Dialogue& d = pool.dialogues[rng() % pool.dialogues.size()];
    const std::size_t turn = 1 + rng() % d.num_real_turns();
    const std::string& slot = pool.slots[rng() % pool.slots.size()];

    ad::Graph g(false);
    const auto tokens = turn_tokens(d);
    EncodedDialogue enc = encode_dialogue(g, m, turn_token_ids(vocab, tokens), mc.encoder_init, false);
    CopyContext ctx = make_copy_context(m, enc, turn + 1, tokens);
    DecodeOptions opts;
    if (i % 2) {
      std::vector<int> gold(1 + rng() % 5);
      for (int& t : gold) t = static_cast<int>(rng() % ctx.ext_size);
      gold.push_back(Vocab::kEos);
      opts.teacher = gold;
    } else {
      opts.max_decode_len = 1 + rng() % 6;
    }
    const SlotDecode out = decode_slot_value(g, m, ctx, make_slot_query(vocab, slot), opts);
    for (std::size_t k = 0; k < out.step_dists.size(); ++k) {
      ++steps;
      const auto p = out.step_dists[k].value();
      max_norm = std::max(max_norm, std::abs(std::accumulate(p.begin(), p.end(), 0.0) - 1.0));
      const StepTrace& st = out.trace.steps[k];
      max_norm = std::max(max_norm, std::abs(std::accumulate(st.beta.begin(), st.beta.end(), 0.0) - 1.0));
      double gamma = 0.0;
      for (std::size_t j = 0; j < st.gamma.size(); ++j) {
        gamma += std::accumulate(st.gamma[j].begin(), st.gamma[j].end(), 0.0);
        if (!is_hierarchical(mc.mode)) continue;
        max_norm = std::max(max_norm, std::abs(std::accumulate(st.alpha[j].begin(), st.alpha[j].end(), 0.0) - 1.0));
        for (std::size_t w = 0; w < st.alpha[j].size(); ++w) {
          max_product = std::max(max_product, std::abs(st.gamma[j][w] - st.beta[j] * st.alpha[j][w]));
        }
      }
      max_norm = std::max(max_norm, std::abs(gamma - 1.0));
    }
    const auto gate = out.gate_dist.value();
    max_norm = std::max(max_norm, std::abs(std::accumulate(gate.begin(), gate.end(), 0.0) - 1.0));

    if (!is_hierarchical(mc.mode)) continue;
    const double xi = std::uniform_real_distribution<double>(0.01, 1.0)(rng);
    ExampleOptions base;
    base.weights.focus_ratio = 0.0;
    ExampleOptions with = base;
    with.weights.focus_ratio = xi;
    ad::Graph g0(false), g1(false);
    EncodedDialogue e0 = encode_dialogue(g0, m, turn_token_ids(vocab, tokens), mc.encoder_init, false);
    EncodedDialogue e1 = encode_dialogue(g1, m, turn_token_ids(vocab, tokens), mc.encoder_init, false);
    const ExampleLoss l0 = example_loss(g0, m, make_copy_context(m, e0, turn + 1, tokens), d, turn, base);
    const ExampleLoss l1 = example_loss(g1, m, make_copy_context(m, e1, turn + 1, tokens), d, turn, with);
    double focus = 0.0;
    for (const SlotLoss& s : l0.slots) focus += s.focus->scalar();
    const double expect = xi * focus;
    max_linear = std::max(max_linear, std::abs(l1.total.scalar() - l0.total.scalar() - expect) / expect);
    ++linear_checks;
  }
  const bool pass = max_norm <= 1e-5 && max_product <= 1e-12 && max_linear <= 1e-6;
  return {pass, fmt("%zu states, %zu steps: max |sum - 1| %.2e (<= 1e-5), max |gamma - beta*alpha| %.2e; "
                    "linearity over %zu states max rel err %.2e (<= 1e-6)",
                    kStates, steps, max_norm, max_product, linear_checks, max_linear)};
}

// ---- 3: learnability ------------------------------------------------------

Outcome criterion3() {
  const RunSummary r = learnability_run();
  const bool pass = r.test_joint >= 0.90 && r.test_focus >= 0.95 && r.seconds < 1800.0;
  return {pass, fmt("test joint %.4f (>= 0.90), focus %.4f (>= 0.95; mentioned slots %.4f), best epoch %zu of %zu, "
                    "%.0f s (< 1800)",
                    r.test_joint, r.test_focus, r.test_focus_mentioned, r.best_epoch, r.epochs, r.seconds)};
}

// ---- 4: focus loss effect -----------------------------------------------

Outcome criterion4() {
  double with = 0.0, without = 0.0;
  std::string per_seed;
  for (std::uint64_t seed : {1, 2, 3}) {
    const RunSummary a = seed == 1 ? learnability_run()
                                   : train_run("standard_cover_xi0.1_seed" + std::to_string(seed), standard_splits(),
                                               desk_config(CopyMode::hierarchical_cover, 0.1, seed));
    const RunSummary b = train_run("standard_cover_xi0_seed" + std::to_string(seed), standard_splits(),
                                   desk_config(CopyMode::hierarchical_cover, 0.0, seed));
    with += a.test_focus / 3.0;
    without += b.test_focus / 3.0;
    per_seed += fmt(" seed %d %.4f/%.4f;", static_cast<int>(seed), a.test_focus, b.test_focus);
  }
  const double gap = with - without;
  return {gap >= 0.02, fmt("mean focus xi=0.1 %.4f vs xi=0 %.4f, gap %+.2f points (>= 2);%s", with, without,
                           100.0 * gap, per_seed.c_str())};
}

// ---- 5: hierarchical against flat ------------------------------------------

Outcome criterion5() {
  double cover = 0.0, flat = 0.0;
  std::string per_seed;
  for (std::uint64_t seed : {1, 2, 3}) {
    const RunSummary a = train_run("long_cover_seed" + std::to_string(seed), long_splits(),
                                   desk_config(CopyMode::hierarchical_cover, 0.1, seed));
    const RunSummary b =
        train_run("long_flat_seed" + std::to_string(seed), long_splits(), desk_config(CopyMode::flat, 0.1, seed));
    cover += a.test_joint / 3.0;
    flat += b.test_joint / 3.0;
    per_seed += fmt(" seed %d %.4f/%.4f;", static_cast<int>(seed), a.test_joint, b.test_joint);
  }
  return {cover >= flat, fmt("mean joint cover %.4f vs flat %.4f, gap %+.2f points (>= 0);%s", cover, flat,
                             100.0 * (cover - flat), per_seed.c_str())};
}

// ---- 6: mode identities ---------------------------------------------------

bool same_bits(ad::Var a, ad::Var b) {
  const auto x = a.value(), y = b.value();
  return std::equal(x.begin(), x.end(), y.begin(), y.end());
}

Outcome criterion6() {
  SyntheticConfig sc;
  sc.n_dialogues = 10;
  sc.min_turns = 2;
  sc.max_turns = 6;
  const Corpus c = generate_synthetic(sc, 29);
  const Vocab vocab = build_vocab(c, 1);
  ModelConfig mc;
  mc.embed_dim = mc.hidden_dim = 8;
  mc.dropout = 0.0;
  mc.max_decode_len = 6;

  std::size_t cover_checks = 0, cover_mismatch = 0;
  std::size_t freeze_steps = 0, freeze_mismatch = 0;
  for (std::uint64_t seed = 1; seed <= 5; ++seed) {
    mc.mode = CopyMode::hierarchical_cover;
    Model cover(mc, vocab, c.slots, seed);
    cover.coverage_weight().value[0] = 0.0;
    Model plain = cover;
    plain.mutable_config().mode = CopyMode::hierarchical_plain;
    mc.mode = CopyMode::hierarchical_freeze;
    Model freeze(mc, vocab, c.slots, seed);

    for (const Dialogue& d : c.dialogues) {
      const auto tokens = turn_tokens(d);
      const std::size_t turn = d.num_real_turns();
      // Forward decodes, greedy and teacher-forced.
      for (const std::string& slot : c.slots) {
        for (int teacher = 0; teacher < 2; ++teacher) {
          DecodeOptions o;
          if (teacher) o.teacher = std::vector<int>{Vocab::kUnk, Vocab::kNone, Vocab::kUnk, Vocab::kNone, Vocab::kEos};
          ad::Graph ga(false), gb(false), gf(false);
          auto ea = encode_dialogue(ga, cover, turn_token_ids(vocab, tokens), mc.encoder_init, false);
          auto eb = encode_dialogue(gb, plain, turn_token_ids(vocab, tokens), mc.encoder_init, false);
          auto ef = encode_dialogue(gf, freeze, turn_token_ids(vocab, tokens), mc.encoder_init, false);
          const SlotDecode a = decode_slot_value(ga, cover, make_copy_context(cover, ea, turn + 1, tokens),
                                                 make_slot_query(vocab, slot), o);
          const SlotDecode b = decode_slot_value(gb, plain, make_copy_context(plain, eb, turn + 1, tokens),
                                                 make_slot_query(vocab, slot), o);
          ++cover_checks;
          bool same = a.step_dists.size() == b.step_dists.size() && same_bits(a.gate_dist, b.gate_dist);
          for (std::size_t k = 0; same && k < a.step_dists.size(); ++k) {
            same = same_bits(a.step_dists[k], b.step_dists[k]) && same_bits(a.betas[k], b.betas[k]);
          }
          cover_mismatch += !same;

          const SlotDecode f = decode_slot_value(gf, freeze, make_copy_context(freeze, ef, turn + 1, tokens),
                                                 make_slot_query(vocab, slot), o);
          for (std::size_t k = 1; k < f.betas.size(); ++k) {
            ++freeze_steps;
            freeze_mismatch += !same_bits(f.betas[k], f.betas[0]);
          }
        }
      }
      // Training loss and gradients.
      ExampleOptions eo;
      ad::Graph ga(true), gb(true);
      auto ea = encode_dialogue(ga, cover, turn_token_ids(vocab, tokens), mc.encoder_init, false);
      auto eb = encode_dialogue(gb, plain, turn_token_ids(vocab, tokens), mc.encoder_init, false);
      const ExampleLoss la = example_loss(ga, cover, make_copy_context(cover, ea, turn + 1, tokens), d, turn, eo);
      const ExampleLoss lb = example_loss(gb, plain, make_copy_context(plain, eb, turn + 1, tokens), d, turn, eo);
      cover.params().zero_grad();
      plain.params().zero_grad();
      ga.backward(la.total);
      gb.backward(lb.total);
      ++cover_checks;
      bool same = same_bits(la.total, lb.total);
      const auto pa = cover.params().all();
      const auto pb = plain.params().all();
      for (std::size_t i = 0; i < pa.size(); ++i) {
        // Plain mode never reads the coverage weight.
        if (pa[i]->name == "coverage.w") continue;
        same = same && pa[i]->grad == pb[i]->grad;
      }
      cover_mismatch += !same;
    }
  }
  const bool pass = cover_mismatch == 0 && freeze_mismatch == 0 && freeze_steps > 0;
  return {pass, fmt("cover with w_c=0 vs plain: %zu of %zu decodes and loss/gradient pairs differ; "
                    "freeze: %zu of %zu later steps differ from step 0",
                    cover_mismatch, cover_checks, freeze_mismatch, freeze_steps)};
}

// ---- 7: coverage weight trend -----------------------------------------------

Outcome criterion7() {
  const RunSummary r = learnability_run();
  std::ifstream in(r.metrics);
  std::string line;
  std::getline(in, line);
  std::vector<std::string> header;
  {
    std::stringstream ss(line);
    for (std::string h; std::getline(ss, h, ',');) header.push_back(h);
  }
  const auto col = std::find(header.begin(), header.end(), "w_c") - header.begin();
  if (col == static_cast<long>(header.size())) return {false, "metrics CSV has no w_c column"};
  std::vector<double> w;
  while (std::getline(in, line)) {
    std::stringstream ss(line);
    std::string cell;
    for (long i = 0; i <= col; ++i) std::getline(ss, cell, ',');
    w.push_back(std::stod(cell));
  }
  if (w.size() < 2) return {false, "metrics CSV has fewer than two rows"};
  std::size_t rises = 0;
  for (std::size_t i = 1; i < w.size(); ++i) rises += w[i] > w[i - 1];
  return {w.back() > w.front(), fmt("w_c %.4f at epoch 0 -> %.4f at epoch %zu (must rise); rose in %zu of %zu epochs",
                                    w.front(), w.back(), w.size() - 1, rises, w.size() - 1)};
}

// ---- 8: full-scale path and reference numbers -------------------------------

std::string slurp(const fs::path& p) {
  std::ifstream in(p);
  std::ostringstream s;
  s << in.rdbuf();
  return s.str();
}

Outcome criterion8() {
  const fs::path src = HDCN_SOURCE_DIR;
  const fs::path data = src / "tests" / "data";
  const fs::path out = g_cache / "multiwoz";
  fs::create_directories(out);
  const std::string cli = "\"" + std::string(HDCN_CLI_PATH) + "\"";
  const std::string corpus = (data / "multiwoz_sample.json").string();
  const std::string slots = (data / "multiwoz_slots.json").string();
  const std::string log = " 2>>" + (out / "cli.log").string();
  const int train_rc = std::system((cli + " train --train " + corpus + " --dev " + corpus + " --slots " + slots +
                                    " --dim 16 --epochs 2 --out " + out.string() + log)
                                       .c_str());
  const int eval_rc = std::system((cli + " eval --checkpoint " + (out / "model.ckpt").string() + " --corpus " + corpus +
                                   " --slots " + slots + " --out " + (out / "report.json").string() + log)
                                      .c_str());
  std::size_t n_turns = 0, n_slots = 0;
  if (train_rc == 0 && eval_rc == 0) {
    const json r = json::parse(slurp(out / "report.json"));
    n_turns = r.at("n_turns");
    n_slots = r.at("n_slots");
  }
  const bool pipeline = train_rc == 0 && eval_rc == 0 && n_turns == 15 && n_slots == 30;

  const std::string docs = slurp(src / "docs" / "reference_numbers.md");
  const std::string publication = slurp(src / "paper.md");
  std::size_t documented = 0, sourced = 0;
  const char* numbers[] = {"45.60", "46.76", "94.89", "96.31", "50.23", "51.32"};
  for (const char* n : numbers) {
    documented += docs.find(n) != std::string::npos;
    sourced += publication.find(n) != std::string::npos;
  }
  const bool provenance = docs.find("Table 1") != std::string::npos && docs.find("Table 2") != std::string::npos;
  const bool pass = pipeline && documented == 6 && sourced == 6 && provenance;
  return {pass, fmt("MultiWOZ-format train/eval exit %d/%d, report %zu turns x %zu slots (expect 15 x 30); "
                    "%zu of 6 reference numbers in docs, %zu of 6 match the publication, tables cited: %s",
                    train_rc, eval_rc, n_turns, n_slots, documented, sourced, provenance ? "yes" : "no")};
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"HDCN acceptance suite"};
  int only = 0;
  std::string cache;
  app.add_option("--criterion", only, "run one criterion (1-8); default all")->check(CLI::Range(0, 8));
  app.add_option("--cache", cache, "directory for shared training runs (default $HDCN_ACCEPTANCE_CACHE)");
  CLI11_PARSE(app, argc, argv);
  if (cache.empty()) {
    const char* env = std::getenv("HDCN_ACCEPTANCE_CACHE");
    cache = env ? env : "acceptance_cache";
  }
  g_cache = cache;
  fs::create_directories(g_cache);

  const std::vector<std::pair<std::string, std::function<Outcome()>>> criteria = {
      {"gradient correctness", criterion1}, {"normalization and linearity", criterion2},
      {"learnability", criterion3},         {"focus loss effect", criterion4},
      {"hierarchical vs flat", criterion5}, {"mode identities", criterion6},
      {"coverage weight trend", criterion7}, {"full-scale path and reference numbers", criterion8}};
  bool all = true;
  for (std::size_t i = 0; i < criteria.size(); ++i) {
    if (only && static_cast<std::size_t>(only) != i + 1) continue;
    Outcome o;
    try {
      o = criteria[i].second();
    } catch (const std::exception& e) {
      o = {false, std::string("error: ") + e.what()};
    }
    all = all && o.pass;
    const std::string line =
        fmt("[%s] %zu %s: ", o.pass ? "PASS" : "FAIL", i + 1, criteria[i].first.c_str()) + o.detail;
    std::cout << line << std::endl;
    std::ofstream(g_cache / "report.txt", std::ios::app) << line << "\n";
  }
  return all ? 0 : 1;
}
