#include "hdcn/copier.hpp"

#include <random>
#include <stdexcept>
#include <unordered_map>

namespace hdcn {

ad::Var bilinear_key(ad::Var s, ad::Var w) { return ad::matmul(s, w); }

ad::Var word_attention(ad::Var key, ad::Var turn_states, const std::vector<bool>& mask) {
  return ad::masked_softmax(ad::matmul(turn_states, key), mask);
}

ad::Var turn_repr(ad::Var alpha, ad::Var turn_states) { return ad::matmul(alpha, turn_states); }

ad::Var turn_attention(ad::Var turn_key, std::span<const ad::Var> turn_reprs, CopyMode mode,
                       TurnAttentionState& state, std::optional<ad::Var> coverage_weight) {
  if (mode == CopyMode::flat) throw std::invalid_argument("turn_attention: flat mode has no turn level");
  const std::size_t k = state.step++;
  if (mode == CopyMode::hierarchical_freeze && k > 0) {
    if (!state.first_beta) throw std::logic_error("turn_attention: freeze mode without a step-0 beta");
    return *state.first_beta;
  }
  std::vector<ad::Var> scores;
  scores.reserve(turn_reprs.size());
  for (const ad::Var& g : turn_reprs) scores.push_back(ad::dot(turn_key, g));
  ad::Var logits = ad::concat(scores);
  if (mode == CopyMode::hierarchical_cover) {
    if (!coverage_weight) throw std::invalid_argument("turn_attention: cover mode needs w_c");
    if (state.coverage) logits = ad::add(logits, ad::mul_scalar(*state.coverage, *coverage_weight));
  }
  ad::Var beta = ad::softmax(logits);
  if (mode == CopyMode::hierarchical_freeze) state.first_beta = beta;
  if (mode == CopyMode::hierarchical_cover) {
    state.coverage = state.coverage ? ad::add(*state.coverage, beta) : beta;
  }
  return beta;
}

ad::Var renormalize_copy(ad::Var beta, std::span<const ad::Var> alphas) {
  if (beta.size() != alphas.size()) {
    throw ad::ShapeError("renormalize_copy: beta over " + std::to_string(beta.size()) + " turns, " +
                         std::to_string(alphas.size()) + " alphas");
  }
  std::vector<ad::Var> parts;
  parts.reserve(alphas.size());
  for (std::size_t j = 0; j < alphas.size(); ++j) parts.push_back(ad::mul_scalar(alphas[j], ad::pick(beta, j)));
  return ad::concat(parts);
}

ad::Var flat_copy_attention(ad::Var key, ad::Var all_states, const std::vector<bool>& mask) {
  return ad::masked_softmax(ad::matmul(all_states, key), mask);
}

ad::Var vocab_dist(ad::Var s, ad::Var embedding) { return ad::softmax(ad::matmul(embedding, s)); }

ad::Var gen_gate(ad::Var s, ad::Var e, ad::Var c, ad::Var w_p) {
  return ad::sigmoid(ad::dot(w_p, ad::concat({s, e, c})));
}

ad::Var final_dist(ad::Var p_vocab, ad::Var copy, ad::Var p_gen, std::span<const int> ext_ids,
                   std::size_t ext_size) {
  ad::Graph& g = p_vocab.graph();
  const std::size_t v = p_vocab.size();
  if (ext_size < v) throw ad::ShapeError("final_dist: extended size below vocab size");
  ad::Var gen = p_vocab;
  if (ext_size > v) gen = ad::concat({p_vocab, g.zeros(ad::Shape(ext_size - v))});
  ad::Var copied = ad::scatter_add(copy, ext_ids, ext_size);
  return ad::add(ad::mul_scalar(gen, p_gen), ad::mul_scalar(copied, ad::affine(p_gen, -1.0, 1.0)));
}

ad::Var slot_gate(ad::Var context, ad::Var weight, ad::Var bias) {
  return ad::softmax(ad::add(ad::matmul(weight, context), bias));
}

std::vector<double> AttentionTrace::summed_beta() const {
  std::vector<double> out;
  for (const StepTrace& s : steps) {
    if (out.empty()) out.assign(s.beta.size(), 0.0);
    for (std::size_t j = 0; j < s.beta.size(); ++j) out[j] += s.beta[j];
  }
  return out;
}

int CopyContext::target_id(const Vocab& vocab, const std::string& token) const {
  if (vocab.contains(token)) return vocab.id(token);
  for (std::size_t i = 0; i < oov_tokens.size(); ++i) {
    if (oov_tokens[i] == token) return static_cast<int>(vocab.size() + i);
  }
  return Vocab::kUnk;
}

std::string CopyContext::token(const Vocab& vocab, int ext_id) const {
  if (ext_id < static_cast<int>(vocab.size())) return vocab.token(ext_id);
  return oov_tokens.at(static_cast<std::size_t>(ext_id) - vocab.size());
}

CopyContext make_copy_context(Model& model, const EncodedDialogue& enc, std::size_t n_turns,
                              std::span<const std::vector<std::string>> turn_tokens) {
  if (n_turns == 0 || n_turns > enc.turns.size() || n_turns > turn_tokens.size()) {
    throw std::invalid_argument("make_copy_context: bad prefix length " + std::to_string(n_turns));
  }
  const Vocab& vocab = model.vocab();
  CopyContext ctx;
  ctx.encoded = &enc;
  ctx.n_turns = n_turns;
  std::unordered_map<std::string, int> oov;
  for (std::size_t j = 0; j < n_turns; ++j) {
    const TurnEncoding& te = enc.turns[j];
    if (turn_tokens[j].size() != te.length) {
      throw std::invalid_argument("make_copy_context: turn " + std::to_string(j) + " token count differs from encoding");
    }
    std::vector<int> ids;
    for (const auto& tok : turn_tokens[j]) {
      if (vocab.contains(tok)) {
        ids.push_back(vocab.id(tok));
        continue;
      }
      auto [it, fresh] = oov.emplace(tok, static_cast<int>(vocab.size() + ctx.oov_tokens.size()));
      if (fresh) ctx.oov_tokens.push_back(tok);
      ids.push_back(it->second);
    }
    ids.resize(te.mask.size(), Vocab::kPad);
    ctx.flat_ext_ids.insert(ctx.flat_ext_ids.end(), ids.begin(), ids.end());
    ctx.ext_ids.push_back(std::move(ids));
  }
  ctx.ext_size = vocab.size() + ctx.oov_tokens.size();
  ctx.decoder_init = init_decoder_state(model, enc, n_turns);
  if (model.config().mode == CopyMode::flat) {
    std::vector<ad::Var> rows;
    for (std::size_t j = 0; j < n_turns; ++j) {
      rows.insert(rows.end(), enc.turns[j].rows.begin(), enc.turns[j].rows.end());
      ctx.flat_mask.insert(ctx.flat_mask.end(), enc.turns[j].mask.begin(), enc.turns[j].mask.end());
    }
    ctx.flat_states = ad::stack_rows(rows);
  }
  return ctx;
}

SlotQuery make_slot_query(const Vocab& vocab, const std::string& slot) {
  SlotQuery q;
  q.slot = slot;
  for (const auto& w : slot_words(slot)) q.word_ids.push_back(vocab.id(w));
  if (q.word_ids.empty()) throw std::invalid_argument("slot name without words: " + slot);
  return q;
}

ad::Var slot_embedding(ad::Graph& g, Model& model, const SlotQuery& q) {
  ad::Var e = ad::embedding_lookup(g, model.embedding(), static_cast<std::size_t>(q.word_ids[0]));
  for (std::size_t i = 1; i < q.word_ids.size(); ++i) {
    e = ad::add(e, ad::embedding_lookup(g, model.embedding(), static_cast<std::size_t>(q.word_ids[i])));
  }
  return e;
}

std::string SlotDecode::value() const {
  if (gate == Gate::none) return std::string(kNoneToken);
  if (gate == Gate::dontcare) return std::string(kDontcareToken);
  if (words.empty()) return std::string(kNoneToken);
  return detokenize(words);
}

namespace {

int argmax(std::span<const double> p) {
  int best = 0;
  for (std::size_t i = 1; i < p.size(); ++i)
    if (p[i] > p[best]) best = static_cast<int>(i);
  return best;
}

std::vector<std::vector<double>> split_by_turn(std::span<const double> flat, const CopyContext& ctx) {
  std::vector<std::vector<double>> out;
  std::size_t off = 0;
  for (std::size_t j = 0; j < ctx.n_turns; ++j) {
    const TurnEncoding& te = ctx.encoded->turns[j];
    out.emplace_back(flat.begin() + static_cast<std::ptrdiff_t>(off),
                     flat.begin() + static_cast<std::ptrdiff_t>(off + te.length));
    off += te.mask.size();
  }
  return out;
}

}  // namespace

SlotDecode decode_slot_value(ad::Graph& g, Model& model, const CopyContext& ctx, const SlotQuery& query,
                             const DecodeOptions& opts) {
  const ModelConfig& cfg = model.config();
  const CopyMode mode = cfg.mode;
  const std::size_t layers = cfg.decoder_layers;
  const std::size_t d = cfg.hidden_dim;
  const std::size_t vocab_size = model.vocab().size();
  const std::size_t max_len = opts.max_decode_len ? opts.max_decode_len : cfg.max_decode_len;
  if (opts.teacher && opts.teacher->empty()) throw std::invalid_argument("decode: empty teacher sequence");

  ad::Var emb = g.param(model.embedding());
  ad::Var w_word = g.param(model.word_attn());
  ad::Var w_turn = g.param(model.turn_attn());
  ad::Var w_cov = g.param(model.coverage_weight());
  ad::Var w_gen = g.param(model.gen_gate());

  std::vector<ad::LstmState> state(layers);
  for (auto& s : state) s = {ctx.decoder_init, g.zeros(ad::Shape(d))};

  SlotDecode out;
  TurnAttentionState turn_state;
  std::bernoulli_distribution use_gold(opts.teacher_forcing);
  ad::Var input = slot_embedding(g, model, query);
  out.inputs.push_back(-1);

  for (std::size_t k = 0;; ++k) {
    ad::Var x = ad::dropout(input, cfg.dropout, opts.train, g.rng());
    for (std::size_t l = 0; l < layers; ++l) {
      state[l] = ad::lstm_cell(x, state[l], model.decoder_layer(l));
      x = ad::dropout(state[l].h, cfg.dropout, opts.train, g.rng());
    }
    ad::Var s = x;

    ad::Var word_key = bilinear_key(s, w_word);
    ad::Var copy, context;
    StepTrace st;
    if (is_hierarchical(mode)) {
      std::vector<ad::Var> alphas, reprs;
      for (std::size_t j = 0; j < ctx.n_turns; ++j) {
        const TurnEncoding& te = ctx.encoded->turns[j];
        alphas.push_back(word_attention(word_key, te.states, te.mask));
        reprs.push_back(turn_repr(alphas.back(), te.states));
      }
      if (opts.record_trace && turn_state.coverage) {
        const auto c = turn_state.coverage->value();
        st.coverage.assign(c.begin(), c.end());
      } else if (opts.record_trace && mode == CopyMode::hierarchical_cover) {
        st.coverage.assign(ctx.n_turns, 0.0);
      }
      ad::Var beta = turn_attention(bilinear_key(s, w_turn), reprs, mode, turn_state, w_cov);
      out.betas.push_back(beta);
      copy = renormalize_copy(beta, alphas);
      context = ad::matmul(beta, ad::stack_rows(reprs));
      if (opts.record_trace) {
        for (std::size_t j = 0; j < ctx.n_turns; ++j) {
          const auto a = alphas[j].value();
          st.alpha.emplace_back(a.begin(), a.begin() + static_cast<std::ptrdiff_t>(ctx.encoded->turns[j].length));
        }
        const auto b = beta.value();
        st.beta.assign(b.begin(), b.end());
        st.gamma = split_by_turn(copy.value(), ctx);
      }
    } else {
      copy = flat_copy_attention(word_key, *ctx.flat_states, ctx.flat_mask);
      context = ad::matmul(copy, *ctx.flat_states);
      if (opts.record_trace) {
        st.alpha = split_by_turn(copy.value(), ctx);
        st.gamma = st.alpha;
        for (const auto& turn : st.alpha) {
          double m = 0.0;
          for (double v : turn) m += v;
          st.beta.push_back(m);
        }
      }
    }

    ad::Var p_vocab = vocab_dist(s, emb);
    ad::Var p_gen = gen_gate(s, input, context, w_gen);
    ad::Var dist = final_dist(p_vocab, copy, p_gen, ctx.flat_ext_ids, ctx.ext_size);
    out.step_dists.push_back(dist);
    if (opts.record_trace) {
      st.p_gen = p_gen.scalar();
      out.trace.steps.push_back(std::move(st));
    }
    if (k == 0) {
      out.gate_dist = slot_gate(context, g.param(model.slot_gate_weight()), g.param(model.slot_gate_bias()));
      out.gate = static_cast<Gate>(argmax(out.gate_dist.value()));
    }

    const int predicted = argmax(dist.value());
    int next = predicted;
    bool stop = false;
    if (opts.teacher) {
      if (predicted != Vocab::kEos && out.tokens.size() < max_len) out.tokens.push_back(predicted);
      if (opts.teacher_forcing >= 1.0 || use_gold(g.rng())) next = (*opts.teacher)[k];
      stop = k + 1 == opts.teacher->size();
    } else {
      if (predicted == Vocab::kEos) {
        stop = true;
      } else {
        out.tokens.push_back(predicted);
        stop = out.tokens.size() >= max_len;
      }
    }
    if (stop) break;
    out.inputs.push_back(next);
    const std::size_t row = next < static_cast<int>(vocab_size) ? static_cast<std::size_t>(next) : Vocab::kUnk;
    input = ad::embedding_lookup(g, model.embedding(), row);
  }

  for (int id : out.tokens) out.words.push_back(ctx.token(model.vocab(), id));
  return out;
}

}  // namespace hdcn
