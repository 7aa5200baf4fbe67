#include "hdcn/losses.hpp"

#include <stdexcept>

namespace hdcn {

ad::Var ce_loss(std::span<const ad::Var> step_dists, std::span<const int> gold) {
  if (gold.empty()) throw std::invalid_argument("ce_loss: empty gold sequence");
  if (gold.size() != step_dists.size()) {
    throw std::invalid_argument("ce_loss: " + std::to_string(step_dists.size()) + " steps for " +
                                std::to_string(gold.size()) + " gold tokens");
  }
  std::vector<ad::Var> logs;
  logs.reserve(gold.size());
  for (std::size_t k = 0; k < gold.size(); ++k) {
    logs.push_back(ad::log(ad::pick(step_dists[k], static_cast<std::size_t>(gold[k]))));
  }
  return ad::scale(ad::sum(ad::concat(logs)), -1.0 / static_cast<double>(gold.size()));
}

ad::Var focus_loss(std::span<const ad::Var> betas, std::size_t info_turn) {
  if (betas.empty()) throw std::invalid_argument("focus_loss: no decoding steps");
  if (info_turn >= betas[0].size()) {
    throw std::invalid_argument("focus_loss: info turn " + std::to_string(info_turn) + " outside " +
                                std::to_string(betas[0].size()) + " turns");
  }
  ad::Var summed = betas[0];
  for (std::size_t k = 1; k < betas.size(); ++k) summed = ad::add(summed, betas[k]);
  return ad::scale(ad::log(ad::pick(ad::softmax(summed), info_turn)), -1.0);
}

ad::Var gate_loss(ad::Var gate_dist, Gate target) {
  return ad::scale(ad::log(ad::pick(gate_dist, static_cast<std::size_t>(target))), -1.0);
}

ad::Var total_loss(std::span<const SlotLoss> slots, const LossWeights& w) {
  if (slots.empty()) throw std::invalid_argument("total_loss: no slots");
  ad::Graph& g = slots[0].ce.graph();
  ad::Var seq = g.scalar(0.0);
  ad::Var gate = g.scalar(0.0);
  for (const SlotLoss& s : slots) {
    ad::Var term = s.ce;
    if (s.focus && w.focus_ratio != 0.0) term = ad::add(term, ad::scale(*s.focus, w.focus_ratio));
    seq = ad::add(seq, term);
    gate = ad::add(gate, s.gate);
  }
  if (w.gate_weight == 0.0) return seq;
  return ad::add(seq, ad::scale(gate, w.gate_weight / static_cast<double>(slots.size())));
}

std::vector<int> gold_sequence(const Model& model, const CopyContext& ctx, const std::string& value,
                               std::size_t* uncopiable) {
  std::vector<int> ids;
  for (const auto& tok : tokenize(value)) {
    const int id = ctx.target_id(model.vocab(), tok);
    if (id == Vocab::kUnk && uncopiable) ++*uncopiable;
    ids.push_back(id);
  }
  if (ids.empty()) ids.push_back(Vocab::kNone);
  ids.push_back(Vocab::kEos);
  return ids;
}

ExampleLoss example_loss(ad::Graph& g, Model& model, const CopyContext& ctx, const Dialogue& dialogue,
                         std::size_t turn, const ExampleOptions& opts) {
  if (turn == 0 || turn > dialogue.num_real_turns()) {
    throw std::invalid_argument("example_loss: turn " + std::to_string(turn) + " outside dialogue " + dialogue.id);
  }
  if (ctx.n_turns != turn + 1) throw std::invalid_argument("example_loss: context does not match prefix");
  const auto& slots = model.slots();
  const DialogueState& state = dialogue.states[turn - 1];
  const auto info = label_information_turns(std::span(dialogue.states).first(turn), slots);
  const bool hier = is_hierarchical(model.config().mode);

  ExampleLoss out;
  for (const auto& slot : slots) {
    const std::string value = state_value(state, slot);
    DecodeOptions d;
    d.train = opts.train;
    d.teacher = gold_sequence(model, ctx, value, &out.uncopiable);
    d.teacher_forcing = opts.teacher_forcing;
    d.record_trace = false;
    SlotDecode dec = decode_slot_value(g, model, ctx, make_slot_query(model.vocab(), slot), d);
    SlotLoss sl;
    sl.slot = slot;
    sl.ce = ce_loss(dec.step_dists, *d.teacher);
    if (hier) sl.focus = focus_loss(dec.betas, info.at(slot));
    sl.gate = gate_loss(dec.gate_dist, gate_for_value(value));
    out.slots.push_back(std::move(sl));
  }
  out.total = total_loss(out.slots, opts.weights);
  return out;
}

}  // namespace hdcn
