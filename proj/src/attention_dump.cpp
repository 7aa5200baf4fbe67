#include "hdcn/attention_dump.hpp"

#include "hdcn/evaluation.hpp"
#include "json.hpp"

namespace hdcn {

std::string trace_step_json(const std::string& dialogue_id, const std::string& slot, std::size_t turn,
                            std::size_t step, const StepTrace& s) {
  nlohmann::json j = {{"dialogue_id", dialogue_id}, {"slot", slot}, {"turn", turn}, {"step", step},
                      {"p_gen", s.p_gen},           {"beta", s.beta}, {"alpha", s.alpha}, {"gamma", s.gamma}};
  return j.dump();
}

std::size_t dump_attention(Model& model, const Corpus& corpus, std::ostream& out, std::size_t turn) {
  std::size_t lines = 0;
  PredictOptions opts;
  opts.on_decode = [&](const Dialogue& d, std::size_t t, const std::string& slot, const SlotDecode& dec) {
    for (std::size_t k = 0; k < dec.trace.steps.size(); ++k) {
      out << trace_step_json(d.id, slot, t, k, dec.trace.steps[k]) << '\n';
      ++lines;
    }
  };
  if (turn != 0) {
    opts.only_turn = turn;
    predict_corpus(model, corpus, opts);
    return lines;
  }
  // Only the final prefix is needed; evaluate each dialogue at its own length.
  for (const Dialogue& d : corpus.dialogues) {
    Corpus one{{d}, corpus.slots};
    opts.only_turn = d.num_real_turns();
    predict_corpus(model, one, opts);
  }
  return lines;
}

}  // namespace hdcn
