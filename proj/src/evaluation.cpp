#include "hdcn/evaluation.hpp"

#include <algorithm>
#include <fstream>
#include <set>
#include <stdexcept>

#include "hdcn/encoder.hpp"
#include "json.hpp"

namespace hdcn {

using nlohmann::json;

double joint_accuracy(std::span<const PredictionRecord> records) {
  if (records.empty()) throw std::invalid_argument("joint_accuracy: no records");
  std::size_t correct = 0;
  for (const auto& r : records) correct += r.predicted == r.gold;
  return static_cast<double>(correct) / static_cast<double>(records.size());
}

std::map<std::string, double> per_slot_accuracy(std::span<const PredictionRecord> records) {
  std::map<std::string, std::pair<std::size_t, std::size_t>> tally;
  for (const auto& r : records) {
    for (const auto& [slot, gold] : r.gold) {
      auto& [hit, total] = tally[slot];
      ++total;
      auto it = r.predicted.find(slot);
      hit += it != r.predicted.end() && it->second == gold;
    }
  }
  std::map<std::string, double> out;
  for (const auto& [slot, t] : tally) out[slot] = static_cast<double>(t.first) / static_cast<double>(t.second);
  return out;
}

bool focus_correct(std::span<const double> summed_beta, std::size_t info_turn) {
  if (info_turn >= summed_beta.size()) return false;
  for (std::size_t j = 0; j < summed_beta.size(); ++j) {
    if (j != info_turn && summed_beta[j] >= summed_beta[info_turn]) return false;
  }
  return true;
}

double focus_accuracy(std::span<const FocusRecord> records, bool mentioned_only) {
  std::size_t total = 0, correct = 0;
  for (const auto& r : records) {
    if (mentioned_only && !r.mentioned()) continue;
    ++total;
    correct += focus_correct(r.summed_beta, r.info_turn);
  }
  if (total == 0) throw std::invalid_argument("focus_accuracy: no records");
  return static_cast<double>(correct) / static_cast<double>(total);
}

namespace {

void check_inventory(const Model& model, const Corpus& corpus) {
  const std::set<std::string> have(model.slots().begin(), model.slots().end());
  const std::set<std::string> want(corpus.slots.begin(), corpus.slots.end());
  if (have == want) return;
  std::string msg = "slot inventory mismatch between model and corpus:";
  for (const auto& s : want)
    if (!have.count(s)) msg += " +" + s;
  for (const auto& s : have)
    if (!want.count(s)) msg += " -" + s;
  throw std::invalid_argument(msg);
}

}  // namespace

Predictions predict_corpus(Model& model, const Corpus& corpus, const PredictOptions& opts) {
  check_inventory(model, corpus);
  const Vocab& vocab = model.vocab();
  const auto& slots = model.slots();
  std::vector<SlotQuery> queries;
  for (const auto& s : slots) queries.push_back(make_slot_query(vocab, s));
  DecodeOptions dopts;

  Predictions out;
  for (const Dialogue& raw : corpus.dialogues) {
    const Dialogue d = raw.padded() ? raw : pad_sentry(raw);
    const auto tokens = turn_tokens(d);
    const auto ids = turn_token_ids(vocab, tokens);
    const std::size_t n_real = d.num_real_turns();
    if (opts.only_turn > n_real) continue;

    std::optional<ad::Graph> shared_graph;
    std::optional<EncodedDialogue> shared;
    if (opts.share_encoding) {
      shared_graph.emplace(false);
      shared = encode_dialogue(*shared_graph, model, ids, model.config().encoder_init, false);
    }
    for (std::size_t t = 1; t <= n_real; ++t) {
      if (opts.only_turn && t != opts.only_turn) continue;
      std::optional<ad::Graph> local_graph;
      std::optional<EncodedDialogue> local;
      if (!shared) {
        local_graph.emplace(false);
        local = encode_dialogue(*local_graph, model, std::span(ids).first(t + 1), model.config().encoder_init, false);
      }
      ad::Graph& g = shared ? *shared_graph : *local_graph;
      const EncodedDialogue& enc = shared ? *shared : *local;
      const std::size_t mark = g.size();
      CopyContext ctx = make_copy_context(model, enc, t + 1, tokens);
      const auto info = label_information_turns(std::span(d.states).first(t), slots);

      PredictionRecord rec;
      rec.dialogue_id = d.id;
      rec.turn = t;
      for (std::size_t m = 0; m < slots.size(); ++m) {
        SlotDecode dec = decode_slot_value(g, model, ctx, queries[m], dopts);
        rec.predicted[slots[m]] = dec.value();
        rec.gold[slots[m]] = state_value(d.states[t - 1], slots[m]);
        out.focus.push_back({d.id, t, slots[m], dec.trace.summed_beta(), info.at(slots[m])});
        if (opts.on_decode) opts.on_decode(d, t, slots[m], dec);
      }
      out.records.push_back(std::move(rec));
      if (shared) g.truncate(mark);
    }
  }
  return out;
}

EvalReport make_report(std::span<const PredictionRecord> records) {
  EvalReport r;
  r.joint_acc = joint_accuracy(records);
  r.n_turns = records.size();
  r.per_slot_acc = per_slot_accuracy(records);
  r.n_slots = r.per_slot_acc.size();
  return r;
}

EvalReport make_report(const Predictions& p) {
  EvalReport r = make_report(std::span(p.records));
  if (!p.focus.empty()) r.focus_acc = focus_accuracy(p.focus);
  const bool any_mentioned = std::any_of(p.focus.begin(), p.focus.end(), [](const auto& f) { return f.mentioned(); });
  if (any_mentioned) r.focus_acc_mentioned = focus_accuracy(p.focus, true);
  return r;
}

EvalReport mean_report(std::span<const EvalReport> runs) {
  if (runs.empty()) throw std::invalid_argument("mean_report: no runs");
  if (runs.size() == 1) return runs[0];
  const double n = static_cast<double>(runs.size());
  EvalReport m;
  m.n_turns = runs[0].n_turns;
  m.n_slots = runs[0].n_slots;
  bool focus = true, mentioned = true;
  double f = 0.0, fm = 0.0;
  for (const auto& r : runs) {
    m.joint_acc += r.joint_acc / n;
    for (const auto& [slot, acc] : r.per_slot_acc) m.per_slot_acc[slot] += acc / n;
    focus = focus && r.focus_acc;
    mentioned = mentioned && r.focus_acc_mentioned;
    if (r.focus_acc) f += *r.focus_acc / n;
    if (r.focus_acc_mentioned) fm += *r.focus_acc_mentioned / n;
  }
  if (focus) m.focus_acc = f;
  if (mentioned) m.focus_acc_mentioned = fm;
  return m;
}

namespace {

json report_json(const EvalReport& r) {
  json j;
  j["joint_acc"] = r.joint_acc;
  j["focus_acc"] = r.focus_acc ? json(*r.focus_acc) : json(nullptr);
  j["focus_acc_mentioned"] = r.focus_acc_mentioned ? json(*r.focus_acc_mentioned) : json(nullptr);
  j["n_turns"] = r.n_turns;
  j["n_slots"] = r.n_slots;
  j["per_slot_acc"] = r.per_slot_acc;
  return j;
}

}  // namespace

std::string report_to_json(const EvalReport& r, std::span<const EvalReport> runs) {
  json j = report_json(r);
  if (runs.size() > 1) {
    j["runs"] = json::array();
    for (const auto& run : runs) j["runs"].push_back(report_json(run));
  }
  return j.dump(2) + "\n";
}

std::string record_to_json_line(const PredictionRecord& r) {
  return json{{"dialogue_id", r.dialogue_id}, {"turn", r.turn}, {"predicted", r.predicted}, {"gold", r.gold}}.dump();
}

void save_predictions(const std::string& path, std::span<const PredictionRecord> records) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write " + path);
  for (const auto& r : records) out << record_to_json_line(r) << '\n';
}

std::vector<PredictionRecord> load_predictions(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open " + path);
  std::vector<PredictionRecord> out;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    try {
      const json j = json::parse(line);
      PredictionRecord r;
      r.dialogue_id = j.at("dialogue_id").get<std::string>();
      r.turn = j.at("turn").get<std::size_t>();
      r.predicted = j.at("predicted").get<DialogueState>();
      r.gold = j.at("gold").get<DialogueState>();
      for (const auto& [slot, v] : r.gold) r.predicted.try_emplace(slot, std::string(kNoneToken));
      out.push_back(std::move(r));
    } catch (const json::exception& e) {
      throw std::runtime_error(path + ":" + std::to_string(lineno) + ": " + e.what());
    }
  }
  return out;
}

}  // namespace hdcn
