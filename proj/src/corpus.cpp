#include "hdcn/corpus.hpp"

#include <algorithm>
#include <fstream>
#include <set>
#include <sstream>

#include "json.hpp"

namespace hdcn {

using nlohmann::json;

namespace {

std::string read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw CorpusError("cannot open " + path);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void write_file(const std::string& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw CorpusError("cannot write " + path);
  out << text;
}

std::vector<std::string> utterance_tokens(std::string_view text) {
  auto toks = tokenize(text);
  if (toks.empty()) toks.emplace_back(kEmptyUtterance);
  return toks;
}

const json& require_field(const json& obj, const char* key, json::value_t type,
                          const std::string& where) {
  if (!obj.is_object()) throw CorpusError(where + ": expected an object");
  auto it = obj.find(key);
  if (it == obj.end()) throw CorpusError(where + ": missing field \"" + key + "\"");
  if (it->type() != type) {
    throw CorpusError(where + ": field \"" + key + "\" has type " + it->type_name());
  }
  return *it;
}

}  // namespace

std::vector<std::string> Turn::tokens() const {
  std::vector<std::string> out = machine_tokens;
  out.insert(out.end(), user_tokens.begin(), user_tokens.end());
  return out;
}

std::string state_value(const DialogueState& state, const std::string& slot) {
  auto it = state.find(slot);
  return it == state.end() ? std::string(kNoneToken) : it->second;
}

SlotValue slot_value(const DialogueState& state, const std::string& slot) {
  SlotValue sv;
  sv.slot = slot;
  const std::string v = state_value(state, slot);
  sv.gate = gate_for_value(v);
  std::istringstream ss(v);
  for (std::string t; ss >> t;) sv.value.push_back(t);
  return sv;
}

std::map<std::string, std::size_t> label_information_turns(std::span<const DialogueState> states,
                                                           std::span<const std::string> slots) {
  std::map<std::string, std::size_t> out;
  for (const auto& s : slots) out[s] = 0;
  const DialogueState empty;
  for (std::size_t t = 0; t < states.size(); ++t) {
    const DialogueState& prev = t == 0 ? empty : states[t - 1];
    for (const auto& s : slots) {
      if (state_value(prev, s) != state_value(states[t], s)) out[s] = t + 1;
    }
  }
  return out;
}

Dialogue pad_sentry(Dialogue d) {
  if (d.padded()) return d;
  Turn sentry;
  sentry.machine_tokens = {std::string(kNoneToken)};
  sentry.user_tokens = {std::string(kNoneToken)};
  sentry.index = 0;
  d.turns.insert(d.turns.begin(), std::move(sentry));
  for (std::size_t j = 0; j < d.turns.size(); ++j) d.turns[j].index = j;
  return d;
}

std::vector<std::string> slot_words(std::string_view slot) {
  std::string spaced(slot);
  std::replace(spaced.begin(), spaced.end(), '-', ' ');
  std::replace(spaced.begin(), spaced.end(), '_', ' ');
  std::vector<std::string> out;
  std::istringstream ss(spaced);
  for (std::string w; ss >> w;) out.push_back(w);
  return out;
}

std::vector<std::string> parse_slot_inventory(std::string_view json_text) {
  json j;
  try {
    j = json::parse(json_text);
  } catch (const json::parse_error& e) {
    throw CorpusError(std::string("slot inventory: ") + e.what());
  }
  if (!j.is_array()) throw CorpusError("slot inventory: expected a JSON array of strings");
  std::vector<std::string> slots;
  std::set<std::string> seen;
  for (const auto& s : j) {
    if (!s.is_string()) throw CorpusError("slot inventory: non-string entry " + s.dump());
    const std::string name = s.get<std::string>();
    if (name.empty()) throw CorpusError("slot inventory: empty slot name");
    if (!seen.insert(name).second) throw CorpusError("slot inventory: duplicate slot " + name);
    slots.push_back(name);
  }
  return slots;
}

std::vector<std::string> load_slot_inventory(const std::string& path) {
  return parse_slot_inventory(read_file(path));
}

void save_slot_inventory(const std::string& path, std::span<const std::string> slots) {
  write_file(path, json(std::vector<std::string>(slots.begin(), slots.end())).dump(1) + "\n");
}

Dialogue make_dialogue(std::string id, std::span<const std::pair<std::string, std::string>> turns,
                       std::vector<DialogueState> states, std::span<const std::string> slots) {
  if (turns.empty()) throw CorpusError("dialogue " + id + ": no turns");
  if (states.size() != turns.size()) {
    throw CorpusError("dialogue " + id + ": " + std::to_string(turns.size()) + " turns but " +
                      std::to_string(states.size()) + " states");
  }
  Dialogue d;
  d.id = std::move(id);
  for (std::size_t t = 0; t < turns.size(); ++t) {
    Turn turn;
    turn.machine_tokens = utterance_tokens(turns[t].first);
    turn.user_tokens = utterance_tokens(turns[t].second);
    turn.index = t + 1;
    d.turns.push_back(std::move(turn));
  }
  d.states = std::move(states);
  d.info_turns = label_information_turns(d.states, slots);
  return pad_sentry(std::move(d));
}

Corpus parse_corpus(std::string_view json_text, std::vector<std::string> slots) {
  json root;
  try {
    root = json::parse(json_text);
  } catch (const json::parse_error& e) {
    throw CorpusError(std::string("corpus: ") + e.what());
  }
  if (!root.is_array()) throw CorpusError("corpus: top level must be an array of dialogues");
  const std::set<std::string> inventory(slots.begin(), slots.end());

  Corpus corpus;
  corpus.slots = std::move(slots);
  for (std::size_t n = 0; n < root.size(); ++n) {
    const json& jd = root[n];
    const std::string where0 = "dialogue #" + std::to_string(n);
    const std::string id = require_field(jd, "id", json::value_t::string, where0).get<std::string>();
    const std::string where = "dialogue " + id;
    const json& jturns = require_field(jd, "turns", json::value_t::array, where);
    const json& jstates = require_field(jd, "states", json::value_t::array, where);
    if (jturns.empty()) throw CorpusError(where + ": no turns");
    if (jturns.size() != jstates.size()) {
      throw CorpusError(where + ": " + std::to_string(jturns.size()) + " turns but " +
                        std::to_string(jstates.size()) + " states");
    }
    std::vector<std::pair<std::string, std::string>> turns;
    for (std::size_t t = 0; t < jturns.size(); ++t) {
      const std::string tw = where + " turn " + std::to_string(t + 1);
      turns.emplace_back(
          require_field(jturns[t], "machine", json::value_t::string, tw).get<std::string>(),
          require_field(jturns[t], "user", json::value_t::string, tw).get<std::string>());
    }
    std::vector<DialogueState> states;
    std::set<std::string> unknown;
    for (std::size_t t = 0; t < jstates.size(); ++t) {
      const std::string sw = where + " state " + std::to_string(t + 1);
      if (!jstates[t].is_array()) throw CorpusError(sw + ": expected an array of slot values");
      DialogueState st;
      for (const json& e : jstates[t]) {
        const std::string slot = require_field(e, "slot", json::value_t::string, sw).get<std::string>();
        const std::string value =
            normalize_value(require_field(e, "value", json::value_t::string, sw).get<std::string>());
        if (!inventory.count(slot)) {
          unknown.insert(slot);
          continue;
        }
        if (value == kNoneToken) continue;
        st[slot] = value;
      }
      states.push_back(std::move(st));
    }
    if (!unknown.empty()) {
      std::string msg = where + ": unknown slot(s) not in inventory:";
      for (const auto& s : unknown) msg += " " + s;
      throw CorpusError(msg);
    }
    corpus.dialogues.push_back(make_dialogue(id, turns, std::move(states), corpus.slots));
  }
  return corpus;
}

Corpus load_corpus(const std::string& path, std::vector<std::string> slots) {
  return parse_corpus(read_file(path), std::move(slots));
}

std::string corpus_to_json(const Corpus& corpus) {
  json root = json::array();
  for (const Dialogue& d : corpus.dialogues) {
    json jd;
    jd["id"] = d.id;
    jd["turns"] = json::array();
    for (const Turn& t : d.turns) {
      if (t.is_sentry()) continue;
      auto join = [](const std::vector<std::string>& toks) {
        if (toks.size() == 1 && toks[0] == kEmptyUtterance) return std::string();
        return detokenize(toks);
      };
      jd["turns"].push_back({{"machine", join(t.machine_tokens)}, {"user", join(t.user_tokens)}});
    }
    jd["states"] = json::array();
    for (const DialogueState& st : d.states) {
      json js = json::array();
      for (const auto& [slot, value] : st) js.push_back({{"slot", slot}, {"value", value}});
      jd["states"].push_back(std::move(js));
    }
    root.push_back(std::move(jd));
  }
  return root.dump(1) + "\n";
}

void save_corpus(const std::string& path, const Corpus& corpus) {
  write_file(path, corpus_to_json(corpus));
}

}  // namespace hdcn
