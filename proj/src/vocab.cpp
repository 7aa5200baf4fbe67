#include "hdcn/vocab.hpp"

#include <map>
#include <set>
#include <sstream>
#include <stdexcept>

namespace hdcn {

namespace {

const std::vector<std::string>& reserved_tokens() {
  static const std::vector<std::string> r = {"<pad>", "<unk>", "<sos>", "<eos>",
                                             std::string(kNoneToken),
                                             std::string(kDontcareToken)};
  return r;
}

}  // namespace

Vocab::Vocab() {
  for (const auto& t : reserved_tokens()) add(t);
}

Vocab Vocab::from_tokens(std::vector<std::string> tokens) {
  const auto& r = reserved_tokens();
  if (tokens.size() < r.size()) throw std::invalid_argument("vocab: missing reserved tokens");
  for (std::size_t i = 0; i < r.size(); ++i) {
    if (tokens[i] != r[i]) {
      throw std::invalid_argument("vocab: expected reserved token " + r[i] + " at id " +
                                  std::to_string(i) + ", found " + tokens[i]);
    }
  }
  Vocab v;
  for (std::size_t i = r.size(); i < tokens.size(); ++i) {
    if (v.contains(tokens[i])) throw std::invalid_argument("vocab: duplicate token " + tokens[i]);
    v.add(tokens[i]);
  }
  return v;
}

int Vocab::add(const std::string& token) {
  auto it = ids_.find(token);
  if (it != ids_.end()) return it->second;
  const int id = static_cast<int>(tokens_.size());
  tokens_.push_back(token);
  ids_.emplace(token, id);
  return id;
}

int Vocab::id(std::string_view token) const {
  auto it = ids_.find(std::string(token));
  return it == ids_.end() ? kUnk : it->second;
}

bool Vocab::contains(std::string_view token) const { return ids_.count(std::string(token)) != 0; }

const std::string& Vocab::token(int id) const {
  if (id < 0 || static_cast<std::size_t>(id) >= tokens_.size()) {
    throw std::out_of_range("vocab: id " + std::to_string(id) + " out of range");
  }
  return tokens_[id];
}

Vocab build_vocab(const Corpus& corpus, int min_count) {
  std::map<std::string, int> counts;
  std::set<std::string> always;
  for (const auto& s : corpus.slots)
    for (auto& w : slot_words(s)) always.insert(w);
  for (const Dialogue& d : corpus.dialogues) {
    for (const Turn& t : d.turns) {
      for (const auto& tok : t.tokens()) ++counts[tok];
    }
    for (const DialogueState& st : d.states) {
      for (const auto& [slot, value] : st) {
        std::istringstream ss(value);
        for (std::string w; ss >> w;) always.insert(w);
      }
    }
  }
  for (const auto& [tok, n] : counts)
    if (n >= min_count) always.insert(tok);
  Vocab v;
  for (const auto& t : always) v.add(t);
  return v;
}

}  // namespace hdcn
