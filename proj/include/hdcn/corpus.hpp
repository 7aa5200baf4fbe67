#pragma once

#include <cstddef>
#include <map>
#include <span>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

namespace hdcn {

inline constexpr std::string_view kNoneToken = "none";
inline constexpr std::string_view kDontcareToken = "dontcare";
// Stands in for an utterance with no tokens (MultiWOZ opens with an empty
// system turn).
inline constexpr std::string_view kEmptyUtterance = "<empty>";

class CorpusError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

enum class Gate { ptr = 0, none = 1, dontcare = 2 };
inline constexpr std::size_t kNumGates = 3;

std::string_view gate_name(Gate g);
// Gate implied by a normalized value string: "none" -> none,
// "dontcare" -> dontcare, anything else -> ptr.
Gate gate_for_value(std::string_view value);

// Lowercases and splits on whitespace; punctuation becomes its own token
// unless one of ' - : . / & sits between two alphanumerics ("19:45",
// "don't", "b&b" stay whole).
std::vector<std::string> tokenize(std::string_view text);
std::string detokenize(std::span<const std::string> tokens);
// tokenize + join; common spellings of "don't care" collapse to "dontcare"
// and the empty string to "none".
std::string normalize_value(std::string_view raw);

struct Turn {
  std::vector<std::string> machine_tokens;
  std::vector<std::string> user_tokens;
  // 0 is the sentry.
  std::size_t index = 0;

  // machine_tokens followed by user_tokens; this is what the encoder reads.
  std::vector<std::string> tokens() const;
  bool is_sentry() const { return index == 0; }
};

struct SlotValue {
  std::string slot;
  std::vector<std::string> value;
  Gate gate = Gate::none;
};

// slot -> normalized value. Slots absent from the map are unset ("none").
using DialogueState = std::map<std::string, std::string>;

// Value of `slot` in `state`, "none" when unset.
std::string state_value(const DialogueState& state, const std::string& slot);
SlotValue slot_value(const DialogueState& state, const std::string& slot);

struct Dialogue {
  std::string id;
  // Sentry first once padded.
  std::vector<Turn> turns;
  // states[t] is the full state after real turn t + 1.
  std::vector<DialogueState> states;
  std::map<std::string, std::size_t> info_turns;

  std::size_t num_real_turns() const { return states.size(); }
  bool padded() const { return !turns.empty() && turns.front().is_sentry(); }
};

struct Corpus {
  std::vector<Dialogue> dialogues;
  std::vector<std::string> slots;
};

// For each slot, the last turn t in 1..T whose value differs from turn t-1
// (the state before turn 1 is empty); 0 for slots never assigned.
std::map<std::string, std::size_t> label_information_turns(std::span<const DialogueState> states,
                                                           std::span<const std::string> slots);

// Prepends the sentry turn (machine = user = ["none"]). Idempotent.
Dialogue pad_sentry(Dialogue d);

// Splits a slot name into the words whose embeddings form its query:
// "hotel-book day" -> {"hotel", "book", "day"}.
std::vector<std::string> slot_words(std::string_view slot);

std::vector<std::string> load_slot_inventory(const std::string& path);
std::vector<std::string> parse_slot_inventory(std::string_view json_text);
void save_slot_inventory(const std::string& path, std::span<const std::string> slots);

// Parses the corpus JSON schema; dialogues come back sentry-padded,
// tokenized and labeled. Throws CorpusError naming the dialogue on schema
// violations and listing slot names missing from the inventory.
Corpus parse_corpus(std::string_view json_text, std::vector<std::string> slots);
Corpus load_corpus(const std::string& path, std::vector<std::string> slots);
std::string corpus_to_json(const Corpus& corpus);
void save_corpus(const std::string& path, const Corpus& corpus);

// Builds a dialogue from raw utterances and per-turn state lists.
Dialogue make_dialogue(std::string id, std::span<const std::pair<std::string, std::string>> turns,
                       std::vector<DialogueState> states, std::span<const std::string> slots);

}  // namespace hdcn
