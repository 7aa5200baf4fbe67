#pragma once

#include <cstdint>
#include <set>
#include <string>
#include <vector>

#include "hdcn/corpus.hpp"

namespace hdcn {

// Desk-scale synthetic DST task. Each active slot is announced once, in its
// information turn, by a "<domain> <slot-word> <value>" phrase inside the
// user utterance. Distractors are value-like tokens (numbers, other slots'
// values) placed without cue words, or echoes: the system repeating a value
// set in an earlier turn, which the information turn must still win over.
struct SyntheticConfig {
  std::size_t n_dialogues = 200;
  std::size_t min_turns = 3;
  std::size_t max_turns = 6;
  std::size_t n_slots = 5;
  // Distinct non-reserved tokens in the lexicon (cue words, values, fillers).
  std::size_t vocab_size = 200;
  // Per-turn probability of planting a distractor.
  double distractor_rate = 0.3;
  // Share of distractors that echo an earlier value when one exists.
  double echo_rate = 0.5;
  double slot_active_rate = 0.5;
  double dontcare_rate = 0.05;
  // Probability that a named value gets a second token.
  double multiword_rate = 0.2;
  std::size_t values_per_slot = 8;
  std::size_t min_filler = 2;
  std::size_t max_filler = 5;
};

enum class ValueKind { named, number };

struct SyntheticSlot {
  std::string domain;
  std::string word;
  ValueKind kind = ValueKind::named;
  // Named slots only; number slots share SyntheticLexicon::numbers.
  std::vector<std::string> values;

  std::string name() const { return domain + "-" + word; }
};

// Seed-independent lexicon derived from the config alone, so corpora
// generated with different seeds share token inventories.
struct SyntheticLexicon {
  std::vector<SyntheticSlot> slots;
  std::vector<std::string> numbers;
  std::vector<std::string> suffixes;
  std::vector<std::string> fillers;
  std::string dontcare_word = "any";

  std::set<std::string> value_tokens() const;
  std::vector<std::string> slot_names() const;
};

// Throws std::invalid_argument when a config value is non-positive or the
// vocabulary cannot hold distinct values plus a minimum filler set.
SyntheticLexicon make_lexicon(const SyntheticConfig& cfg);
Corpus generate_synthetic(const SyntheticConfig& cfg, std::uint64_t seed);

}  // namespace hdcn
