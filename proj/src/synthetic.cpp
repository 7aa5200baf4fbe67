#include "hdcn/synthetic.hpp"

#include <algorithm>
#include <random>
#include <stdexcept>

namespace hdcn {

namespace {

struct SlotTemplate {
  const char* domain;
  const char* word;
  ValueKind kind;
};

// hotel-people and hotel-stay both take numbers, the classic confusable pair.
constexpr SlotTemplate kTemplates[] = {
    {"hotel", "area", ValueKind::named},          {"hotel", "people", ValueKind::number},
    {"restaurant", "food", ValueKind::named},     {"hotel", "stay", ValueKind::number},
    {"train", "destination", ValueKind::named},   {"restaurant", "pricerange", ValueKind::named},
    {"train", "people", ValueKind::number},       {"taxi", "departure", ValueKind::named},
    {"attraction", "type", ValueKind::named},     {"restaurant", "day", ValueKind::named},
};

constexpr std::uint64_t kLexiconSeed = 0x5eed1e71c0ffeeULL;

class WordMaker {
 public:
  explicit WordMaker(std::set<std::string> taken) : taken_(std::move(taken)), rng_(kLexiconSeed) {}

  std::string next() {
    static const std::string cons = "bdfgklmnprstvz";
    static const std::string vow = "aeiou";
    std::uniform_int_distribution<std::size_t> c(0, cons.size() - 1), v(0, vow.size() - 1);
    for (int attempt = 0;; ++attempt) {
      const int syllables = attempt < 200 ? 2 : 3;
      std::string w;
      for (int s = 0; s < syllables; ++s) {
        w.push_back(cons[c(rng_)]);
        w.push_back(vow[v(rng_)]);
      }
      if (taken_.insert(w).second) return w;
    }
  }

 private:
  std::set<std::string> taken_;
  std::mt19937_64 rng_;
};

void check_config(const SyntheticConfig& cfg) {
  auto positive = [](std::size_t v, const char* name) {
    if (v == 0) throw std::invalid_argument(std::string("synthetic config: ") + name + " must be positive");
  };
  positive(cfg.n_dialogues, "n_dialogues");
  positive(cfg.min_turns, "min_turns");
  positive(cfg.max_turns, "max_turns");
  positive(cfg.n_slots, "n_slots");
  positive(cfg.vocab_size, "vocab_size");
  positive(cfg.values_per_slot, "values_per_slot");
  positive(cfg.max_filler, "max_filler");
  if (cfg.max_turns < cfg.min_turns) throw std::invalid_argument("synthetic config: max_turns < min_turns");
  if (cfg.max_filler < cfg.min_filler) throw std::invalid_argument("synthetic config: max_filler < min_filler");
  auto prob = [](double p, const char* name) {
    if (!(p >= 0.0 && p <= 1.0)) {
      throw std::invalid_argument(std::string("synthetic config: ") + name + " must lie in [0, 1]");
    }
  };
  prob(cfg.distractor_rate, "distractor_rate");
  prob(cfg.slot_active_rate, "slot_active_rate");
  prob(cfg.dontcare_rate, "dontcare_rate");
  prob(cfg.multiword_rate, "multiword_rate");
  prob(cfg.echo_rate, "echo_rate");
}

}  // namespace

std::set<std::string> SyntheticLexicon::value_tokens() const {
  std::set<std::string> out(numbers.begin(), numbers.end());
  out.insert(suffixes.begin(), suffixes.end());
  for (const auto& s : slots) out.insert(s.values.begin(), s.values.end());
  return out;
}

std::vector<std::string> SyntheticLexicon::slot_names() const {
  std::vector<std::string> out;
  for (const auto& s : slots) out.push_back(s.name());
  return out;
}

SyntheticLexicon make_lexicon(const SyntheticConfig& cfg) {
  check_config(cfg);
  SyntheticLexicon lex;
  std::set<std::string> content = {"<pad>", "<unk>", "<sos>", "<eos>", "none", "dontcare",
                                   lex.dontcare_word};
  const std::size_t n_templates = std::size(kTemplates);
  std::size_t n_named = 0, n_number = 0;
  for (std::size_t i = 0; i < cfg.n_slots; ++i) {
    SyntheticSlot s;
    if (i < n_templates) {
      s.domain = kTemplates[i].domain;
      s.word = kTemplates[i].word;
      s.kind = kTemplates[i].kind;
    } else {
      s.domain = "domain" + std::to_string(i);
      s.word = "slot" + std::to_string(i);
      s.kind = ValueKind::named;
    }
    (s.kind == ValueKind::named ? n_named : n_number)++;
    content.insert(s.domain);
    content.insert(s.word);
    lex.slots.push_back(std::move(s));
  }
  for (int n = 1; n <= 9; ++n) lex.numbers.push_back(std::to_string(n));
  if (n_number > lex.numbers.size()) {
    throw std::invalid_argument("synthetic config infeasible: more number slots than distinct numbers");
  }
  content.insert(lex.numbers.begin(), lex.numbers.end());
  const std::size_t n_suffix = std::max<std::size_t>(4, n_named);
  // Reserved tokens do not count against vocab_size.
  const std::size_t used = content.size() - 6 + n_named * cfg.values_per_slot + n_suffix;
  constexpr std::size_t kMinFillers = 10;
  if (cfg.vocab_size < used + kMinFillers) {
    throw std::invalid_argument("synthetic config infeasible: vocab_size " +
                                std::to_string(cfg.vocab_size) + " cannot hold " +
                                std::to_string(used) + " cue/value tokens plus " +
                                std::to_string(kMinFillers) + " fillers");
  }
  WordMaker words(content);
  for (auto& s : lex.slots) {
    if (s.kind != ValueKind::named) continue;
    for (std::size_t k = 0; k < cfg.values_per_slot; ++k) s.values.push_back(words.next());
  }
  for (std::size_t k = 0; k < n_suffix; ++k) lex.suffixes.push_back(words.next());
  for (std::size_t k = used; k < cfg.vocab_size; ++k) lex.fillers.push_back(words.next());
  return lex;
}

Corpus generate_synthetic(const SyntheticConfig& cfg, std::uint64_t seed) {
  const SyntheticLexicon lex = make_lexicon(cfg);
  std::mt19937_64 rng(seed);
  auto uniform = [&](std::size_t lo, std::size_t hi) {
    return std::uniform_int_distribution<std::size_t>(lo, hi)(rng);
  };
  auto coin = [&](double p) { return std::bernoulli_distribution(p)(rng); };
  auto pick = [&](const std::vector<std::string>& pool) { return pool[uniform(0, pool.size() - 1)]; };

  Corpus corpus;
  corpus.slots = lex.slot_names();
  for (std::size_t di = 0; di < cfg.n_dialogues; ++di) {
    const std::size_t n_turns = uniform(cfg.min_turns, cfg.max_turns);
    std::vector<std::size_t> active;
    for (std::size_t s = 0; s < lex.slots.size(); ++s)
      if (coin(cfg.slot_active_rate)) active.push_back(s);
    if (active.empty()) active.push_back(uniform(0, lex.slots.size() - 1));

    struct Plan {
      std::size_t slot;
      std::size_t turn;
      std::vector<std::string> value;
      std::vector<std::string> phrase;
    };
    std::vector<Plan> plans;
    std::set<std::string> used;
    auto draw_unused = [&](const std::vector<std::string>& pool) {
      std::vector<std::string> free;
      for (const auto& v : pool)
        if (!used.count(v)) free.push_back(v);
      const std::string v = pick(free);
      used.insert(v);
      return v;
    };
    for (std::size_t s : active) {
      const SyntheticSlot& slot = lex.slots[s];
      Plan p;
      p.slot = s;
      p.turn = uniform(1, n_turns);
      p.phrase = {slot.domain, slot.word};
      if (coin(cfg.dontcare_rate)) {
        p.value = {std::string(kDontcareToken)};
        p.phrase.push_back(lex.dontcare_word);
      } else {
        p.value.push_back(draw_unused(slot.kind == ValueKind::number ? lex.numbers : slot.values));
        if (slot.kind == ValueKind::named && coin(cfg.multiword_rate)) {
          p.value.push_back(draw_unused(lex.suffixes));
        }
        p.phrase.insert(p.phrase.end(), p.value.begin(), p.value.end());
      }
      plans.push_back(std::move(p));
    }

    // Value-like distractors never reuse an active value of this dialogue.
    std::vector<std::string> named_pool, number_pool;
    for (const auto& s : lex.slots)
      for (const auto& v : s.values)
        if (!used.count(v)) named_pool.push_back(v);
    for (const auto& v : lex.numbers)
      if (!used.count(v)) number_pool.push_back(v);

    Dialogue d;
    d.id = "syn-" + std::to_string(seed) + "-" + std::to_string(di);
    for (std::size_t t = 1; t <= n_turns; ++t) {
      std::vector<std::vector<std::string>> machine, user;
      for (std::size_t k = uniform(cfg.min_filler, cfg.max_filler); k > 0; --k) machine.push_back({pick(lex.fillers)});
      for (std::size_t k = uniform(cfg.min_filler, cfg.max_filler); k > 0; --k) user.push_back({pick(lex.fillers)});
      for (const Plan& p : plans) {
        if (p.turn != t) continue;
        user.insert(user.begin() + static_cast<std::ptrdiff_t>(uniform(0, user.size())), p.phrase);
      }
      std::vector<const Plan*> earlier;
      for (const Plan& p : plans)
        if (p.turn < t && p.value[0] != kDontcareToken) earlier.push_back(&p);
      if (coin(cfg.distractor_rate)) {
        if (!earlier.empty() && coin(cfg.echo_rate)) {
          const Plan& p = *earlier[uniform(0, earlier.size() - 1)];
          machine.insert(machine.begin() + static_cast<std::ptrdiff_t>(uniform(0, machine.size())), p.value);
        } else {
          const bool number = !number_pool.empty() && (named_pool.empty() || coin(0.5));
          if (number || !named_pool.empty()) {
            const std::string tok = pick(number ? number_pool : named_pool);
            auto& side = coin(0.5) ? machine : user;
            side.insert(side.begin() + static_cast<std::ptrdiff_t>(uniform(0, side.size())), {tok});
          }
        }
      }
      Turn turn;
      turn.index = t;
      for (auto& seg : machine) turn.machine_tokens.insert(turn.machine_tokens.end(), seg.begin(), seg.end());
      for (auto& seg : user) turn.user_tokens.insert(turn.user_tokens.end(), seg.begin(), seg.end());
      d.turns.push_back(std::move(turn));

      DialogueState st;
      for (const Plan& p : plans) {
        if (p.turn <= t) st[corpus.slots[p.slot]] = detokenize(p.value);
      }
      d.states.push_back(std::move(st));
    }
    // Taken from the generation plan, not re-derived from the states.
    for (const auto& name : corpus.slots) d.info_turns[name] = 0;
    for (const Plan& p : plans) d.info_turns[corpus.slots[p.slot]] = p.turn;
    corpus.dialogues.push_back(pad_sentry(std::move(d)));
  }
  return corpus;
}

}  // namespace hdcn
