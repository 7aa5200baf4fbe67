#pragma once

#include <functional>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "hdcn/copier.hpp"
#include "hdcn/corpus.hpp"
#include "hdcn/model.hpp"

namespace hdcn {

// One evaluated turn. Both states cover the full slot inventory, with
// "none" for unset slots.
struct PredictionRecord {
  std::string dialogue_id;
  std::size_t turn = 0;
  DialogueState predicted;
  DialogueState gold;
};

// Summed turn attention for one (prefix, slot) pair.
struct FocusRecord {
  std::string dialogue_id;
  std::size_t turn = 0;
  std::string slot;
  std::vector<double> summed_beta;
  std::size_t info_turn = 0;

  // The slot was assigned somewhere in the prefix.
  bool mentioned() const { return info_turn != 0; }
};

// Fraction of records whose predicted state equals gold on every slot.
// Throws on an empty set.
double joint_accuracy(std::span<const PredictionRecord> records);
std::map<std::string, double> per_slot_accuracy(std::span<const PredictionRecord> records);

// The information turn must hold the strictly highest summed weight; ties
// count as misses.
bool focus_correct(std::span<const double> summed_beta, std::size_t info_turn);
// Throws on an empty selection.
double focus_accuracy(std::span<const FocusRecord> records, bool mentioned_only = false);

struct PredictOptions {
  // Reuse one encoding for every prefix of a dialogue. Encoding is causal
  // across turns, so the result equals fresh per-prefix encoding.
  bool share_encoding = false;
  // Restrict to one real turn per dialogue (1-based); 0 means all turns.
  std::size_t only_turn = 0;
  std::function<void(const Dialogue&, std::size_t turn, const std::string& slot, const SlotDecode&)> on_decode;
};

struct Predictions {
  std::vector<PredictionRecord> records;
  std::vector<FocusRecord> focus;
};

// Decodes every slot at every real turn of every dialogue, each prefix on its
// own. Throws if the corpus slot inventory differs from the model's.
Predictions predict_corpus(Model& model, const Corpus& corpus, const PredictOptions& opts = {});

struct EvalReport {
  double joint_acc = 0.0;
  std::optional<double> focus_acc;
  std::optional<double> focus_acc_mentioned;
  std::size_t n_turns = 0;
  std::size_t n_slots = 0;
  std::map<std::string, double> per_slot_acc;
};

EvalReport make_report(const Predictions& p);
EvalReport make_report(std::span<const PredictionRecord> records);
// Field-wise mean of several runs (seeds).
EvalReport mean_report(std::span<const EvalReport> runs);
std::string report_to_json(const EvalReport& r, std::span<const EvalReport> runs = {});

std::string record_to_json_line(const PredictionRecord& r);
void save_predictions(const std::string& path, std::span<const PredictionRecord> records);
std::vector<PredictionRecord> load_predictions(const std::string& path);

}  // namespace hdcn
