#pragma once

#include <optional>
#include <span>
#include <string>
#include <vector>

#include "hdcn/autodiff.hpp"
#include "hdcn/copier.hpp"
#include "hdcn/corpus.hpp"
#include "hdcn/model.hpp"

namespace hdcn {

// -(1/K) sum_k log P_k(gold_k). gold must be non-empty and match dists in
// length.
ad::Var ce_loss(std::span<const ad::Var> step_dists, std::span<const int> gold);

// -log softmax(sum_k beta^k)[info_turn].
ad::Var focus_loss(std::span<const ad::Var> betas, std::size_t info_turn);

// -log p_gate[target]
ad::Var gate_loss(ad::Var gate_dist, Gate target);

struct LossWeights {
  double focus_ratio = 0.1;
  double gate_weight = 1.0;
};

struct SlotLoss {
  std::string slot;
  ad::Var ce;
  std::optional<ad::Var> focus;  // absent in flat mode
  ad::Var gate;
};

// sum_m (ce_m + focus_ratio * focus_m) + gate_weight * mean_m gate_m
ad::Var total_loss(std::span<const SlotLoss> slots, const LossWeights& w);

// Gold value tokens of a normalized value string, as extended ids ending in
// EOS. Tokens neither in the vocabulary nor in the dialogue become UNK and
// are counted in `uncopiable`.
std::vector<int> gold_sequence(const Model& model, const CopyContext& ctx, const std::string& value,
                               std::size_t* uncopiable = nullptr);

struct ExampleLoss {
  std::vector<SlotLoss> slots;
  ad::Var total;
  std::size_t uncopiable = 0;
};

struct ExampleOptions {
  LossWeights weights;
  bool train = false;
  double teacher_forcing = 1.0;
};

// Teacher-forced loss for the prefix ending at real turn `turn` (1-based)
// of a sentry-padded dialogue, over every slot in the model's inventory.
// `ctx` must cover turns 0..turn.
ExampleLoss example_loss(ad::Graph& g, Model& model, const CopyContext& ctx, const Dialogue& dialogue,
                         std::size_t turn, const ExampleOptions& opts);

}  // namespace hdcn
