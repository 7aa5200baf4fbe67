#pragma once

#include <cstdint>
#include <functional>
#include <span>
#include <string>
#include <vector>

#include "hdcn/corpus.hpp"
#include "hdcn/losses.hpp"
#include "hdcn/model.hpp"
#include "hdcn/params.hpp"

namespace hdcn {

struct TrainConfig {
  ModelConfig model;
  double focus_ratio = 0.1;
  // Minimum number of (dialogue prefix) examples per update.
  std::size_t batch_size = 16;
  ad::AdamConfig adam;
  std::size_t epochs = 50;
  std::size_t patience = 6;
  std::uint64_t seed = 1;
  double gate_weight = 1.0;
  double teacher_forcing = 1.0;
  double clip_norm = 10.0;
  int min_count = 1;

  void validate() const;
  LossWeights weights() const { return {focus_ratio, gate_weight}; }
};

// Epoch 0 is the untrained model; its train_loss is the teacher-forced loss
// without dropout. Later epochs average the training-mode batch losses.
struct EpochMetrics {
  std::size_t epoch = 0;
  double train_loss = 0.0;
  double dev_joint_acc = 0.0;
  double dev_focus_acc = 0.0;
  double w_c = 0.0;
  // Teacher-forced, per example; breaks dev joint accuracy ties.
  double dev_loss = 0.0;
};

struct TrainResult {
  // Parameters from the best dev epoch.
  Model model;
  std::vector<EpochMetrics> log;
  std::size_t best_epoch = 0;
  double initial_w_c = 0.0;
  // Gold tokens trained against UNK because they could not be copied.
  std::size_t uncopiable = 0;
};

struct TrainHooks {
  // Runs once after the model is built, before the first update.
  std::function<void(Model&)> on_init;
  std::function<void(const EpochMetrics&)> on_epoch;
};

struct BatchStats {
  double loss_sum = 0.0;
  std::size_t examples = 0;
  std::size_t uncopiable = 0;
  double grad_norm = 0.0;
};

// Every prefix of every dialogue in the batch is one example. Each dialogue
// is encoded once and all its prefixes decode from that encoding. Gradients
// are averaged over examples, clipped, and applied with one Adam step.
// Throws std::runtime_error on a non-finite loss, naming the batch, dialogue,
// turn and slot.
BatchStats train_batch(Model& model, std::span<const Dialogue* const> batch, const TrainConfig& cfg,
                       std::uint64_t dropout_seed, std::size_t batch_id);

// Mean teacher-forced loss over every prefix of `dialogue`, dropout off.
double dialogue_loss(Model& model, const Dialogue& dialogue, const TrainConfig& cfg);
// The same, averaged over every prefix of the corpus.
double corpus_loss(Model& model, const Corpus& corpus, const TrainConfig& cfg);

// Builds the vocabulary from `train_set`, trains with early stopping on
// dev joint accuracy (lower dev loss breaks ties), and returns the best
// model. The log starts at epoch 0.
TrainResult train(const TrainConfig& cfg, const Corpus& train_set, const Corpus& dev_set,
                  const TrainHooks& hooks = {});

std::string metrics_csv(std::span<const EpochMetrics> log);
void save_metrics_csv(const std::string& path, std::span<const EpochMetrics> log);

}  // namespace hdcn
