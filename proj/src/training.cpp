#include "hdcn/training.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <numeric>
#include <random>
#include <stdexcept>

#include "hdcn/copier.hpp"
#include "hdcn/encoder.hpp"
#include "hdcn/evaluation.hpp"
#include "hdcn/vocab.hpp"

namespace hdcn {

void TrainConfig::validate() const {
  model.validate();
  if (!(focus_ratio >= 0.0)) throw std::invalid_argument("focus_ratio must be >= 0");
  if (batch_size < 1) throw std::invalid_argument("batch_size must be >= 1");
  if (epochs < 1) throw std::invalid_argument("epochs must be >= 1");
  if (!(gate_weight >= 0.0)) throw std::invalid_argument("gate_weight must be >= 0");
  if (!(teacher_forcing >= 0.0 && teacher_forcing <= 1.0)) {
    throw std::invalid_argument("teacher_forcing must lie in [0, 1]");
  }
  if (!(clip_norm > 0.0)) throw std::invalid_argument("clip_norm must be > 0");
  if (!(adam.lr > 0.0)) throw std::invalid_argument("lr must be > 0");
}

namespace {

std::string nonfinite_report(const ExampleLoss& ex, std::size_t batch_id, const Dialogue& d, std::size_t turn) {
  std::string where = "non-finite loss in batch " + std::to_string(batch_id) + ", dialogue " + d.id + ", turn " +
                      std::to_string(turn);
  for (const SlotLoss& s : ex.slots) {
    const bool bad = !std::isfinite(s.ce.scalar()) || !std::isfinite(s.gate.scalar()) ||
                     (s.focus && !std::isfinite(s.focus->scalar()));
    if (bad) return where + ", slot " + s.slot;
  }
  return where;
}

ExampleOptions example_options(const TrainConfig& cfg, bool train) {
  ExampleOptions o;
  o.weights = cfg.weights();
  o.train = train;
  o.teacher_forcing = cfg.teacher_forcing;
  return o;
}

}  // namespace

BatchStats train_batch(Model& model, std::span<const Dialogue* const> batch, const TrainConfig& cfg,
                       std::uint64_t dropout_seed, std::size_t batch_id) {
  BatchStats stats;
  for (const Dialogue* d : batch) stats.examples += d->num_real_turns();
  if (stats.examples == 0) throw std::invalid_argument("train_batch: no examples");
  const double weight = 1.0 / static_cast<double>(stats.examples);
  const ExampleOptions opts = example_options(cfg, true);
  std::mt19937_64 seeds(dropout_seed);

  model.params().zero_grad();
  for (const Dialogue* d : batch) {
    ad::Graph g(true, seeds());
    const auto tokens = turn_tokens(*d);
    const auto ids = turn_token_ids(model.vocab(), tokens);
    EncodedDialogue enc = encode_dialogue(g, model, ids, model.config().encoder_init, true);
    std::vector<ad::Var> totals;
    for (std::size_t t = 1; t <= d->num_real_turns(); ++t) {
      CopyContext ctx = make_copy_context(model, enc, t + 1, tokens);
      ExampleLoss ex = example_loss(g, model, ctx, *d, t, opts);
      const double v = ex.total.scalar();
      if (!std::isfinite(v)) throw std::runtime_error(nonfinite_report(ex, batch_id, *d, t));
      stats.loss_sum += v;
      stats.uncopiable += ex.uncopiable;
      totals.push_back(ex.total);
    }
    g.backward(ad::sum(ad::concat(totals)), weight);
  }
  stats.grad_norm = model.params().clip_grad_norm(cfg.clip_norm);
  if (!std::isfinite(stats.grad_norm)) {
    throw std::runtime_error("non-finite gradient norm in batch " + std::to_string(batch_id));
  }
  ad::adam_step(model.params(), cfg.adam);
  return stats;
}

double dialogue_loss(Model& model, const Dialogue& d, const TrainConfig& cfg) {
  ad::Graph g(false);
  const auto tokens = turn_tokens(d);
  const auto ids = turn_token_ids(model.vocab(), tokens);
  EncodedDialogue enc = encode_dialogue(g, model, ids, model.config().encoder_init, false);
  const ExampleOptions opts = example_options(cfg, false);
  double total = 0.0;
  for (std::size_t t = 1; t <= d.num_real_turns(); ++t) {
    CopyContext ctx = make_copy_context(model, enc, t + 1, tokens);
    total += example_loss(g, model, ctx, d, t, opts).total.scalar();
  }
  return total / static_cast<double>(d.num_real_turns());
}

double corpus_loss(Model& model, const Corpus& corpus, const TrainConfig& cfg) {
  double total = 0.0;
  std::size_t n = 0;
  for (const Dialogue& raw : corpus.dialogues) {
    const Dialogue d = raw.padded() ? raw : pad_sentry(raw);
    total += dialogue_loss(model, d, cfg) * static_cast<double>(d.num_real_turns());
    n += d.num_real_turns();
  }
  return n ? total / static_cast<double>(n) : 0.0;
}

TrainResult train(const TrainConfig& cfg, const Corpus& train_set, const Corpus& dev_set, const TrainHooks& hooks) {
  cfg.validate();
  if (train_set.dialogues.empty()) throw std::invalid_argument("train: empty training corpus");
  if (dev_set.dialogues.empty()) throw std::invalid_argument("train: empty dev corpus");

  std::vector<Dialogue> dialogues;
  dialogues.reserve(train_set.dialogues.size());
  for (const Dialogue& d : train_set.dialogues) dialogues.push_back(d.padded() ? d : pad_sentry(d));

  Model model(cfg.model, build_vocab(train_set, cfg.min_count), train_set.slots, cfg.seed);
  if (hooks.on_init) hooks.on_init(model);

  TrainResult result{model, {}, 0, model.coverage_weight().value[0], 0};
  std::mt19937_64 rng(cfg.seed ^ 0x9e3779b97f4a7c15ULL);
  std::vector<std::size_t> order(dialogues.size());
  std::iota(order.begin(), order.end(), 0);

  double best_joint = -1.0, best_loss = 0.0;
  std::size_t stale = 0;
  std::size_t batch_id = 0;
  PredictOptions dev_opts;
  dev_opts.share_encoding = true;

  // Epoch 0 records the untrained model; it competes for best like any other.
  // Returns false once patience runs out.
  const auto evaluate = [&](std::size_t epoch, double train_loss) {
    const Predictions dev = predict_corpus(model, dev_set, dev_opts);
    EpochMetrics m;
    m.epoch = epoch;
    m.train_loss = train_loss;
    m.dev_joint_acc = joint_accuracy(dev.records);
    m.dev_focus_acc = focus_accuracy(dev.focus);
    m.w_c = model.coverage_weight().value[0];
    m.dev_loss = corpus_loss(model, dev_set, cfg);
    result.log.push_back(m);
    if (hooks.on_epoch) hooks.on_epoch(m);
    if (m.dev_joint_acc > best_joint || (m.dev_joint_acc == best_joint && m.dev_loss < best_loss)) {
      best_joint = m.dev_joint_acc;
      best_loss = m.dev_loss;
      result.model = model;
      result.best_epoch = epoch;
      stale = 0;
      return true;
    }
    return ++stale < cfg.patience;
  };
  evaluate(0, corpus_loss(model, train_set, cfg));

  for (std::size_t epoch = 1; epoch <= cfg.epochs; ++epoch) {
    std::shuffle(order.begin(), order.end(), rng);
    double loss_sum = 0.0;
    std::size_t examples = 0;
    std::vector<const Dialogue*> batch;
    std::size_t pending = 0;
    for (std::size_t i = 0; i < order.size(); ++i) {
      const Dialogue& d = dialogues[order[i]];
      batch.push_back(&d);
      pending += d.num_real_turns();
      if (pending < cfg.batch_size && i + 1 < order.size()) continue;
      BatchStats s = train_batch(model, batch, cfg, rng(), batch_id++);
      loss_sum += s.loss_sum;
      examples += s.examples;
      result.uncopiable += s.uncopiable;
      batch.clear();
      pending = 0;
    }
    if (!evaluate(epoch, loss_sum / static_cast<double>(examples))) break;
  }
  return result;
}

std::string metrics_csv(std::span<const EpochMetrics> log) {
  std::string out = "epoch,train_loss,dev_joint_acc,dev_focus_acc,w_c,dev_loss\n";
  char buf[160];
  for (const auto& m : log) {
    std::snprintf(buf, sizeof buf, "%zu,%.8f,%.6f,%.6f,%.8f,%.8f\n", m.epoch, m.train_loss, m.dev_joint_acc,
                  m.dev_focus_acc, m.w_c, m.dev_loss);
    out += buf;
  }
  return out;
}

void save_metrics_csv(const std::string& path, std::span<const EpochMetrics> log) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write " + path);
  out << metrics_csv(log);
}

}  // namespace hdcn
