// hdcn: generate synthetic corpora, train, evaluate, dump attention, and
// check gradients.

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "hdcn/attention_dump.hpp"
#include "hdcn/checkpoint.hpp"
#include "hdcn/corpus.hpp"
#include "hdcn/evaluation.hpp"
#include "hdcn/kvconfig.hpp"
#include "hdcn/synthetic.hpp"
#include "hdcn/training.hpp"
#include "hdcn/validation.hpp"

namespace fs = std::filesystem;
using namespace hdcn;

namespace {

struct Common {
  std::string config;
  std::optional<std::uint64_t> seed;
  std::string out;
};

void add_common(CLI::App* app, Common& c, const std::string& out_help) {
  app->add_option("--config", c.config, "key = value settings file")->check(CLI::ExistingFile);
  app->add_option("--seed", c.seed, "random seed (overrides the config)");
  app->add_option("--out", c.out, out_help);
}

Settings load_settings(const Common& c) {
  Settings s;
  if (!c.config.empty()) apply_config(KvConfig::load(c.config), s);
  if (c.seed) s.train.seed = *c.seed;
  return s;
}

std::vector<std::string> slots_for(const std::string& slots_path, const std::string& corpus_path) {
  if (!slots_path.empty()) return load_slot_inventory(slots_path);
  const fs::path guess = fs::path(corpus_path).parent_path() / "slots.json";
  if (!fs::exists(guess)) throw std::runtime_error("no --slots given and " + guess.string() + " does not exist");
  return load_slot_inventory(guess.string());
}

void write_text(const std::string& path, const std::string& text) {
  if (path.empty() || path == "-") {
    std::cout << text;
    return;
  }
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write " + path);
  out << text;
}

int run_gen(const Common& c) {
  if (c.out.empty()) throw CLI::RequiredError("--out");
  const Settings s = load_settings(c);
  const std::uint64_t seed = s.train.seed;
  fs::create_directories(c.out);
  const fs::path dir(c.out);
  SyntheticConfig cfg = s.synthetic;
  const Corpus train = generate_synthetic(cfg, seed);
  cfg.n_dialogues = s.n_dev;
  const Corpus dev = generate_synthetic(cfg, seed + 1000003);
  cfg.n_dialogues = s.n_test;
  const Corpus test = generate_synthetic(cfg, seed + 2000003);
  save_corpus((dir / "train.json").string(), train);
  save_corpus((dir / "dev.json").string(), dev);
  save_corpus((dir / "test.json").string(), test);
  save_slot_inventory((dir / "slots.json").string(), train.slots);
  std::fprintf(stderr, "wrote %zu/%zu/%zu dialogues, %zu slots to %s\n", train.dialogues.size(),
               dev.dialogues.size(), test.dialogues.size(), train.slots.size(), c.out.c_str());
  return 0;
}

struct TrainArgs {
  std::string train, dev, slots, embeddings, mode, encoder_init;
  std::optional<double> focus_ratio;
  std::optional<std::size_t> epochs, dim;
};

int run_train(const Common& c, const TrainArgs& a) {
  Settings s = load_settings(c);
  if (!a.mode.empty()) s.train.model.mode = parse_copy_mode(a.mode);
  if (!a.encoder_init.empty()) s.train.model.encoder_init = parse_encoder_init(a.encoder_init);
  if (a.focus_ratio) s.train.focus_ratio = *a.focus_ratio;
  if (a.epochs) s.train.epochs = *a.epochs;
  if (a.dim) s.train.model.embed_dim = s.train.model.hidden_dim = *a.dim;
  const std::string out = c.out.empty() ? "." : c.out;
  fs::create_directories(out);

  const auto slots = slots_for(a.slots, a.train);
  const Corpus train_set = load_corpus(a.train, slots);
  const Corpus dev_set = load_corpus(a.dev, slots);
  TrainHooks hooks;
  if (!a.embeddings.empty()) {
    hooks.on_init = [&](Model& m) {
      const std::size_t n = load_embeddings(m, a.embeddings);
      std::fprintf(stderr, "loaded %zu embedding rows\n", n);
    };
  }
  hooks.on_epoch = [](const EpochMetrics& m) {
    std::fprintf(stderr, "epoch %3zu  loss %.4f  dev loss %.4f  dev joint %.4f  dev focus %.4f  w_c %.4f\n",
                 m.epoch, m.train_loss, m.dev_loss, m.dev_joint_acc, m.dev_focus_acc, m.w_c);
  };
  TrainResult r = train(s.train, train_set, dev_set, hooks);
  const fs::path dir(out);
  save_checkpoint((dir / "model.ckpt").string(), r.model);
  save_metrics_csv((dir / "metrics.csv").string(), r.log);
  if (r.uncopiable) std::fprintf(stderr, "warning: %zu gold tokens were not copiable\n", r.uncopiable);
  std::fprintf(stderr, "best epoch %zu, checkpoint %s\n", r.best_epoch, (dir / "model.ckpt").c_str());
  return 0;
}

struct EvalArgs {
  std::vector<std::string> checkpoints;
  std::string corpus, slots, predictions, predictions_out;
};

int run_eval(const Common& c, const EvalArgs& a) {
  if (!a.predictions.empty()) {
    if (!a.checkpoints.empty()) throw CLI::ValidationError("--predictions", "cannot be combined with --checkpoint");
    const auto records = load_predictions(a.predictions);
    const EvalReport r = make_report(std::span(records));
    write_text(c.out, report_to_json(r));
    return 0;
  }
  if (a.checkpoints.empty()) throw CLI::RequiredError("--checkpoint or --predictions");
  if (a.corpus.empty()) throw CLI::RequiredError("--corpus");
  const Corpus corpus = load_corpus(a.corpus, slots_for(a.slots, a.corpus));
  std::vector<EvalReport> runs;
  for (std::size_t i = 0; i < a.checkpoints.size(); ++i) {
    Model model = load_checkpoint(a.checkpoints[i]);
    const Predictions p = predict_corpus(model, corpus);
    runs.push_back(make_report(p));
    if (!a.predictions_out.empty()) {
      std::string path = a.predictions_out;
      if (a.checkpoints.size() > 1) path += "." + std::to_string(i);
      save_predictions(path, p.records);
    }
  }
  write_text(c.out, report_to_json(mean_report(runs), runs));
  return 0;
}

int run_dump(const Common& c, const std::string& checkpoint, const std::string& corpus_path,
             const std::string& slots_path, std::size_t turn) {
  Model model = load_checkpoint(checkpoint);
  const Corpus corpus = load_corpus(corpus_path, slots_for(slots_path, corpus_path));
  std::size_t lines = 0;
  if (c.out.empty() || c.out == "-") {
    lines = dump_attention(model, corpus, std::cout, turn);
  } else {
    std::ofstream out(c.out);
    if (!out) throw std::runtime_error("cannot write " + c.out);
    lines = dump_attention(model, corpus, out, turn);
  }
  std::fprintf(stderr, "wrote %zu trace lines\n", lines);
  return 0;
}

int run_gradcheck(const Common& c) {
  const Settings s = load_settings(c);
  constexpr double kOpTol = 1e-4, kModelTol = 1e-3;
  std::string report;
  char buf[256];
  bool ok = true;
  for (const OpCheck& oc : check_ops(s.train.seed)) {
    const bool pass = oc.result.max_rel_error < kOpTol;
    ok = ok && pass;
    std::snprintf(buf, sizeof buf, "%-5s op %-18s max_rel_error %.3e over %zu entries\n", pass ? "PASS" : "FAIL",
                  oc.op.c_str(), oc.result.max_rel_error, oc.result.entries_checked);
    report += buf;
  }
  for (CopyMode mode : {CopyMode::hierarchical_cover, CopyMode::hierarchical_plain, CopyMode::hierarchical_freeze,
                        CopyMode::flat}) {
    const ad::GradCheckResult r = check_full_loss(s.train.seed, mode, 0.1);
    const bool pass = r.max_rel_error < kModelTol;
    ok = ok && pass;
    std::snprintf(buf, sizeof buf, "%-5s model %-16s max_rel_error %.3e over %zu entries (worst %s[%zu])\n",
                  pass ? "PASS" : "FAIL", std::string(copy_mode_name(mode)).c_str(), r.max_rel_error,
                  r.entries_checked, r.worst_param.c_str(), r.worst_index);
    report += buf;
  }
  write_text(c.out, report);
  return ok ? 0 : 1;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Hierarchical dynamic copy network for dialogue state tracking"};
  app.require_subcommand(1);

  Common gen_c, train_c, eval_c, dump_c, grad_c;

  CLI::App* gen = app.add_subcommand("gen", "generate a synthetic train/dev/test corpus");
  add_common(gen, gen_c, "output directory");

  TrainArgs ta;
  CLI::App* tr = app.add_subcommand("train", "train a model");
  add_common(tr, train_c, "output directory for model.ckpt and metrics.csv");
  tr->add_option("--train", ta.train, "training corpus JSON")->required()->check(CLI::ExistingFile);
  tr->add_option("--dev", ta.dev, "dev corpus JSON")->required()->check(CLI::ExistingFile);
  tr->add_option("--slots", ta.slots, "slot inventory JSON (default: slots.json beside --train)")
      ->check(CLI::ExistingFile);
  tr->add_option("--embeddings", ta.embeddings, "text embeddings to initialize from")->check(CLI::ExistingFile);
  tr->add_option("--mode", ta.mode, "plain, freeze, cover or flat");
  tr->add_option("--encoder-init", ta.encoder_init, "zero or last");
  tr->add_option("--focus-ratio", ta.focus_ratio, "weight of the focus loss");
  tr->add_option("--epochs", ta.epochs, "epoch budget");
  tr->add_option("--dim", ta.dim, "embedding and hidden size");

  EvalArgs ea;
  CLI::App* ev = app.add_subcommand("eval", "joint and focus accuracy report (JSON)");
  add_common(ev, eval_c, "report path (default stdout)");
  ev->add_option("--checkpoint", ea.checkpoints, "checkpoint; repeat to average runs")->check(CLI::ExistingFile);
  ev->add_option("--corpus", ea.corpus, "corpus JSON")->check(CLI::ExistingFile);
  ev->add_option("--slots", ea.slots, "slot inventory JSON (default: slots.json beside --corpus)")
      ->check(CLI::ExistingFile);
  ev->add_option("--predictions", ea.predictions, "score an existing prediction dump instead")
      ->check(CLI::ExistingFile);
  ev->add_option("--predictions-out", ea.predictions_out, "write predictions as JSON lines");

  std::string dump_ckpt, dump_corpus, dump_slots;
  std::size_t dump_turn = 0;
  CLI::App* dump = app.add_subcommand("dump-attn", "write attention traces as JSON lines");
  add_common(dump, dump_c, "trace path (default stdout)");
  dump->add_option("--checkpoint", dump_ckpt, "checkpoint")->required()->check(CLI::ExistingFile);
  dump->add_option("--corpus", dump_corpus, "corpus JSON")->required()->check(CLI::ExistingFile);
  dump->add_option("--slots", dump_slots, "slot inventory JSON")->check(CLI::ExistingFile);
  dump->add_option("--turn", dump_turn, "real turn to trace (default: last turn of each dialogue)");

  CLI::App* grad = app.add_subcommand("gradcheck", "finite-difference checks of ops and the full loss");
  add_common(grad, grad_c, "report path (default stdout)");

  CLI11_PARSE(app, argc, argv);
  try {
    if (*gen) return run_gen(gen_c);
    if (*tr) return run_train(train_c, ta);
    if (*ev) return run_eval(eval_c, ea);
    if (*dump) return run_dump(dump_c, dump_ckpt, dump_corpus, dump_slots, dump_turn);
    if (*grad) return run_gradcheck(grad_c);
  } catch (const CLI::Error& e) {
    return app.exit(e);
  } catch (const std::exception& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 1;
  }
  return 0;
}
