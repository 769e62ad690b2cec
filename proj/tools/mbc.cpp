// Command-line front end: train, evaluate, gen-data, ablate, sweep,
// export-latents, inspect-checkpoint.

#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "mbc/ablation.hpp"
#include "mbc/checkpoint.hpp"
#include "mbc/config.hpp"
#include "mbc/errors.hpp"
#include "mbc/eval.hpp"
#include "mbc/synthetic.hpp"
#include "mbc/trainer.hpp"

namespace fs = std::filesystem;
using namespace mbc;

namespace {

int g_log_level = 2;  // error=0 warn=1 info=2 debug=3

void init_log_level() {
  const char* env = std::getenv("MBC_LOG_LEVEL");
  if (!env) return;
  const std::string s = env;
  if (s == "error") g_log_level = 0;
  else if (s == "warn") g_log_level = 1;
  else if (s == "info") g_log_level = 2;
  else if (s == "debug") g_log_level = 3;
}

void log_info(const std::string& msg) {
  if (g_log_level >= 2) std::cerr << "info: " << msg << "\n";
}

struct CommonOpts {
  std::string config_path;
  std::vector<std::string> sets;
  std::optional<std::uint64_t> seed;
  std::string out_dir = "run";
  std::size_t jobs = 1;
  std::string variant;
  std::string profile;
};

void add_common(CLI::App* cmd, CommonOpts& o, bool need_config = true) {
  auto* c = cmd->add_option("--config", o.config_path, "run config file");
  if (need_config) c->required();
  cmd->add_option("--set", o.sets,
                  "dotted-path override, e.g. coop.alpha=0.2 (repeatable)");
  cmd->add_option("--seed", o.seed, "override train.seed");
  cmd->add_option("--out", o.out_dir, "output directory");
  cmd->add_option("--jobs", o.jobs, "parallel worker count");
  cmd->add_option("--variant", o.variant, "cooperation variant name");
  cmd->add_option("--profile", o.profile, "model profile (desk|paper)");
}

RunConfig load_cfg(const CommonOpts& o) {
  std::vector<std::string> overrides = o.sets;
  if (o.seed) overrides.push_back("train.seed=" + std::to_string(*o.seed));
  if (!o.variant.empty()) overrides.push_back("coop.variant=" + o.variant);
  if (!o.profile.empty()) overrides.push_back("model.profile=" + o.profile);
  return load_run_config(o.config_path, overrides);
}

struct Splits {
  Dataset train;
  Dataset val;
  Dataset test;
  bool has_test = false;
};

// Either loads the configured CSV paths or materializes the generator into
// <out>/data (reusing files already generated there).
Splits resolve_data(const RunConfig& cfg, const fs::path& out_dir) {
  std::string train_path = cfg.data.train_path;
  std::string val_path = cfg.data.val_path;
  std::string test_path = cfg.data.test_path;
  if (train_path.empty()) {
    const fs::path data_dir = out_dir / "data";
    fs::create_directories(data_dir);
    GenResult gr = generate_synthetic(cfg.schema, *cfg.data.generator, data_dir);
    log_info("generated synthetic data, Bayes test AUC " +
             std::to_string(gr.bayes_test_auc));
    train_path = gr.train_path.string();
    val_path = gr.val_path.string();
    test_path = gr.test_path.string();
  }
  Splits s;
  log_info("loading " + train_path);
  s.train = load_csv(train_path, cfg.schema);
  s.val = load_csv(val_path, cfg.schema);
  if (!test_path.empty()) {
    s.test = load_csv(test_path, cfg.schema);
    s.has_test = true;
  }
  return s;
}

void write_config_snapshot(const RunConfig& cfg, const fs::path& out_dir) {
  std::ofstream out(out_dir / "config.json");
  out << cfg.to_json().dump(2) << "\n";
}

int cmd_train(const CommonOpts& o) {
  RunConfig cfg = load_cfg(o);
  const fs::path out_dir = o.out_dir;
  fs::create_directories(out_dir);
  write_config_snapshot(cfg, out_dir);
  Splits data = resolve_data(cfg, out_dir);

  MbcModel model(cfg.schema, cfg.groups, cfg.model);
  model.init_params(cfg.train.seed);
  Trainer trainer(model, cfg.train, cfg.coop, data.train, data.val);
  std::ofstream metrics_file(out_dir / "metrics.jsonl");
  MetricsWriter metrics(metrics_file);
  trainer.metrics = &metrics;
  trainer.on_epoch = [](const EpochRecord& er) {
    log_info("epoch " + std::to_string(er.epoch) + " val AUC " +
             std::to_string(er.val_auc) +
             (er.improved ? " (improved)" : ""));
  };

  TrainResult result = trainer.train();
  save_checkpoint(out_dir / "best.ckpt", result.best);
  save_checkpoint(out_dir / "last.ckpt", trainer.snapshot());
  std::printf("best_val_auc %.6f epochs %zu steps %zu%s\n",
              result.best_val_auc, result.epochs_run, result.steps_run,
              result.early_stopped ? " (early stop)" : "");

  if (data.has_test) {
    model.params() = result.best.params;
    EvalReport report = evaluate(model, data.test);
    std::printf("test split:\n%s", report.to_table().c_str());
  }
  return 0;
}

int cmd_evaluate(const CommonOpts& o, const std::string& ckpt_path,
                 const std::string& data_path) {
  RunConfig cfg = load_cfg(o);
  Checkpoint ck =
      load_checkpoint(ckpt_path, schema_hash(cfg.schema, cfg.groups));
  MbcModel model(cfg.schema, cfg.groups, cfg.model);
  model.init_params(cfg.train.seed);
  model.params() = ck.params;

  std::string path = data_path;
  if (path.empty()) path = cfg.data.test_path;
  if (path.empty()) throw ConfigError("no dataset given: pass --data or set data.test");
  Dataset data = load_csv(path, cfg.schema);
  EvalReport report = evaluate(model, data);
  std::printf("%s", report.to_table().c_str());
  return 0;
}

int cmd_gen_data(const CommonOpts& o) {
  RunConfig cfg = load_cfg(o);
  if (!cfg.data.generator) {
    throw ConfigError("config has no data.generator section");
  }
  fs::create_directories(o.out_dir);
  GenResult gr = generate_synthetic(cfg.schema, *cfg.data.generator, o.out_dir);
  std::printf("train %s\nval %s\ntest %s\nground_truth %s\nbayes_test_auc %.6f\n",
              gr.train_path.c_str(), gr.val_path.c_str(), gr.test_path.c_str(),
              gr.ground_truth_path.c_str(), gr.bayes_test_auc);
  return 0;
}

int cmd_ablate(const CommonOpts& o, std::vector<std::string> cells,
               std::vector<std::uint64_t> seeds) {
  RunConfig cfg = load_cfg(o);
  const fs::path out_dir = o.out_dir;
  fs::create_directories(out_dir);
  Splits data = resolve_data(cfg, out_dir);
  if (!data.has_test) throw ConfigError("ablation needs a test split");
  if (cells.empty()) {
    cells = {"full",   "wo_efgc", "wo_crossnet", "wo_deepnet",
             "wo_bct", "wo_mdr",  "wo_both"};
  }
  if (seeds.empty()) {
    seeds = {cfg.train.seed, cfg.train.seed + 1, cfg.train.seed + 2};
  }
  AblationGrid grid = run_ablation(cfg, cells, seeds, data.train, data.val,
                                   data.test, o.jobs);
  std::printf("%s", grid.to_table().c_str());
  std::ofstream out(out_dir / "ablation.jsonl");
  for (const auto& c : grid.cells) {
    nlohmann::ordered_json rec;
    rec["cell"] = c.id;
    rec["auc"] = c.mean_auc;
    rec["logloss"] = c.mean_logloss;
    rec["seed_aucs"] = c.seed_aucs;
    out << rec.dump() << "\n";
  }
  return 0;
}

int cmd_sweep(const CommonOpts& o, const std::string& param,
              std::vector<double> values) {
  RunConfig cfg = load_cfg(o);
  const fs::path out_dir = o.out_dir;
  fs::create_directories(out_dir);
  Splits data = resolve_data(cfg, out_dir);
  if (!data.has_test) throw ConfigError("sweep needs a test split");
  SweepResult result =
      sweep(cfg, param, values, data.train, data.val, data.test, o.jobs);
  std::printf("%s", result.to_table().c_str());
  return 0;
}

int cmd_export_latents(const CommonOpts& o, const std::string& ckpt_path,
                       const std::string& data_path,
                       const std::string& out_path) {
  RunConfig cfg = load_cfg(o);
  Checkpoint ck =
      load_checkpoint(ckpt_path, schema_hash(cfg.schema, cfg.groups));
  MbcModel model(cfg.schema, cfg.groups, cfg.model);
  model.init_params(cfg.train.seed);
  model.params() = ck.params;
  Dataset data = load_csv(data_path, cfg.schema);
  export_branch_latents(model, data, out_path);
  std::printf("wrote %s (%zu samples)\n", out_path.c_str(), data.size);
  return 0;
}

int cmd_inspect(const std::string& ckpt_path) {
  Checkpoint ck = load_checkpoint(ckpt_path);
  std::printf("version %u\nschema_hash %016llx\nstep %llu\nepoch %u\n"
              "batch_in_epoch %u\nbest_val_auc %.6f\n",
              ck.version, static_cast<unsigned long long>(ck.schema_hash),
              static_cast<unsigned long long>(ck.step), ck.epoch,
              ck.batch_in_epoch, ck.best_val_auc);
  std::size_t total = 0;
  for (const auto& [name, t] : ck.params) {
    std::printf("%-24s %zux%zu\n", name.c_str(), t.rows, t.cols);
    total += t.size();
  }
  std::printf("parameters %zu\n", total);
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  init_log_level();
  CLI::App app{"multi-branch CTR model toolkit"};
  app.require_subcommand(1);

  CommonOpts train_o, eval_o, gen_o, ablate_o, sweep_o, latents_o;
  std::string ckpt_path, data_path, latents_out = "latents.csv";
  std::string eval_ckpt, eval_data;
  std::vector<std::string> cells;
  std::vector<std::uint64_t> seeds;
  std::string sweep_param = "alpha";
  std::vector<double> sweep_values;
  std::string inspect_path;

  auto* t = app.add_subcommand("train", "train a model");
  add_common(t, train_o);

  auto* e = app.add_subcommand("evaluate", "score a dataset with a checkpoint");
  add_common(e, eval_o);
  e->add_option("--checkpoint", eval_ckpt, "checkpoint file")->required();
  e->add_option("--data", eval_data, "dataset CSV (default: data.test)");

  auto* g = app.add_subcommand("gen-data", "write synthetic dataset files");
  add_common(g, gen_o);

  auto* a = app.add_subcommand("ablate", "train and compare ablation cells");
  add_common(a, ablate_o);
  a->add_option("--cell", cells, "cell id (repeatable; default full grid)");
  a->add_option("--seeds", seeds, "seed list (default: seed, seed+1, seed+2)");

  auto* s = app.add_subcommand("sweep", "sweep alpha or beta");
  add_common(s, sweep_o);
  s->add_option("--param", sweep_param, "alpha|beta");
  s->add_option("--values", sweep_values, "values to sweep")->required();

  auto* x = app.add_subcommand("export-latents", "dump per-branch latents");
  add_common(x, latents_o);
  x->add_option("--checkpoint", ckpt_path, "checkpoint file")->required();
  x->add_option("--data", data_path, "dataset CSV")->required();
  x->add_option("--out-file", latents_out, "output CSV path");

  auto* i = app.add_subcommand("inspect-checkpoint", "print checkpoint summary");
  i->add_option("--checkpoint", inspect_path, "checkpoint file")->required();

  CLI11_PARSE(app, argc, argv);

  try {
    if (t->parsed()) return cmd_train(train_o);
    if (e->parsed()) return cmd_evaluate(eval_o, eval_ckpt, eval_data);
    if (g->parsed()) return cmd_gen_data(gen_o);
    if (a->parsed()) return cmd_ablate(ablate_o, cells, seeds);
    if (s->parsed()) return cmd_sweep(sweep_o, sweep_param, sweep_values);
    if (x->parsed())
      return cmd_export_latents(latents_o, ckpt_path, data_path, latents_out);
    if (i->parsed()) return cmd_inspect(inspect_path);
  } catch (const ConfigError& ex) {
    std::cerr << "error: config: " << ex.what() << "\n";
    return 2;
  } catch (const CheckpointError& ex) {
    std::cerr << "error: checkpoint: " << ex.what() << "\n";
    return ex.kind() == CheckpointError::Kind::kSchemaMismatch ? 2 : 1;
  } catch (const std::exception& ex) {
    std::cerr << "error: " << ex.what() << "\n";
    return 1;
  }
  return 0;
}
