#include "mbc/ablation.hpp"

#include <algorithm>
#include <array>
#include <atomic>
#include <cctype>
#include <cstdio>
#include <future>
#include <numeric>
#include <sstream>

#include "mbc/errors.hpp"
#include "mbc/eval.hpp"
#include "mbc/metrics.hpp"
#include "mbc/trainer.hpp"

namespace mbc {

std::string normalize_cell_id(const std::string& raw) {
  std::string s;
  for (char c : raw) {
    if (c == '/' ) continue;
    if (c == ' ' || c == '-') {
      if (!s.empty() && s.back() != '_') s.push_back('_');
    } else {
      s.push_back(static_cast<char>(std::tolower(static_cast<unsigned char>(c))));
    }
  }
  if (s == "base" || s == "mbc") s = "full";
  if (s == "wo_cross") s = "wo_crossnet";
  if (s == "wo_deep") s = "wo_deepnet";
  if (s == "wo_l_bct") s = "wo_bct";
  if (s == "wo_l_mdr") s = "wo_mdr";
  if (s == "wo_bct_wo_mdr" || s == "wo_l_bct_wo_l_mdr") s = "wo_both";
  return s;
}

RunConfig apply_cell(const RunConfig& base, const std::string& cell_id) {
  RunConfig cfg = base;
  const std::string id = normalize_cell_id(cell_id);
  if (id == "full") {
    // base config as-is
  } else if (id == "wo_efgc") {
    cfg.model.use_efgc = false;
  } else if (id == "wo_crossnet") {
    cfg.model.use_cross = false;
  } else if (id == "wo_deepnet") {
    cfg.model.use_deep = false;
  } else if (id == "wo_bct") {
    cfg.coop.alpha = 0.0;
  } else if (id == "wo_mdr") {
    cfg.coop.beta = 0.0;
  } else if (id == "wo_both") {
    cfg.coop.alpha = 0.0;
    cfg.coop.beta = 0.0;
  } else {
    // otherwise a cooperation variant name
    cfg.coop.variant = variant_from_string(id);
  }
  cfg.validate();  // rejects < 2 branches
  return cfg;
}

std::pair<double, double> train_and_test(const RunConfig& cfg,
                                         std::uint64_t seed,
                                         const Dataset& train,
                                         const Dataset& val,
                                         const Dataset& test) {
  MbcModel model(cfg.schema, cfg.groups, cfg.model);
  model.init_params(seed);
  TrainConfig tc = cfg.train;
  tc.seed = seed;
  Trainer trainer(model, tc, cfg.coop, train, val);
  TrainResult result = trainer.train();
  model.params() = result.best.params;
  std::vector<double> probs = predict_fusion_probs(model, test);
  return {auc(probs, test.labels), logloss(probs, test.labels)};
}

namespace {

std::string render_table(const std::string& col0,
                         const std::vector<std::array<std::string, 3>>& rows) {
  std::ostringstream os;
  char line[128];
  std::snprintf(line, sizeof line, "%-16s %10s %10s\n", col0.c_str(), "AUC",
                "LogLoss");
  os << line;
  for (const auto& r : rows) {
    std::snprintf(line, sizeof line, "%-16s %10s %10s\n", r[0].c_str(),
                  r[1].c_str(), r[2].c_str());
    os << line;
  }
  return os.str();
}

std::string fmt6(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.6f", v);
  return buf;
}

}  // namespace

std::string AblationGrid::to_table() const {
  std::vector<std::array<std::string, 3>> rows;
  for (const auto& c : cells) {
    rows.push_back({c.id, fmt6(c.mean_auc), fmt6(c.mean_logloss)});
  }
  return render_table("variant", rows);
}

const AblationCell& AblationGrid::by_id(const std::string& id) const {
  const std::string norm = normalize_cell_id(id);
  for (const auto& c : cells) {
    if (c.id == norm) return c;
  }
  throw ConfigError("no such ablation cell: " + id);
}

AblationGrid run_ablation(const RunConfig& base,
                          const std::vector<std::string>& cell_ids,
                          const std::vector<std::uint64_t>& seeds,
                          const Dataset& train, const Dataset& val,
                          const Dataset& test, std::size_t jobs) {
  if (cell_ids.empty()) throw ConfigError("ablation grid has no cells");
  if (seeds.empty()) throw ConfigError("ablation grid has no seeds");
  AblationGrid grid;
  grid.seeds = seeds;

  struct Task {
    std::size_t cell;
    std::size_t seed;
    RunConfig cfg;
  };
  std::vector<Task> tasks;
  for (std::size_t c = 0; c < cell_ids.size(); ++c) {
    RunConfig cfg = apply_cell(base, cell_ids[c]);
    AblationCell cell;
    cell.id = normalize_cell_id(cell_ids[c]);
    cell.seed_aucs.resize(seeds.size());
    cell.seed_loglosses.resize(seeds.size());
    grid.cells.push_back(std::move(cell));
    for (std::size_t s = 0; s < seeds.size(); ++s) {
      tasks.push_back({c, s, cfg});
    }
  }

  const std::size_t workers = std::max<std::size_t>(1, jobs);
  std::atomic<std::size_t> next{0};
  auto worker = [&]() {
    for (;;) {
      const std::size_t i = next.fetch_add(1);
      if (i >= tasks.size()) return;
      const Task& t = tasks[i];
      auto [a, ll] = train_and_test(t.cfg, seeds[t.seed], train, val, test);
      grid.cells[t.cell].seed_aucs[t.seed] = a;
      grid.cells[t.cell].seed_loglosses[t.seed] = ll;
    }
  };
  if (workers == 1) {
    worker();
  } else {
    std::vector<std::future<void>> futs;
    for (std::size_t w = 0; w < workers; ++w) {
      futs.push_back(std::async(std::launch::async, worker));
    }
    for (auto& f : futs) f.get();
  }

  for (auto& c : grid.cells) {
    c.mean_auc = std::accumulate(c.seed_aucs.begin(), c.seed_aucs.end(), 0.0) /
                 static_cast<double>(seeds.size());
    c.mean_logloss = std::accumulate(c.seed_loglosses.begin(),
                                     c.seed_loglosses.end(), 0.0) /
                     static_cast<double>(seeds.size());
  }
  return grid;
}

std::string SweepResult::to_table() const {
  std::vector<std::array<std::string, 3>> out;
  for (const auto& r : rows) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%g", r.value);
    out.push_back({buf, fmt6(r.auc), fmt6(r.logloss)});
  }
  return render_table(param, out);
}

SweepResult sweep(const RunConfig& base, const std::string& param,
                  const std::vector<double>& values, const Dataset& train,
                  const Dataset& val, const Dataset& test, std::size_t jobs) {
  if (param != "alpha" && param != "beta") {
    throw ConfigError("sweep parameter must be 'alpha' or 'beta'");
  }
  if (values.empty()) throw ConfigError("sweep needs at least one value");
  SweepResult result;
  result.param = param;
  result.rows.resize(values.size());

  const std::size_t workers = std::max<std::size_t>(1, jobs);
  std::atomic<std::size_t> next{0};
  auto worker = [&]() {
    for (;;) {
      const std::size_t i = next.fetch_add(1);
      if (i >= values.size()) return;
      RunConfig cfg = base;
      if (param == "alpha") {
        cfg.coop.alpha = values[i];
      } else {
        cfg.coop.beta = values[i];
      }
      cfg.validate();
      auto [a, ll] = train_and_test(cfg, cfg.train.seed, train, val, test);
      result.rows[i] = {values[i], a, ll};
    }
  };
  if (workers == 1) {
    worker();
  } else {
    std::vector<std::future<void>> futs;
    for (std::size_t w = 0; w < workers; ++w) {
      futs.push_back(std::async(std::launch::async, worker));
    }
    for (auto& f : futs) f.get();
  }
  return result;
}

}  // namespace mbc
