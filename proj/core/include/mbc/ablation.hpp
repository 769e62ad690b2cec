#ifndef MBC_ABLATION_HPP_
#define MBC_ABLATION_HPP_

#include <cstdint>
#include <string>
#include <vector>

#include "mbc/config.hpp"
#include "mbc/dataset.hpp"

namespace mbc {

// Canonical cell ids: full, wo_efgc, wo_crossnet, wo_deepnet, wo_bct,
// wo_mdr, wo_both, plus the cooperation variant names. Accepts loose
// spellings like "w/o EFGC".
std::string normalize_cell_id(const std::string& raw);

// Applies a cell id to a copy of the base config. Throws ConfigError for
// unknown ids or configurations that leave fewer than two branches.
RunConfig apply_cell(const RunConfig& base, const std::string& cell_id);

struct AblationCell {
  std::string id;
  std::vector<double> seed_aucs;      // test AUC per seed, seed order
  std::vector<double> seed_loglosses;
  double mean_auc = 0.0;
  double mean_logloss = 0.0;
};

struct AblationGrid {
  std::vector<std::uint64_t> seeds;
  std::vector<AblationCell> cells;  // requested order

  std::string to_table() const;  // columns: variant, AUC, LogLoss
  const AblationCell& by_id(const std::string& id) const;
};

// Trains every (cell, seed) combination on the identical splits and
// evaluates the best checkpoint on the test split. `jobs` > 1 dispatches
// independent combinations on worker threads.
AblationGrid run_ablation(const RunConfig& base,
                          const std::vector<std::string>& cell_ids,
                          const std::vector<std::uint64_t>& seeds,
                          const Dataset& train, const Dataset& val,
                          const Dataset& test, std::size_t jobs = 1);

struct SweepRow {
  double value = 0.0;
  double auc = 0.0;
  double logloss = 0.0;
};

struct SweepResult {
  std::string param;  // "alpha" | "beta"
  std::vector<SweepRow> rows;

  std::string to_table() const;
};

SweepResult sweep(const RunConfig& base, const std::string& param,
                  const std::vector<double>& values, const Dataset& train,
                  const Dataset& val, const Dataset& test,
                  std::size_t jobs = 1);

// One train+test pass used by both harnesses; returns (test AUC, LogLoss)
// of the fused head from the best checkpoint.
std::pair<double, double> train_and_test(const RunConfig& cfg,
                                         std::uint64_t seed,
                                         const Dataset& train,
                                         const Dataset& val,
                                         const Dataset& test);

}  // namespace mbc

#endif  // MBC_ABLATION_HPP_
