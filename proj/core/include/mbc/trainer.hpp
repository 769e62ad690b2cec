#ifndef MBC_TRAINER_HPP_
#define MBC_TRAINER_HPP_

#include <cstdint>
#include <functional>
#include <map>
#include <optional>
#include <ostream>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "mbc/adam.hpp"
#include "mbc/checkpoint.hpp"
#include "mbc/config.hpp"
#include "mbc/cooperation.hpp"
#include "mbc/dataset.hpp"
#include "mbc/model.hpp"
#include "mbc/rng.hpp"

namespace mbc {

// Line-delimited metrics sink. The "ts" field is a logical sequence number,
// not wall-clock time, so two runs with the same seed emit identical bytes.
class MetricsWriter {
 public:
  explicit MetricsWriter(std::ostream& out) : out_(&out) {}

  void write(const std::string& phase, std::size_t epoch, std::size_t step,
             const std::vector<std::pair<std::string, double>>& values);

 private:
  std::ostream* out_;
  std::uint64_t seq_ = 0;
};

struct StepRecord {
  std::size_t step = 0;
  std::size_t epoch = 0;
  double loss = 0.0;
  double l_ctr = 0.0;
  double l_bct = 0.0;
  double l_mdr = 0.0;
  std::size_t bct_count = 0;
  // pair token (e.g. "efgc_deep") -> || W W^T - I ||_F
  std::vector<std::pair<std::string, double>> w_gaps;
};

struct EpochRecord {
  std::size_t epoch = 0;
  double val_auc = 0.0;
  double val_logloss = 0.0;
  bool improved = false;
};

struct TrainResult {
  Checkpoint best;
  double best_val_auc = 0.0;
  std::size_t epochs_run = 0;
  std::size_t steps_run = 0;
  bool early_stopped = false;
};

// Single-threaded training loop: seeded per-epoch shuffling, Adam updates on
// the composite loss, validation-AUC early stopping, resumable mid-epoch.
class Trainer {
 public:
  Trainer(MbcModel& model, const TrainConfig& train, const CoopConfig& coop,
          const Dataset& train_data, const Dataset& val_data);

  // Restores parameters, optimizer and RNG so the run continues exactly
  // where the checkpoint was taken.
  void restore(const Checkpoint& ck);

  // Current state as a checkpoint; valid mid-run (from on_step) or after.
  Checkpoint snapshot() const;

  TrainResult train();

  std::function<void(const StepRecord&)> on_step;
  std::function<void(const EpochRecord&)> on_epoch;
  MetricsWriter* metrics = nullptr;

  const MbcModel& model() const { return *model_; }

 private:
  StepRecord run_step(const Batch& batch);

  MbcModel* model_;
  TrainConfig cfg_;
  CoopConfig coop_;
  const Dataset* train_data_;
  const Dataset* val_data_;

  AdamState adam_;
  Rng rng_;
  std::string epoch_start_rng_;
  std::size_t step_ = 0;
  std::size_t epoch_ = 0;
  std::size_t batch_in_epoch_ = 0;
  double best_val_auc_ = -1.0;
  Checkpoint best_;
  bool resumed_ = false;
};

}  // namespace mbc

#endif  // MBC_TRAINER_HPP_
