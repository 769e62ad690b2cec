#include "mbc/trainer.hpp"

#include <algorithm>
#include <numeric>

#include "mbc/errors.hpp"
#include "mbc/eval.hpp"
#include "mbc/metrics.hpp"

namespace mbc {

void MetricsWriter::write(
    const std::string& phase, std::size_t epoch, std::size_t step,
    const std::vector<std::pair<std::string, double>>& values) {
  nlohmann::ordered_json rec;
  rec["ts"] = seq_++;
  rec["phase"] = phase;
  rec["epoch"] = epoch;
  rec["step"] = step;
  for (const auto& [k, v] : values) rec[k] = v;
  (*out_) << rec.dump() << "\n";
}

Trainer::Trainer(MbcModel& model, const TrainConfig& train,
                 const CoopConfig& coop, const Dataset& train_data,
                 const Dataset& val_data)
    : model_(&model),
      cfg_(train),
      coop_(coop),
      train_data_(&train_data),
      val_data_(&val_data),
      rng_(train.seed) {
  cfg_.validate();
  const std::size_t m = model.schema().num_fields();
  if (train_data.fields.size() != m || val_data.fields.size() != m) {
    throw DataError("dataset field count does not match the schema");
  }
  if (train_data.size == 0) throw DataError("training split is empty");
  if (val_data.size == 0) throw DataError("validation split is empty");
  adam_.lr = cfg_.lr;
  adam_.reset(model.params());
  epoch_start_rng_ = rng_.serialize();
}

void Trainer::restore(const Checkpoint& ck) {
  const std::uint64_t expect = schema_hash(model_->schema(), model_->groups());
  if (ck.schema_hash != expect) {
    throw CheckpointError(CheckpointError::Kind::kSchemaMismatch,
                          "checkpoint was trained on a different schema");
  }
  model_->params() = ck.params;
  adam_ = ck.adam;
  step_ = ck.step;
  epoch_ = ck.epoch;
  batch_in_epoch_ = ck.batch_in_epoch;
  best_val_auc_ = ck.best_val_auc;
  rng_.deserialize(ck.rng_state);
  epoch_start_rng_ = ck.rng_state;
  best_ = ck;
  resumed_ = true;
}

Checkpoint Trainer::snapshot() const {
  Checkpoint ck;
  ck.schema_hash = schema_hash(model_->schema(), model_->groups());
  ck.step = step_;
  ck.epoch = static_cast<std::uint32_t>(epoch_);
  ck.batch_in_epoch = static_cast<std::uint32_t>(batch_in_epoch_);
  ck.best_val_auc = best_val_auc_;
  ck.rng_state = epoch_start_rng_;
  ck.params = model_->params();
  ck.adam = adam_;
  return ck;
}

StepRecord Trainer::run_step(const Batch& batch) {
  Tape tape;
  ForwardPass fp = model_->forward(tape, batch);
  Matrix labels = Matrix::column(batch.labels);
  LossBreakdown lb = total_loss(tape, fp, labels, coop_);
  tape.backward(lb.total);

  ParamStore grads;
  for (const auto& [name, tensor] : model_->params()) {
    (void)tensor;
    grads[name] = fp.leaves.at(name).grad();
  }
  adam_.step(model_->params(), grads);
  ++step_;

  StepRecord rec;
  rec.step = step_;
  rec.epoch = epoch_;
  rec.loss = lb.total.scalar();
  rec.l_ctr = lb.l_ctr;
  rec.l_bct = lb.l_bct;
  rec.l_mdr = lb.l_mdr;
  rec.bct_count = lb.disagreement_count;
  for (const std::string& name : model_->transform_names()) {
    const std::string token = name.substr(std::string("coop.w.").size());
    rec.w_gaps.emplace_back(
        token, transform_orthogonality_gap(model_->params().at(name)));
  }
  return rec;
}

TrainResult Trainer::train() {
  const std::size_t n = train_data_->size;
  const std::size_t bs = cfg_.batch_size;
  const std::size_t num_batches = (n + bs - 1) / bs;
  std::size_t no_improve = 0;
  TrainResult res;

  while (epoch_ < cfg_.max_epochs) {
    epoch_start_rng_ = rng_.serialize();
    std::vector<std::size_t> perm(n);
    std::iota(perm.begin(), perm.end(), 0);
    rng_.shuffle(perm);

    const std::size_t first = resumed_ ? batch_in_epoch_ : 0;
    resumed_ = false;
    for (std::size_t b = first; b < num_batches; ++b) {
      const std::size_t s = b * bs;
      const std::size_t e = std::min(s + bs, n);
      std::vector<std::size_t> idx(perm.begin() + s, perm.begin() + e);
      Batch batch = take_rows(*train_data_, idx);
      StepRecord rec = run_step(batch);
      batch_in_epoch_ = b + 1;
      ++res.steps_run;
      if (metrics) {
        std::vector<std::pair<std::string, double>> vals{
            {"loss", rec.loss},
            {"l_ctr", rec.l_ctr},
            {"l_bct", rec.l_bct},
            {"l_mdr", rec.l_mdr},
            {"bct_count", static_cast<double>(rec.bct_count)}};
        for (const auto& [tok, gap] : rec.w_gaps) {
          vals.emplace_back("wgap." + tok, gap);
        }
        metrics->write("train", rec.epoch, rec.step, vals);
      }
      if (on_step) on_step(rec);
    }

    std::vector<double> probs = predict_fusion_probs(*model_, *val_data_);
    EpochRecord er;
    er.epoch = epoch_;
    er.val_auc = auc(probs, val_data_->labels);
    er.val_logloss = logloss(probs, val_data_->labels);
    if (er.val_auc > best_val_auc_) {
      best_val_auc_ = er.val_auc;
      er.improved = true;
      no_improve = 0;
      best_ = snapshot();
    } else {
      ++no_improve;
    }
    if (metrics) {
      metrics->write("val", epoch_, step_,
                     {{"val_auc", er.val_auc}, {"val_logloss", er.val_logloss}});
    }
    if (on_epoch) on_epoch(er);

    ++epoch_;
    batch_in_epoch_ = 0;
    ++res.epochs_run;
    if (no_improve >= cfg_.patience) {
      res.early_stopped = true;
      break;
    }
  }

  epoch_start_rng_ = rng_.serialize();
  if (best_.params.empty()) best_ = snapshot();
  res.best = best_;
  res.best_val_auc = best_val_auc_;
  return res;
}

}  // namespace mbc
