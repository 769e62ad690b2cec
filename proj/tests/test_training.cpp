#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <vector>

#include "mbc/checkpoint.hpp"
#include "mbc/config.hpp"
#include "mbc/dataset.hpp"
#include "mbc/errors.hpp"
#include "mbc/model.hpp"
#include "mbc/synthetic.hpp"
#include "mbc/trainer.hpp"

using namespace mbc;
namespace fs = std::filesystem;

namespace {

FeatureSchema small_schema() {
  FeatureSchema s;
  s.fields = {{"f0", FieldKind::kCategorical, 12, 4},
              {"f1", FieldKind::kCategorical, 12, 4},
              {"f2", FieldKind::kCategorical, 12, 4}};
  return s;
}

GroupSpec small_groups() {
  GroupSpec g;
  g.groups = {{"a", {"f0", "f1"}}, {"b", {"f1", "f2"}}};
  return g;
}

ModelConfig tiny_model() {
  ModelConfig mc;
  mc.efgc.hidden = {8};
  mc.efgc.reduction = 6;
  mc.cross.num_experts = 1;
  mc.cross.layers = 1;
  mc.cross.rank = 2;
  mc.cross.reduction = 6;
  mc.deep.hidden = {8, 6};
  mc.top.hidden = {6, 4};
  return mc;
}

struct Splits {
  Dataset train, val, test;
};

// Small planted-interaction dataset, generated once per process.
const Splits& shared_splits() {
  static Splits s = [] {
    fs::path dir = fs::temp_directory_path() / "mbc_train_test_data";
    GenConfig gc;
    gc.rows_train = 600;
    gc.rows_val = 200;
    gc.rows_test = 200;
    gc.planted = {{"f0", "f1", 2.0, -1}};
    gc.seed = 7;
    FeatureSchema schema = small_schema();
    GenResult r = generate_synthetic(schema, gc, dir);
    return Splits{load_csv(r.train_path, schema), load_csv(r.val_path, schema),
                  load_csv(r.test_path, schema)};
  }();
  return s;
}

bool same(const Matrix& a, const Matrix& b) {
  return a.rows == b.rows && a.cols == b.cols && a.data == b.data;
}

bool same(const ParamStore& a, const ParamStore& b) {
  if (a.size() != b.size()) return false;
  for (const auto& [name, tensor] : a) {
    auto it = b.find(name);
    if (it == b.end() || !same(tensor, it->second)) return false;
  }
  return true;
}

std::string file_bytes(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

}  // namespace

TEST_CASE("adam: zero gradients leave parameters bitwise unchanged") {
  Rng rng(3);
  ParamStore params;
  params["a"] = uniform_init(3, 2, 0.5, rng);
  ParamStore grads;
  grads["a"] = Matrix(3, 2);
  const std::vector<double> before = params["a"].data;

  AdamState adam;
  adam.reset(params);
  adam.step(params, grads);
  adam.step(params, grads);
  CHECK(params["a"].data == before);
  CHECK(adam.m.at("a").data == std::vector<double>(6, 0.0));
  CHECK(adam.v.at("a").data == std::vector<double>(6, 0.0));
}

TEST_CASE("adam: first two steps match a hand recomputation") {
  ParamStore params;
  params["w"] = Matrix::scalar(0.5);
  AdamState adam;
  adam.reset(params);

  double x = 0.5, m = 0.0, v = 0.0;
  const double grads[2] = {0.2, -0.7};
  for (int t = 1; t <= 2; ++t) {
    ParamStore g;
    g["w"] = Matrix::scalar(grads[t - 1]);
    adam.step(params, g);

    const double bc1 = 1.0 - std::pow(0.9, static_cast<double>(t));
    const double bc2 = 1.0 - std::pow(0.999, static_cast<double>(t));
    m = 0.9 * m + (1.0 - 0.9) * grads[t - 1];
    v = 0.999 * v + (1.0 - 0.999) * grads[t - 1] * grads[t - 1];
    x -= 1e-3 * (m / bc1) / (std::sqrt(v / bc2) + 1e-8);
    CHECK(params["w"].at(0, 0) == x);
  }
  CHECK(adam.t == 2);
}

TEST_CASE("adam: NaN gradient aborts and names the parameter") {
  ParamStore params;
  params["deep.l0.w"] = Matrix(2, 2);
  AdamState adam;
  adam.reset(params);
  ParamStore g;
  g["deep.l0.w"] = Matrix(2, 2);
  g["deep.l0.w"].at(1, 1) = std::nan("");
  CHECK_THROWS_WITH_AS(adam.step(params, g),
                       doctest::Contains("deep.l0.w"), DataError);
}

TEST_CASE("checkpoint: save -> load -> save is byte-identical") {
  MbcModel model(small_schema(), small_groups(), tiny_model());
  model.init_params(5);
  TrainConfig tc;
  tc.batch_size = 64;
  tc.max_epochs = 1;
  tc.seed = 5;
  Trainer tr(model, tc, CoopConfig{}, shared_splits().train,
             shared_splits().val);
  tr.train();

  fs::path p1 = fs::temp_directory_path() / "mbc_ck1.bin";
  fs::path p2 = fs::temp_directory_path() / "mbc_ck2.bin";
  Checkpoint ck = tr.snapshot();
  save_checkpoint(p1, ck);
  Checkpoint loaded = load_checkpoint(p1, ck.schema_hash);
  save_checkpoint(p2, loaded);
  CHECK(file_bytes(p1) == file_bytes(p2));
  CHECK(loaded.step == ck.step);
  CHECK(loaded.rng_state == ck.rng_state);
  CHECK(same(loaded.params, ck.params));
  CHECK(same(loaded.adam.m, ck.adam.m));
  CHECK(same(loaded.adam.v, ck.adam.v));

  SUBCASE("schema hash mismatch is its own failure kind") {
    try {
      load_checkpoint(p1, ck.schema_hash + 1);
      FAIL("expected CheckpointError");
    } catch (const CheckpointError& e) {
      CHECK(e.kind() == CheckpointError::Kind::kSchemaMismatch);
    }
  }

  SUBCASE("truncated file reads as corrupt") {
    std::string bytes = file_bytes(p1);
    fs::path pt = fs::temp_directory_path() / "mbc_ck_trunc.bin";
    std::ofstream(pt, std::ios::binary)
        << bytes.substr(0, bytes.size() / 2);
    try {
      load_checkpoint(pt);
      FAIL("expected CheckpointError");
    } catch (const CheckpointError& e) {
      CHECK(e.kind() == CheckpointError::Kind::kCorrupt);
    }
  }

  SUBCASE("unknown version is rejected") {
    std::string bytes = file_bytes(p1);
    bytes[4] = 99;  // u32 version field follows the 4-byte magic
    fs::path pv = fs::temp_directory_path() / "mbc_ck_ver.bin";
    std::ofstream(pv, std::ios::binary) << bytes;
    try {
      load_checkpoint(pv);
      FAIL("expected CheckpointError");
    } catch (const CheckpointError& e) {
      CHECK(e.kind() == CheckpointError::Kind::kVersionMismatch);
    }
  }

  SUBCASE("bad magic is corrupt") {
    std::string bytes = file_bytes(p1);
    bytes[0] = 'X';
    fs::path pm = fs::temp_directory_path() / "mbc_ck_magic.bin";
    std::ofstream(pm, std::ios::binary) << bytes;
    CHECK_THROWS_AS(load_checkpoint(pm), CheckpointError);
  }
}

TEST_CASE("two identically seeded runs are byte-identical") {
  auto run = [](std::string& metrics_out) {
    MbcModel model(small_schema(), small_groups(), tiny_model());
    model.init_params(11);
    TrainConfig tc;
    tc.batch_size = 64;
    tc.max_epochs = 2;
    tc.patience = 5;
    tc.seed = 11;
    Trainer tr(model, tc, CoopConfig{}, shared_splits().train,
               shared_splits().val);
    std::ostringstream os;
    MetricsWriter mw(os);
    tr.metrics = &mw;
    tr.train();
    metrics_out = os.str();
    return tr.snapshot();
  };
  std::string m1, m2;
  Checkpoint c1 = run(m1);
  Checkpoint c2 = run(m2);
  CHECK(m1 == m2);
  CHECK(m1.find("\"ts\":0") != std::string::npos);
  CHECK(same(c1.params, c2.params));
  fs::path p1 = fs::temp_directory_path() / "mbc_det1.bin";
  fs::path p2 = fs::temp_directory_path() / "mbc_det2.bin";
  save_checkpoint(p1, c1);
  save_checkpoint(p2, c2);
  CHECK(file_bytes(p1) == file_bytes(p2));
}

TEST_CASE("mid-epoch resume reproduces the uninterrupted run exactly") {
  const std::size_t cut_step = 7;  // epoch 0 has 10 batches of 64
  auto make_trainer = [](MbcModel& model) {
    TrainConfig tc;
    tc.batch_size = 64;
    tc.max_epochs = 2;
    tc.patience = 5;
    tc.seed = 13;
    return Trainer(model, tc, CoopConfig{}, shared_splits().train,
                   shared_splits().val);
  };

  MbcModel model_a(small_schema(), small_groups(), tiny_model());
  model_a.init_params(13);
  Trainer a = make_trainer(model_a);
  std::vector<StepRecord> steps_a;
  std::vector<EpochRecord> epochs_a;
  fs::path ckp = fs::temp_directory_path() / "mbc_resume.bin";
  a.on_step = [&](const StepRecord& r) {
    steps_a.push_back(r);
    if (r.step == cut_step) save_checkpoint(ckp, a.snapshot());
  };
  a.on_epoch = [&](const EpochRecord& r) { epochs_a.push_back(r); };
  a.train();
  REQUIRE(steps_a.size() == 20);
  REQUIRE(steps_a.front().epoch == 0);
  REQUIRE(steps_a.back().epoch == 1);

  MbcModel model_b(small_schema(), small_groups(), tiny_model());
  model_b.init_params(99);  // restore must overwrite this entirely
  Trainer b = make_trainer(model_b);
  Checkpoint ck = load_checkpoint(ckp);
  b.restore(ck);
  std::vector<StepRecord> steps_b;
  std::vector<EpochRecord> epochs_b;
  b.on_step = [&](const StepRecord& r) { steps_b.push_back(r); };
  b.on_epoch = [&](const EpochRecord& r) { epochs_b.push_back(r); };
  b.train();

  REQUIRE(steps_b.size() == steps_a.size() - cut_step);
  for (std::size_t i = 0; i < steps_b.size(); ++i) {
    const StepRecord& x = steps_a[cut_step + i];
    const StepRecord& y = steps_b[i];
    CHECK(y.step == x.step);
    CHECK(y.epoch == x.epoch);
    CHECK(y.loss == x.loss);
    CHECK(y.l_ctr == x.l_ctr);
    CHECK(y.l_bct == x.l_bct);
    CHECK(y.l_mdr == x.l_mdr);
    CHECK(y.bct_count == x.bct_count);
    REQUIRE(y.w_gaps.size() == x.w_gaps.size());
    for (std::size_t k = 0; k < x.w_gaps.size(); ++k) {
      CHECK(y.w_gaps[k].first == x.w_gaps[k].first);
      CHECK(y.w_gaps[k].second == x.w_gaps[k].second);
    }
  }
  REQUIRE(epochs_b.size() == epochs_a.size());
  for (std::size_t i = 0; i < epochs_b.size(); ++i) {
    CHECK(epochs_b[i].val_auc == epochs_a[i].val_auc);
    CHECK(epochs_b[i].val_logloss == epochs_a[i].val_logloss);
  }
  CHECK(same(model_b.params(), model_a.params()));

  SUBCASE("restore into a different schema is rejected") {
    FeatureSchema other = small_schema();
    other.fields[0].vocab_size = 13;
    MbcModel model_c(other, small_groups(), tiny_model());
    model_c.init_params(1);
    Trainer c(model_c, TrainConfig{}, CoopConfig{}, shared_splits().train,
              shared_splits().val);
    CHECK_THROWS_AS(c.restore(ck), CheckpointError);
  }
}

TEST_CASE("early stopping decision matches the recorded validation history") {
  MbcModel model(small_schema(), small_groups(), tiny_model());
  model.init_params(17);
  TrainConfig tc;
  tc.batch_size = 64;
  tc.max_epochs = 8;
  tc.patience = 1;
  tc.seed = 17;
  tc.lr = 0.05;  // coarse steps so validation AUC fluctuates
  Trainer tr(model, tc, CoopConfig{}, shared_splits().train,
             shared_splits().val);
  std::vector<EpochRecord> epochs;
  tr.on_epoch = [&](const EpochRecord& r) { epochs.push_back(r); };
  TrainResult res = tr.train();

  REQUIRE(!epochs.empty());
  CHECK(res.epochs_run == epochs.size());
  double best = -1.0;
  std::size_t streak = 0;
  bool should_stop = false;
  for (const EpochRecord& e : epochs) {
    const bool improved = e.val_auc > best;
    CHECK(e.improved == improved);
    if (improved) {
      best = e.val_auc;
      streak = 0;
    } else {
      ++streak;
    }
    should_stop = streak >= tc.patience;
  }
  CHECK(res.early_stopped == (should_stop && epochs.size() < tc.max_epochs));
  CHECK(res.best_val_auc == best);
  // the returned checkpoint is the best epoch, not the last state
  CHECK(res.best.best_val_auc == best);
}

TEST_CASE("beta=0 leaves the pair transforms and their moments untouched") {
  MbcModel model(small_schema(), small_groups(), tiny_model());
  model.init_params(19);
  TrainConfig tc;
  tc.batch_size = 64;
  tc.max_epochs = 1;
  tc.seed = 19;
  CoopConfig coop;
  coop.beta = 0.0;
  Trainer tr(model, tc, coop, shared_splits().train, shared_splits().val);
  tr.train();

  Checkpoint ck = tr.snapshot();
  const std::vector<std::string> names = model.transform_names();
  REQUIRE(names.size() == 3);  // three branch pairs
  for (const std::string& name : names) {
    const Matrix& w = ck.params.at(name);
    CHECK(same(w, Matrix::identity(w.rows)));
    CHECK(ck.adam.m.at(name).data ==
          std::vector<double>(w.data.size(), 0.0));
    CHECK(ck.adam.v.at(name).data ==
          std::vector<double>(w.data.size(), 0.0));
  }
}

TEST_CASE("training lowers the CTR loss on planted data") {
  MbcModel model(small_schema(), small_groups(), tiny_model());
  model.init_params(23);
  TrainConfig tc;
  tc.batch_size = 64;
  tc.max_epochs = 3;
  tc.patience = 10;
  tc.seed = 23;
  Trainer tr(model, tc, CoopConfig{}, shared_splits().train,
             shared_splits().val);
  std::vector<double> epoch_ctr(3, 0.0);
  std::vector<std::size_t> epoch_n(3, 0);
  tr.on_step = [&](const StepRecord& r) {
    epoch_ctr[r.epoch] += r.l_ctr;
    ++epoch_n[r.epoch];
    CHECK(std::isfinite(r.loss));
  };
  tr.train();
  REQUIRE(epoch_n[0] > 0);
  REQUIRE(epoch_n[2] > 0);
  CHECK(epoch_ctr[2] / epoch_n[2] < epoch_ctr[0] / epoch_n[0]);
}
