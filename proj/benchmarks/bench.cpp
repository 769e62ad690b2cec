#include <benchmark/benchmark.h>

#include "mbc/cooperation.hpp"
#include "mbc/matrix.hpp"
#include "mbc/model.hpp"
#include "mbc/rng.hpp"
#include "mbc/synthetic.hpp"
#include "mbc/tape.hpp"

namespace {

mbc::Matrix random_matrix(std::size_t r, std::size_t c, mbc::Rng& rng) {
  mbc::Matrix m(r, c);
  for (double& v : m.data) v = rng.uniform(-1.0, 1.0);
  return m;
}

void BM_Matmul(benchmark::State& state) {
  const auto n = static_cast<std::size_t>(state.range(0));
  mbc::Rng rng(7);
  mbc::Matrix a = random_matrix(n, n, rng);
  mbc::Matrix b = random_matrix(n, n, rng);
  for (auto _ : state) {
    mbc::Matrix c = mbc::matmul(a, b);
    benchmark::DoNotOptimize(c.data.data());
  }
  state.SetItemsProcessed(state.iterations() * n * n * n);
}
BENCHMARK(BM_Matmul)->Arg(32)->Arg(128)->Arg(256);

mbc::FeatureSchema bench_schema() {
  mbc::FeatureSchema s;
  s.fields = {
      {"user", mbc::FieldKind::kCategorical, 1000, 8},
      {"item", mbc::FieldKind::kCategorical, 1000, 8},
      {"tags", mbc::FieldKind::kMultiValued, 200, 8},
      {"price", mbc::FieldKind::kNumerical, 0, 4},
      {"context", mbc::FieldKind::kCategorical, 50, 8},
  };
  return s;
}

mbc::GroupSpec bench_groups() {
  mbc::GroupSpec g;
  g.groups = {{"user_item", {"user", "item"}},
              {"item_side", {"item", "tags", "price", "context"}}};
  return g;
}

mbc::Batch random_batch(const mbc::FeatureSchema& schema, std::size_t n,
                        mbc::Rng& rng) {
  mbc::Batch b;
  b.size = n;
  for (const auto& f : schema.fields) {
    mbc::FieldColumn col;
    col.kind = f.kind;
    switch (f.kind) {
      case mbc::FieldKind::kCategorical:
        for (std::size_t i = 0; i < n; ++i) {
          col.ids.push_back(
              static_cast<std::int32_t>(rng.uniform_int(f.vocab_size)));
        }
        break;
      case mbc::FieldKind::kMultiValued:
        col.offsets.push_back(0);
        for (std::size_t i = 0; i < n; ++i) {
          const std::size_t k = rng.uniform_int(4);
          for (std::size_t j = 0; j < k; ++j) {
            col.ids.push_back(
                static_cast<std::int32_t>(rng.uniform_int(f.vocab_size)));
          }
          col.offsets.push_back(static_cast<std::int32_t>(col.ids.size()));
        }
        break;
      case mbc::FieldKind::kNumerical:
        for (std::size_t i = 0; i < n; ++i) {
          col.values.push_back(rng.uniform(-1.0, 1.0));
        }
        break;
    }
    b.fields.push_back(std::move(col));
  }
  for (std::size_t i = 0; i < n; ++i) {
    b.labels.push_back(rng.bernoulli(0.3) ? 1.0 : 0.0);
  }
  return b;
}

void BM_TrainStep(benchmark::State& state) {
  const auto bs = static_cast<std::size_t>(state.range(0));
  mbc::FeatureSchema schema = bench_schema();
  mbc::MbcModel model(schema, bench_groups(), mbc::ModelConfig::desk_profile());
  model.init_params(11);
  mbc::Rng rng(13);
  mbc::Batch batch = random_batch(schema, bs, rng);
  mbc::Matrix labels = mbc::Matrix::column(batch.labels);
  mbc::CoopConfig coop;
  for (auto _ : state) {
    mbc::Tape tape;
    mbc::ForwardPass fp = model.forward(tape, batch);
    mbc::LossBreakdown lb = mbc::total_loss(tape, fp, labels, coop);
    tape.backward(lb.total);
    benchmark::DoNotOptimize(lb.l_ctr);
  }
  state.SetItemsProcessed(state.iterations() * bs);
}
BENCHMARK(BM_TrainStep)->Arg(64)->Arg(256);

}  // namespace

BENCHMARK_MAIN();
