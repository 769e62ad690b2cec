#include "mbc/eval.hpp"

#include <algorithm>
#include <cstdio>
#include <fstream>
#include <numeric>
#include <sstream>

#include "mbc/errors.hpp"
#include "mbc/metrics.hpp"
#include "mbc/tape.hpp"

namespace mbc {

namespace {

std::vector<std::size_t> batch_starts(std::size_t n, std::size_t bs) {
  std::vector<std::size_t> starts;
  for (std::size_t s = 0; s < n; s += bs) starts.push_back(s);
  return starts;
}

Batch slice(const Dataset& data, std::size_t s, std::size_t e) {
  std::vector<std::size_t> idx(e - s);
  std::iota(idx.begin(), idx.end(), s);
  return take_rows(data, idx);
}

}  // namespace

const BranchMetrics& EvalReport::by_id(BranchId id) const {
  for (const auto& b : branches) {
    if (b.id == id) return b;
  }
  throw DataError("branch not present in report");
}

std::string EvalReport::to_table() const {
  std::ostringstream os;
  char line[96];
  std::snprintf(line, sizeof line, "%-10s %10s %10s\n", "Branch", "AUC",
                "LogLoss");
  os << line;
  for (const auto& b : branches) {
    std::snprintf(line, sizeof line, "%-10s %10.6f %10.6f\n",
                  branch_display(b.id), b.auc, b.logloss);
    os << line;
  }
  os << "samples: " << samples << "\n";
  return os.str();
}

std::map<BranchId, std::vector<double>> predict_probs(const MbcModel& model,
                                                      const Dataset& data,
                                                      std::size_t batch_size) {
  std::map<BranchId, std::vector<double>> out;
  for (std::size_t s : batch_starts(data.size, batch_size)) {
    const std::size_t e = std::min(s + batch_size, data.size);
    Batch b = slice(data, s, e);
    Tape tape;
    ForwardPass fp = model.forward(tape, b);
    for (const BranchOutput& bo : fp.outputs) {
      std::vector<double>& dst = out[bo.id];
      const Matrix& p = bo.prob.value();
      dst.insert(dst.end(), p.data.begin(), p.data.end());
    }
  }
  return out;
}

std::vector<double> predict_fusion_probs(const MbcModel& model,
                                         const Dataset& data,
                                         std::size_t batch_size) {
  std::vector<double> out;
  out.reserve(data.size);
  for (std::size_t s : batch_starts(data.size, batch_size)) {
    const std::size_t e = std::min(s + batch_size, data.size);
    Batch b = slice(data, s, e);
    Tape tape;
    ForwardPass fp = model.forward(tape, b);
    const Matrix& p = fp.by_id(BranchId::kFusion).prob.value();
    out.insert(out.end(), p.data.begin(), p.data.end());
  }
  return out;
}

EvalReport evaluate(const MbcModel& model, const Dataset& data,
                    std::size_t batch_size) {
  auto probs = predict_probs(model, data, batch_size);
  EvalReport report;
  report.samples = data.size;
  // Fusion row first, then the enabled branches in model order.
  std::vector<BranchId> order{BranchId::kFusion};
  for (BranchId id : model.config().enabled_branches()) order.push_back(id);
  for (BranchId id : order) {
    BranchMetrics bm;
    bm.id = id;
    bm.auc = auc(probs.at(id), data.labels);
    bm.logloss = logloss(probs.at(id), data.labels);
    report.branches.push_back(bm);
  }
  return report;
}

std::map<BranchId, Matrix> predict_latents(const MbcModel& model,
                                           const Dataset& data,
                                           std::size_t batch_size) {
  std::map<BranchId, Matrix> out;
  const std::size_t d = model.latent_dim();
  for (std::size_t s : batch_starts(data.size, batch_size)) {
    const std::size_t e = std::min(s + batch_size, data.size);
    Batch b = slice(data, s, e);
    Tape tape;
    ForwardPass fp = model.forward(tape, b);
    for (const BranchOutput& bo : fp.outputs) {
      auto it = out.find(bo.id);
      if (it == out.end()) {
        it = out.emplace(bo.id, Matrix(data.size, d)).first;
      }
      const Matrix& z = bo.latent.value();
      std::copy(z.data.begin(), z.data.end(),
                it->second.data.begin() + s * d);
    }
  }
  return out;
}

void export_branch_latents(const MbcModel& model, const Dataset& data,
                           const std::filesystem::path& path,
                           std::size_t batch_size) {
  auto latents = predict_latents(model, data, batch_size);
  std::ofstream out(path);
  if (!out) throw DataError("cannot write latent dump: " + path.string());
  const std::size_t d = model.latent_dim();
  out << "sample,branch";
  for (std::size_t c = 0; c < d; ++c) out << ",dim" << c;
  out << "\n";
  std::vector<BranchId> order{BranchId::kEfgc, BranchId::kDeep,
                              BranchId::kCross, BranchId::kFusion};
  char cell[32];
  for (std::size_t i = 0; i < data.size; ++i) {
    for (BranchId id : order) {
      auto it = latents.find(id);
      if (it == latents.end()) continue;
      out << i << ',' << branch_token(id);
      for (std::size_t c = 0; c < d; ++c) {
        std::snprintf(cell, sizeof cell, "%.9g", it->second.at(i, c));
        out << ',' << cell;
      }
      out << "\n";
    }
  }
}

CategoryProfile topk_category_profile(const MbcModel& model,
                                      const Dataset& data, std::size_t k,
                                      std::size_t batch_size) {
  if (!data.has_categories()) {
    throw DataError("category profile requires per-sample category tags");
  }
  if (k > data.size) throw DataError("k exceeds the dataset size");
  auto probs = predict_probs(model, data, batch_size);
  CategoryProfile profile;
  for (const auto& [id, p] : probs) {
    std::vector<std::size_t> idx(data.size);
    std::iota(idx.begin(), idx.end(), 0);
    std::vector<double> loss(data.size);
    for (std::size_t i = 0; i < data.size; ++i) {
      loss[i] = bce_scalar(p[i], data.labels[i]);
    }
    std::stable_sort(idx.begin(), idx.end(), [&](std::size_t a, std::size_t b) {
      return loss[a] < loss[b];
    });
    auto& hist = profile.histograms[id];
    for (std::size_t r = 0; r < k; ++r) ++hist[data.categories[idx[r]]];
  }
  return profile;
}

}  // namespace mbc
