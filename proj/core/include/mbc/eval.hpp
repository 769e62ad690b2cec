#ifndef MBC_EVAL_HPP_
#define MBC_EVAL_HPP_

#include <cstddef>
#include <filesystem>
#include <map>
#include <string>
#include <vector>

#include "mbc/dataset.hpp"
#include "mbc/matrix.hpp"
#include "mbc/model.hpp"

namespace mbc {

struct BranchMetrics {
  BranchId id = BranchId::kFusion;
  double auc = 0.0;
  double logloss = 0.0;
};

struct EvalReport {
  std::size_t samples = 0;
  std::vector<BranchMetrics> branches;  // fusion first, then branch order

  const BranchMetrics& by_id(BranchId id) const;
  std::string to_table() const;
};

// Per-branch predicted probabilities over a whole split, batched forward
// passes with no gradient work kept.
std::map<BranchId, std::vector<double>> predict_probs(
    const MbcModel& model, const Dataset& data, std::size_t batch_size = 1024);

std::vector<double> predict_fusion_probs(const MbcModel& model,
                                         const Dataset& data,
                                         std::size_t batch_size = 1024);

EvalReport evaluate(const MbcModel& model, const Dataset& data,
                    std::size_t batch_size = 1024);

// Per-branch latents z, one B x d matrix per branch (fusion included).
std::map<BranchId, Matrix> predict_latents(const MbcModel& model,
                                           const Dataset& data,
                                           std::size_t batch_size = 1024);

// CSV dump of per-sample latents: sample,branch,dim0..dim{d-1}.
void export_branch_latents(const MbcModel& model, const Dataset& data,
                           const std::filesystem::path& path,
                           std::size_t batch_size = 1024);

struct CategoryProfile {
  // branch -> category id -> count among the k best-predicted samples.
  std::map<BranchId, std::map<std::int32_t, std::size_t>> histograms;
};

// Sorts samples ascending by each branch's per-sample BCE, keeps the best k
// and counts their category tags. Ties broken by sample index.
CategoryProfile topk_category_profile(const MbcModel& model,
                                      const Dataset& data, std::size_t k,
                                      std::size_t batch_size = 1024);

}  // namespace mbc

#endif  // MBC_EVAL_HPP_
