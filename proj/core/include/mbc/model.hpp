#ifndef MBC_MODEL_HPP_
#define MBC_MODEL_HPP_

#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include "mbc/dataset.hpp"
#include "mbc/embedding.hpp"
#include "mbc/params.hpp"
#include "mbc/schema.hpp"
#include "mbc/tape.hpp"

namespace mbc {

struct EfgcConfig {
  std::vector<std::size_t> hidden{64, 16};  // per-group crossing MLP
  std::size_t reduction = 32;
};

struct CrossConfig {
  std::size_t num_experts = 2;
  std::size_t layers = 2;
  std::size_t rank = 4;
  std::size_t reduction = 32;
};

struct DeepConfig {
  std::vector<std::size_t> hidden{128, 64, 32};
};

struct SharedTopConfig {
  std::vector<std::size_t> hidden{32, 16, 8};
  std::size_t latent_dim() const { return hidden.back(); }
};

enum class BranchId { kEfgc = 0, kDeep = 1, kCross = 2, kFusion = 3 };

// Short stable tokens used in parameter names and CLI/report output.
const char* branch_token(BranchId id);
// Display name for reports ("MBC" for the fused head).
const char* branch_display(BranchId id);

struct ModelConfig {
  EfgcConfig efgc;
  CrossConfig cross;
  DeepConfig deep;
  SharedTopConfig top;
  bool use_efgc = true;
  bool use_deep = true;
  bool use_cross = true;

  // All branch reduction widths must agree so one shared top applies.
  void validate() const;
  std::vector<BranchId> enabled_branches() const;
  std::size_t num_branches() const { return enabled_branches().size(); }

  static ModelConfig desk_profile();
  static ModelConfig paper_profile();
};

struct BranchOutput {
  BranchId id = BranchId::kFusion;
  Var latent;  // z, B x d
  Var logit;   // B x 1
  Var prob;    // sigmoid(logit)
};

struct ForwardPass {
  std::map<std::string, Var> leaves;  // param name -> tape leaf
  std::vector<BranchId> branches;     // enabled non-fusion branches, in order
  std::vector<BranchOutput> outputs;  // same order as `branches`, fusion last

  const BranchOutput& by_id(BranchId id) const;
  std::vector<Var> latents() const;  // non-fusion z in branch order
  std::vector<Var> probs() const;    // non-fusion p in branch order
};

class MbcModel {
 public:
  MbcModel(FeatureSchema schema, GroupSpec groups, ModelConfig config);

  void init_params(std::uint64_t seed);

  ForwardPass forward(Tape& tape, const Batch& batch) const;

  ParamStore& params() { return params_; }
  const ParamStore& params() const { return params_; }
  const FeatureSchema& schema() const { return schema_; }
  const GroupSpec& groups() const { return groups_; }
  const ModelConfig& config() const { return config_; }
  std::size_t latent_dim() const { return config_.top.latent_dim(); }

  // Names of the tied pairwise transformation matrices, e.g.
  // "coop.w.efgc_deep" for the (EFGC, Deep) pair; the reverse direction uses
  // the transpose of the same tensor.
  std::vector<std::string> transform_names() const;

 private:
  FeatureSchema schema_;
  GroupSpec groups_;
  ModelConfig config_;
  ParamStore params_;
};

// Shared-weight MLP application: ReLU between layers, linear last.
// Parameter names: <prefix>.l<k>.w / <prefix>.l<k>.b.
Var mlp_forward(Var x, const std::string& prefix, std::size_t num_layers,
                const std::map<std::string, Var>& leaves);

}  // namespace mbc

#endif  // MBC_MODEL_HPP_
