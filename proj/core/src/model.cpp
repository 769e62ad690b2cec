#include "mbc/model.hpp"

#include <algorithm>

#include "mbc/errors.hpp"

namespace mbc {

const char* branch_token(BranchId id) {
  switch (id) {
    case BranchId::kEfgc: return "efgc";
    case BranchId::kDeep: return "deep";
    case BranchId::kCross: return "cross";
    case BranchId::kFusion: return "fusion";
  }
  return "?";
}

const char* branch_display(BranchId id) {
  switch (id) {
    case BranchId::kEfgc: return "EFGC";
    case BranchId::kDeep: return "Deep";
    case BranchId::kCross: return "CrossNet";
    case BranchId::kFusion: return "MBC";
  }
  return "?";
}

void ModelConfig::validate() const {
  if (efgc.hidden.empty() || deep.hidden.empty() || top.hidden.empty()) {
    throw ConfigError("model: hidden layer lists must be non-empty");
  }
  for (std::size_t s : efgc.hidden)
    if (s < 1) throw ConfigError("model: efgc hidden sizes must be >= 1");
  for (std::size_t s : deep.hidden)
    if (s < 1) throw ConfigError("model: deep hidden sizes must be >= 1");
  for (std::size_t s : top.hidden)
    if (s < 1) throw ConfigError("model: shared top sizes must be >= 1");
  if (cross.num_experts < 1) {
    throw ConfigError("model: cross num_experts must be >= 1");
  }
  if (cross.rank < 1) throw ConfigError("model: cross rank must be >= 1");
  if (top.latent_dim() < 2) {
    throw ConfigError("model: latent dim d must be >= 2");
  }
  // The shared top receives every branch's reduced features, so the widths
  // feeding it must agree.
  std::vector<std::size_t> widths;
  if (use_efgc) widths.push_back(efgc.reduction);
  if (use_cross) widths.push_back(cross.reduction);
  if (use_deep) widths.push_back(deep.hidden.back());
  if (widths.empty() ||
      !std::all_of(widths.begin(), widths.end(),
                   [&](std::size_t w) { return w == widths[0]; })) {
    throw ConfigError(
        "model: branch reduction widths must agree (efgc.reduction, "
        "cross.reduction, deep.hidden.back())");
  }
  if (num_branches() < 2) {
    throw ConfigError("model: cooperation requires at least 2 branches");
  }
}

std::vector<BranchId> ModelConfig::enabled_branches() const {
  std::vector<BranchId> out;
  if (use_efgc) out.push_back(BranchId::kEfgc);
  if (use_deep) out.push_back(BranchId::kDeep);
  if (use_cross) out.push_back(BranchId::kCross);
  return out;
}

ModelConfig ModelConfig::desk_profile() {
  ModelConfig c;
  c.efgc = {{64, 16}, 32};
  c.cross = {2, 2, 4, 32};
  c.deep = {{128, 64, 32}};
  c.top = {{32, 16, 8}};
  return c;
}

ModelConfig ModelConfig::paper_profile() {
  ModelConfig c;
  c.efgc = {{1024, 128}, 512};
  c.cross = {2, 2, 16, 512};
  c.deep = {{2048, 1024, 512, 512, 512}};
  c.top = {{512, 256, 128}};
  return c;
}

const BranchOutput& ForwardPass::by_id(BranchId id) const {
  for (const auto& o : outputs)
    if (o.id == id) return o;
  throw ConfigError(std::string("forward: branch not present: ") +
                    branch_token(id));
}

std::vector<Var> ForwardPass::latents() const {
  std::vector<Var> out;
  for (const auto& o : outputs)
    if (o.id != BranchId::kFusion) out.push_back(o.latent);
  return out;
}

std::vector<Var> ForwardPass::probs() const {
  std::vector<Var> out;
  for (const auto& o : outputs)
    if (o.id != BranchId::kFusion) out.push_back(o.prob);
  return out;
}

MbcModel::MbcModel(FeatureSchema schema, GroupSpec groups, ModelConfig config)
    : schema_(std::move(schema)),
      groups_(std::move(groups)),
      config_(std::move(config)) {
  schema_.validate();
  groups_.validate(schema_);
  config_.validate();
  if (config_.use_efgc && groups_.num_groups() == 0) {
    throw ConfigError("model: EFGC branch enabled but no feature groups");
  }
  if (config_.use_cross && config_.cross.rank > schema_.embedded_width()) {
    throw ConfigError("model: cross rank exceeds embedded width F");
  }
}

std::vector<std::string> MbcModel::transform_names() const {
  const auto branches = config_.enabled_branches();
  std::vector<std::string> names;
  for (std::size_t i = 0; i < branches.size(); ++i)
    for (std::size_t j = i + 1; j < branches.size(); ++j)
      names.push_back(std::string("coop.w.") + branch_token(branches[i]) +
                      "_" + branch_token(branches[j]));
  return names;
}

namespace {

void init_mlp(const std::string& prefix, std::size_t in_width,
              const std::vector<std::size_t>& sizes, Rng& rng,
              ParamStore& params) {
  std::size_t w = in_width;
  for (std::size_t k = 0; k < sizes.size(); ++k) {
    params[prefix + ".l" + std::to_string(k) + ".w"] =
        he_uniform(w, sizes[k], w, rng);
    params[prefix + ".l" + std::to_string(k) + ".b"] = Matrix(1, sizes[k]);
    w = sizes[k];
  }
}

}  // namespace

void MbcModel::init_params(std::uint64_t seed) {
  params_.clear();
  Rng rng(seed);
  init_embedding_params(schema_, rng, params_);
  const std::size_t f_width = schema_.embedded_width();
  const std::size_t d = config_.top.latent_dim();

  if (config_.use_efgc) {
    for (std::size_t g = 0; g < groups_.num_groups(); ++g) {
      init_mlp("efgc.g" + std::to_string(g), groups_.group_width(schema_, g),
               config_.efgc.hidden, rng, params_);
    }
    const std::size_t concat_w =
        groups_.num_groups() * config_.efgc.hidden.back();
    params_["efgc.red.w"] =
        he_uniform(concat_w, config_.efgc.reduction, concat_w, rng);
    params_["efgc.red.b"] = Matrix(1, config_.efgc.reduction);
  }
  if (config_.use_deep) {
    init_mlp("deep", f_width, config_.deep.hidden, rng, params_);
  }
  if (config_.use_cross) {
    for (std::size_t l = 0; l < config_.cross.layers; ++l) {
      const std::string lp = "cross.l" + std::to_string(l);
      for (std::size_t k = 0; k < config_.cross.num_experts; ++k) {
        const std::string ep = lp + ".e" + std::to_string(k);
        params_[ep + ".v"] =
            he_uniform(f_width, config_.cross.rank, f_width, rng);
        params_[ep + ".u"] =
            he_uniform(config_.cross.rank, f_width, config_.cross.rank, rng);
        params_[ep + ".gate"] = he_uniform(f_width, 1, f_width, rng);
      }
      params_[lp + ".b"] = Matrix(1, f_width);
    }
    params_["cross.red.w"] =
        he_uniform(f_width, config_.cross.reduction, f_width, rng);
    params_["cross.red.b"] = Matrix(1, config_.cross.reduction);
  }

  // All reduction widths agree (validated), so any enabled branch gives the
  // shared top's input width.
  const std::size_t top_in = config_.use_efgc   ? config_.efgc.reduction
                             : config_.use_deep ? config_.deep.hidden.back()
                                                : config_.cross.reduction;
  init_mlp("top", top_in, config_.top.hidden, rng, params_);

  auto branches = config_.enabled_branches();
  branches.push_back(BranchId::kFusion);
  for (BranchId b : branches) {
    params_[std::string("head.") + branch_token(b) + ".w"] =
        he_uniform(d, 1, d, rng);
    params_[std::string("head.") + branch_token(b) + ".b"] = Matrix(1, 1);
  }

  // Pairwise transformations start at the identity, the zero of the
  // orthogonality penalty.
  for (const std::string& name : transform_names()) {
    params_[name] = Matrix::identity(d);
  }
}

Var mlp_forward(Var x, const std::string& prefix, std::size_t num_layers,
                const std::map<std::string, Var>& leaves) {
  Var h = x;
  for (std::size_t k = 0; k < num_layers; ++k) {
    Var w = leaves.at(prefix + ".l" + std::to_string(k) + ".w");
    Var b = leaves.at(prefix + ".l" + std::to_string(k) + ".b");
    if (k > 0) h = relu(h);
    h = add_rowvec(matmul(h, w), b);
  }
  return h;
}

ForwardPass MbcModel::forward(Tape& tape, const Batch& batch) const {
  if (batch.size == 0) throw ConfigError("forward: empty batch");
  ForwardPass fp;
  for (const auto& [name, tensor] : params_) {
    fp.leaves.emplace(name, tape.leaf(tensor));
  }
  fp.branches = config_.enabled_branches();

  const std::vector<Var> embeds =
      embed_batch(tape, batch, schema_, fp.leaves);

  std::vector<std::pair<BranchId, Var>> reduced;  // branch -> h
  if (config_.use_efgc) {
    const std::vector<Var> group_in = group_concat(embeds, schema_, groups_);
    std::vector<Var> crossed;
    crossed.reserve(group_in.size());
    for (std::size_t g = 0; g < group_in.size(); ++g) {
      crossed.push_back(mlp_forward(group_in[g],
                                    "efgc.g" + std::to_string(g),
                                    config_.efgc.hidden.size(), fp.leaves));
    }
    Var cat = crossed.size() == 1 ? crossed[0] : concat_cols(crossed);
    Var h = add_rowvec(matmul(cat, fp.leaves.at("efgc.red.w")),
                       fp.leaves.at("efgc.red.b"));
    reduced.emplace_back(BranchId::kEfgc, h);
  }
  if (config_.use_deep || config_.use_cross) {
    Var e_all = concat_all(embeds);
    if (config_.use_deep) {
      reduced.emplace_back(
          BranchId::kDeep,
          mlp_forward(e_all, "deep", config_.deep.hidden.size(), fp.leaves));
    }
    if (config_.use_cross) {
      Var x0 = e_all;
      Var xl = e_all;
      for (std::size_t l = 0; l < config_.cross.layers; ++l) {
        const std::string lp = "cross.l" + std::to_string(l);
        Var bias = fp.leaves.at(lp + ".b");
        std::vector<Var> expert_out;
        std::vector<Var> gate_scores;
        for (std::size_t k = 0; k < config_.cross.num_experts; ++k) {
          const std::string ep = lp + ".e" + std::to_string(k);
          Var low = matmul(xl, fp.leaves.at(ep + ".v"));        // B x r
          Var back = matmul(low, fp.leaves.at(ep + ".u"));      // B x F
          expert_out.push_back(hadamard(x0, add_rowvec(back, bias)));
          gate_scores.push_back(matmul(xl, fp.leaves.at(ep + ".gate")));
        }
        Var mixed;
        if (config_.cross.num_experts == 1) {
          mixed = expert_out[0];
        } else {
          Var gates = softmax_rows(concat_cols(gate_scores));  // B x K
          mixed = colwise_scale(expert_out[0], slice_cols(gates, 0, 1));
          for (std::size_t k = 1; k < expert_out.size(); ++k) {
            mixed = add(mixed, colwise_scale(expert_out[k],
                                             slice_cols(gates, k, k + 1)));
          }
        }
        xl = add(mixed, xl);  // residual
      }
      Var h = add_rowvec(matmul(xl, fp.leaves.at("cross.red.w")),
                         fp.leaves.at("cross.red.b"));
      reduced.emplace_back(BranchId::kCross, h);
    }
  }

  // Order outputs as EFGC, Deep, Cross regardless of computation order.
  std::sort(reduced.begin(), reduced.end(),
            [](const auto& a, const auto& b) {
              return static_cast<int>(a.first) < static_cast<int>(b.first);
            });

  auto make_head = [&](BranchId id, Var z) {
    Var w = fp.leaves.at(std::string("head.") + branch_token(id) + ".w");
    Var b = fp.leaves.at(std::string("head.") + branch_token(id) + ".b");
    Var logit = add_rowvec(matmul(z, w), b);
    return BranchOutput{id, z, logit, sigmoid(logit)};
  };

  std::vector<Var> latents;
  for (const auto& [id, h] : reduced) {
    Var z = mlp_forward(h, "top", config_.top.hidden.size(), fp.leaves);
    latents.push_back(z);
    fp.outputs.push_back(make_head(id, z));
  }
  Var z_fused = mean_stack(latents);
  fp.outputs.push_back(make_head(BranchId::kFusion, z_fused));
  return fp;
}

}  // namespace mbc
