#include "mbc/cooperation.hpp"

#include <algorithm>
#include <cctype>

#include "mbc/errors.hpp"

namespace mbc {

Variant variant_from_string(const std::string& s) {
  std::string key;
  for (char c : s) {
    if (c == ' ' || c == '-') {
      key += '_';
    } else {
      key += static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
    }
  }
  if (key == "strong_to_weak") return Variant::kStrongToWeak;
  if (key == "weak_to_strong") return Variant::kWeakToStrong;
  if (key == "no_discrimination") return Variant::kNoDiscrimination;
  if (key == "max_difference") return Variant::kMaxDifference;
  if (key == "min_difference") return Variant::kMinDifference;
  if (key == "moderate" || key == "moderate_differentiation")
    return Variant::kModerate;
  throw ConfigError("unknown cooperation variant: '" + s + "'");
}

std::string to_string(Variant v) {
  switch (v) {
    case Variant::kStrongToWeak: return "strong_to_weak";
    case Variant::kWeakToStrong: return "weak_to_strong";
    case Variant::kNoDiscrimination: return "no_discrimination";
    case Variant::kMaxDifference: return "max_difference";
    case Variant::kMinDifference: return "min_difference";
    case Variant::kModerate: return "moderate";
  }
  return "?";
}

std::pair<std::vector<std::uint8_t>, std::vector<std::uint8_t>>
classify_disagreement(const std::vector<double>& p_i,
                      const std::vector<double>& p_j,
                      const std::vector<double>& y, double threshold) {
  if (p_i.size() != p_j.size() || p_i.size() != y.size()) {
    throw ConfigError("classify_disagreement: length mismatch");
  }
  const std::size_t n = p_i.size();
  std::vector<std::uint8_t> ij(n, 0), ji(n, 0);
  for (std::size_t s = 0; s < n; ++s) {
    const double li = bce_scalar(p_i[s], y[s]);
    const double lj = bce_scalar(p_j[s], y[s]);
    if (li < threshold && lj > threshold) ij[s] = 1;
    if (lj < threshold && li > threshold) ji[s] = 1;
  }
  return {std::move(ij), std::move(ji)};
}

namespace {

std::vector<double> column_values(const Var& v) {
  return v.value().data;
}

Matrix mask_matrix(const std::vector<std::uint8_t>& mask) {
  Matrix m(mask.size(), 1);
  for (std::size_t i = 0; i < mask.size(); ++i)
    m.data[i] = mask[i] ? 1.0 : 0.0;
  return m;
}

}  // namespace

BctResult bct_loss(Tape& tape, const std::vector<Var>& probs,
                   const Matrix& labels, const CoopConfig& cfg) {
  const std::size_t k = probs.size();
  if (k < 2) throw ConfigError("bct_loss: need at least 2 branches");
  const std::size_t b = labels.rows;
  const std::vector<double> y(labels.data);

  Var acc = tape.constant_scalar(0.0);
  std::size_t count = 0;

  auto add_term = [&](Var student, Var teacher,
                      const std::vector<std::uint8_t>& mask) {
    std::size_t m = 0;
    for (std::uint8_t x : mask) m += x;
    count += m;
    if (m == 0) return;
    Var soft = stop_gradient(teacher);
    Var per_sample = bce_elem(student, soft);
    Var masked = hadamard(per_sample, tape.constant(mask_matrix(mask)));
    acc = add(acc, sum_all(masked));
  };

  const bool all = cfg.variant == Variant::kNoDiscrimination;
  const bool swapped = cfg.variant == Variant::kWeakToStrong;
  const std::vector<std::uint8_t> ones(b, 1);

  for (std::size_t i = 0; i < k; ++i) {
    for (std::size_t j = i + 1; j < k; ++j) {
      std::vector<std::uint8_t> mask_ij, mask_ji;
      if (all) {
        mask_ij = ones;
        mask_ji = ones;
      } else {
        auto masks = classify_disagreement(column_values(probs[i]),
                                           column_values(probs[j]), y,
                                           cfg.threshold);
        mask_ij = std::move(masks.first);
        mask_ji = std::move(masks.second);
      }
      if (!swapped) {
        // i strong -> i teaches j; then the mirror direction.
        add_term(/*student=*/probs[j], /*teacher=*/probs[i], mask_ij);
        add_term(/*student=*/probs[i], /*teacher=*/probs[j], mask_ji);
      } else {
        // Reversed: the weak branch's prediction becomes the soft label.
        add_term(/*student=*/probs[i], /*teacher=*/probs[j], mask_ij);
        add_term(/*student=*/probs[j], /*teacher=*/probs[i], mask_ji);
      }
    }
  }
  return {div_scalar(acc, static_cast<double>(count) + cfg.eps_count), count};
}

MdrResult mdr_loss(Tape& tape, const std::vector<Var>& latents,
                   const std::vector<Var>& transforms, const CoopConfig& cfg) {
  const std::size_t k = latents.size();
  if (k < 2) throw ConfigError("mdr_loss: need at least 2 branches");
  const double b = static_cast<double>(latents[0].rows());
  const double pair_norm = 1.0 / static_cast<double>(k * (k - 1));
  MdrResult result;

  if (cfg.variant == Variant::kMaxDifference ||
      cfg.variant == Variant::kMinDifference) {
    Var acc = tape.constant_scalar(0.0);
    for (std::size_t i = 0; i < k; ++i) {
      for (std::size_t j = 0; j < k; ++j) {
        if (i == j) continue;
        acc = add(acc, div_scalar(l2_sq(sub(latents[i], latents[j])), b));
      }
    }
    Var dist = scale(acc, pair_norm);
    if (cfg.variant == Variant::kMinDifference) {
      result.loss = dist;
    } else {
      result.clipped = -dist.scalar() < cfg.max_diff_floor;
      result.loss = clamp_min(scale(dist, -1.0), cfg.max_diff_floor);
    }
    return result;
  }

  if (transforms.size() != k * (k - 1) / 2) {
    throw ConfigError("mdr_loss: need one transform per unordered pair");
  }
  Var acc = tape.constant_scalar(0.0);
  std::size_t t = 0;
  for (std::size_t i = 0; i < k; ++i) {
    for (std::size_t j = i + 1; j < k; ++j, ++t) {
      Var w = transforms[t];
      Var wt = transpose(w);
      // Forward direction: z_i W vs z_j, plus the orthogonality pullback.
      Var fwd = matmul(latents[i], w);
      Var fwd_back = matmul(fwd, wt);
      // Reverse direction uses the transpose of the same tied matrix.
      Var rev = matmul(latents[j], wt);
      Var rev_back = matmul(rev, w);
      if (cfg.mdr_squared) {
        acc = add(acc, div_scalar(add(l2_sq(sub(fwd, latents[j])),
                                      l2_sq(sub(fwd_back, latents[i]))),
                                  b));
        acc = add(acc, div_scalar(add(l2_sq(sub(rev, latents[i])),
                                      l2_sq(sub(rev_back, latents[j]))),
                                  b));
      } else {
        Var d_ij = add(rowwise_norm(sub(fwd, latents[j])),
                       rowwise_norm(sub(fwd_back, latents[i])));
        Var d_ji = add(rowwise_norm(sub(rev, latents[i])),
                       rowwise_norm(sub(rev_back, latents[j])));
        acc = add(acc, div_scalar(add(sum_all(d_ij), sum_all(d_ji)), b));
      }
    }
  }
  // Squared form follows the K(K-1) pair average; the unsquared variant is a
  // plain mean over (ordered pair, sample) entries.
  result.loss = scale(acc, pair_norm);
  return result;
}

LossBreakdown total_loss(Tape& tape, const ForwardPass& fp,
                         const Matrix& labels, const CoopConfig& cfg) {
  LossBreakdown out;
  // L_CTR: fusion head first, then branches in EFGC/Deep/Cross order.
  Var ctr = mean_all(bce_elem(fp.by_id(BranchId::kFusion).prob, labels));
  for (const auto& o : fp.outputs) {
    if (o.id == BranchId::kFusion) continue;
    ctr = add(ctr, mean_all(bce_elem(o.prob, labels)));
  }
  out.l_ctr = ctr.scalar();

  Var total = ctr;
  if (cfg.alpha != 0.0) {
    BctResult bct = bct_loss(tape, fp.probs(), labels, cfg);
    out.l_bct = bct.loss.scalar();
    out.disagreement_count = bct.count;
    total = add(total, scale(bct.loss, cfg.alpha));
  }
  if (cfg.beta != 0.0) {
    std::vector<Var> transforms;
    for (std::size_t i = 0; i < fp.branches.size(); ++i) {
      for (std::size_t j = i + 1; j < fp.branches.size(); ++j) {
        transforms.push_back(fp.leaves.at(
            std::string("coop.w.") + branch_token(fp.branches[i]) + "_" +
            branch_token(fp.branches[j])));
      }
    }
    MdrResult mdr = mdr_loss(tape, fp.latents(), transforms, cfg);
    out.l_mdr = mdr.loss.scalar();
    out.mdr_clipped = mdr.clipped;
    total = add(total, scale(mdr.loss, cfg.beta));
  }
  out.total = total;
  return out;
}

double transform_orthogonality_gap(const Matrix& w) {
  Matrix wwt = matmul_nt(w, w);
  for (std::size_t i = 0; i < wwt.rows; ++i) wwt.at(i, i) -= 1.0;
  return wwt.frobenius_norm();
}

}  // namespace mbc
