#ifndef MBC_COOPERATION_HPP_
#define MBC_COOPERATION_HPP_

#include <cstdint>
#include <string>
#include <vector>

#include "mbc/model.hpp"
#include "mbc/tape.hpp"

namespace mbc {

// Strong/weak threshold on the per-sample BCE: -log(0.5).
inline const double kCoopThreshold = 0.6931471805599453;

// Cooperation variants (study rows). strong_to_weak and moderate are the
// defaults on their respective axes; selecting one axis' deviation leaves
// the other at its default.
enum class Variant {
  kStrongToWeak,      // default co-teaching direction
  kWeakToStrong,      // reversed teaching direction
  kNoDiscrimination,  // co-teach every sample in both directions
  kMaxDifference,     // replace the regularizer: push latents apart
  kMinDifference,     // replace the regularizer: pull latents together
  kModerate,          // default regularizer (alias of the full scheme)
};

Variant variant_from_string(const std::string& s);  // throws ConfigError
std::string to_string(Variant v);

struct CoopConfig {
  double alpha = 0.1;
  double beta = 0.1;
  double threshold = kCoopThreshold;
  double eps_count = 1e-8;
  // Squared Frobenius norms (primary definition); false selects the
  // unsquared per-sample Euclidean variant for fidelity experiments.
  bool mdr_squared = true;
  // Stabilization clip for the max-difference variant's negated distance.
  double max_diff_floor = -10.0;
  Variant variant = Variant::kStrongToWeak;
};

// Per-sample strong/weak classification for one ordered branch pair.
// first[s]  = 1 iff branch i is strong and j weak on sample s,
// second[s] = 1 iff branch j is strong and i weak. Strict inequalities on
// both sides; exact threshold hits select nothing, and the two indicators
// are never both set.
std::pair<std::vector<std::uint8_t>, std::vector<std::uint8_t>>
classify_disagreement(const std::vector<double>& p_i,
                      const std::vector<double>& p_j,
                      const std::vector<double>& y, double threshold);

struct BctResult {
  Var loss;                // 1x1 node
  std::size_t count = 0;   // C: selected (sample, ordered pair) entries
};

// Branch co-teaching loss over the non-fusion branches. The teacher
// probability enters through a stop-gradient, so gradients reach only the
// student paths. Normalized by count + eps_count; zero when nothing is
// selected.
BctResult bct_loss(Tape& tape, const std::vector<Var>& probs,
                   const Matrix& labels, const CoopConfig& cfg);

struct MdrResult {
  Var loss;             // 1x1 node
  bool clipped = false; // max-difference floor engaged
};

// Moderate-differentiation regularizer. `transforms` holds one tied matrix
// per unordered branch pair (i<j order matching `latents`); the reverse
// direction uses its transpose. Batch-averaged.
MdrResult mdr_loss(Tape& tape, const std::vector<Var>& latents,
                   const std::vector<Var>& transforms, const CoopConfig& cfg);

// Elementwise mean of branch latents (branch fusion).
inline Var fuse(const std::vector<Var>& latents) {
  return mean_stack(latents);
}

struct LossBreakdown {
  Var total;
  double l_ctr = 0.0;
  double l_bct = 0.0;
  double l_mdr = 0.0;
  std::size_t disagreement_count = 0;
  bool mdr_clipped = false;
};

// L = sum over heads (fusion first) of mean BCE + alpha * L_BCT +
// beta * L_MDR. Transform leaves are looked up in fp.leaves.
LossBreakdown total_loss(Tape& tape, const ForwardPass& fp,
                         const Matrix& labels, const CoopConfig& cfg);

// || W W^T - I ||_F, the convergence diagnostic for a transformation matrix.
double transform_orthogonality_gap(const Matrix& w);

}  // namespace mbc

#endif  // MBC_COOPERATION_HPP_
