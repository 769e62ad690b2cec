#ifndef MBC_SYNTHETIC_HPP_
#define MBC_SYNTHETIC_HPP_

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "mbc/schema.hpp"

namespace mbc {

// A planted field-pair interaction: the label logit receives a term read
// from a random lookup table keyed by the two ids. When `category` >= 0 the
// term is active only for samples carrying that category tag.
struct PlantedPair {
  std::string field_a;
  std::string field_b;
  double strength = 2.0;
  int category = -1;
};

struct GenConfig {
  std::size_t rows_train = 200000;
  std::size_t rows_val = 20000;
  std::size_t rows_test = 20000;
  double base_rate = 0.3;
  // Per-field random effect magnitude (uniform in +-scale).
  double field_effect_scale = 0.3;
  int num_categories = 0;
  std::vector<PlantedPair> planted;
  std::uint64_t seed = 1;
};

struct GenResult {
  std::filesystem::path train_path;
  std::filesystem::path val_path;
  std::filesystem::path test_path;
  std::filesystem::path ground_truth_path;
  double bayes_test_auc = 0.0;
};

// Writes train/val/test CSVs plus a ground-truth JSON sidecar describing the
// Bayes-optimal scorer (base logit, per-field effects, planted interaction
// tables, and its test AUC). Fully determined by (schema, config.seed).
GenResult generate_synthetic(const FeatureSchema& schema, const GenConfig& cfg,
                             const std::filesystem::path& out_dir);

}  // namespace mbc

#endif  // MBC_SYNTHETIC_HPP_
