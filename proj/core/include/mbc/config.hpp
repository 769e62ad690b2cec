#ifndef MBC_CONFIG_HPP_
#define MBC_CONFIG_HPP_

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "mbc/cooperation.hpp"
#include "mbc/model.hpp"
#include "mbc/schema.hpp"
#include "mbc/synthetic.hpp"

namespace mbc {

struct TrainConfig {
  std::size_t batch_size = 256;
  std::size_t max_epochs = 5;
  std::size_t patience = 2;
  double lr = 1e-3;
  std::uint64_t seed = 1;

  void validate() const;
};

struct DataConfig {
  std::string train_path;
  std::string val_path;
  std::string test_path;
  std::optional<GenConfig> generator;
};

// Whole-run configuration: schema, groups, model, cooperation, training and
// data sections, cross-validated as a unit before any work starts.
struct RunConfig {
  FeatureSchema schema;
  GroupSpec groups;
  std::string profile = "desk";  // "desk" | "paper"
  ModelConfig model;
  CoopConfig coop;
  TrainConfig train;
  DataConfig data;

  void validate() const;  // throws ConfigError with field-level messages
  nlohmann::json to_json() const;
  static RunConfig from_json(const nlohmann::json& j);
};

// Applies a dotted-path scalar override (e.g. "coop.alpha=0.2") to the raw
// document. Values are parsed as bool/number when possible, else string.
void apply_override(nlohmann::json& doc, const std::string& assignment);

// Read file -> apply overrides -> parse -> validate.
RunConfig load_run_config(const std::filesystem::path& path,
                          const std::vector<std::string>& overrides = {});

}  // namespace mbc

#endif  // MBC_CONFIG_HPP_
