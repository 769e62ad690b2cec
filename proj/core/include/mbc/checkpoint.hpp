#ifndef MBC_CHECKPOINT_HPP_
#define MBC_CHECKPOINT_HPP_

#include <cstdint>
#include <filesystem>
#include <string>

#include "mbc/adam.hpp"
#include "mbc/params.hpp"

namespace mbc {

// Binary layout (little-endian throughout):
//   magic "MBCK", u32 version, u64 schema_hash,
//   u64 step, u32 epoch, u32 batch_in_epoch, f64 best_val_auc,
//   length-prefixed rng state string (engine state at epoch start),
//   tensor section (params), then Adam scalars + m/v tensor sections.
// Tensor record: u32 name length, name bytes, u64 rows, u64 cols, f64 data.
inline constexpr std::uint32_t kCheckpointVersion = 1;

struct Checkpoint {
  std::uint32_t version = kCheckpointVersion;
  std::uint64_t schema_hash = 0;
  std::uint64_t step = 0;
  std::uint32_t epoch = 0;
  std::uint32_t batch_in_epoch = 0;
  double best_val_auc = 0.0;
  std::string rng_state;
  ParamStore params;
  AdamState adam;
};

void save_checkpoint(const std::filesystem::path& path, const Checkpoint& ck);

// Throws CheckpointError with kind kCorrupt / kVersionMismatch. When
// `expected_schema_hash` is nonzero a mismatch throws kSchemaMismatch.
Checkpoint load_checkpoint(const std::filesystem::path& path,
                           std::uint64_t expected_schema_hash = 0);

}  // namespace mbc

#endif  // MBC_CHECKPOINT_HPP_
