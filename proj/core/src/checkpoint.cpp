#include "mbc/checkpoint.hpp"

#include <cstring>
#include <fstream>

#include "mbc/errors.hpp"

namespace mbc {

namespace {

constexpr char kMagic[4] = {'M', 'B', 'C', 'K'};

void put_bytes(std::ostream& out, const void* p, std::size_t n) {
  out.write(static_cast<const char*>(p), static_cast<std::streamsize>(n));
}

template <typename T>
void put(std::ostream& out, T v) {
  static_assert(std::is_trivially_copyable_v<T>);
  put_bytes(out, &v, sizeof v);
}

void put_string(std::ostream& out, const std::string& s) {
  put<std::uint32_t>(out, static_cast<std::uint32_t>(s.size()));
  put_bytes(out, s.data(), s.size());
}

void put_tensors(std::ostream& out, const ParamStore& store) {
  put<std::uint32_t>(out, static_cast<std::uint32_t>(store.size()));
  for (const auto& [name, tensor] : store) {
    put_string(out, name);
    put<std::uint64_t>(out, tensor.rows);
    put<std::uint64_t>(out, tensor.cols);
    put_bytes(out, tensor.data.data(), tensor.data.size() * sizeof(double));
  }
}

void get_bytes(std::istream& in, void* p, std::size_t n) {
  in.read(static_cast<char*>(p), static_cast<std::streamsize>(n));
  if (static_cast<std::size_t>(in.gcount()) != n) {
    throw CheckpointError(CheckpointError::Kind::kCorrupt,
                          "checkpoint truncated");
  }
}

template <typename T>
T get(std::istream& in) {
  T v;
  get_bytes(in, &v, sizeof v);
  return v;
}

std::string get_string(std::istream& in) {
  const auto n = get<std::uint32_t>(in);
  if (n > (1u << 20)) {
    throw CheckpointError(CheckpointError::Kind::kCorrupt,
                          "checkpoint string length implausible");
  }
  std::string s(n, '\0');
  get_bytes(in, s.data(), n);
  return s;
}

ParamStore get_tensors(std::istream& in) {
  const auto count = get<std::uint32_t>(in);
  ParamStore store;
  for (std::uint32_t i = 0; i < count; ++i) {
    std::string name = get_string(in);
    const auto rows = get<std::uint64_t>(in);
    const auto cols = get<std::uint64_t>(in);
    if (rows * cols > (1ull << 32)) {
      throw CheckpointError(CheckpointError::Kind::kCorrupt,
                            "checkpoint tensor size implausible");
    }
    Matrix m(rows, cols);
    get_bytes(in, m.data.data(), m.data.size() * sizeof(double));
    store[std::move(name)] = std::move(m);
  }
  return store;
}

}  // namespace

void save_checkpoint(const std::filesystem::path& path, const Checkpoint& ck) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw DataError("cannot write checkpoint: " + path.string());
  put_bytes(out, kMagic, 4);
  put<std::uint32_t>(out, ck.version);
  put<std::uint64_t>(out, ck.schema_hash);
  put<std::uint64_t>(out, ck.step);
  put<std::uint32_t>(out, ck.epoch);
  put<std::uint32_t>(out, ck.batch_in_epoch);
  put<double>(out, ck.best_val_auc);
  put_string(out, ck.rng_state);
  put_tensors(out, ck.params);
  put<double>(out, ck.adam.lr);
  put<double>(out, ck.adam.beta1);
  put<double>(out, ck.adam.beta2);
  put<double>(out, ck.adam.eps);
  put<std::uint64_t>(out, ck.adam.t);
  put_tensors(out, ck.adam.m);
  put_tensors(out, ck.adam.v);
  if (!out) throw DataError("write failed: " + path.string());
}

Checkpoint load_checkpoint(const std::filesystem::path& path,
                           std::uint64_t expected_schema_hash) {
  std::ifstream in(path, std::ios::binary);
  if (!in) {
    throw CheckpointError(CheckpointError::Kind::kCorrupt,
                          "cannot open checkpoint: " + path.string());
  }
  char magic[4];
  get_bytes(in, magic, 4);
  if (std::memcmp(magic, kMagic, 4) != 0) {
    throw CheckpointError(CheckpointError::Kind::kCorrupt,
                          "bad magic in checkpoint: " + path.string());
  }
  Checkpoint ck;
  ck.version = get<std::uint32_t>(in);
  if (ck.version != kCheckpointVersion) {
    throw CheckpointError(
        CheckpointError::Kind::kVersionMismatch,
        "checkpoint version " + std::to_string(ck.version) +
            ", expected " + std::to_string(kCheckpointVersion));
  }
  ck.schema_hash = get<std::uint64_t>(in);
  if (expected_schema_hash != 0 && ck.schema_hash != expected_schema_hash) {
    throw CheckpointError(CheckpointError::Kind::kSchemaMismatch,
                          "checkpoint schema hash does not match the "
                          "configured schema/groups");
  }
  ck.step = get<std::uint64_t>(in);
  ck.epoch = get<std::uint32_t>(in);
  ck.batch_in_epoch = get<std::uint32_t>(in);
  ck.best_val_auc = get<double>(in);
  ck.rng_state = get_string(in);
  ck.params = get_tensors(in);
  ck.adam.lr = get<double>(in);
  ck.adam.beta1 = get<double>(in);
  ck.adam.beta2 = get<double>(in);
  ck.adam.eps = get<double>(in);
  ck.adam.t = get<std::uint64_t>(in);
  ck.adam.m = get_tensors(in);
  ck.adam.v = get_tensors(in);
  return ck;
}

}  // namespace mbc
