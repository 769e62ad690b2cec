#ifndef MBC_DATASET_HPP_
#define MBC_DATASET_HPP_

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include "mbc/schema.hpp"

namespace mbc {

// Column storage for one field across a batch of samples.
// categorical: ids has one entry per sample.
// multi_valued: CSR layout, ids flattened with offsets (size n+1).
// numerical: values has one entry per sample.
struct FieldColumn {
  FieldKind kind = FieldKind::kCategorical;
  std::vector<std::int32_t> ids;
  std::vector<std::int32_t> offsets;
  std::vector<double> values;

  // Per-sample id list as needed by the embedding lookup.
  std::vector<std::vector<std::int32_t>> id_lists(std::size_t n) const;
};

struct Batch {
  std::size_t size = 0;
  std::vector<FieldColumn> fields;    // schema order
  std::vector<double> labels;         // {0,1}
  std::vector<std::int32_t> categories;  // optional analysis tag; empty if absent

  bool has_categories() const { return !categories.empty(); }
};

// A fully loaded split is just a big Batch.
using Dataset = Batch;

// Select rows by index (for shuffled mini-batching).
Batch take_rows(const Dataset& data, const std::vector<std::size_t>& idx);

// Streaming CSV reader. Header must contain `label` plus every schema field;
// an optional `category` column carries the per-sample analysis tag.
// Multi-valued cells are `|`-separated ids; an empty cell means no ids.
// Malformed rows are reported with their line number and skipped; more than
// 1% bad rows aborts the ingest.
class CsvReader {
 public:
  CsvReader(const std::filesystem::path& path, const FeatureSchema& schema);
  ~CsvReader();

  // Up to `max_rows` further samples; nullopt at end of file.
  std::optional<Batch> next_batch(std::size_t max_rows);

  std::size_t rows_read() const { return rows_ok_; }
  std::size_t rows_rejected() const { return rows_bad_; }
  const std::vector<std::string>& row_errors() const { return errors_; }

 private:
  void finish_checks();

  const FeatureSchema& schema_;
  std::string path_;
  std::unique_ptr<std::ifstream> in_;
  std::vector<int> column_of_field_;  // schema index -> csv column
  int label_col_ = -1;
  int category_col_ = -1;
  std::size_t line_no_ = 0;
  std::size_t rows_ok_ = 0;
  std::size_t rows_bad_ = 0;
  bool done_ = false;
  std::vector<std::string> errors_;
};

// Convenience: whole file in one Batch.
Dataset load_csv(const std::filesystem::path& path,
                 const FeatureSchema& schema);

}  // namespace mbc

#endif  // MBC_DATASET_HPP_
