#ifndef MBC_SCHEMA_HPP_
#define MBC_SCHEMA_HPP_

#include <cstddef>
#include <cstdint>
#include <string>
#include <vector>

namespace mbc {

enum class FieldKind { kCategorical, kMultiValued, kNumerical };

std::string to_string(FieldKind kind);
FieldKind field_kind_from_string(const std::string& s);

struct FeatureField {
  std::string name;
  FieldKind kind = FieldKind::kCategorical;
  std::size_t vocab_size = 0;  // categorical / multi_valued only
  std::size_t embed_dim = 0;
};

// Ordered list of the M input fields. Field order is the contract for
// concatenation layouts.
struct FeatureSchema {
  std::vector<FeatureField> fields;

  std::size_t num_fields() const { return fields.size(); }
  // Total embedded width F = sum of embed_dims.
  std::size_t embedded_width() const;
  int field_index(const std::string& name) const;  // -1 when missing
  void validate() const;                           // throws ConfigError
};

struct FeatureGroup {
  std::string name;
  std::vector<std::string> fields;
};

// Domain-driven feature groups for the grouping-and-crossing branch. Fields
// may appear in several groups.
struct GroupSpec {
  std::vector<FeatureGroup> groups;

  std::size_t num_groups() const { return groups.size(); }
  void validate(const FeatureSchema& schema) const;  // throws ConfigError
  // Concatenated input width of group g under `schema`.
  std::size_t group_width(const FeatureSchema& schema, std::size_t g) const;
};

// Stable hash of the schema + groups, stored in checkpoints to reject
// mismatched model/data combinations.
std::uint64_t schema_hash(const FeatureSchema& schema, const GroupSpec& groups);

}  // namespace mbc

#endif  // MBC_SCHEMA_HPP_
