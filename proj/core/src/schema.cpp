#include "mbc/schema.hpp"

#include <set>

#include "mbc/errors.hpp"

namespace mbc {

std::string to_string(FieldKind kind) {
  switch (kind) {
    case FieldKind::kCategorical: return "categorical";
    case FieldKind::kMultiValued: return "multi_valued";
    case FieldKind::kNumerical: return "numerical";
  }
  return "?";
}

FieldKind field_kind_from_string(const std::string& s) {
  if (s == "categorical") return FieldKind::kCategorical;
  if (s == "multi_valued") return FieldKind::kMultiValued;
  if (s == "numerical") return FieldKind::kNumerical;
  throw ConfigError("unknown field kind: " + s);
}

std::size_t FeatureSchema::embedded_width() const {
  std::size_t w = 0;
  for (const auto& f : fields) w += f.embed_dim;
  return w;
}

int FeatureSchema::field_index(const std::string& name) const {
  for (std::size_t i = 0; i < fields.size(); ++i)
    if (fields[i].name == name) return static_cast<int>(i);
  return -1;
}

void FeatureSchema::validate() const {
  if (fields.size() < 2) {
    throw ConfigError("schema: at least 2 fields required, got " +
                      std::to_string(fields.size()));
  }
  std::set<std::string> names;
  for (const auto& f : fields) {
    if (f.name.empty()) throw ConfigError("schema: empty field name");
    if (!names.insert(f.name).second) {
      throw ConfigError("schema: duplicate field name '" + f.name + "'");
    }
    if (f.embed_dim < 1) {
      throw ConfigError("schema: field '" + f.name + "' embed_dim must be >= 1");
    }
    if (f.kind != FieldKind::kNumerical && f.vocab_size < 1) {
      throw ConfigError("schema: field '" + f.name +
                        "' vocab_size must be >= 1");
    }
  }
}

void GroupSpec::validate(const FeatureSchema& schema) const {
  for (const auto& g : groups) {
    if (g.fields.size() < 2) {
      throw ConfigError("groups: group '" + g.name +
                        "' must reference at least 2 fields");
    }
    for (const auto& fname : g.fields) {
      if (schema.field_index(fname) < 0) {
        throw ConfigError("groups: group '" + g.name +
                          "' references unknown field '" + fname + "'");
      }
    }
  }
}

std::size_t GroupSpec::group_width(const FeatureSchema& schema,
                                   std::size_t g) const {
  std::size_t w = 0;
  for (const auto& fname : groups[g].fields)
    w += schema.fields[schema.field_index(fname)].embed_dim;
  return w;
}

std::uint64_t schema_hash(const FeatureSchema& schema,
                          const GroupSpec& groups) {
  // FNV-1a over a canonical text rendering.
  std::uint64_t h = 14695981039346656037ull;
  auto mix = [&h](const std::string& s) {
    for (unsigned char c : s) {
      h ^= c;
      h *= 1099511628211ull;
    }
    h ^= 0x1f;
    h *= 1099511628211ull;
  };
  for (const auto& f : schema.fields) {
    mix(f.name);
    mix(to_string(f.kind));
    mix(std::to_string(f.vocab_size));
    mix(std::to_string(f.embed_dim));
  }
  for (const auto& g : groups.groups) {
    mix(g.name);
    for (const auto& fname : g.fields) mix(fname);
  }
  return h;
}

}  // namespace mbc
