#include "mbc/embedding.hpp"

#include <cmath>

#include "mbc/errors.hpp"

namespace mbc {

void init_embedding_params(const FeatureSchema& schema, Rng& rng,
                           ParamStore& params) {
  for (const auto& f : schema.fields) {
    const double limit = 1.0 / std::sqrt(static_cast<double>(f.embed_dim));
    if (f.kind == FieldKind::kNumerical) {
      params["embed." + f.name + ".w"] =
          uniform_init(1, f.embed_dim, limit, rng);
      params["embed." + f.name + ".b"] = Matrix(1, f.embed_dim);
    } else {
      params["embed." + f.name] =
          uniform_init(f.vocab_size, f.embed_dim, limit, rng);
    }
  }
}

std::vector<Var> embed_batch(Tape& tape, const Batch& batch,
                             const FeatureSchema& schema,
                             const std::map<std::string, Var>& leaves) {
  if (batch.fields.size() != schema.num_fields()) {
    throw ConfigError("embed_batch: batch has " +
                      std::to_string(batch.fields.size()) +
                      " fields, schema has " +
                      std::to_string(schema.num_fields()));
  }
  std::vector<Var> out;
  out.reserve(schema.num_fields());
  for (std::size_t f = 0; f < schema.num_fields(); ++f) {
    const FeatureField& field = schema.fields[f];
    const FieldColumn& col = batch.fields[f];
    if (field.kind == FieldKind::kNumerical) {
      Matrix vals(batch.size, 1);
      vals.data = col.values;
      Var v = tape.constant(std::move(vals));
      Var w = leaves.at("embed." + field.name + ".w");
      Var b = leaves.at("embed." + field.name + ".b");
      out.push_back(add_rowvec(matmul(v, w), b));
    } else {
      Var table = leaves.at("embed." + field.name);
      try {
        out.push_back(gather_mean(table, col.id_lists(batch.size)));
      } catch (const DataError& e) {
        throw DataError("field '" + field.name + "': " + e.what());
      }
    }
  }
  return out;
}

std::vector<Var> group_concat(const std::vector<Var>& field_embeds,
                              const FeatureSchema& schema,
                              const GroupSpec& spec) {
  std::vector<Var> out;
  out.reserve(spec.num_groups());
  for (const auto& g : spec.groups) {
    std::vector<Var> members;
    members.reserve(g.fields.size());
    for (const auto& fname : g.fields) {
      const int idx = schema.field_index(fname);
      if (idx < 0) {
        throw ConfigError("group_concat: unknown field '" + fname + "'");
      }
      members.push_back(field_embeds[idx]);
    }
    out.push_back(concat_cols(members));
  }
  return out;
}

Var concat_all(const std::vector<Var>& field_embeds) {
  if (field_embeds.size() == 1) return field_embeds[0];
  return concat_cols(field_embeds);
}

}  // namespace mbc
