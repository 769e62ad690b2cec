#ifndef MBC_EMBEDDING_HPP_
#define MBC_EMBEDDING_HPP_

#include <map>
#include <string>
#include <vector>

#include "mbc/dataset.hpp"
#include "mbc/params.hpp"
#include "mbc/schema.hpp"
#include "mbc/tape.hpp"

namespace mbc {

// Parameter names:
//   embed.<field>          vocab_size x embed_dim   (categorical/multi_valued)
//   embed.<field>.w        1 x embed_dim            (numerical projection)
//   embed.<field>.b        1 x embed_dim
void init_embedding_params(const FeatureSchema& schema, Rng& rng,
                           ParamStore& params);

// One B x embed_dim matrix per field, in schema order. Multi-valued fields
// are mean-pooled over the present ids; an empty list embeds to zero.
// Numerical fields pass through their learned affine. `leaves` maps parameter
// names to tape leaves.
std::vector<Var> embed_batch(Tape& tape, const Batch& batch,
                             const FeatureSchema& schema,
                             const std::map<std::string, Var>& leaves);

// Column-concatenation of each group's member fields, spec order.
std::vector<Var> group_concat(const std::vector<Var>& field_embeds,
                              const FeatureSchema& schema,
                              const GroupSpec& spec);

// Concatenation of all field embeddings in schema order (width F). Feeds
// both the Deep and Cross branches.
Var concat_all(const std::vector<Var>& field_embeds);

}  // namespace mbc

#endif  // MBC_EMBEDDING_HPP_
