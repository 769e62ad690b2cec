#ifndef MBC_PARAMS_HPP_
#define MBC_PARAMS_HPP_

#include <map>
#include <string>

#include "mbc/matrix.hpp"
#include "mbc/rng.hpp"

namespace mbc {

// Named parameter tensors. Ordered map so iteration (init, Adam updates,
// checkpoints) is deterministic.
using ParamStore = std::map<std::string, Matrix>;

// He-uniform: entries in +-sqrt(6 / fan_in).
Matrix he_uniform(std::size_t rows, std::size_t cols, std::size_t fan_in,
                  Rng& rng);
// Entries in +-limit.
Matrix uniform_init(std::size_t rows, std::size_t cols, double limit,
                    Rng& rng);

}  // namespace mbc

#endif  // MBC_PARAMS_HPP_
