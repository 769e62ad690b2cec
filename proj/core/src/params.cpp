#include "mbc/params.hpp"

#include <cmath>

namespace mbc {

Matrix uniform_init(std::size_t rows, std::size_t cols, double limit,
                    Rng& rng) {
  Matrix m(rows, cols);
  for (double& x : m.data) x = rng.uniform(-limit, limit);
  return m;
}

Matrix he_uniform(std::size_t rows, std::size_t cols, std::size_t fan_in,
                  Rng& rng) {
  const double limit = std::sqrt(6.0 / static_cast<double>(fan_in));
  return uniform_init(rows, cols, limit, rng);
}

}  // namespace mbc
