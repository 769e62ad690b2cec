#include "mbc/adam.hpp"

#include <cmath>

#include "mbc/errors.hpp"

namespace mbc {

void AdamState::reset(const ParamStore& params) {
  t = 0;
  m.clear();
  v.clear();
  for (const auto& [name, tensor] : params) {
    m[name] = Matrix(tensor.rows, tensor.cols);
    v[name] = Matrix(tensor.rows, tensor.cols);
  }
}

void AdamState::step(ParamStore& params, const ParamStore& grads) {
  ++t;
  const double bc1 = 1.0 - std::pow(beta1, static_cast<double>(t));
  const double bc2 = 1.0 - std::pow(beta2, static_cast<double>(t));
  for (auto& [name, tensor] : params) {
    const Matrix& g = grads.at(name);
    Matrix& mm = m.at(name);
    Matrix& vv = v.at(name);
    for (std::size_t i = 0; i < tensor.data.size(); ++i) {
      const double gi = g.data[i];
      if (std::isnan(gi)) {
        throw DataError("NaN gradient in parameter '" + name + "'");
      }
      mm.data[i] = beta1 * mm.data[i] + (1.0 - beta1) * gi;
      vv.data[i] = beta2 * vv.data[i] + (1.0 - beta2) * gi * gi;
      const double mhat = mm.data[i] / bc1;
      const double vhat = vv.data[i] / bc2;
      tensor.data[i] -= lr * mhat / (std::sqrt(vhat) + eps);
    }
  }
}

}  // namespace mbc
