#include "mbc/gradcheck.hpp"

#include <algorithm>
#include <cmath>

namespace mbc {

GradCheckResult grad_check(
    ParamStore& params,
    const std::function<double(const ParamStore&)>& loss,
    const std::function<ParamStore(const ParamStore&)>& analytic_grads,
    double h) {
  GradCheckResult result;
  const ParamStore grads = analytic_grads(params);
  for (auto& [name, tensor] : params) {
    const Matrix& g = grads.at(name);
    for (std::size_t i = 0; i < tensor.data.size(); ++i) {
      const double saved = tensor.data[i];
      tensor.data[i] = saved + h;
      const double up = loss(params);
      tensor.data[i] = saved - h;
      const double down = loss(params);
      tensor.data[i] = saved;
      const double numeric = (up - down) / (2.0 * h);
      const double analytic = g.data[i];
      const double denom =
          std::max({std::fabs(analytic), std::fabs(numeric), 1e-8});
      const double rel = std::fabs(analytic - numeric) / denom;
      if (rel > result.max_rel_err) {
        result.max_rel_err = rel;
        result.worst_param = name;
        result.worst_index = i;
      }
    }
  }
  return result;
}

}  // namespace mbc
