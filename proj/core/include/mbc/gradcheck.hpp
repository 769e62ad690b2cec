#ifndef MBC_GRADCHECK_HPP_
#define MBC_GRADCHECK_HPP_

#include <functional>
#include <string>

#include "mbc/params.hpp"

namespace mbc {

struct GradCheckResult {
  double max_rel_err = 0.0;
  std::string worst_param;
  std::size_t worst_index = 0;
};

// Compares analytic gradients against central finite differences, entry by
// entry, over every tensor in `params`. `loss` must be a pure function of the
// parameter values. `analytic_grads` computes the full gradient map at the
// current parameters. Relative error per entry:
//   |a - n| / max(|a|, |n|, 1e-8)
GradCheckResult grad_check(
    ParamStore& params,
    const std::function<double(const ParamStore&)>& loss,
    const std::function<ParamStore(const ParamStore&)>& analytic_grads,
    double h = 1e-5);

}  // namespace mbc

#endif  // MBC_GRADCHECK_HPP_
