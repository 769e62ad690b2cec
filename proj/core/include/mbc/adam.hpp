#ifndef MBC_ADAM_HPP_
#define MBC_ADAM_HPP_

#include <cstdint>

#include "mbc/params.hpp"

namespace mbc {

// Adam with bias correction. Moment buffers mirror the parameter map.
struct AdamState {
  double lr = 1e-3;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
  std::uint64_t t = 0;
  ParamStore m;
  ParamStore v;

  void reset(const ParamStore& params);
  // In-place update; aborts with DataError naming the parameter when a
  // gradient is NaN.
  void step(ParamStore& params, const ParamStore& grads);
};

}  // namespace mbc

#endif  // MBC_ADAM_HPP_
