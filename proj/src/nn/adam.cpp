#include "romo/nn/adam.hpp"

#include <cmath>

#include "romo/kernels/kernels.hpp"

namespace romo {

void adam_step(std::span<double> params, std::span<const double> grads, AdamState& state,
               std::span<const ParamSegment> segments) {
  require(params.size() == grads.size() && params.size() == state.m.size() &&
              params.size() == state.v.size(),
          "adam_step: params, grads and moment shapes disagree");
  if (segments.empty()) {
    if (!all_finite(grads)) throw NonFiniteError("adam_step: non-finite gradient in 'params'");
  } else {
    for (const auto& seg : segments) {
      require(seg.offset + seg.size <= grads.size(), "adam_step: segment out of range");
      if (!all_finite(grads.subspan(seg.offset, seg.size))) {
        throw NonFiniteError("adam_step: non-finite gradient in '" + seg.name + "'");
      }
    }
  }
  state.step += 1;
  const double t = static_cast<double>(state.step);
  const kernels::AdamCoefficients c{state.lr,
                                    state.beta1,
                                    state.beta2,
                                    state.eps,
                                    1.0 - std::pow(state.beta1, t),
                                    1.0 - std::pow(state.beta2, t)};
  kernels::active().adam(params.size(), params.data(), grads.data(), state.m.data(), state.v.data(), c);
}

}  // namespace romo
