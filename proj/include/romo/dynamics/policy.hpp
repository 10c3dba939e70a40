#pragma once

#include "romo/nn/matrix.hpp"

namespace romo {

/// Deterministic goal-conditioned policy evaluated on a batch of rows.
/// Implementations must be safe to call concurrently.
class Policy {
 public:
  virtual ~Policy() = default;
  virtual Matrix act(const Matrix& states, const Matrix& goals) const = 0;
};

}  // namespace romo
