#pragma once

#include <cstdint>
#include <iosfwd>
#include <span>

#include "romo/nn/matrix.hpp"

namespace romo {

/// Per-dimension running mean/variance with clipped standardization.
///
/// A fresh normalizer has mean 0 and variance 1. Batches are merged with the
/// pairwise (Chan et al.) update, so streaming and one-shot updates agree up
/// to rounding. The stored variance never drops below the floor.
class RunningNormalizer {
 public:
  RunningNormalizer() = default;
  explicit RunningNormalizer(std::size_t dim, double clip_range = 5.0, double var_floor = 1e-8);

  std::size_t dim() const { return mean_.size(); }
  std::uint64_t count() const { return count_; }
  const Vector& mean() const { return mean_; }
  const Vector& variance() const { return var_; }
  double clip_range() const { return clip_; }
  double var_floor() const { return floor_; }

  /// Rows of batch are samples.
  void update(const Matrix& batch);
  void update(std::span<const double> sample);

  /// (x - mean) / sqrt(var + floor), clipped to +-clip_range.
  Vector apply(std::span<const double> x) const;

  /// Writes the normalized row into out (same length as x).
  void apply_into(std::span<const double> x, std::span<double> out) const;

  /// Normalizes every row of batch.
  Matrix apply(const Matrix& batch) const;

 private:
  friend void save_normalizer(std::ostream&, const RunningNormalizer&);
  friend RunningNormalizer load_normalizer(std::istream&);

  Vector mean_;
  Vector var_;
  Vector m2_;
  std::uint64_t count_ = 0;
  double clip_ = 5.0;
  double floor_ = 1e-8;
};

/// Text snapshot: "romo-normalizer 1", then dim/count/clip/floor, mean row,
/// m2 row.
void save_normalizer(std::ostream& out, const RunningNormalizer& norm);
RunningNormalizer load_normalizer(std::istream& in);

}  // namespace romo
