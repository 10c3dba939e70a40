#include "romo/nn/normalizer.hpp"

#include <algorithm>
#include <cmath>
#include <iomanip>
#include <istream>
#include <ostream>

namespace romo {

RunningNormalizer::RunningNormalizer(std::size_t dim, double clip_range, double var_floor)
    : mean_(dim, 0.0), var_(dim, 1.0), m2_(dim, 0.0), clip_(clip_range), floor_(var_floor) {
  require(clip_range > 0.0 && var_floor > 0.0, "RunningNormalizer: clip and floor must be positive");
}

void RunningNormalizer::update(const Matrix& batch) {
  if (batch.rows() == 0) return;
  require(batch.cols() == dim(), "RunningNormalizer::update: batch has " + std::to_string(batch.cols()) +
                                     " columns, expected " + std::to_string(dim()));
  const double nb = static_cast<double>(batch.rows());
  const double na = static_cast<double>(count_);
  const double n = na + nb;
  for (std::size_t d = 0; d < dim(); ++d) {
    double sum = 0.0;
    for (std::size_t r = 0; r < batch.rows(); ++r) sum += batch(r, d);
    const double mean_b = sum / nb;
    double m2_b = 0.0;
    for (std::size_t r = 0; r < batch.rows(); ++r) {
      const double dev = batch(r, d) - mean_b;
      m2_b += dev * dev;
    }
    const double delta = mean_b - mean_[d];
    mean_[d] += delta * nb / n;
    m2_[d] += m2_b + delta * delta * na * nb / n;
    var_[d] = std::max(m2_[d] / n, floor_);
  }
  count_ += batch.rows();
}

void RunningNormalizer::update(std::span<const double> sample) { update(Matrix::row_vector(sample)); }

void RunningNormalizer::apply_into(std::span<const double> x, std::span<double> out) const {
  if (x.size() != dim() || out.size() != dim())
    throw ContractError("RunningNormalizer::apply: vector has " + std::to_string(x.size()) + " entries, expected " +
                        std::to_string(dim()));
  for (std::size_t d = 0; d < dim(); ++d) {
    const double z = (x[d] - mean_[d]) * (1.0 / std::sqrt(var_[d] + floor_));
    out[d] = std::clamp(z, -clip_, clip_);
  }
}

Vector RunningNormalizer::apply(std::span<const double> x) const {
  Vector out(x.size());
  apply_into(x, out);
  return out;
}

Matrix RunningNormalizer::apply(const Matrix& batch) const {
  require(batch.cols() == dim(), "RunningNormalizer::apply: batch has " + std::to_string(batch.cols()) +
                                     " columns, expected " + std::to_string(dim()));
  Vector scale(dim());
  for (std::size_t d = 0; d < dim(); ++d) scale[d] = 1.0 / std::sqrt(var_[d] + floor_);
  Matrix out(batch.rows(), batch.cols());
  for (std::size_t r = 0; r < batch.rows(); ++r) {
    const auto x = batch.row(r);
    auto y = out.row(r);
    for (std::size_t d = 0; d < dim(); ++d) y[d] = std::clamp((x[d] - mean_[d]) * scale[d], -clip_, clip_);
  }
  return out;
}

void save_normalizer(std::ostream& out, const RunningNormalizer& norm) {
  out << "romo-normalizer 1\n"
      << norm.dim() << ' ' << norm.count_ << ' ' << std::setprecision(17) << norm.clip_ << ' ' << norm.floor_
      << '\n';
  for (std::size_t d = 0; d < norm.dim(); ++d) out << (d ? " " : "") << norm.mean_[d];
  out << '\n';
  for (std::size_t d = 0; d < norm.dim(); ++d) out << (d ? " " : "") << norm.m2_[d];
  out << '\n';
}

RunningNormalizer load_normalizer(std::istream& in) {
  std::string tag;
  int version = 0;
  in >> tag >> version;
  require(in && tag == "romo-normalizer" && version == 1, "load_normalizer: not a romo-normalizer v1 snapshot");
  std::size_t dim = 0;
  std::uint64_t count = 0;
  double clip = 0.0;
  double floor = 0.0;
  in >> dim >> count >> clip >> floor;
  RunningNormalizer norm(dim, clip, floor);
  for (double& m : norm.mean_) in >> m;
  for (double& m : norm.m2_) in >> m;
  require(static_cast<bool>(in), "load_normalizer: truncated data");
  norm.count_ = count;
  for (std::size_t d = 0; d < dim; ++d) {
    norm.var_[d] = count == 0 ? 1.0 : std::max(norm.m2_[d] / static_cast<double>(count), floor);
  }
  return norm;
}

}  // namespace romo
