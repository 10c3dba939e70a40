#pragma once

#include <cstddef>
#include <iosfwd>
#include <span>
#include <string>
#include <vector>

#include "romo/nn/matrix.hpp"

namespace romo {

enum class Activation { Identity, Relu, Tanh };

std::string to_string(Activation activation);
Activation activation_from_string(const std::string& name);

/// Named slice of a flat parameter vector ("layer1.weight", ...).
struct ParamSegment {
  std::string name;
  std::size_t offset;
  std::size_t size;
};

/// Intermediate values of a batched forward pass, consumed by Mlp::backward.
struct MlpTrace {
  std::vector<Matrix> inputs;  // input to each layer
  std::vector<Matrix> pre;     // pre-activation of each layer
  Matrix output;
};

/// Fully connected network: ReLU on hidden layers, a configurable output
/// activation. Parameters live in one flat vector, layer by layer, each layer
/// stored as its out x in row-major weight matrix followed by its bias.
class Mlp {
 public:
  Mlp() = default;
  Mlp(std::vector<std::size_t> layer_sizes, Activation output_activation);

  /// Uniform(-1/sqrt(fan_in), 1/sqrt(fan_in)) for weights and biases.
  void init_fan_in_uniform(Rng& rng);

  std::size_t input_size() const { return sizes_.front(); }
  std::size_t output_size() const { return sizes_.back(); }
  std::size_t num_layers() const { return sizes_.size() - 1; }
  std::size_t num_params() const { return params_.size(); }
  const std::vector<std::size_t>& layer_sizes() const { return sizes_; }
  Activation output_activation() const { return output_activation_; }

  std::span<double> params() { return params_; }
  std::span<const double> params() const { return params_; }

  /// Weight matrix of a layer, out x in row-major.
  std::span<double> weights(std::size_t layer);
  std::span<const double> weights(std::size_t layer) const;
  std::span<double> bias(std::size_t layer);
  std::span<const double> bias(std::size_t layer) const;

  const std::vector<ParamSegment>& segments() const { return segments_; }

  Vector forward(std::span<const double> input) const;
  Matrix forward(const Matrix& input) const;
  Matrix forward(const Matrix& input, MlpTrace& trace) const;

  /// Reverse pass for the scalar sum_b <upstream_b, output_b>. Parameter
  /// gradients are accumulated into grad (size num_params()); the returned
  /// matrix is the gradient with respect to the input batch.
  ///
  /// pre_output_upstream, when given, is an extra gradient on the final
  /// layer's pre-activation (used for penalties on pre-tanh outputs).
  Matrix backward(const MlpTrace& trace, const Matrix& upstream, std::span<double> grad,
                  const Matrix* pre_output_upstream = nullptr) const;

 private:
  std::vector<std::size_t> sizes_{1, 1};
  Activation output_activation_ = Activation::Identity;
  std::vector<double> params_;
  std::vector<std::size_t> weight_offset_;
  std::vector<std::size_t> bias_offset_;
  std::vector<ParamSegment> segments_;
};

struct MlpGradients {
  Vector params;
  Vector input;
};

/// Single-sample reverse pass of <upstream, mlp(input)>.
MlpGradients mlp_gradients(const Mlp& mlp, std::span<const double> input,
                           std::span<const double> upstream);

// Text snapshot. Layout:
//   romo-mlp 1
//   layers <L+1> <size_0> ... <size_L>
//   output <identity|relu|tanh>
//   then for each layer: <out> rows of <in> weights, then one row of <out> biases.
// Numbers are written with 17 significant digits so a round trip is exact.
void save_mlp(std::ostream& out, const Mlp& mlp);
Mlp load_mlp(std::istream& in);

}  // namespace romo
