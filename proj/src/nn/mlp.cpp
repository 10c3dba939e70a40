#include "romo/nn/mlp.hpp"

#include <algorithm>
#include <cmath>
#include <iomanip>
#include <istream>
#include <ostream>

#include "romo/kernels/kernels.hpp"

namespace romo {

std::string to_string(Activation activation) {
  switch (activation) {
    case Activation::Identity: return "identity";
    case Activation::Relu: return "relu";
    case Activation::Tanh: return "tanh";
  }
  return "identity";
}

Activation activation_from_string(const std::string& name) {
  if (name == "identity") return Activation::Identity;
  if (name == "relu") return Activation::Relu;
  if (name == "tanh") return Activation::Tanh;
  throw ContractError("unknown activation '" + name + "'");
}

Mlp::Mlp(std::vector<std::size_t> layer_sizes, Activation output_activation)
    : sizes_(std::move(layer_sizes)), output_activation_(output_activation) {
  require(sizes_.size() >= 2, "Mlp: need at least an input and an output size");
  require(std::all_of(sizes_.begin(), sizes_.end(), [](std::size_t s) { return s > 0; }),
          "Mlp: layer sizes must be positive");
  std::size_t offset = 0;
  for (std::size_t l = 0; l + 1 < sizes_.size(); ++l) {
    const std::size_t in = sizes_[l];
    const std::size_t out = sizes_[l + 1];
    weight_offset_.push_back(offset);
    segments_.push_back({"layer" + std::to_string(l) + ".weight", offset, in * out});
    offset += in * out;
    bias_offset_.push_back(offset);
    segments_.push_back({"layer" + std::to_string(l) + ".bias", offset, out});
    offset += out;
  }
  params_.assign(offset, 0.0);
}

void Mlp::init_fan_in_uniform(Rng& rng) {
  for (std::size_t l = 0; l < num_layers(); ++l) {
    const double bound = 1.0 / std::sqrt(static_cast<double>(sizes_[l]));
    std::uniform_real_distribution<double> dist(-bound, bound);
    for (double& w : weights(l)) w = dist(rng);
    for (double& b : bias(l)) b = dist(rng);
  }
}

std::span<double> Mlp::weights(std::size_t layer) {
  return {params_.data() + weight_offset_.at(layer), sizes_[layer] * sizes_[layer + 1]};
}
std::span<const double> Mlp::weights(std::size_t layer) const {
  return {params_.data() + weight_offset_.at(layer), sizes_[layer] * sizes_[layer + 1]};
}
std::span<double> Mlp::bias(std::size_t layer) {
  return {params_.data() + bias_offset_.at(layer), sizes_[layer + 1]};
}
std::span<const double> Mlp::bias(std::size_t layer) const {
  return {params_.data() + bias_offset_.at(layer), sizes_[layer + 1]};
}

namespace {

void apply_activation(Activation act, Matrix& m) {
  switch (act) {
    case Activation::Identity: break;
    case Activation::Relu: kernels::active().relu(m.size(), m.data()); break;
    case Activation::Tanh:
      for (double& v : m.values()) v = std::tanh(v);
      break;
  }
}

}  // namespace

Vector Mlp::forward(std::span<const double> input) const {
  const Matrix out = forward(Matrix::row_vector(input));
  return {out.values().begin(), out.values().end()};
}

Matrix Mlp::forward(const Matrix& input) const {
  MlpTrace trace;
  return forward(input, trace);
}

Matrix Mlp::forward(const Matrix& input, MlpTrace& trace) const {
  require(input.cols() == input_size(), "Mlp::forward: input has " + std::to_string(input.cols()) +
                                            " columns, expected " + std::to_string(input_size()));
  const auto& k = kernels::active();
  const std::size_t batch = input.rows();
  trace.inputs.assign(num_layers(), Matrix{});
  trace.pre.assign(num_layers(), Matrix{});
  trace.inputs[0] = input;
  for (std::size_t l = 0; l < num_layers(); ++l) {
    const std::size_t in = sizes_[l];
    const std::size_t out = sizes_[l + 1];
    const Matrix& x = trace.inputs[l];
    // W is out x in; the kernel wants W^T so each output row is a sum of
    // broadcast inputs times contiguous weight rows.
    Matrix wt(in, out);
    const auto w = weights(l);
    for (std::size_t o = 0; o < out; ++o) {
      for (std::size_t i = 0; i < in; ++i) wt(i, o) = w[o * in + i];
    }
    Matrix z(batch, out);
    const auto b = bias(l);
    for (std::size_t r = 0; r < batch; ++r) std::copy(b.begin(), b.end(), z.row(r).begin());
    k.gemm_acc(batch, out, in, x.data(), in, wt.data(), out, z.data(), out);
    trace.pre[l] = z;
    const bool last = l + 1 == num_layers();
    apply_activation(last ? output_activation_ : Activation::Relu, z);
    if (last) {
      trace.output = std::move(z);
    } else {
      trace.inputs[l + 1] = std::move(z);
    }
  }
  return trace.output;
}

Matrix Mlp::backward(const MlpTrace& trace, const Matrix& upstream, std::span<double> grad,
                     const Matrix* pre_output_upstream) const {
  require(grad.size() == num_params(), "Mlp::backward: gradient buffer has wrong size");
  require(trace.pre.size() == num_layers(), "Mlp::backward: trace does not match network");
  const std::size_t batch = trace.output.rows();
  require(upstream.rows() == batch && upstream.cols() == output_size(),
          "Mlp::backward: upstream shape does not match output");
  if (pre_output_upstream != nullptr) {
    require(pre_output_upstream->rows() == batch && pre_output_upstream->cols() == output_size(),
            "Mlp::backward: pre-output upstream shape does not match output");
  }
  const auto& k = kernels::active();

  Matrix delta = upstream;
  switch (output_activation_) {
    case Activation::Identity: break;
    case Activation::Relu: k.relu_backward(delta.size(), trace.pre.back().data(), delta.data()); break;
    case Activation::Tanh: {
      const auto y = trace.output.values();
      auto d = delta.values();
      for (std::size_t i = 0; i < d.size(); ++i) d[i] *= 1.0 - y[i] * y[i];
      break;
    }
  }
  if (pre_output_upstream != nullptr) k.axpy(delta.size(), 1.0, pre_output_upstream->data(), delta.data());

  for (std::size_t l = num_layers(); l-- > 0;) {
    const std::size_t in = sizes_[l];
    const std::size_t out = sizes_[l + 1];
    const Matrix& x = trace.inputs[l];

    // dW += delta^T x ; db += column sums of delta
    const Matrix delta_t = delta.transposed();
    k.gemm_acc(out, in, batch, delta_t.data(), batch, x.data(), in, grad.data() + weight_offset_[l], in);
    double* db = grad.data() + bias_offset_[l];
    for (std::size_t r = 0; r < batch; ++r) k.axpy(out, 1.0, delta.row(r).data(), db);

    // dX = delta W
    Matrix dx(batch, in);
    k.gemm_acc(batch, in, out, delta.data(), out, weights(l).data(), in, dx.data(), in);
    if (l > 0) k.relu_backward(dx.size(), trace.pre[l - 1].data(), dx.data());
    delta = std::move(dx);
  }
  return delta;
}

MlpGradients mlp_gradients(const Mlp& mlp, std::span<const double> input,
                           std::span<const double> upstream) {
  require(upstream.size() == mlp.output_size(), "mlp_gradients: upstream length " +
                                                    std::to_string(upstream.size()) + " != output size " +
                                                    std::to_string(mlp.output_size()));
  MlpTrace trace;
  mlp.forward(Matrix::row_vector(input), trace);
  MlpGradients g;
  g.params.assign(mlp.num_params(), 0.0);
  const Matrix dx = mlp.backward(trace, Matrix::row_vector(upstream), g.params);
  g.input.assign(dx.values().begin(), dx.values().end());
  return g;
}

void save_mlp(std::ostream& out, const Mlp& mlp) {
  const auto& sizes = mlp.layer_sizes();
  out << "romo-mlp 1\nlayers " << sizes.size();
  for (std::size_t s : sizes) out << ' ' << s;
  out << "\noutput " << to_string(mlp.output_activation()) << '\n';
  out << std::setprecision(17);
  for (std::size_t l = 0; l < mlp.num_layers(); ++l) {
    const std::size_t in = sizes[l];
    const auto w = mlp.weights(l);
    for (std::size_t o = 0; o < sizes[l + 1]; ++o) {
      for (std::size_t i = 0; i < in; ++i) out << (i ? " " : "") << w[o * in + i];
      out << '\n';
    }
    const auto b = mlp.bias(l);
    for (std::size_t o = 0; o < b.size(); ++o) out << (o ? " " : "") << b[o];
    out << '\n';
  }
}

Mlp load_mlp(std::istream& in) {
  std::string tag;
  int version = 0;
  in >> tag >> version;
  require(in && tag == "romo-mlp" && version == 1, "load_mlp: not a romo-mlp v1 snapshot");
  std::size_t count = 0;
  in >> tag >> count;
  require(in && tag == "layers" && count >= 2, "load_mlp: bad layers header");
  std::vector<std::size_t> sizes(count);
  for (auto& s : sizes) in >> s;
  std::string act;
  in >> tag >> act;
  require(in && tag == "output", "load_mlp: bad output header");
  Mlp mlp(sizes, activation_from_string(act));
  for (double& p : mlp.params()) in >> p;
  require(static_cast<bool>(in), "load_mlp: truncated parameter data");
  return mlp;
}

}  // namespace romo
