#pragma once

#include <tsrl/common.hpp>

#include <cmath>
#include <string>
#include <vector>

namespace tsrl {

enum class Activation { Elu, Identity };

/// Shape and behaviour of one dense network. Hidden layers use the configured
/// activation, the output layer is linear; encoders additionally project the
/// output onto the unit hypersphere.
struct MlpSpec {
  int input_dim = 0;
  std::vector<int> hidden_dims;
  int output_dim = 0;
  Activation activation = Activation::Elu;
  bool normalize_output = false;

  int num_layers() const { return static_cast<int>(hidden_dims.size()) + 1; }

  int layer_in(int l) const {
    return l == 0 ? input_dim : hidden_dims[l - 1];
  }
  int layer_out(int l) const {
    return l == num_layers() - 1 ? output_dim : hidden_dims[l];
  }

  void validate() const {
    if (input_dim < 1 || output_dim < 1)
      throw std::invalid_argument("MlpSpec: dimensions must be >= 1");
    for (int h : hidden_dims)
      if (h < 1) throw std::invalid_argument("MlpSpec: hidden dim must be >= 1");
  }
};

struct DenseLayer {
  Mat W;  // out x in
  Vec b;  // out
};

/// Parameter container; doubles as the gradient container since gradients
/// share the exact shapes.
struct NetworkParams {
  std::vector<DenseLayer> layers;
  Vec policy_log_std;  // size 0 unless this is a policy network

  void set_zero() {
    for (auto& l : layers) {
      l.W.setZero();
      l.b.setZero();
    }
    policy_log_std.setZero();
  }

  bool finite() const {
    for (const auto& l : layers)
      if (!l.W.allFinite() || !l.b.allFinite()) return false;
    return policy_log_std.allFinite();
  }

  double squared_norm() const {
    double s = 0.0;
    for (const auto& l : layers) s += l.W.squaredNorm() + l.b.squaredNorm();
    s += policy_log_std.squaredNorm();
    return s;
  }

  NetworkParams zeros_like() const {
    NetworkParams g;
    g.layers.reserve(layers.size());
    for (const auto& l : layers)
      g.layers.push_back({Mat::Zero(l.W.rows(), l.W.cols()), Vec::Zero(l.b.size())});
    g.policy_log_std = Vec::Zero(policy_log_std.size());
    return g;
  }

  void axpy(double a, const NetworkParams& g) {
    for (size_t l = 0; l < layers.size(); ++l) {
      layers[l].W += a * g.layers[l].W;
      layers[l].b += a * g.layers[l].b;
    }
    if (policy_log_std.size() > 0) policy_log_std += a * g.policy_log_std;
  }
};

inline double elu(double x) { return x > 0.0 ? x : std::expm1(x); }
inline double elu_deriv(double x) { return x > 0.0 ? 1.0 : std::exp(x); }

namespace detail {

inline void apply_activation(Mat& m, Activation act) {
  if (act == Activation::Identity) return;
  m = m.unaryExpr([](double x) { return elu(x); });
}

inline Mat activation_deriv(const Mat& preact, Activation act) {
  if (act == Activation::Identity) return Mat::Ones(preact.rows(), preact.cols());
  return preact.unaryExpr([](double x) { return elu_deriv(x); });
}

}  // namespace detail

constexpr double kNormEps = 1e-8;

/// Activation record produced by the forward pass; everything the backward
/// pass needs to be exact.
struct MlpCache {
  std::vector<Mat> inputs;    // per layer, N x in_l (post-activation of l-1)
  std::vector<Mat> preacts;   // per layer, N x out_l
  Mat prenorm;                // N x out, only when normalize_output
  Vec norms;                  // N, pre-normalization row norms
  int rows = 0;
};

struct MlpGrads {
  NetworkParams params;  // gradient w.r.t. weights/biases
  Mat input;             // N x input_dim
};

inline NetworkParams mlp_init(const MlpSpec& spec, Rng& rng,
                              double output_gain = 1.0,
                              bool with_log_std = false) {
  spec.validate();
  NetworkParams p;
  p.layers.resize(spec.num_layers());
  for (int l = 0; l < spec.num_layers(); ++l) {
    int in = spec.layer_in(l);
    int out = spec.layer_out(l);
    // variance-scaled uniform init: gain sqrt(2) for hidden layers
    double gain = (l == spec.num_layers() - 1) ? output_gain : std::sqrt(2.0);
    double limit = gain * std::sqrt(3.0 / in);
    p.layers[l].W = Mat::NullaryExpr(
        out, in, [&]() { return rng.uniform(-limit, limit); });
    p.layers[l].b = Vec::Zero(out);
  }
  if (with_log_std) p.policy_log_std = Vec::Zero(spec.output_dim);
  return p;
}

/// Batched forward pass; rows of `input` are independent samples.
inline Mat mlp_forward(const NetworkParams& params, const MlpSpec& spec,
                       const Mat& input, MlpCache* cache = nullptr) {
  if (input.cols() != spec.input_dim)
    throw std::invalid_argument(
        strfmt("mlp_forward: input has %ld cols, spec expects %d",
               static_cast<long>(input.cols()), spec.input_dim));
  if (static_cast<int>(params.layers.size()) != spec.num_layers())
    throw std::invalid_argument("mlp_forward: params/spec layer count mismatch");

  const int L = spec.num_layers();
  if (cache) {
    cache->inputs.assign(L, Mat());
    cache->preacts.assign(L, Mat());
    cache->rows = static_cast<int>(input.rows());
  }

  Mat a = input;
  for (int l = 0; l < L; ++l) {
    const auto& layer = params.layers[l];
    if (layer.W.cols() != a.cols())
      throw std::invalid_argument(
          strfmt("mlp_forward: layer %d expects %ld inputs, got %ld", l,
                 static_cast<long>(layer.W.cols()), static_cast<long>(a.cols())));
    if (cache) cache->inputs[l] = a;
    Mat y = a * layer.W.transpose();
    y.rowwise() += layer.b.transpose();
    if (cache) cache->preacts[l] = y;
    if (l < L - 1) detail::apply_activation(y, spec.activation);
    a = std::move(y);
  }

  if (spec.normalize_output) {
    if (cache) cache->prenorm = a;
    Vec norms = a.rowwise().norm();
    if (cache) cache->norms = norms;
    for (int i = 0; i < a.rows(); ++i) {
      if (norms[i] < kNormEps) {
        // degenerate direction: pin to the first basis vector, gradient is
        // zeroed in the backward pass
        a.row(i).setZero();
        a(i, 0) = 1.0;
      } else {
        a.row(i) /= norms[i];
      }
    }
  }
  return a;
}

inline Vec mlp_forward(const NetworkParams& params, const MlpSpec& spec,
                       const Vec& input, MlpCache* cache = nullptr) {
  Mat out = mlp_forward(params, spec, Mat(input.transpose()), cache);
  return out.row(0).transpose();
}

/// Exact gradients of <output_grad, output> w.r.t. parameters and input.
/// With normalize_output set, the L2-normalization Jacobian
/// (I - z z^T)/||u|| is applied first, so the input gradient stays tangent
/// to the sphere.
inline MlpGrads mlp_backward(const NetworkParams& params, const MlpSpec& spec,
                             const MlpCache& cache, const Mat& output_grad) {
  if (cache.rows == 0 || cache.inputs.empty())
    throw std::logic_error("mlp_backward: cache missing or stale");
  if (output_grad.rows() != cache.rows || output_grad.cols() != spec.output_dim)
    throw std::invalid_argument("mlp_backward: output_grad shape mismatch");

  const int L = spec.num_layers();
  MlpGrads out;
  out.params = params.zeros_like();

  Mat g = output_grad;  // gradient w.r.t. current layer's (post-act) output
  if (spec.normalize_output) {
    for (int i = 0; i < g.rows(); ++i) {
      double n = cache.norms[i];
      if (n < kNormEps) {
        g.row(i).setZero();
        continue;
      }
      Vec z = cache.prenorm.row(i).transpose() / n;
      Vec gi = g.row(i).transpose();
      g.row(i) = ((gi - z.dot(gi) * z) / n).transpose();
    }
  }

  for (int l = L - 1; l >= 0; --l) {
    if (l < L - 1) g = g.cwiseProduct(detail::activation_deriv(cache.preacts[l], spec.activation));
    out.params.layers[l].W = g.transpose() * cache.inputs[l];
    out.params.layers[l].b = g.colwise().sum().transpose();
    if (l > 0)
      g = g * params.layers[l].W;
    else
      out.input = g * params.layers[l].W;
  }
  return out;
}

}  // namespace tsrl
