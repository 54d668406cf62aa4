#pragma once

#include <tsrl/mlp.hpp>

#include <cmath>
#include <string>

namespace tsrl {

/// Bias-corrected Adam. Moments mirror the parameter shapes and start at
/// zero; step_count increments by exactly one per update.
struct AdamState {
  NetworkParams first_moment;
  NetworkParams second_moment;
  long step_count = 0;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double epsilon = 1e-8;

  static AdamState for_params(const NetworkParams& p) {
    AdamState s;
    s.first_moment = p.zeros_like();
    s.second_moment = p.zeros_like();
    return s;
  }
};

namespace detail {

inline void adam_update_block(Eigen::Ref<Mat> p, const Mat& g, Mat& m, Mat& v,
                              const AdamState& s, double lr, double bc1,
                              double bc2) {
  m = s.beta1 * m + (1.0 - s.beta1) * g;
  v = s.beta2 * v + (1.0 - s.beta2) * g.cwiseProduct(g);
  p -= lr * (m / bc1).cwiseQuotient(((v / bc2).cwiseSqrt().array() + s.epsilon).matrix());
}

}  // namespace detail

/// One descent step on `params`. Pass the ascent direction negated when
/// maximizing. Throws on non-finite gradients so a bad loss is caught at the
/// network that produced it.
inline void adam_step(NetworkParams& params, const NetworkParams& grads,
                      AdamState& state, double lr,
                      const std::string& net_name = "net") {
  if (!grads.finite())
    throw std::runtime_error("adam_step: non-finite gradient in network '" +
                             net_name + "'");
  state.step_count += 1;
  const double bc1 = 1.0 - std::pow(state.beta1, static_cast<double>(state.step_count));
  const double bc2 = 1.0 - std::pow(state.beta2, static_cast<double>(state.step_count));
  for (size_t l = 0; l < params.layers.size(); ++l) {
    detail::adam_update_block(params.layers[l].W, grads.layers[l].W,
                              state.first_moment.layers[l].W,
                              state.second_moment.layers[l].W, state, lr, bc1, bc2);
    Mat gb = grads.layers[l].b, mb = state.first_moment.layers[l].b,
        vb = state.second_moment.layers[l].b;
    Mat pb = params.layers[l].b;
    detail::adam_update_block(pb, gb, mb, vb, state, lr, bc1, bc2);
    params.layers[l].b = pb;
    state.first_moment.layers[l].b = mb;
    state.second_moment.layers[l].b = vb;
  }
  if (params.policy_log_std.size() > 0) {
    Mat gs = grads.policy_log_std, ms = state.first_moment.policy_log_std,
        vs = state.second_moment.policy_log_std;
    Mat ps = params.policy_log_std;
    detail::adam_update_block(ps, gs, ms, vs, state, lr, bc1, bc2);
    params.policy_log_std = ps;
    state.first_moment.policy_log_std = ms;
    state.second_moment.policy_log_std = vs;
  }
  if (!params.finite())
    throw std::runtime_error("adam_step: parameters of '" + net_name +
                             "' became non-finite");
}

/// Global-norm gradient clipping; returns the pre-clip norm.
inline double clip_grad_norm(NetworkParams& grads, double max_norm) {
  double norm = std::sqrt(grads.squared_norm());
  if (norm > max_norm && norm > 0.0) {
    double scale = max_norm / norm;
    for (auto& l : grads.layers) {
      l.W *= scale;
      l.b *= scale;
    }
    grads.policy_log_std *= scale;
  }
  return norm;
}

}  // namespace tsrl
