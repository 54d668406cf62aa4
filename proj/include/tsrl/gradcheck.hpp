#pragma once

#include <tsrl/mlp.hpp>

#include <functional>
#include <string>
#include <vector>

namespace tsrl {

/// Central-difference verification of the backward pass. Only mlp_forward is
/// used to form the numeric side, so the check stays independent of the
/// analytic gradient code it validates.

using BackwardFn =
    std::function<MlpGrads(const NetworkParams&, const MlpSpec&,
                           const MlpCache&, const Mat&)>;

struct GradCheckReport {
  bool pass = true;
  double worst_rel_err = 0.0;
  std::string worst_site;  // e.g. "layer 1 weights (0,3)"
  double tolerance = 1e-4;
};

namespace detail {

inline double rel_err(double analytic, double numeric) {
  double denom = std::max({1.0, std::abs(analytic), std::abs(numeric)});
  return std::abs(analytic - numeric) / denom;
}

inline void record(GradCheckReport& rep, double analytic, double numeric,
                   const std::string& site) {
  double e = rel_err(analytic, numeric);
  if (e > rep.worst_rel_err) {
    rep.worst_rel_err = e;
    rep.worst_site = site;
  }
  if (e > rep.tolerance) rep.pass = false;
}

}  // namespace detail

/// Checks d<output_grad, f(input)> for every weight, bias and input entry.
inline GradCheckReport check_mlp_gradients(
    const MlpSpec& spec, NetworkParams params, const Vec& input,
    const Vec& output_grad, double tolerance = 1e-4, double step = 1e-5,
    const BackwardFn& backward = [](const NetworkParams& p, const MlpSpec& s,
                                    const MlpCache& c, const Mat& g) {
      return mlp_backward(p, s, c, g);
    }) {
  GradCheckReport rep;
  rep.tolerance = tolerance;

  MlpCache cache;
  mlp_forward(params, spec, input, &cache);
  MlpGrads analytic = backward(params, spec, cache, Mat(output_grad.transpose()));

  auto loss = [&](const NetworkParams& p, const Vec& x) {
    return output_grad.dot(mlp_forward(p, spec, x));
  };

  for (size_t l = 0; l < params.layers.size(); ++l) {
    Mat& W = params.layers[l].W;
    for (int r = 0; r < W.rows(); ++r) {
      for (int c = 0; c < W.cols(); ++c) {
        double saved = W(r, c);
        W(r, c) = saved + step;
        double fp = loss(params, input);
        W(r, c) = saved - step;
        double fm = loss(params, input);
        W(r, c) = saved;
        detail::record(rep, analytic.params.layers[l].W(r, c),
                       (fp - fm) / (2.0 * step),
                       strfmt("layer %zu weights (%d,%d)", l, r, c));
      }
    }
    Vec& b = params.layers[l].b;
    for (int r = 0; r < b.size(); ++r) {
      double saved = b[r];
      b[r] = saved + step;
      double fp = loss(params, input);
      b[r] = saved - step;
      double fm = loss(params, input);
      b[r] = saved;
      detail::record(rep, analytic.params.layers[l].b[r],
                     (fp - fm) / (2.0 * step), strfmt("layer %zu bias (%d)", l, r));
    }
  }

  Vec x = input;
  for (int i = 0; i < x.size(); ++i) {
    double saved = x[i];
    x[i] = saved + step;
    double fp = loss(params, x);
    x[i] = saved - step;
    double fm = loss(params, x);
    x[i] = saved;
    detail::record(rep, analytic.input(0, i), (fp - fm) / (2.0 * step),
                   strfmt("input (%d)", i));
  }
  return rep;
}

struct GradCheckSuiteResult {
  int trials = 0;
  int passed = 0;
  struct Failure {
    std::uint64_t config_seed;
    std::string site;
    double rel_err;
  };
  std::vector<Failure> failures;
  bool pass() const { return trials > 0 ? failures.empty() : true; }
};

/// Random-configuration sweep: 1-3 layers, widths 1-16, ELU or identity,
/// with and without L2-normalized output.
inline GradCheckSuiteResult gradcheck_suite(
    int trials, std::uint64_t seed, double tolerance = 1e-4,
    const BackwardFn& backward = [](const NetworkParams& p, const MlpSpec& s,
                                    const MlpCache& c, const Mat& g) {
      return mlp_backward(p, s, c, g);
    }) {
  GradCheckSuiteResult result;
  result.trials = trials;
  Rng master(seed);
  for (int t = 0; t < trials; ++t) {
    std::uint64_t config_seed = master.next_u64();
    Rng rng(config_seed);
    MlpSpec spec;
    spec.input_dim = static_cast<int>(rng.uniform_int(1, 16));
    spec.output_dim = static_cast<int>(rng.uniform_int(1, 16));
    int hidden = static_cast<int>(rng.uniform_int(0, 2));
    for (int h = 0; h < hidden; ++h)
      spec.hidden_dims.push_back(static_cast<int>(rng.uniform_int(1, 16)));
    spec.activation = rng.uniform(0, 1) < 0.5 ? Activation::Elu : Activation::Identity;
    spec.normalize_output = rng.uniform(0, 1) < 0.5;

    NetworkParams params = mlp_init(spec, rng);
    Vec input = Vec::NullaryExpr(spec.input_dim, [&]() { return rng.normal(); });
    Vec grad = Vec::NullaryExpr(spec.output_dim, [&]() { return rng.normal(); });

    GradCheckReport rep =
        check_mlp_gradients(spec, params, input, grad, tolerance, 1e-5, backward);
    if (rep.pass) {
      result.passed += 1;
    } else {
      result.failures.push_back({config_seed, rep.worst_site, rep.worst_rel_err});
    }
  }
  return result;
}

}  // namespace tsrl
