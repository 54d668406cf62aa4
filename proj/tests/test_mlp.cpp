#include <catch2/catch_amalgamated.hpp>

#include <tsrl/mlp.hpp>

#include <cstring>
#include <vector>

using namespace tsrl;

namespace {

// Scalar-loop reference forward pass, kept deliberately free of Eigen and of
// the library's code path.
std::vector<double> reference_forward(const NetworkParams& p, const MlpSpec& spec,
                                      const std::vector<double>& input) {
  std::vector<double> a = input;
  for (int l = 0; l < spec.num_layers(); ++l) {
    int out = spec.layer_out(l), in = spec.layer_in(l);
    std::vector<double> y(out, 0.0);
    for (int r = 0; r < out; ++r) {
      double s = p.layers[l].b[r];
      for (int c = 0; c < in; ++c) s += p.layers[l].W(r, c) * a[c];
      y[r] = s;
    }
    if (l < spec.num_layers() - 1 && spec.activation == Activation::Elu)
      for (double& v : y) v = v > 0.0 ? v : std::exp(v) - 1.0;
    a = y;
  }
  if (spec.normalize_output) {
    double n = 0.0;
    for (double v : a) n += v * v;
    n = std::sqrt(n);
    if (n < 1e-8) {
      std::fill(a.begin(), a.end(), 0.0);
      a[0] = 1.0;
    } else {
      for (double& v : a) v /= n;
    }
  }
  return a;
}

}  // namespace

TEST_CASE("elu values") {
  CHECK(elu(0.0) == 0.0);
  CHECK(elu(2.5) == 2.5);
  // exp(-1) - 1 to double precision
  CHECK_THAT(elu(-1.0), Catch::Matchers::WithinAbs(-0.6321205588285577, 1e-12));
  CHECK(elu_deriv(3.0) == 1.0);
  CHECK_THAT(elu_deriv(-1.0), Catch::Matchers::WithinAbs(0.36787944117144233, 1e-12));
}

TEST_CASE("mlp forward identity layer") {
  MlpSpec spec{2, {}, 2, Activation::Identity, false};
  NetworkParams p;
  p.layers.push_back({Mat::Identity(2, 2), Vec::Zero(2)});
  Vec out = mlp_forward(p, spec, Vec{{3.0, 4.0}});
  CHECK(out[0] == 3.0);
  CHECK(out[1] == 4.0);

  spec.normalize_output = true;
  Vec norm = mlp_forward(p, spec, Vec{{3.0, 4.0}});
  CHECK_THAT(norm[0], Catch::Matchers::WithinAbs(0.6, 1e-15));
  CHECK_THAT(norm[1], Catch::Matchers::WithinAbs(0.8, 1e-15));
}

TEST_CASE("mlp forward matches scalar reference") {
  Rng rng(42);
  for (int trial = 0; trial < 20; ++trial) {
    MlpSpec spec;
    spec.input_dim = static_cast<int>(rng.uniform_int(1, 8));
    spec.hidden_dims = {static_cast<int>(rng.uniform_int(1, 12)),
                        static_cast<int>(rng.uniform_int(1, 12))};
    spec.output_dim = static_cast<int>(rng.uniform_int(1, 8));
    spec.activation = Activation::Elu;
    spec.normalize_output = trial % 2 == 0;
    NetworkParams p = mlp_init(spec, rng);
    std::vector<double> in(spec.input_dim);
    for (double& v : in) v = rng.normal();
    Vec in_vec = Eigen::Map<Vec>(in.data(), spec.input_dim);

    Vec got = mlp_forward(p, spec, in_vec);
    std::vector<double> want = reference_forward(p, spec, in);
    REQUIRE(got.size() == static_cast<int>(want.size()));
    for (int i = 0; i < got.size(); ++i)
      CHECK_THAT(got[i], Catch::Matchers::WithinAbs(want[i], 1e-12));
  }
}

TEST_CASE("forward pass is deterministic bitwise") {
  Rng rng(7);
  MlpSpec spec{5, {9, 6}, 4, Activation::Elu, true};
  NetworkParams p = mlp_init(spec, rng);
  Vec in = Vec::NullaryExpr(5, [&]() { return rng.normal(); });
  Vec a = mlp_forward(p, spec, in);
  Vec b = mlp_forward(p, spec, in);
  CHECK(std::memcmp(a.data(), b.data(), sizeof(double) * a.size()) == 0);
}

TEST_CASE("linear layer backward closed form") {
  MlpSpec spec{3, {}, 2, Activation::Identity, false};
  Rng rng(3);
  NetworkParams p = mlp_init(spec, rng);
  Vec x{{0.5, -1.0, 2.0}};
  MlpCache cache;
  mlp_forward(p, spec, x, &cache);
  Vec g{{1.5, -0.25}};
  MlpGrads grads = mlp_backward(p, spec, cache, Mat(g.transpose()));

  Mat want_w = g * x.transpose();
  CHECK((grads.params.layers[0].W - want_w).cwiseAbs().maxCoeff() < 1e-14);
  CHECK((grads.params.layers[0].b - g).cwiseAbs().maxCoeff() < 1e-14);
  Vec want_in = p.layers[0].W.transpose() * g;
  CHECK((grads.input.row(0).transpose() - want_in).cwiseAbs().maxCoeff() < 1e-14);
}

TEST_CASE("normalization jacobian hand value") {
  // u = (3,4), output_grad (1,0):
  // (1/5) * ((1,0) - 0.6*(0.6,0.8)) = (0.128, -0.096)
  MlpSpec spec{2, {}, 2, Activation::Identity, true};
  NetworkParams p;
  p.layers.push_back({Mat::Identity(2, 2), Vec::Zero(2)});
  MlpCache cache;
  mlp_forward(p, spec, Vec{{3.0, 4.0}}, &cache);
  MlpGrads grads = mlp_backward(p, spec, cache, Mat(Vec{{1.0, 0.0}}.transpose()));
  CHECK_THAT(grads.input(0, 0), Catch::Matchers::WithinAbs(0.128, 1e-12));
  CHECK_THAT(grads.input(0, 1), Catch::Matchers::WithinAbs(-0.096, 1e-12));
}

TEST_CASE("normalized output invariants") {
  Rng rng(11);
  MlpSpec spec{6, {8}, 5, Activation::Elu, true};
  NetworkParams p = mlp_init(spec, rng);
  for (int i = 0; i < 200; ++i) {
    Vec in = Vec::NullaryExpr(6, [&]() { return rng.normal() * 3.0; });
    MlpCache cache;
    Vec z = mlp_forward(p, spec, in, &cache);
    CHECK(std::abs(z.norm() - 1.0) <= 1e-6);

    // gradient through the normalization stays tangent to the sphere:
    // <z, dL/du> = 0
    Vec g = Vec::NullaryExpr(5, [&]() { return rng.normal(); });
    double n = cache.norms[0];
    Vec u = cache.prenorm.row(0).transpose();
    Vec tangent = (g - (u / n).dot(g) * (u / n)) / n;
    CHECK(std::abs((u / n).dot(tangent)) < 1e-8);
  }
}

TEST_CASE("degenerate normalization direction") {
  MlpSpec spec{2, {}, 3, Activation::Identity, true};
  NetworkParams p;
  p.layers.push_back({Mat::Zero(3, 2), Vec::Zero(3)});
  MlpCache cache;
  Vec z = mlp_forward(p, spec, Vec{{1.0, 1.0}}, &cache);
  CHECK(z[0] == 1.0);
  CHECK(z[1] == 0.0);
  CHECK(z[2] == 0.0);
  MlpGrads grads = mlp_backward(p, spec, cache, Mat(Vec{{1.0, 1.0, 1.0}}.transpose()));
  CHECK(grads.params.layers[0].W.cwiseAbs().maxCoeff() == 0.0);
  CHECK(grads.input.cwiseAbs().maxCoeff() == 0.0);
}

TEST_CASE("dimension mismatch raises") {
  MlpSpec spec{3, {4}, 2, Activation::Elu, false};
  Rng rng(1);
  NetworkParams p = mlp_init(spec, rng);
  CHECK_THROWS_AS(mlp_forward(p, spec, Vec{{1.0, 2.0}}), std::invalid_argument);
  MlpCache stale;
  CHECK_THROWS_AS(mlp_backward(p, spec, stale, Mat::Zero(1, 2)), std::logic_error);
}

TEST_CASE("batched forward equals per-row forward") {
  Rng rng(23);
  MlpSpec spec{4, {7, 5}, 3, Activation::Elu, true};
  NetworkParams p = mlp_init(spec, rng);
  Mat X = Mat::NullaryExpr(6, 4, [&]() { return rng.normal(); });
  Mat Y = mlp_forward(p, spec, X);
  for (int i = 0; i < X.rows(); ++i) {
    Vec yi = mlp_forward(p, spec, Vec(X.row(i).transpose()));
    CHECK((Y.row(i).transpose() - yi).cwiseAbs().maxCoeff() < 1e-14);
  }
}
