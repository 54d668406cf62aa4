#include <catch2/catch_amalgamated.hpp>

#include <tsrl/checkpoint.hpp>

#include <cstdio>
#include <filesystem>
#include <fstream>

using namespace tsrl;

namespace {

NetworkSet sample_nets(std::uint64_t seed, int est_dim = 0) {
  NetworkHiddens h;
  h.encoder = {10, 6};
  h.policy = {8};
  h.critic = {8};
  h.estimator = {8};
  return NetworkSet::create(7, 13, 42, 2, 8, est_dim, h, seed);
}

std::string temp_path(const char* name) {
  return (std::filesystem::temp_directory_path() / name).string();
}

double max_param_diff(const NetworkParams& a, const NetworkParams& b) {
  double worst = 0.0;
  for (size_t l = 0; l < a.layers.size(); ++l) {
    worst = std::max(worst, (a.layers[l].W - b.layers[l].W).cwiseAbs().maxCoeff());
    worst = std::max(worst, (a.layers[l].b - b.layers[l].b).cwiseAbs().maxCoeff());
  }
  if (a.policy_log_std.size() > 0)
    worst = std::max(worst, (a.policy_log_std - b.policy_log_std).cwiseAbs().maxCoeff());
  return worst;
}

}  // namespace

TEST_CASE("checkpoint round trip within f32 rounding") {
  NetworkSet nets = sample_nets(404);
  CheckpointHeader header;
  header.config_hash = 0xdeadbeefcafe1234ull;
  header.env_profile = "ctx-pointmass";
  header.mode = "concurrent";

  std::string path = temp_path("tsrl_test_roundtrip.ckpt");
  save_checkpoint(path, nets, header);

  NetworkSet loaded;
  CheckpointHeader back = load_checkpoint(path, loaded);
  CHECK(back.config_hash == header.config_hash);
  CHECK(back.env_profile == "ctx-pointmass");
  CHECK(back.mode == "concurrent");
  CHECK(loaded.latent_dim == 8);
  CHECK(loaded.obs_dim == 7);

  // f32 storage: absolute error bounded by ulp of the stored magnitude
  CHECK(max_param_diff(loaded.policy, nets.policy) < 1e-6);
  CHECK(max_param_diff(loaded.enc_teacher, nets.enc_teacher) < 1e-6);
  CHECK(max_param_diff(loaded.enc_student, nets.enc_student) < 1e-6);
  CHECK(max_param_diff(loaded.critic, nets.critic) < 1e-6);

  // loaded networks evaluate
  Rng rng(3);
  Vec probe = Vec::NullaryExpr(13, [&]() { return rng.normal(); });
  Vec z = mlp_forward(loaded.enc_teacher, loaded.enc_teacher_spec, probe);
  CHECK(std::abs(z.norm() - 1.0) < 1e-6);
  std::remove(path.c_str());
}

TEST_CASE("estimator head persists when enabled") {
  NetworkSet nets = sample_nets(7, /*est_dim=*/4);
  CheckpointHeader header;
  header.env_profile = "terrain-walker";
  header.mode = "estimator_net";
  std::string path = temp_path("tsrl_test_est.ckpt");
  save_checkpoint(path, nets, header);
  NetworkSet loaded;
  load_checkpoint(path, loaded);
  CHECK(loaded.est_dim == 4);
  CHECK(loaded.estimator_enabled());
  CHECK(max_param_diff(loaded.estimator, nets.estimator) < 1e-6);
  std::remove(path.c_str());
}

TEST_CASE("header mismatches reject loudly") {
  NetworkSet nets = sample_nets(11);
  CheckpointHeader header;
  std::string path = temp_path("tsrl_test_bad.ckpt");
  save_checkpoint(path, nets, header);

  // corrupt the magic
  {
    std::fstream f(path, std::ios::in | std::ios::out | std::ios::binary);
    f.seekp(0);
    f.write("NOTACKPT", 8);
  }
  NetworkSet loaded;
  CHECK_THROWS_WITH(load_checkpoint(path, loaded),
                    Catch::Matchers::ContainsSubstring("not a tsrl checkpoint"));

  // corrupt the version
  save_checkpoint(path, nets, header);
  {
    std::fstream f(path, std::ios::in | std::ios::out | std::ios::binary);
    f.seekp(8);
    char bad[4] = {99, 0, 0, 0};
    f.write(bad, 4);
  }
  CHECK_THROWS_WITH(load_checkpoint(path, loaded),
                    Catch::Matchers::ContainsSubstring("version"));

  // truncate
  save_checkpoint(path, nets, header);
  std::filesystem::resize_file(path, 64);
  CHECK_THROWS_AS(load_checkpoint(path, loaded), std::runtime_error);

  CHECK_THROWS_AS(load_checkpoint(temp_path("does_not_exist.ckpt"), loaded),
                  std::runtime_error);
  std::remove(path.c_str());
}
