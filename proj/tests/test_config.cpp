#include <catch2/catch_amalgamated.hpp>

#include <tsrl/config.hpp>

using namespace tsrl;

TEST_CASE("defaults are valid and carry the published hyperparameters") {
  RunConfig cfg;
  cfg.validate();

  CHECK(cfg.algo.clip_range == 0.2);
  CHECK(cfg.algo.entropy_coef == 0.01);
  CHECK(cfg.algo.gamma == 0.99);
  CHECK(cfg.algo.gae_lambda == 0.95);
  CHECK(cfg.algo.desired_kl == 0.01);
  CHECK(cfg.algo.ppo_epochs == 5);
  CHECK(cfg.algo.minibatches == 4);  // batch 8192x24 over mini-batch 8192x6
  CHECK(cfg.algo.rec_epochs == 5);
  CHECK(cfg.algo.lr_rec == 1e-3);
  CHECK(cfg.algo.steps_per_iter == 24);
  CHECK(cfg.latent_dim == 32);
  CHECK(cfg.history == 5);
  CHECK(cfg.dt == 0.02);
  CHECK(cfg.max_episode_steps == 1000);
  CHECK(cfg.n_envs == 256);

  CHECK(cfg.rand.link_mass_min == 0.8);
  CHECK(cfg.rand.link_mass_max == 1.2);
  CHECK(cfg.rand.payload_min == -1.0);
  CHECK(cfg.rand.payload_max == 3.0);
  CHECK(cfg.rand.friction_min == 0.2);
  CHECK(cfg.rand.friction_max == 1.7);
  CHECK(cfg.rand.restitution_min == 0.25);
  CHECK(cfg.rand.restitution_max == 0.75);
  CHECK(cfg.rand.action_delay_max == 0.020);
}

TEST_CASE("empty config text yields defaults") {
  RunConfig cfg = parse_config("");
  CHECK(cfg.n_envs == 256);
  CHECK(cfg.profile == "ctx-pointmass");
}

TEST_CASE("serialize / parse round trip is lossless") {
  RunConfig cfg;
  cfg.seed = 987654321;
  cfg.n_envs = 48;
  cfg.profile = "terrain-walker";
  cfg.reward_profile = "biped";
  cfg.reward = biped_reward_config();
  cfg.reward.desired_height = 0.47;
  cfg.algo.mode = TrainMode::TwoStage;
  cfg.algo.lr_init = 3.3e-4;
  cfg.hiddens.encoder = {96, 48};
  cfg.terrain_kinds = {TerrainKind::Stairs, TerrainKind::Flat};
  cfg.rand.accel_bias_min = -0.123456789012345;

  std::string text = serialize_config(cfg);
  RunConfig back = parse_config(text);
  CHECK(serialize_config(back) == text);
  CHECK(config_hash(back) == config_hash(cfg));
}

TEST_CASE("unknown keys and bad values name the offender") {
  RunConfig cfg;
  CHECK_THROWS_WITH(parse_config_text("algo.warp_speed = 9\n", cfg),
                    Catch::Matchers::ContainsSubstring("algo.warp_speed"));
  CHECK_THROWS_WITH(parse_config_text("algo.gamma = fast\n", cfg),
                    Catch::Matchers::ContainsSubstring("algo.gamma"));
  CHECK_THROWS_AS(parse_config_text("no equals sign here\n", cfg),
                  std::invalid_argument);
}

TEST_CASE("reward profile applies before explicit overrides, any order") {
  RunConfig cfg = parse_config(
      "reward.lin_vel_z = -0.7\n"
      "env.reward_profile = biped\n");
  CHECK(cfg.reward.lin_vel_z == -0.7);       // explicit wins
  CHECK(cfg.reward.orientation_xy == -5.0);  // from the biped profile
  CHECK(cfg.reward.feet_distance == -100.0);
}

TEST_CASE("comments and blank lines are ignored") {
  RunConfig cfg = parse_config(
      "# a comment\n"
      "\n"
      "env.n_envs = 32   # inline comment\n");
  CHECK(cfg.n_envs == 32);
}

TEST_CASE("validation rejects bad settings") {
  RunConfig cfg;
  cfg.profile = "hovercraft";
  CHECK_THROWS_AS(cfg.validate(), std::invalid_argument);
  cfg = RunConfig{};
  cfg.n_envs = 0;
  CHECK_THROWS_AS(cfg.validate(), std::invalid_argument);
  cfg = RunConfig{};
  cfg.algo.minibatches = 0;
  CHECK_THROWS_AS(cfg.validate(), std::invalid_argument);
}

TEST_CASE("config hash tracks content") {
  RunConfig a, b;
  CHECK(config_hash(a) == config_hash(b));
  b.algo.gamma = 0.995;
  CHECK(config_hash(a) != config_hash(b));
}
