#include <catch2/catch_amalgamated.hpp>

#include <tsrl/eval.hpp>
#include <tsrl/runner.hpp>

#include <sstream>

using namespace tsrl;
using Catch::Matchers::WithinAbs;

namespace {

// Harness plumbing check: an env whose tracking error is identically zero.
class PerfectTrackingEnv : public EnvBase {
 public:
  PerfectTrackingEnv() : hist_(2, 3) {
    state_.proprio.command = Vec::Zero(3);
    state_.base_lin_velocity = Vec::Zero(2);
    hist_.fill(state_.proprio.flatten());
  }
  void reset() override { steps_ = 0; }
  StepResult step(const Vec&) override {
    StepResult r;
    if (++steps_ >= 10) r.termination = Termination::TimeOut;
    return r;
  }
  int action_dim() const override { return 2; }
  int obs_dim() const override { return 3; }
  int priv_dim() const override { return 5; }
  const PrivilegedState& privileged_state() const override { return state_; }
  const ObsHistory& history() const override { return hist_; }
  Vec estimator_target(bool) const override { return Vec::Zero(2); }
  void apply_velocity_delta(const Vec&) override {}
  void finish_episode() override { reset(); }
  const CurriculumState& curriculum() const override { return cur_; }
  const SampledRandomization& sampled_randomization() const override { return rand_; }
  int episode_steps() const override { return steps_; }
  double tracking_error() const override { return 0.0; }

 private:
  int steps_ = 0;
  PrivilegedState state_;
  ObsHistory hist_;
  CurriculumState cur_;
  SampledRandomization rand_;
};

RunConfig small_pointmass_config() {
  RunConfig cfg;
  cfg.n_envs = 8;
  cfg.max_episode_steps = 60;
  cfg.latent_dim = 4;
  cfg.hiddens.encoder = {12};
  cfg.hiddens.policy = {12};
  cfg.hiddens.critic = {12};
  return cfg;
}

}  // namespace

TEST_CASE("perfect tracking policy reports zero error") {
  std::vector<std::unique_ptr<EnvBase>> envs;
  envs.push_back(std::make_unique<PerfectTrackingEnv>());
  NetworkHiddens h;
  h.encoder = {4};
  h.policy = {4};
  h.critic = {4};
  NetworkSet nets = NetworkSet::create(3, 5, 3 * 3, 2, 2, 0, h, 1);
  TrackingStat stat = eval_tracking(nets, DeployEncoder::Proprioceptive, envs, 2);
  CHECK(stat.mean_error == 0.0);
  CHECK(stat.samples == 20);
}

TEST_CASE("null policy tracks at command magnitude") {
  RunConfig cfg = small_pointmass_config();
  auto envs = make_envs(cfg, 5);
  NetworkSet nets = make_networks(cfg);
  for (auto& l : nets.policy.layers) {
    l.W.setZero();
    l.b.setZero();
  }
  TrackingStat stat = eval_tracking(nets, DeployEncoder::Proprioceptive, envs, 2);
  // standing still against commands drawn from [-1,1]^2: mean error is the
  // mean command norm, about 0.77
  CHECK(stat.mean_error > 0.4);
  CHECK(stat.mean_error < 1.1);
  CHECK(stat.samples > 0);
}

TEST_CASE("evaluation leaves parameters untouched and is seed-reproducible") {
  RunConfig cfg = small_pointmass_config();
  auto envs = make_envs(cfg, 6);
  NetworkSet nets = make_networks(cfg);
  NetworkParams policy0 = nets.policy;

  TrackingStat s1 = eval_tracking(nets, DeployEncoder::Proprioceptive, envs, 1);
  auto envs2 = make_envs(cfg, 6);
  TrackingStat s2 = eval_tracking(nets, DeployEncoder::Proprioceptive, envs2, 1);
  CHECK(s1.mean_error == s2.mean_error);
  CHECK(std::memcmp(policy0.layers[0].W.data(), nets.policy.layers[0].W.data(),
                    sizeof(double) * policy0.layers[0].W.size()) == 0);
}

TEST_CASE("push survival with zero delta equals the unperturbed rate") {
  RunConfig cfg = small_pointmass_config();
  auto envs = make_envs(cfg, 7);
  NetworkSet nets = make_networks(cfg);
  double a = eval_push_survival(nets, DeployEncoder::Proprioceptive, envs, 0.0, 8,
                                cfg.max_episode_steps, 42);
  auto envs2 = make_envs(cfg, 7);
  double b = eval_push_survival(nets, DeployEncoder::Proprioceptive, envs2, 0.0, 8,
                                cfg.max_episode_steps, 42);
  CHECK(a == b);
  // the pointmass cannot fall over, so every trial survives
  CHECK_THAT(a, WithinAbs(100.0, 1e-12));
}

TEST_CASE("latent export: row counts, labels, unit norms") {
  RunConfig cfg = small_pointmass_config();
  cfg.profile = "terrain-walker";
  cfg.n_envs = 4;
  cfg.terrain_kinds = {TerrainKind::Flat, TerrainKind::Stairs};
  auto envs = make_envs(cfg, 8);
  NetworkSet nets = make_networks(cfg);

  std::vector<std::string> labels;
  for (size_t i = 0; i < envs.size(); ++i)
    labels.push_back(terrain_kind_name(cfg.terrain_kinds[i % cfg.terrain_kinds.size()]));

  std::ostringstream os;
  long rows = export_latents(nets, envs, labels, 25, os);
  CHECK(rows == 100);  // 4 envs x 25 samples

  std::istringstream is(os.str());
  std::string line;
  std::getline(is, line);
  CHECK(line.rfind("terrain,z0", 0) == 0);
  long flat = 0, stairs = 0;
  while (std::getline(is, line)) {
    std::stringstream ls(line);
    std::string label;
    std::getline(ls, label, ',');
    if (label == "flat") flat++;
    if (label == "stairs") stairs++;
    double norm2 = 0.0, v;
    char comma;
    while (ls >> v) {
      norm2 += v * v;
      ls >> comma;
    }
    CHECK(std::abs(std::sqrt(norm2) - 1.0) < 1e-6);
  }
  CHECK(flat == 50);
  CHECK(stairs == 50);
}

TEST_CASE("a linear probe separates stairs from flat latents above chance") {
  RunConfig cfg = small_pointmass_config();
  cfg.profile = "terrain-walker";
  cfg.n_envs = 8;
  cfg.latent_dim = 8;
  cfg.terrain_kinds = {TerrainKind::Flat, TerrainKind::Stairs};
  auto envs = make_envs(cfg, 9);
  for (auto& e : envs)
    if (auto* w = dynamic_cast<WalkerEnv*>(e.get()); w && w->kind() == TerrainKind::Stairs)
      {}  // stairs at level 0 already differ from flat
  NetworkSet nets = make_networks(cfg);

  std::vector<std::string> labels;
  for (size_t i = 0; i < envs.size(); ++i)
    labels.push_back(terrain_kind_name(cfg.terrain_kinds[i % cfg.terrain_kinds.size()]));
  std::ostringstream os;
  export_latents(nets, envs, labels, 60, os);

  // least-squares probe z -> {-1, +1}, evaluated in-sample
  std::vector<Vec> zs;
  std::vector<double> ys;
  std::istringstream is(os.str());
  std::string line;
  std::getline(is, line);
  while (std::getline(is, line)) {
    std::stringstream ls(line);
    std::string label;
    std::getline(ls, label, ',');
    Vec z(8);
    std::string cell;
    for (int j = 0; j < 8; ++j) {
      std::getline(ls, cell, ',');
      z[j] = std::stod(cell);
    }
    zs.push_back(z);
    ys.push_back(label == "stairs" ? 1.0 : -1.0);
  }
  int n = static_cast<int>(zs.size());
  Mat X(n, 9);
  Vec y(n);
  for (int i = 0; i < n; ++i) {
    X.row(i).head(8) = zs[i].transpose();
    X(i, 8) = 1.0;
    y[i] = ys[i];
  }
  Mat A = X.transpose() * X + 1e-6 * Mat::Identity(9, 9);
  Vec w = A.ldlt().solve(X.transpose() * y);
  int correct = 0;
  for (int i = 0; i < n; ++i)
    if ((X.row(i).dot(w) > 0.0) == (y[i] > 0.0)) correct++;
  double acc = static_cast<double>(correct) / n;
  INFO("probe accuracy " << acc);
  CHECK(acc > 0.55);
}
