#pragma once

#include <tsrl/networks.hpp>

#include <cstdint>
#include <fstream>
#include <string>
#include <vector>

namespace tsrl {

/// Binary checkpoint: versioned header then per-network spec + little-endian
/// f32 parameter blob (weights row-major, then biases, policy log_std last).
/// Training math stays f64 in memory; storage rounds to f32.

constexpr char kCheckpointMagic[8] = {'T', 'S', 'R', 'L', 'C', 'K', 'P', 'T'};
constexpr std::uint32_t kCheckpointVersion = 1;

namespace detail {

inline void put_u32(std::ostream& os, std::uint32_t v) {
  unsigned char b[4] = {static_cast<unsigned char>(v), static_cast<unsigned char>(v >> 8),
                        static_cast<unsigned char>(v >> 16), static_cast<unsigned char>(v >> 24)};
  os.write(reinterpret_cast<char*>(b), 4);
}

inline void put_u64(std::ostream& os, std::uint64_t v) {
  put_u32(os, static_cast<std::uint32_t>(v));
  put_u32(os, static_cast<std::uint32_t>(v >> 32));
}

inline void put_i32(std::ostream& os, std::int32_t v) {
  put_u32(os, static_cast<std::uint32_t>(v));
}

inline void put_f32(std::ostream& os, float f) {
  std::uint32_t v;
  std::memcpy(&v, &f, 4);
  put_u32(os, v);
}

inline void put_str(std::ostream& os, const std::string& s) {
  put_u32(os, static_cast<std::uint32_t>(s.size()));
  os.write(s.data(), static_cast<std::streamsize>(s.size()));
}

inline std::uint32_t get_u32(std::istream& is) {
  unsigned char b[4];
  is.read(reinterpret_cast<char*>(b), 4);
  if (!is) throw std::runtime_error("checkpoint: truncated file");
  return static_cast<std::uint32_t>(b[0]) | (static_cast<std::uint32_t>(b[1]) << 8) |
         (static_cast<std::uint32_t>(b[2]) << 16) | (static_cast<std::uint32_t>(b[3]) << 24);
}

inline std::uint64_t get_u64(std::istream& is) {
  std::uint64_t lo = get_u32(is);
  std::uint64_t hi = get_u32(is);
  return lo | (hi << 32);
}

inline std::int32_t get_i32(std::istream& is) {
  return static_cast<std::int32_t>(get_u32(is));
}

inline float get_f32(std::istream& is) {
  std::uint32_t v = get_u32(is);
  float f;
  std::memcpy(&f, &v, 4);
  return f;
}

inline std::string get_str(std::istream& is) {
  std::uint32_t n = get_u32(is);
  if (n > (1u << 20)) throw std::runtime_error("checkpoint: implausible string length");
  std::string s(n, '\0');
  is.read(s.data(), n);
  if (!is) throw std::runtime_error("checkpoint: truncated file");
  return s;
}

inline void put_spec(std::ostream& os, const MlpSpec& spec) {
  put_i32(os, spec.input_dim);
  put_u32(os, static_cast<std::uint32_t>(spec.hidden_dims.size()));
  for (int h : spec.hidden_dims) put_i32(os, h);
  put_i32(os, spec.output_dim);
  os.put(spec.activation == Activation::Elu ? 1 : 0);
  os.put(spec.normalize_output ? 1 : 0);
}

inline MlpSpec get_spec(std::istream& is) {
  MlpSpec spec;
  spec.input_dim = get_i32(is);
  std::uint32_t nh = get_u32(is);
  if (nh > 64) throw std::runtime_error("checkpoint: implausible layer count");
  for (std::uint32_t i = 0; i < nh; ++i) spec.hidden_dims.push_back(get_i32(is));
  spec.output_dim = get_i32(is);
  spec.activation = is.get() ? Activation::Elu : Activation::Identity;
  spec.normalize_output = is.get() != 0;
  return spec;
}

inline void put_params(std::ostream& os, const NetworkParams& p) {
  for (const auto& l : p.layers) {
    for (int r = 0; r < l.W.rows(); ++r)
      for (int c = 0; c < l.W.cols(); ++c)
        put_f32(os, static_cast<float>(l.W(r, c)));
    for (int r = 0; r < l.b.size(); ++r) put_f32(os, static_cast<float>(l.b[r]));
  }
  os.put(p.policy_log_std.size() > 0 ? 1 : 0);
  for (int r = 0; r < p.policy_log_std.size(); ++r)
    put_f32(os, static_cast<float>(p.policy_log_std[r]));
}

inline NetworkParams get_params(std::istream& is, const MlpSpec& spec) {
  NetworkParams p;
  p.layers.resize(spec.num_layers());
  for (int l = 0; l < spec.num_layers(); ++l) {
    int in = spec.layer_in(l), out = spec.layer_out(l);
    p.layers[l].W.resize(out, in);
    for (int r = 0; r < out; ++r)
      for (int c = 0; c < in; ++c) p.layers[l].W(r, c) = get_f32(is);
    p.layers[l].b.resize(out);
    for (int r = 0; r < out; ++r) p.layers[l].b[r] = get_f32(is);
  }
  if (is.get()) {
    p.policy_log_std.resize(spec.output_dim);
    for (int r = 0; r < spec.output_dim; ++r) p.policy_log_std[r] = get_f32(is);
  }
  return p;
}

}  // namespace detail

struct CheckpointHeader {
  std::uint64_t config_hash = 0;
  std::string env_profile;
  std::string mode;
};

inline void save_checkpoint(const std::string& path, const NetworkSet& nets,
                            const CheckpointHeader& header) {
  std::ofstream os(path, std::ios::binary);
  if (!os) throw std::runtime_error("cannot open checkpoint for writing: " + path);
  os.write(kCheckpointMagic, 8);
  detail::put_u32(os, kCheckpointVersion);
  detail::put_u64(os, header.config_hash);
  detail::put_str(os, header.env_profile);
  detail::put_str(os, header.mode);
  detail::put_i32(os, nets.obs_dim);
  detail::put_i32(os, nets.priv_dim);
  detail::put_i32(os, nets.hist_dim);
  detail::put_i32(os, nets.action_dim);
  detail::put_i32(os, nets.latent_dim);
  detail::put_i32(os, nets.est_dim);

  auto put_net = [&](const std::string& name, const MlpSpec& spec,
                     const NetworkParams& p) {
    detail::put_str(os, name);
    detail::put_spec(os, spec);
    detail::put_params(os, p);
  };
  detail::put_u32(os, nets.estimator_enabled() ? 5 : 4);
  put_net("enc_teacher", nets.enc_teacher_spec, nets.enc_teacher);
  put_net("enc_student", nets.enc_student_spec, nets.enc_student);
  put_net("policy", nets.policy_spec, nets.policy);
  put_net("critic", nets.critic_spec, nets.critic);
  if (nets.estimator_enabled())
    put_net("estimator", nets.estimator_spec, nets.estimator);
  if (!os) throw std::runtime_error("checkpoint write failed: " + path);
}

inline CheckpointHeader load_checkpoint(const std::string& path, NetworkSet& nets) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw std::runtime_error("cannot open checkpoint: " + path);
  char magic[8];
  is.read(magic, 8);
  if (!is || std::memcmp(magic, kCheckpointMagic, 8) != 0)
    throw std::runtime_error("not a tsrl checkpoint: " + path);
  std::uint32_t version = detail::get_u32(is);
  if (version != kCheckpointVersion)
    throw std::runtime_error(
        strfmt("unsupported checkpoint version %u in %s", version, path.c_str()));

  CheckpointHeader header;
  header.config_hash = detail::get_u64(is);
  header.env_profile = detail::get_str(is);
  header.mode = detail::get_str(is);

  nets = NetworkSet{};
  nets.obs_dim = detail::get_i32(is);
  nets.priv_dim = detail::get_i32(is);
  nets.hist_dim = detail::get_i32(is);
  nets.action_dim = detail::get_i32(is);
  nets.latent_dim = detail::get_i32(is);
  nets.est_dim = detail::get_i32(is);

  std::uint32_t n_nets = detail::get_u32(is);
  if (n_nets < 4 || n_nets > 5)
    throw std::runtime_error("checkpoint: unexpected network count");
  for (std::uint32_t k = 0; k < n_nets; ++k) {
    std::string name = detail::get_str(is);
    MlpSpec spec = detail::get_spec(is);
    NetworkParams params = detail::get_params(is, spec);
    if (name == "enc_teacher") { nets.enc_teacher_spec = spec; nets.enc_teacher = params; }
    else if (name == "enc_student") { nets.enc_student_spec = spec; nets.enc_student = params; }
    else if (name == "policy") { nets.policy_spec = spec; nets.policy = params; }
    else if (name == "critic") { nets.critic_spec = spec; nets.critic = params; }
    else if (name == "estimator") { nets.estimator_spec = spec; nets.estimator = params; }
    else throw std::runtime_error("checkpoint: unknown network '" + name + "'");
  }
  if (!nets.policy.finite() || !nets.enc_teacher.finite() ||
      !nets.enc_student.finite() || !nets.critic.finite())
    throw std::runtime_error("checkpoint: non-finite parameters");

  nets.opt_enc_teacher = AdamState::for_params(nets.enc_teacher);
  nets.opt_enc_student = AdamState::for_params(nets.enc_student);
  nets.opt_policy = AdamState::for_params(nets.policy);
  nets.opt_critic = AdamState::for_params(nets.critic);
  if (nets.estimator_enabled())
    nets.opt_estimator = AdamState::for_params(nets.estimator);
  return header;
}

}  // namespace tsrl
