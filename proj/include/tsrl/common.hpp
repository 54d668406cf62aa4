#pragma once

#include <Eigen/Dense>

#include <cstdint>
#include <cstdio>
#include <cstdlib>
#include <random>
#include <stdexcept>
#include <string>
#include <thread>
#include <vector>

namespace tsrl {

using Vec = Eigen::VectorXd;
using Mat = Eigen::MatrixXd;

/// Seeded random stream. Every environment, the trainer and the eval harness
/// own one of these; nothing in the library touches a global generator, so
/// results are reproducible regardless of scheduling.
class Rng {
 public:
  explicit Rng(std::uint64_t seed = 0) : gen_(seed) {}

  double uniform(double lo, double hi) {
    return std::uniform_real_distribution<double>(lo, hi)(gen_);
  }
  double normal(double mean = 0.0, double stddev = 1.0) {
    return std::normal_distribution<double>(mean, stddev)(gen_);
  }
  std::int64_t uniform_int(std::int64_t lo, std::int64_t hi) {  // inclusive
    return std::uniform_int_distribution<std::int64_t>(lo, hi)(gen_);
  }
  std::uint64_t next_u64() { return gen_(); }

  /// Derive an independent stream; used to hand each env its own seed.
  Rng split() { return Rng(gen_() ^ 0x9e3779b97f4a7c15ull); }

  std::mt19937_64& engine() { return gen_; }

 private:
  std::mt19937_64 gen_;
};

/// FNV-1a, used for config hashes in checkpoint headers.
inline std::uint64_t fnv1a(const std::string& s) {
  std::uint64_t h = 1469598103934665603ull;
  for (unsigned char c : s) {
    h ^= c;
    h *= 1099511628211ull;
  }
  return h;
}

enum class LogLevel { Error = 0, Warn = 1, Info = 2, Debug = 3 };

inline LogLevel log_level() {
  static LogLevel level = [] {
    const char* v = std::getenv("TSRL_LOG");
    if (!v) return LogLevel::Warn;
    std::string s(v);
    if (s == "error") return LogLevel::Error;
    if (s == "info") return LogLevel::Info;
    if (s == "debug") return LogLevel::Debug;
    return LogLevel::Warn;
  }();
  return level;
}

inline void log_msg(LogLevel lvl, const std::string& msg) {
  if (lvl > log_level()) return;
  static const char* names[] = {"error", "warn", "info", "debug"};
  std::fprintf(stderr, "[tsrl:%s] %s\n", names[static_cast<int>(lvl)],
               msg.c_str());
}

/// Run fn(i) for i in [0, n). Work is split into contiguous chunks, one per
/// worker. Callers must only write to per-index slots, which keeps the result
/// independent of the worker count.
template <typename Fn>
void parallel_for(int n, int workers, Fn&& fn) {
  if (workers <= 1 || n <= 1) {
    for (int i = 0; i < n; ++i) fn(i);
    return;
  }
  workers = std::min(workers, n);
  std::vector<std::thread> pool;
  pool.reserve(workers);
  int chunk = (n + workers - 1) / workers;
  for (int w = 0; w < workers; ++w) {
    int lo = w * chunk;
    int hi = std::min(n, lo + chunk);
    if (lo >= hi) break;
    pool.emplace_back([lo, hi, &fn] {
      for (int i = lo; i < hi; ++i) fn(i);
    });
  }
  for (auto& t : pool) t.join();
}

inline bool all_finite(const Vec& v) { return v.allFinite(); }
inline bool all_finite(const Mat& m) { return m.allFinite(); }

/// Column-wise concatenation tolerating zero-width blocks.
inline Mat hcat(std::initializer_list<const Mat*> blocks) {
  Eigen::Index rows = 0, cols = 0;
  for (const Mat* b : blocks) {
    if (b->size() > 0) rows = b->rows();
    cols += b->cols();
  }
  Mat out(rows, cols);
  Eigen::Index at = 0;
  for (const Mat* b : blocks) {
    if (b->cols() > 0) out.middleCols(at, b->cols()) = *b;
    at += b->cols();
  }
  return out;
}

/// printf-style helper (std::format is not available on this toolchain).
template <typename... Args>
std::string strfmt(const char* fmt, Args... args) {
  int n = std::snprintf(nullptr, 0, fmt, args...);
  std::string out(n > 0 ? n : 0, '\0');
  std::snprintf(out.data(), out.size() + 1, fmt, args...);
  return out;
}

}  // namespace tsrl
