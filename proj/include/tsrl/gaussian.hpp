#pragma once

#include <tsrl/common.hpp>

#include <cmath>

namespace tsrl {

constexpr double kLogTwoPi = 1.8378770664093453;  // log(2*pi)

/// Diagonal Gaussian over actions with a state-independent log-std vector.
/// Mean comes from the policy MLP; the log-std is a learnable parameter.
struct DiagGaussian {
  Vec mean;
  Vec log_std;

  Vec sample(Rng& rng) const {
    Vec a(mean.size());
    for (int i = 0; i < mean.size(); ++i)
      a[i] = mean[i] + std::exp(log_std[i]) * rng.normal();
    return a;
  }

  double log_prob(const Vec& action) const {
    double lp = 0.0;
    for (int i = 0; i < mean.size(); ++i) {
      double z = (action[i] - mean[i]) / std::exp(log_std[i]);
      lp += -0.5 * z * z - log_std[i] - 0.5 * kLogTwoPi;
    }
    return lp;
  }

  double entropy() const {
    double h = 0.0;
    for (int i = 0; i < mean.size(); ++i) h += 0.5 + 0.5 * kLogTwoPi + log_std[i];
    return h;
  }

  /// Analytic KL(this || other) for diagonal Gaussians.
  double kl_to(const DiagGaussian& other) const {
    double kl = 0.0;
    for (int i = 0; i < mean.size(); ++i) {
      double sp = std::exp(log_std[i]);
      double sq = std::exp(other.log_std[i]);
      double dm = mean[i] - other.mean[i];
      kl += other.log_std[i] - log_std[i] +
            (sp * sp + dm * dm) / (2.0 * sq * sq) - 0.5;
    }
    return kl;
  }
};

// Batched forms used by the trainer: rows are samples, log_std is shared.

inline Vec gaussian_log_prob_rows(const Mat& means, const Vec& log_std,
                                  const Mat& actions) {
  Vec lp = Vec::Constant(means.rows(),
                         -(0.5 * kLogTwoPi * means.cols() + log_std.sum()));
  for (int i = 0; i < means.rows(); ++i) {
    for (int j = 0; j < means.cols(); ++j) {
      double z = (actions(i, j) - means(i, j)) / std::exp(log_std[j]);
      lp[i] -= 0.5 * z * z;
    }
  }
  return lp;
}

inline double gaussian_entropy(const Vec& log_std) {
  return log_std.size() * (0.5 + 0.5 * kLogTwoPi) + log_std.sum();
}

/// Mean analytic KL between per-row behavior Gaussians and the current
/// policy (shared current log_std).
inline double gaussian_mean_kl_rows(const Mat& old_means, const Mat& old_log_stds,
                                    const Mat& new_means, const Vec& new_log_std) {
  double total = 0.0;
  for (int i = 0; i < old_means.rows(); ++i) {
    for (int j = 0; j < old_means.cols(); ++j) {
      double sp = std::exp(old_log_stds(i, j));
      double sq = std::exp(new_log_std[j]);
      double dm = old_means(i, j) - new_means(i, j);
      total += new_log_std[j] - old_log_stds(i, j) +
               (sp * sp + dm * dm) / (2.0 * sq * sq) - 0.5;
    }
  }
  return total / static_cast<double>(old_means.rows());
}

}  // namespace tsrl
