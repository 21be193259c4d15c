#pragma once

// Seeded Monte Carlo estimator of the average BLERs by direct simulation of
// Rayleigh block fading, HARQ-CC accumulation over exactly T rounds and the
// normal-approximation block error probability.

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdint>
#include <functional>
#include <span>
#include <stdexcept>
#include <thread>
#include <vector>

#include "nomaharq/analytic.hpp"
#include "nomaharq/errors.hpp"
#include "nomaharq/model.hpp"
#include "nomaharq/solver.hpp"

namespace nomaharq::mc {

[[nodiscard]] inline constexpr std::uint64_t splitmix64(std::uint64_t x) noexcept {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

/// Counter-based generator: draw `i` of stream `s` under seed `k` is a pure
/// function of (k, s, i), so any trial can be regenerated in isolation and
/// the sample set does not depend on how trials are split across workers.
class CounterStream {
 public:
  CounterStream(std::uint64_t seed, std::uint64_t stream) noexcept
      : key_(splitmix64(seed) ^ splitmix64(stream * 0xd1342543de82ef95ULL + 0x2545f4914f6cdd1dULL)) {}

  [[nodiscard]] std::uint64_t bits(std::uint64_t counter) const noexcept {
    return splitmix64(key_ + counter * 0x9e3779b97f4a7c15ULL);
  }

  /// Uniform on [0, 1) with 53 random bits.
  [[nodiscard]] double uniform(std::uint64_t counter) const noexcept {
    return static_cast<double>(bits(counter) >> 11) * 0x1.0p-53;
  }

  /// Unit-mean exponential by inversion.
  [[nodiscard]] double exponential(std::uint64_t counter) const noexcept {
    return -std::log1p(-uniform(counter));
  }

 private:
  std::uint64_t key_;
};

/// `count` unit-mean exponential variates (|h|^2 for h ~ CN(0,1)) from one stream.
[[nodiscard]] inline std::vector<double> sample_channel_power(std::uint64_t seed,
                                                              std::uint64_t stream,
                                                              std::size_t count) {
  if (count == 0) throw DomainError("sample_channel_power: count must be >= 1");
  const CounterStream rng(seed, stream);
  std::vector<double> out(count);
  for (std::size_t i = 0; i < count; ++i) out[i] = rng.exponential(i);
  return out;
}

/// Streaming mean/variance (Welford) with Chan's pairwise merge.
class RunningStats {
 public:
  void add(double x) noexcept {
    ++n_;
    const double d = x - mean_;
    mean_ += d / static_cast<double>(n_);
    m2_ += d * (x - mean_);
  }

  void merge(const RunningStats& o) noexcept {
    if (o.n_ == 0) return;
    if (n_ == 0) {
      *this = o;
      return;
    }
    const double n = static_cast<double>(n_ + o.n_);
    const double d = o.mean_ - mean_;
    mean_ += d * static_cast<double>(o.n_) / n;
    m2_ += o.m2_ + d * d * static_cast<double>(n_) * static_cast<double>(o.n_) / n;
    n_ += o.n_;
  }

  [[nodiscard]] std::uint64_t count() const noexcept { return n_; }
  [[nodiscard]] double mean() const noexcept { return mean_; }
  [[nodiscard]] double variance() const noexcept {
    return n_ > 1 ? m2_ / static_cast<double>(n_ - 1) : 0.0;
  }
  [[nodiscard]] double std_err() const noexcept {
    return n_ > 0 ? std::sqrt(variance() / static_cast<double>(n_)) : 0.0;
  }

 private:
  std::uint64_t n_ = 0;
  double mean_ = 0.0;
  double m2_ = 0.0;
};

struct McConfig {
  std::uint64_t seed = 1;
  std::uint64_t trials = 1'000'000;
  /// Trials per work unit; units are reduced in index order.
  std::uint64_t batch = 65'536;
  /// Worker threads; 0 picks hardware concurrency. Does not affect results.
  unsigned threads = 0;

  void validate() const {
    if (trials < 1) throw ConfigError("Monte Carlo: trials must be >= 1");
    if (batch < 1) throw ConfigError("Monte Carlo: batch must be >= 1");
  }
};

struct McReport {
  BlerEstimate eps11;
  BlerEstimate eps12;
  BlerEstimate eps22;
  BlerEstimate eps1;  ///< joint: per-trial eps12 + (1 - eps12) eps11
  BlerEstimate eps2;
  /// Product-of-averages combination eps12 + (1 - eps12) eps11 of the means,
  /// for comparison with the closed-form surrogate.
  double eps1_product = 0.0;
  std::uint64_t trials_used = 0;
};

namespace detail {

struct TrialAccumulator {
  RunningStats e11, e12, e22, e1;

  void merge(const TrialAccumulator& o) noexcept {
    e11.merge(o.e11);
    e12.merge(o.e12);
    e22.merge(o.e22);
    e1.merge(o.e1);
  }
};

/// Runs `units` work items on up to `threads` workers; `fn(unit)` must write
/// only to its own slot.
inline void parallel_for(std::size_t units, unsigned threads,
                         const std::function<void(std::size_t)>& fn) {
  unsigned workers = threads != 0 ? threads : std::max(1u, std::thread::hardware_concurrency());
  workers = static_cast<unsigned>(std::min<std::size_t>(workers, units));
  if (workers <= 1) {
    for (std::size_t u = 0; u < units; ++u) fn(u);
    return;
  }
  std::atomic<std::size_t> next{0};
  std::vector<std::jthread> pool;
  pool.reserve(workers);
  for (unsigned w = 0; w < workers; ++w) {
    pool.emplace_back([&] {
      for (std::size_t u = next.fetch_add(1); u < units; u = next.fetch_add(1)) fn(u);
    });
  }
}

}  // namespace detail

/// Monte Carlo average BLERs. Each trial draws T i.i.d. channel powers per
/// user, accumulates per-round SINRs over all T rounds (no early stop) and
/// evaluates the block error probability of every SIC stage.
[[nodiscard]] inline McReport simulate_avg_bler(const SystemConfig& cfg, const CodingConfig& coding,
                                                const McConfig& mc) {
  mc.validate();
  const int rounds = cfg.rounds();
  const double mu1 = cfg.mu(User::near);
  const double mu2 = cfg.mu(User::far);
  const double n1 = coding.n1();
  const double n2 = coding.n2();
  const double m = coding.m();

  const std::uint64_t units = (mc.trials + mc.batch - 1) / mc.batch;
  std::vector<detail::TrialAccumulator> partial(static_cast<std::size_t>(units));

  detail::parallel_for(static_cast<std::size_t>(units), mc.threads, [&](std::size_t u) {
    detail::TrialAccumulator acc;
    const std::uint64_t begin = u * mc.batch;
    const std::uint64_t end = std::min(mc.trials, begin + mc.batch);
    for (std::uint64_t trial = begin; trial < end; ++trial) {
      const CounterStream rng(mc.seed, trial);
      double g11 = 0.0;
      double g12 = 0.0;
      double g22 = 0.0;
      for (int t = 0; t < rounds; ++t) {
        const double gain1 = mu1 * rng.exponential(2 * static_cast<std::uint64_t>(t));
        const double gain2 = mu2 * rng.exponential(2 * static_cast<std::uint64_t>(t) + 1);
        g11 += near_message_sinr(cfg, gain1);
        g12 += far_message_sinr(cfg, gain1);
        g22 += far_message_sinr(cfg, gain2);
      }
      const double e11 = instantaneous_bler(g11, n1, m);
      const double e12 = instantaneous_bler(g12, n2, m);
      const double e22 = instantaneous_bler(g22, n2, m);
      acc.e11.add(e11);
      acc.e12.add(e12);
      acc.e22.add(e22);
      acc.e1.add(combine_sic_stages(e12, e11));
    }
    partial[u] = acc;
  });

  detail::TrialAccumulator total;
  for (const auto& p : partial) total.merge(p);

  McReport r;
  r.eps11 = BlerEstimate::monte_carlo(total.e11.mean(), total.e11.std_err());
  r.eps12 = BlerEstimate::monte_carlo(total.e12.mean(), total.e12.std_err());
  r.eps22 = BlerEstimate::monte_carlo(total.e22.mean(), total.e22.std_err());
  r.eps1 = BlerEstimate::monte_carlo(total.e1.mean(), total.e1.std_err());
  r.eps2 = r.eps22;
  r.eps1_product = combine_sic_stages(r.eps12.value, r.eps11.value);
  r.trials_used = total.e11.count();
  return r;
}

/// `count` seeded draws of the accumulated SINR of one SIC stage after T rounds.
[[nodiscard]] inline std::vector<double> sample_accumulated_sinr(const SystemConfig& cfg,
                                                                 Stage stage, std::size_t count,
                                                                 std::uint64_t seed) {
  if (count == 0) throw DomainError("sample_accumulated_sinr: count must be >= 1");
  const double mu = cfg.mu(stage == Stage::s22 ? User::far : User::near);
  std::vector<double> out(count);
  for (std::size_t i = 0; i < count; ++i) {
    const CounterStream rng(seed, i);
    double acc = 0.0;
    for (int t = 0; t < cfg.rounds(); ++t) {
      const double gain = mu * rng.exponential(static_cast<std::uint64_t>(t));
      acc += stage == Stage::s11 ? near_message_sinr(cfg, gain) : far_message_sinr(cfg, gain);
    }
    out[i] = acc;
  }
  return out;
}

/// Fraction of samples <= r.
[[nodiscard]] inline double empirical_cdf(std::span<const double> samples, double r) {
  if (samples.empty()) throw DomainError("empirical_cdf: no samples");
  const auto hits = std::count_if(samples.begin(), samples.end(), [r](double s) { return s <= r; });
  return static_cast<double>(hits) / static_cast<double>(samples.size());
}

/// Kolmogorov-Smirnov distance sup |F_n - F| between the empirical CDF of
/// `samples` and a continuous reference CDF.
template <class Cdf>
[[nodiscard]] double ks_distance(std::vector<double> samples, Cdf&& cdf) {
  if (samples.empty()) throw DomainError("ks_distance: no samples");
  std::sort(samples.begin(), samples.end());
  const double n = static_cast<double>(samples.size());
  double d = 0.0;
  for (std::size_t i = 0; i < samples.size(); ++i) {
    const double f = cdf(samples[i]);
    d = std::max({d, static_cast<double>(i + 1) / n - f, f - static_cast<double>(i) / n});
  }
  return d;
}

}  // namespace nomaharq::mc
