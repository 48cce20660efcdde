#pragma once

// Ensemble estimation of the finite-horizon safety probability
// P[min_{t <= T} h(x_t) > 0] with Wilson score intervals.

#include <algorithm>
#include <array>
#include <atomic>
#include <cmath>
#include <cstdint>
#include <exception>
#include <string>
#include <thread>
#include <utility>
#include <vector>

#include "szcbf/control.hpp"
#include "szcbf/errors.hpp"
#include "szcbf/safety.hpp"
#include "szcbf/sde.hpp"

namespace szcbf {

struct McConfig {
  std::size_t n_paths = 200;
  double T = 100.0;
  double dt = 1e-3;
  std::uint64_t seed = 1;
  ErrorState x0{0.5, 0.5, 0.0};
  Mode mode = Mode::Tra;
  unsigned threads = 0;  // 0: hardware concurrency; never affects the result

  void validate() const {
    if (n_paths == 0) throw ConfigError("n_paths must be >= 1");
    if (!(T > 0.0) || !(dt > 0.0) || dt > T) throw ConfigError("need T > 0 and 0 < dt <= T");
    if (!x0.finite()) throw ConfigError("x0 must be finite");
  }
};

struct Interval {
  double lo = 0.0;
  double hi = 1.0;
};

/// Wilson score interval for k successes out of n at normal quantile z.
inline Interval wilson_interval(std::size_t k, std::size_t n, double z = 1.959963984540054) {
  if (n == 0 || k > n) throw InvalidInput("wilson_interval: need 0 <= k <= n, n >= 1");
  const double nn = static_cast<double>(n);
  const double p = static_cast<double>(k) / nn;
  const double z2 = z * z;
  const double denom = 1.0 + z2 / nn;
  const double centre = (p + z2 / (2.0 * nn)) / denom;
  const double half = z * std::sqrt(p * (1.0 - p) / nn + z2 / (4.0 * nn * nn)) / denom;
  // The end points are exact at k = 0 and k = n; rounding would otherwise leave ~1e-17 gaps.
  return {k == 0 ? 0.0 : std::max(0.0, centre - half), k == n ? 1.0 : std::min(1.0, centre + half)};
}

/// Linear-interpolation quantile of an ascending-sorted sample.
inline double sorted_quantile(const std::vector<double>& sorted, double q) {
  if (sorted.empty()) throw InvalidInput("quantile of empty sample");
  const double pos = q * static_cast<double>(sorted.size() - 1);
  const auto i = static_cast<std::size_t>(std::floor(pos));
  const std::size_t j = std::min(i + 1, sorted.size() - 1);
  return sorted[i] + (pos - static_cast<double>(i)) * (sorted[j] - sorted[i]);
}

inline constexpr std::array<double, 7> kMinHQuantiles{0.0, 0.05, 0.25, 0.5, 0.75, 0.95, 1.0};

struct McReport {
  Mode mode = Mode::Tra;
  std::size_t n_paths = 0;
  std::size_t n_safe = 0;
  double safe_fraction = 0.0;
  double wilson_lo = 0.0;
  double wilson_hi = 1.0;
  std::array<double, kMinHQuantiles.size()> min_h_quantiles{};
  double theoretical_lb = 0.0;
  double T = 0.0;
  double dt = 0.0;
  std::uint64_t seed = 0;
  std::vector<double> min_h;  // per path, indexed by stream id
  std::vector<std::string> warnings;

  /// Half-width used for the lower-bound consistency check.
  [[nodiscard]] double upper_half_width() const { return wilson_hi - safe_fraction; }
};

inline constexpr const char* kHorizonNote =
    "safe means min h > 0 on the simulated grid over [0, T]; this finite-horizon event contains the "
    "infinite-horizon one, so the certified probability is a lower bound for it as well";

/// Runs cfg.n_paths independent paths with stream_id = path index.
inline McReport estimate_safety(const McConfig& cfg, const ClosedLoop& cl, double theoretical_lb) {
  cfg.validate();
  cl.comp.validate();
  McReport rep;
  rep.mode = cfg.mode;
  rep.n_paths = cfg.n_paths;
  rep.theoretical_lb = theoretical_lb;
  rep.T = cfg.T;
  rep.dt = cfg.dt;
  rep.seed = cfg.seed;
  rep.min_h.assign(cfg.n_paths, 0.0);

  const Zcbf z = cl.barrier();
  if (!(h(cfg.x0, z) > cl.comp.mu))
    rep.warnings.push_back("x0 is not in the initial set h > mu; the certificate does not apply");

  const SimOptions opt{cfg.T, cfg.dt, true};
  std::vector<std::exception_ptr> errors(cfg.n_paths);
  std::atomic<std::size_t> next{0};
  auto worker = [&] {
    for (std::size_t i = next++; i < cfg.n_paths; i = next++) {
      try {
        rep.min_h[i] = summarize_path(cfg.x0, cfg.mode, cl, opt, RngStream{cfg.seed, i}).min_h;
      } catch (...) {
        errors[i] = std::current_exception();
      }
    }
  };
  unsigned n_threads = cfg.threads != 0 ? cfg.threads : std::max(1u, std::thread::hardware_concurrency());
  n_threads = static_cast<unsigned>(std::min<std::size_t>(n_threads, cfg.n_paths));
  {
    std::vector<std::jthread> pool;
    for (unsigned t = 1; t < n_threads; ++t) pool.emplace_back(worker);
    worker();
  }
  for (std::size_t i = 0; i < cfg.n_paths; ++i) {
    if (!errors[i]) continue;
    try {
      std::rethrow_exception(errors[i]);
    } catch (const NumericalBlowup& e) {
      throw NumericalBlowup("path " + std::to_string(i) + ": " + e.what(), e.step());
    }
  }

  rep.n_safe = static_cast<std::size_t>(std::count_if(rep.min_h.begin(), rep.min_h.end(), [](double m) { return m > 0.0; }));
  rep.safe_fraction = static_cast<double>(rep.n_safe) / static_cast<double>(rep.n_paths);
  const Interval w = wilson_interval(rep.n_safe, rep.n_paths);
  rep.wilson_lo = w.lo;
  rep.wilson_hi = w.hi;
  std::vector<double> sorted = rep.min_h;
  std::sort(sorted.begin(), sorted.end());
  for (std::size_t q = 0; q < kMinHQuantiles.size(); ++q) rep.min_h_quantiles[q] = sorted_quantile(sorted, kMinHQuantiles[q]);
  return rep;
}

inline McReport estimate_safety(const McConfig& cfg, const ClosedLoop& cl) {
  return estimate_safety(cfg, cl, certify(cl).prob(cfg.mode));
}

inline constexpr std::array<Mode, 3> kAllModes{Mode::Tra, Mode::TraCom, Mode::TraNlc};

struct ModeComparison {
  SafetyCertificate certificate;
  std::array<McReport, 3> reports;  // ordered as kAllModes
};

/// Same seed for every mode, so path i sees the same Wiener increments.
inline ModeComparison compare_modes(const McConfig& base, const ClosedLoop& cl) {
  ModeComparison out{certify(cl), {}};
  for (std::size_t m = 0; m < kAllModes.size(); ++m) {
    McConfig cfg = base;
    cfg.mode = kAllModes[m];
    out.reports[m] = estimate_safety(cfg, cl, out.certificate.prob(cfg.mode));
  }
  return out;
}

}  // namespace szcbf
