#pragma once

#include <cmath>
#include <cstdint>
#include <cstdlib>
#include <mutex>
#include <numbers>
#include <optional>
#include <random>
#include <string>
#include <thread>
#include <utility>
#include <vector>

#include "sss/evt.hpp"
#include "sss/grid.hpp"
#include "sss/inference.hpp"
#include "sss/kernel.hpp"
#include "sss/types.hpp"

namespace sss {

/// Derives the seed of one replicate stream from a master seed (splitmix64
/// finalizer applied twice, so nearby indices give unrelated streams).
inline std::uint64_t split_seed(std::uint64_t master, std::uint64_t index) {
  auto mix = [](std::uint64_t z) {
    z += 0x9E3779B97F4A7C15ull;
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ull;
    z = (z ^ (z >> 27)) * 0x94D049BB133111EBull;
    return z ^ (z >> 31);
  };
  return mix(mix(master) + index);
}

/// Deterministic standard-normal stream: mt19937_64 bits (the engine's output
/// sequence is fully specified by the standard) mapped through the inverse
/// normal CDF. std::normal_distribution is implementation-defined and is
/// deliberately not used, so identical seeds give bit-identical fields on
/// every platform.
class NormalStream {
 public:
  explicit NormalStream(std::uint64_t seed) : engine_(seed) {}

  double next() {
    const std::uint64_t bits = engine_();
    const double unit = (static_cast<double>(bits >> 11) + 0.5) * 0x1.0p-53;
    return normal_cdf_inv(unit);
  }

 private:
  std::mt19937_64 engine_;
};

/// i.i.d. standard normal field, filled in column-major order.
inline ImageGrid<double> generate_noise(Index rows, Index cols,
                                        std::uint64_t seed) {
  if (rows < 1 || cols < 1)
    throw InputError("noise field needs at least one row and one column");
  Matrix<double> y(rows, cols);
  NormalStream stream(seed);
  double* data = y.data();
  const Index n = rows * cols;
  for (Index k = 0; k < n; ++k) data[k] = stream.next();
  return ImageGrid<double>(std::move(y));
}

/// Isotropic Gaussian bump: amplitude * exp(-r^2 / (2 width^2)).
struct Bump {
  double center_row = 0;
  double center_col = 0;
  double amplitude = 1;
  double width = 1;
};

/// Sum of Gaussian bumps plus i.i.d. N(0, noise_sigma^2) noise.
inline ImageGrid<double> generate_phantom(const std::vector<Bump>& bumps,
                                          Index rows, Index cols,
                                          double noise_sigma,
                                          std::uint64_t seed) {
  if (rows < 1 || cols < 1)
    throw InputError("phantom needs at least one row and one column");
  if (noise_sigma < 0) throw InputError("noise sigma must be non-negative");
  for (const auto& bump : bumps)
    if (!(bump.width > 0)) throw InputError("bump width must be positive");

  Matrix<double> y = Matrix<double>::Zero(rows, cols);
  for (const auto& bump : bumps) {
    const double w2 = 2 * bump.width * bump.width;
    for (Index c = 0; c < cols; ++c)
      for (Index r = 0; r < rows; ++r) {
        const double di = static_cast<double>(r) - bump.center_row;
        const double dj = static_cast<double>(c) - bump.center_col;
        y(r, c) += bump.amplitude * std::exp(-(di * di + dj * dj) / w2);
      }
  }
  if (noise_sigma > 0) {
    NormalStream stream(seed);
    double* data = y.data();
    const Index n = rows * cols;
    for (Index k = 0; k < n; ++k) data[k] += noise_sigma * stream.next();
  }
  return ImageGrid<double>(std::move(y));
}

/// Angle presets.
inline std::vector<double> angles_axes() {
  return {0.0, std::numbers::pi / 2};
}
inline std::vector<double> angles_six() {
  const double p = std::numbers::pi;
  return {0.0, p / 6, p / 3, p / 2, 2 * p / 3, 5 * p / 6};
}
inline std::vector<double> angles_narrow() {
  const double p = std::numbers::pi;
  return {-p / 6, -p / 12, 0.0, p / 12, p / 6, p / 4};
}

namespace detail {

inline int resolve_threads(int requested) {
  if (requested > 0) return requested;
  if (const char* env = std::getenv("SSS_THREADS")) {
    const int n = std::atoi(env);
    if (n > 0) return n;
  }
  const unsigned hw = std::thread::hardware_concurrency();
  return hw > 0 ? static_cast<int>(hw) : 1;
}

/// Runs `worker(replicate_index)` for all replicates over a thread pool.
/// Workers must only touch replicate-owned state, so the result is
/// independent of the thread count.
template <typename Worker>
void run_replicates(int replicates, int threads, Worker&& worker) {
  threads = std::min(threads, replicates);
  if (threads <= 1) {
    for (int r = 0; r < replicates; ++r) worker(r);
    return;
  }
  std::exception_ptr first_error;
  std::mutex error_mutex;
  std::vector<std::thread> pool;
  pool.reserve(static_cast<std::size_t>(threads));
  for (int t = 0; t < threads; ++t) {
    pool.emplace_back([&, t] {
      try {
        for (int r = t; r < replicates; r += threads) worker(r);
      } catch (...) {
        std::scoped_lock lock(error_mutex);
        if (!first_error) first_error = std::current_exception();
      }
    });
  }
  for (auto& th : pool) th.join();
  if (first_error) std::rethrow_exception(first_error);
}

}  // namespace detail

/// Exact Clopper-Pearson binomial confidence interval for k successes in n
/// trials, solved by bisection on the exact binomial tails.
inline std::pair<double, double> binomial_exact_ci(int k, int n,
                                                   double confidence = 0.95) {
  if (n < 1 || k < 0 || k > n) throw InputError("invalid binomial counts");
  if (!(confidence > 0) || !(confidence < 1))
    throw InputError("confidence must lie in (0, 1)");
  const double tail = (1 - confidence) / 2;

  auto upper_tail = [n](int kk, double p) {  // P(X >= kk)
    if (kk <= 0) return 1.0;
    if (kk > n) return 0.0;
    if (p <= 0) return 0.0;
    if (p >= 1) return 1.0;
    double sum = 0;
    const double lp = std::log(p), lq = std::log1p(-p);
    for (int i = kk; i <= n; ++i) {
      const double lchoose = std::lgamma(n + 1.0) - std::lgamma(i + 1.0) -
                             std::lgamma(n - i + 1.0);
      sum += std::exp(lchoose + i * lp + (n - i) * lq);
    }
    return std::min(sum, 1.0);
  };

  double lo = 0.0, hi = 1.0;
  if (k > 0) {
    double a = 0.0, b = 1.0;  // P(X >= k | p) increases in p
    for (int iter = 0; iter < 100; ++iter) {
      const double m = (a + b) / 2;
      (upper_tail(k, m) < tail ? a : b) = m;
    }
    lo = (a + b) / 2;
  }
  if (k < n) {
    double a = 0.0, b = 1.0;  // P(X <= k | p) decreases in p
    for (int iter = 0; iter < 100; ++iter) {
      const double m = (a + b) / 2;
      (1.0 - upper_tail(k + 1, m) > tail ? a : b) = m;
    }
    hi = (a + b) / 2;
  }
  return {lo, hi};
}

/// What a null-hypothesis experiment counts. Per-angle modes test each angle
/// against its own single-direction threshold; joint modes test the maximum
/// over the angle set against the multi-direction threshold.
enum class SimMode {
  slope_per_angle,
  slope_joint,
  curvature_per_angle,
  curvature_joint
};

inline const char* to_string(SimMode mode) {
  switch (mode) {
    case SimMode::slope_per_angle: return "slope_per_angle";
    case SimMode::slope_joint: return "slope_joint";
    case SimMode::curvature_per_angle: return "curvature_per_angle";
    default: return "curvature_joint";
  }
}

struct SimConfig {
  SimMode mode = SimMode::slope_joint;
  int replicates = 200;
  Index rows = 280;
  Index cols = 280;
  std::optional<Index> margin_override;  // e.g. 40 gives a 200x200 interior
  std::vector<double> bandwidths{2, 4, 8, 16};
  std::vector<double> angles;  // empty: axes for slope, six for curvature
  double alpha = 0.05;
  std::uint64_t master_seed = 1;
  bool sigma_estimated = false;  // default: known sigma = 1
  bool one_sided = false;
  int threads = 0;  // 0: SSS_THREADS env var, then hardware concurrency
};

/// One table cell: exceedance count for a bandwidth and one angle (or the
/// joint test when `angle` is empty).
struct SimCell {
  double h = 0;
  std::optional<double> angle;
  int exceed_count = 0;
  int replicates = 0;
  double rate = 0;
  double ci_lo = 0, ci_hi = 0;  // exact 95% interval
  double u_crit = 0;
  Index g = 0;
};

struct SimResult {
  SimConfig config;
  std::vector<SimCell> cells;
};

/// Counts replicates of pure-noise fields whose statistics exceed the
/// theoretical thresholds. Uses the separable sum path throughout (verified
/// against the direct sums by the unit suite).
inline SimResult type1_experiment(const SimConfig& config) {
  if (config.replicates < 1) throw InputError("need at least one replicate");
  if (config.bandwidths.empty()) throw InputError("need at least one bandwidth");
  const bool slope = config.mode == SimMode::slope_per_angle ||
                     config.mode == SimMode::slope_joint;
  const bool joint = config.mode == SimMode::slope_joint ||
                     config.mode == SimMode::curvature_joint;
  const DerivOrder order = slope ? DerivOrder::slope : DerivOrder::curvature;

  std::vector<double> angles = config.angles;
  if (angles.empty()) angles = slope ? angles_axes() : angles_six();
  if (!slope) require_distinct_mod_pi(angles);
  const int n_angles = static_cast<int>(angles.size());

  struct Setup {
    double h;
    InteriorRegion region;
    Index radius;
    double u;  // threshold applied to |T|
  };
  std::vector<Setup> setups;
  for (const double h : config.bandwidths) {
    Setup s;
    s.h = h;
    const Index margin = config.margin_override
                             ? *config.margin_override
                             : kernel_radius(h);
    s.region = interior_for_dims(config.rows, config.cols, margin);
    s.radius = kernel_radius(h);
    const auto spec = make_threshold(config.alpha, joint ? n_angles : 1,
                                     s.region.g_effective(), h, order,
                                     config.one_sided);
    s.u = spec.u_crit;
    setups.push_back(s);
  }

  const std::size_t cells_per_h = joint ? 1 : static_cast<std::size_t>(n_angles);
  const std::size_t n_cells = setups.size() * cells_per_h;
  std::vector<std::vector<std::uint8_t>> flags(
      static_cast<std::size_t>(config.replicates),
      std::vector<std::uint8_t>(n_cells, 0));

  detail::run_replicates(
      config.replicates, detail::resolve_threads(config.threads),
      [&](int r) {
        const auto grid = generate_noise(
            config.rows, config.cols,
            split_seed(config.master_seed, static_cast<std::uint64_t>(r)));
        const double sigma =
            config.sigma_estimated ? estimate_sigma(grid) : 1.0;
        auto& out = flags[static_cast<std::size_t>(r)];
        for (std::size_t hi = 0; hi < setups.size(); ++hi) {
          const auto& s = setups[hi];
          const auto mi = moment_images(
              grid, s.h, s.region,
              slope ? MomentSet::first : MomentSet::second,
              SumMethod::separable, s.radius);
          double joint_max = 0;
          for (int a = 0; a < n_angles; ++a) {
            const auto dir = Direction<double>::from_angle(angles[a]);
            const auto field = stat_field_from_moments(
                mi, config.rows, config.cols, dir, order, sigma);
            const double extreme =
                config.one_sided ? field.stats.maxCoeff()
                                 : field.stats.array().abs().maxCoeff();
            if (joint) {
              joint_max = std::max(joint_max, extreme);
            } else {
              out[hi * cells_per_h + static_cast<std::size_t>(a)] =
                  extreme >= s.u ? 1 : 0;
            }
          }
          if (joint) out[hi * cells_per_h] = joint_max >= s.u ? 1 : 0;
        }
      });

  SimResult result;
  result.config = config;
  result.config.angles = angles;
  for (std::size_t hi = 0; hi < setups.size(); ++hi) {
    for (std::size_t a = 0; a < cells_per_h; ++a) {
      SimCell cell;
      cell.h = setups[hi].h;
      if (!joint) cell.angle = angles[a];
      cell.replicates = config.replicates;
      cell.u_crit = setups[hi].u;
      cell.g = setups[hi].region.g_effective();
      for (int r = 0; r < config.replicates; ++r)
        cell.exceed_count +=
            flags[static_cast<std::size_t>(r)][hi * cells_per_h + a];
      cell.rate = static_cast<double>(cell.exceed_count) / cell.replicates;
      std::tie(cell.ci_lo, cell.ci_hi) =
          binomial_exact_ci(cell.exceed_count, cell.replicates, 0.95);
      result.cells.push_back(cell);
    }
  }
  return result;
}

struct PowerConfig {
  std::vector<Bump> bumps;
  Index rows = 128;
  Index cols = 128;
  double noise_sigma = 1.0;
  std::vector<double> bandwidths{4};
  std::vector<double> angles;  // empty: six
  double alpha = 0.05;
  int replicates = 100;
  std::uint64_t master_seed = 1;
  double match_radius = 3.0;
  std::optional<Index> margin_override;
  bool sigma_estimated = false;
  bool one_sided = false;
  int threads = 0;
};

/// Detection summary for one (bandwidth, bump) pair: a replicate counts as a
/// detection when a correctly signed category pixel (peak for positive
/// amplitude, hole for negative) lies within match_radius of the bump centre.
struct PowerCell {
  double h = 0;
  std::size_t bump_index = 0;
  int detected = 0;
  int replicates = 0;
  double rate = 0;
};

struct PowerResult {
  std::vector<PowerCell> cells;
  // total non-none pixels per bandwidth, summed over replicates
  std::vector<std::pair<double, long long>> significant_pixels;
};

inline PowerResult power_experiment(const PowerConfig& config) {
  if (config.replicates < 1) throw InputError("need at least one replicate");
  if (config.bumps.empty()) throw InputError("need at least one bump");
  std::vector<double> angles =
      config.angles.empty() ? angles_six() : config.angles;
  require_distinct_mod_pi(angles);

  const std::size_t n_h = config.bandwidths.size();
  const std::size_t n_b = config.bumps.size();
  std::vector<std::vector<std::uint8_t>> hits(
      static_cast<std::size_t>(config.replicates),
      std::vector<std::uint8_t>(n_h * n_b, 0));
  std::vector<std::vector<long long>> pixel_counts(
      static_cast<std::size_t>(config.replicates),
      std::vector<long long>(n_h, 0));

  AnalysisOptions<double> opts;
  opts.method = SumMethod::separable;
  opts.one_sided = config.one_sided;

  detail::run_replicates(
      config.replicates, detail::resolve_threads(config.threads),
      [&](int r) {
        const auto grid = generate_phantom(
            config.bumps, config.rows, config.cols, config.noise_sigma,
            split_seed(config.master_seed, static_cast<std::uint64_t>(r)));
        double sigma = config.noise_sigma > 0 ? config.noise_sigma : 1.0;
        if (config.sigma_estimated) sigma = estimate_sigma(grid);
        if (!(sigma > 0))
          throw InputError(
              "estimated noise scale is zero; supply a known sigma");
        for (std::size_t hi = 0; hi < n_h; ++hi) {
          const double h = config.bandwidths[hi];
          const Index margin = config.margin_override
                                   ? *config.margin_override
                                   : kernel_radius(h);
          const auto region =
              interior_for_dims(config.rows, config.cols, margin);
          const auto result = curvature_analysis(grid, h, config.alpha, sigma,
                                                 angles, region, opts);
          pixel_counts[static_cast<std::size_t>(r)][hi] =
              static_cast<long long>(region.g_rows) * region.g_cols -
              result.count(CurvatureCategory::none);
          for (std::size_t b = 0; b < n_b; ++b) {
            const auto& bump = config.bumps[b];
            const auto target = bump.amplitude < 0 ? CurvatureCategory::hole
                                                   : CurvatureCategory::peak;
            bool found = false;
            for (Index j = 0; j < region.g_cols && !found; ++j)
              for (Index i = 0; i < region.g_rows && !found; ++i) {
                if (result.category_at(i, j) != target) continue;
                const double di =
                    static_cast<double>(region.margin + i) - bump.center_row;
                const double dj =
                    static_cast<double>(region.margin + j) - bump.center_col;
                if (di * di + dj * dj <=
                    config.match_radius * config.match_radius)
                  found = true;
              }
            hits[static_cast<std::size_t>(r)][hi * n_b + b] = found ? 1 : 0;
          }
        }
      });

  PowerResult result;
  for (std::size_t hi = 0; hi < n_h; ++hi) {
    long long total = 0;
    for (int r = 0; r < config.replicates; ++r)
      total += pixel_counts[static_cast<std::size_t>(r)][hi];
    result.significant_pixels.emplace_back(config.bandwidths[hi], total);
    for (std::size_t b = 0; b < n_b; ++b) {
      PowerCell cell;
      cell.h = config.bandwidths[hi];
      cell.bump_index = b;
      cell.replicates = config.replicates;
      for (int r = 0; r < config.replicates; ++r)
        cell.detected += hits[static_cast<std::size_t>(r)][hi * n_b + b];
      cell.rate = static_cast<double>(cell.detected) / cell.replicates;
      result.cells.push_back(cell);
    }
  }
  return result;
}

}  // namespace sss
