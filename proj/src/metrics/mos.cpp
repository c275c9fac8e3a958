#include <algorithm>
#include <cmath>
#include <random>
#include <thread>

#include "afro/error.hpp"
#include "afro/metrics.hpp"

namespace afro::metrics {

MosSummary aggregate_mos(std::span<const int> ratings) {
  if (ratings.empty()) throw Error("no ratings to aggregate");
  double sum = 0.0;
  for (int r : ratings) {
    if (r < 1 || r > 5) throw Error("rating out of range 1..5: " + std::to_string(r));
    sum += r;
  }
  MosSummary s;
  s.n = ratings.size();
  s.mean = sum / static_cast<double>(s.n);
  if (s.n > 1) {
    double ss = 0.0;
    for (int r : ratings) ss += (r - s.mean) * (r - s.mean);
    const double sd = std::sqrt(ss / static_cast<double>(s.n - 1));
    s.ci95_half_width = 1.96 * sd / std::sqrt(static_cast<double>(s.n));
  }
  return s;
}

namespace {

std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9E3779B97F4A7C15ULL;
  x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ULL;
  x = (x ^ (x >> 27)) * 0x94D049BB133111EBULL;
  return x ^ (x >> 31);
}

// Unbiased enough for n << 2^64; portable unlike uniform_int_distribution.
std::size_t draw_index(std::mt19937_64& rng, std::size_t n) {
  return static_cast<std::size_t>((static_cast<unsigned __int128>(rng()) * n) >> 64);
}

double resampled_mean(std::span<const double> x, std::mt19937_64& rng) {
  double s = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) s += x[draw_index(rng, x.size())];
  return s / static_cast<double>(x.size());
}

double mean_of(std::span<const double> x) {
  double s = 0.0;
  for (double v : x) s += v;
  return s / static_cast<double>(x.size());
}

// Linear interpolation between order statistics (R type 7).
double quantile(const std::vector<double>& sorted, double q) {
  const double h = q * static_cast<double>(sorted.size() - 1);
  const auto lo = static_cast<std::size_t>(std::floor(h));
  const std::size_t hi = std::min(lo + 1, sorted.size() - 1);
  return sorted[lo] + (h - static_cast<double>(lo)) * (sorted[hi] - sorted[lo]);
}

}  // namespace

BootstrapResult bootstrap_diff(std::span<const double> a, std::span<const double> b,
                               std::size_t resamples, std::uint64_t seed, unsigned workers) {
  if (a.empty() || b.empty()) throw Error("bootstrap needs two non-empty samples");
  if (resamples < 1000) throw Error("bootstrap needs at least 1000 resamples");
  workers = std::max(1u, workers);

  std::vector<double> diffs(resamples);
  auto run = [&](unsigned w) {
    for (std::size_t r = w; r < resamples; r += workers) {
      std::mt19937_64 rng(splitmix64(seed ^ splitmix64(r)));
      diffs[r] = resampled_mean(a, rng) - resampled_mean(b, rng);
    }
  };
  if (workers == 1) {
    run(0);
  } else {
    std::vector<std::thread> pool;
    for (unsigned w = 0; w < workers; ++w) pool.emplace_back(run, w);
    for (auto& t : pool) t.join();
  }
  std::sort(diffs.begin(), diffs.end());

  BootstrapResult out;
  out.mean_diff = mean_of(a) - mean_of(b);
  out.ci_low = quantile(diffs, 0.025);
  out.ci_high = quantile(diffs, 0.975);
  out.significant = out.ci_low > 0.0 || out.ci_high < 0.0;
  return out;
}

}  // namespace afro::metrics
