#include "npmddm/mixture.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <stdexcept>
#include <string>

namespace npmddm {

std::vector<int> two_means(std::span<const double> values) {
  if (values.empty()) throw std::invalid_argument("two_means: no values");
  const auto [mn, mx] = std::minmax_element(values.begin(), values.end());
  double lo = *mn;
  double hi = *mx;
  if (!(hi > lo)) throw std::invalid_argument("mixture: all loadings are equal, groups are degenerate");
  std::vector<int> labels(values.size(), 0);
  for (int iter = 0; iter < 1000; ++iter) {
    bool changed = false;
    double sum[2] = {0.0, 0.0};
    std::size_t cnt[2] = {0, 0};
    for (std::size_t i = 0; i < values.size(); ++i) {
      const int lab = std::abs(values[i] - hi) < std::abs(values[i] - lo) ? 1 : 0;
      changed |= lab != labels[i];
      labels[i] = lab;
      sum[lab] += values[i];
      ++cnt[lab];
    }
    if (iter > 0 && !changed) break;
    // Extreme values always stay in their own cluster, so neither empties.
    lo = sum[0] / static_cast<double>(cnt[0]);
    hi = sum[1] / static_cast<double>(cnt[1]);
  }
  return labels;
}

std::size_t grid_to_index(std::size_t i, std::size_t n, std::size_t m) {
  if (n <= 1 || m <= 1) return 0;
  return static_cast<std::size_t>(std::llround(static_cast<double>(i) * static_cast<double>(m - 1) /
                                               static_cast<double>(n - 1)));
}

std::vector<std::size_t> find_valleys(std::span<const double> rho, double threshold) {
  std::vector<std::size_t> out;
  std::size_t i = 0;
  while (i < rho.size()) {
    if (!(rho[i] < threshold)) {
      ++i;
      continue;
    }
    std::size_t best = i;
    for (; i < rho.size() && rho[i] < threshold; ++i)
      if (rho[i] < rho[best]) best = i;
    out.push_back(best);
  }
  return out;
}

MixtureResult estimate_mixture(std::span<const double> loadings, const MixtureOptions& options) {
  const std::size_t m = loadings.size();
  if (m < 8) throw std::invalid_argument("mixture estimation needs at least 8 loadings, got " + std::to_string(m));
  if (const double* v = std::get_if<double>(&options.threshold); v && !(*v >= 0.0))
    throw std::invalid_argument("mixture threshold must be non-negative");

  std::vector<int> upper = two_means(loadings);
  double sum[2] = {0.0, 0.0};
  std::size_t cnt[2] = {0, 0};
  for (std::size_t i = 0; i < m; ++i) {
    sum[upper[i]] += loadings[i];
    ++cnt[upper[i]];
  }
  const double mean[2] = {sum[0] / static_cast<double>(cnt[0]), sum[1] / static_cast<double>(cnt[1])};
  int u = cnt[1] >= cnt[0] ? 1 : 0;
  if (options.swap_labels) u = 1 - u;

  MixtureResult r;
  r.mu_u = mean[u];
  r.mu_v = mean[1 - u];

  const std::size_t n = std::bit_ceil(m);
  const int max_levels = std::countr_zero(n);
  if (options.wavelet.levels > max_levels)
    throw std::invalid_argument("mixture: " + std::to_string(options.wavelet.levels) +
                                " wavelet levels exceed the grid of " + std::to_string(n) + " points");
  r.w.resize(n);
  r.labels.resize(n);
  for (std::size_t i = 0; i < n; ++i) {
    const std::size_t src = grid_to_index(i, n, m);
    r.w[i] = (loadings[src] - r.mu_v) / (r.mu_u - r.mu_v);
    r.labels[i] = upper[src] == u ? 1 : 0;
  }

  Coeffs1D c = dwt1(r.w, options.wavelet);
  for (auto& level : c.details) {
    const double lam = std::holds_alternative<UniversalThreshold>(options.threshold)
                           ? mad_sigma(level) * std::sqrt(2.0 * std::log(static_cast<double>(n)))
                           : std::get<double>(options.threshold);
    for (double& v : level) v = soft_threshold(v, lam);
  }
  r.rho = idwt1(c, options.wavelet);
  for (double& v : r.rho) v = std::clamp(v, 0.0, 1.0);

  for (std::size_t g : find_valleys(r.rho, options.valley_threshold)) {
    const std::size_t t = grid_to_index(g, n, m);
    if (r.valleys.empty() || r.valleys.back() != t) r.valleys.push_back(t);
  }
  return r;
}

std::vector<double> mean_mixture(std::span<const MixtureResult> results) {
  if (results.empty()) throw std::invalid_argument("mean_mixture: no results");
  const std::size_t n = results.front().rho.size();
  std::vector<double> out(n, 0.0);
  for (const auto& r : results) {
    if (r.rho.size() != n) throw std::invalid_argument("mean_mixture: rho lengths differ");
    for (std::size_t i = 0; i < n; ++i) out[i] += r.rho[i];
  }
  for (double& v : out) v = std::clamp(v / static_cast<double>(results.size()), 0.0, 1.0);
  return out;
}

}  // namespace npmddm
