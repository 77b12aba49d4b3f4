#pragma once

#include "npmddm/wavelet.hpp"

#include <span>
#include <vector>

namespace npmddm {

struct MixtureOptions {
  WaveletSpec wavelet;
  Threshold threshold = UniversalThreshold{};  // universal = per-level MAD noise estimate
  double valley_threshold = 0.5;
  bool swap_labels = false;  // take the minority group as U instead
};

struct MixtureResult {
  std::vector<double> rho;     // n = 2^ceil(log2 M) points on t in [0, 1]
  std::vector<double> w;       // (Y - mu_V) / (mu_U - mu_V) on the same grid
  std::vector<int> labels;     // 1 where the grid point belongs to U
  double mu_u = 0.0;
  double mu_v = 0.0;
  std::vector<std::size_t> valleys;  // original time indices (0-based)
};

/// Two-means split of scalar values, centres initialised at min and max.
/// Returns 1 for members of the upper-centre cluster.
std::vector<int> two_means(std::span<const double> values);

/// Nearest-neighbour map from grid point i (of n) to a series index (of M).
std::size_t grid_to_index(std::size_t i, std::size_t n, std::size_t m);

/// Grid indices of the minimum of every maximal run of rho below `threshold`.
std::vector<std::size_t> find_valleys(std::span<const double> rho, double threshold);

/// Mixture function of a loading series. U is the larger group (ties go to
/// the group with the larger mean); rho is the wavelet regression of W on an
/// equally spaced dyadic grid, clipped to [0, 1].
MixtureResult estimate_mixture(std::span<const double> loadings, const MixtureOptions& options = {});

/// Pointwise mean of several rho arrays of equal length, clipped to [0, 1].
std::vector<double> mean_mixture(std::span<const MixtureResult> results);

}  // namespace npmddm
