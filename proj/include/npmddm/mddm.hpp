#pragma once

#include "npmddm/density.hpp"
#include "npmddm/functional.hpp"
#include "npmddm/raster.hpp"
#include "npmddm/wavelet.hpp"

#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace npmddm {

/// Which coefficient groups get a density. `All` pools each orientation over
/// every level (approx, horizontal, vertical, diagonal). `ApproxAndCoarse`
/// keeps the approximation and the coarsest-level details only.
enum class SubbandSelection { All, ApproxAndCoarse };

SubbandSelection parse_subband_selection(std::string_view name);
std::string to_string(SubbandSelection s);

struct AnalysisOptions {
  WaveletSpec wavelet;
  int density_resolution = 6;
  std::optional<Threshold> density_threshold;
  DimensionTestOptions dimension;  // seed, stream and threads are overwritten from below
  bool reduce_dimension = true;
  SubbandSelection subbands = SubbandSelection::All;
  bool half_factor = true;  // include the 1/sqrt(2) of the Hellinger definition
  std::uint64_t seed = 1;
  int threads = 1;
};

struct SubbandGroup {
  std::string name;
  bool approx = false;
  std::vector<SubbandKey> keys;  // detail subbands pooled into this group
};

std::vector<SubbandGroup> subband_groups(const WaveletSpec& spec, SubbandSelection selection);

/// Per-group state of the pipeline: the raw square-root density coefficients
/// as a curve series, the fitted functional model, and the final estimates
/// (one non-negative unit-norm row per image).
struct GroupAnalysis {
  SubbandGroup group;
  Support support;
  CurveSeries curves;
  std::optional<FunctionalModel> model;
  Eigen::MatrixXd estimates;  // M x 2^J0
};

/// Steps 1-3: DWT of every image, square-root densities per group on a
/// common support, dimension reduction of each density curve series.
std::vector<GroupAnalysis> analyze_subbands(const RasterSeries& series, const AnalysisOptions& options,
                                            SubbandSelection selection);

struct Mddm {
  Eigen::MatrixXd values;
  std::map<std::string, Eigen::MatrixXd> subband_breakdown;
};

Mddm mddm_from_groups(const std::vector<GroupAnalysis>& groups, bool half_factor);

/// Full multi-date divergence matrix: entry (m, l) sums the Hellinger
/// distances of the group estimates of images m and l.
Mddm compute_mddm(const RasterSeries& series, const AnalysisOptions& options);

struct ChangeScores {
  std::vector<double> scores;  // mean off-diagonal row value
  std::size_t argmax = 0;
};

ChangeScores change_scores(const Mddm& mddm);

/// M x horizon matrix: summed Hellinger distance between each image's
/// estimate and the density predicted h steps past the end of the series.
Eigen::MatrixXd forecast_distances(const RasterSeries& series, const AnalysisOptions& options, int horizon);

}  // namespace npmddm
