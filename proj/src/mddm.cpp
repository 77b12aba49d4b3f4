#include "npmddm/mddm.hpp"

#include "npmddm/parallel.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace npmddm {

SubbandSelection parse_subband_selection(std::string_view name) {
  if (name == "all") return SubbandSelection::All;
  if (name == "approx-coarse") return SubbandSelection::ApproxAndCoarse;
  throw std::invalid_argument("unknown subband selection '" + std::string(name) + "'");
}

std::string to_string(SubbandSelection s) { return s == SubbandSelection::All ? "all" : "approx-coarse"; }

std::vector<SubbandGroup> subband_groups(const WaveletSpec& spec, SubbandSelection selection) {
  std::vector<SubbandGroup> groups;
  groups.push_back({"approx", true, {}});
  for (Orientation o : kOrientations) {
    SubbandGroup g{to_string(o), false, {}};
    if (selection == SubbandSelection::All) {
      for (int j = 1; j <= spec.levels; ++j) g.keys.push_back({j, o});
    } else {
      g.name += "@" + std::to_string(spec.levels);
      g.keys.push_back({spec.levels, o});
    }
    groups.push_back(std::move(g));
  }
  return groups;
}

namespace {

std::vector<double> vectorize(const SubbandCoeffs& c, const SubbandGroup& g) {
  std::vector<double> out;
  auto append = [&out](const Grid& x) { out.insert(out.end(), x.data(), x.data() + x.size()); };
  if (g.approx) append(c.approx);
  for (const auto& key : g.keys) append(c.details.at(key));
  return out;
}

Support common_support(const std::vector<std::vector<double>>& samples) {
  double lo = samples.front().front();
  double hi = lo;
  for (const auto& s : samples) {
    const auto [mn, mx] = std::minmax_element(s.begin(), s.end());
    lo = std::min(lo, *mn);
    hi = std::max(hi, *mx);
  }
  // Point mass across all images: centre a unit cell on it.
  if (hi - lo <= 1e-12 * std::max({1.0, std::abs(lo), std::abs(hi)})) {
    const double mid = 0.5 * (lo + hi);
    return {mid - 0.5, mid + 0.5};
  }
  return {lo, hi};
}

Eigen::MatrixXd normalized_rows(const Eigen::MatrixXd& x) {
  Eigen::MatrixXd out = x.cwiseAbs();
  for (Eigen::Index m = 0; m < out.rows(); ++m) {
    const double n = out.row(m).norm();
    if (!(n > 0.0)) throw std::runtime_error("square-root density estimate vanished for image " + std::to_string(m));
    out.row(m) /= n;
  }
  return out;
}

}  // namespace

std::vector<GroupAnalysis> analyze_subbands(const RasterSeries& series, const AnalysisOptions& options,
                                            SubbandSelection selection) {
  const std::size_t count = series.size();
  if (count < 2) throw std::invalid_argument("divergence analysis needs at least 2 images");

  std::vector<SubbandCoeffs> coeffs(count);
  parallel_for(count, options.threads, [&](std::size_t m) { coeffs[m] = dwt2(series[m], options.wavelet); });

  const auto groups = subband_groups(options.wavelet, selection);
  std::vector<GroupAnalysis> out;
  out.reserve(groups.size());
  for (std::size_t g = 0; g < groups.size(); ++g) {
    std::vector<std::vector<double>> samples(count);
    for (std::size_t m = 0; m < count; ++m) samples[m] = vectorize(coeffs[m], groups[g]);

    GroupAnalysis ga;
    ga.group = groups[g];
    ga.support = common_support(samples);
    const Eigen::Index cells = Eigen::Index{1} << options.density_resolution;
    Eigen::MatrixXd alpha(static_cast<Eigen::Index>(count), cells);
    parallel_for(count, options.threads, [&](std::size_t m) {
      const auto f = estimate_sqrt_density(samples[m], ga.support, options.density_resolution, options.wavelet,
                                           options.density_threshold);
      alpha.row(static_cast<Eigen::Index>(m)) = f.coeffs().transpose();
    });
    ga.curves = CurveSeries::from_curves(alpha);

    if (options.reduce_dimension) {
      DimensionTestOptions dim = options.dimension;
      dim.seed = options.seed;
      dim.stream = g;
      dim.threads = options.threads;
      ga.model = estimate_dimension(ga.curves, dim);
      ga.estimates = normalized_rows(reconstruct(*ga.model, ga.curves).curves());
    } else {
      ga.estimates = normalized_rows(alpha);
    }
    out.push_back(std::move(ga));
  }
  return out;
}

Mddm mddm_from_groups(const std::vector<GroupAnalysis>& groups, bool half_factor) {
  if (groups.empty()) throw std::invalid_argument("no subband groups");
  const Eigen::Index count = groups.front().estimates.rows();
  const double scale = half_factor ? 1.0 / std::sqrt(2.0) : 1.0;
  Mddm out;
  out.values = Eigen::MatrixXd::Zero(count, count);
  for (const auto& g : groups) {
    Eigen::MatrixXd part = Eigen::MatrixXd::Zero(count, count);
    for (Eigen::Index m = 0; m < count; ++m) {
      for (Eigen::Index l = m + 1; l < count; ++l) {
        const double d = scale * (g.estimates.row(m) - g.estimates.row(l)).norm();
        part(m, l) = d;
        part(l, m) = d;
      }
    }
    out.values += part;
    out.subband_breakdown.emplace(g.group.name, std::move(part));
  }
  return out;
}

Mddm compute_mddm(const RasterSeries& series, const AnalysisOptions& options) {
  return mddm_from_groups(analyze_subbands(series, options, options.subbands), options.half_factor);
}

ChangeScores change_scores(const Mddm& mddm) {
  const Eigen::Index count = mddm.values.rows();
  ChangeScores out;
  out.scores.resize(static_cast<std::size_t>(count), 0.0);
  if (count < 2) return out;
  for (Eigen::Index m = 0; m < count; ++m)
    out.scores[static_cast<std::size_t>(m)] = (mddm.values.row(m).sum() - mddm.values(m, m)) / static_cast<double>(count - 1);
  out.argmax = static_cast<std::size_t>(std::max_element(out.scores.begin(), out.scores.end()) - out.scores.begin());
  return out;
}

Eigen::MatrixXd forecast_distances(const RasterSeries& series, const AnalysisOptions& options, int horizon) {
  if (horizon < 1) throw std::invalid_argument("forecast horizon must be >= 1");
  if (!options.reduce_dimension) throw std::invalid_argument("forecasting needs dimension reduction enabled");
  const auto groups = analyze_subbands(series, options, options.subbands);
  const double scale = options.half_factor ? 1.0 / std::sqrt(2.0) : 1.0;
  const auto count = static_cast<Eigen::Index>(series.size());
  Eigen::MatrixXd out = Eigen::MatrixXd::Zero(count, horizon);
  for (const auto& g : groups) {
    const Eigen::MatrixXd eta = forecast_loadings(*g.model, horizon);
    const Eigen::MatrixXd predicted =
        normalized_rows((eta * g.model->eigenfunctions.transpose()).rowwise() + g.curves.mean.transpose());
    for (Eigen::Index m = 0; m < count; ++m)
      for (Eigen::Index h = 0; h < horizon; ++h)
        out(m, h) += scale * (g.estimates.row(m) - predicted.row(h)).norm();
  }
  return out;
}

}  // namespace npmddm
