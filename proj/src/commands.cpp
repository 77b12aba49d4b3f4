#include "npmddm/commands.hpp"

#include "npmddm/csv.hpp"
#include "npmddm/functional.hpp"
#include "npmddm/mddm.hpp"
#include "npmddm/mixture.hpp"
#include "npmddm/rng.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <fstream>

namespace npmddm {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

template <class F>
auto stage(const char* name, F&& f) {
  try {
    return f();
  } catch (const StageError&) {
    throw;
  } catch (const std::exception& e) {
    throw StageError(name, e.what());
  }
}

AnalysisOptions analysis_options(const PipelineConfig& c) {
  AnalysisOptions a = c.analysis;
  a.seed = c.seed;
  a.threads = c.threads;
  return a;
}

json report_header(const PipelineConfig& c) {
  return json{{"tool", kToolName}, {"version", kToolVersion}, {"config", to_json(c)}};
}

void write_json(const fs::path& path, const json& j) {
  std::ofstream out(path, std::ios::trunc);
  if (!out) throw std::runtime_error("cannot write " + path.string());
  out << j.dump(2) << '\n';
}

void ensure_output(const PipelineConfig& c) {
  stage("output", [&] {
    fs::create_directories(c.output_dir);
    return 0;
  });
}

json group_summary(const std::vector<GroupAnalysis>& groups) {
  json out = json::array();
  for (const auto& g : groups) {
    json item{{"name", g.group.name}, {"support", {g.support.lower, g.support.upper}}};
    item["d_hat"] = g.model ? json(g.model->d_hat) : json(nullptr);
    out.push_back(std::move(item));
  }
  return out;
}

}  // namespace

VariogramFit kriging_model(const RasterSeries& series, const PipelineConfig& c, EmpiricalVariogram* ev_out) {
  VariogramFit fit;
  const auto& k = c.kriging;
  if (k.tau2 && k.sigma2 && k.theta) {
    fit.model = {*k.tau2, *k.sigma2, *k.theta, 3.0 * *k.theta};
  } else {
    const EmpiricalVariogram ev = empirical_variogram(series, {k.max_lag, k.bins, k.subsample, c.seed});
    fit = fit_variogram(ev);
    if (ev_out) *ev_out = ev;
  }
  if (k.taper_range) fit.model.taper_range = *k.taper_range;
  return fit;
}

RasterSeries prepare_series(const PipelineConfig& c) {
  RasterSeries series = stage("load", [&] { return load_series(c.input_path, c.input_format); });
  if (c.log_transform) series = stage("log-transform", [&] { return log_transform(series, c.log_offset); });
  switch (c.smoother) {
    case SmootherKind::None:
      break;
    case SmootherKind::WaveletThreshold:
      series = stage("smooth", [&] {
        std::vector<Grid> out(series.size());
        for (std::size_t m = 0; m < series.size(); ++m)
          out[m] = soft_threshold_denoise(series[m], c.analysis.wavelet, c.smoother_threshold);
        return series.with_images(std::move(out));
      });
      break;
    case SmootherKind::Kriging:
      series = stage("smooth", [&] { return krige_smooth(series, kriging_model(series, c).model, c.threads); });
      break;
  }
  return series;
}

void run_mddm(const PipelineConfig& c) {
  stage("config", [&] {
    validate(c);
    return 0;
  });
  ensure_output(c);
  const RasterSeries series = prepare_series(c);
  const auto options = analysis_options(c);
  const auto groups = stage("density", [&] { return analyze_subbands(series, options, options.subbands); });
  const Mddm mddm = stage("mddm", [&] { return mddm_from_groups(groups, options.half_factor); });
  const ChangeScores scores = change_scores(mddm);
  stage("write", [&] {
    write_matrix_csv(c.output_dir / "mddm.csv", mddm.values);
    json report = report_header(c);
    report["scores"] = scores.scores;
    report["argmax"] = scores.argmax;
    report["subbands"] = group_summary(groups);
    write_json(c.output_dir / "scores.json", report);
    return 0;
  });
}

void run_predict(const PipelineConfig& c) {
  stage("config", [&] {
    validate(c);
    return 0;
  });
  ensure_output(c);
  const RasterSeries series = prepare_series(c);
  const Eigen::MatrixXd d =
      stage("predict", [&] { return forecast_distances(series, analysis_options(c), c.horizon); });
  stage("write", [&] {
    write_matrix_csv(c.output_dir / "forecast_distances.csv", d);
    return 0;
  });
}

void run_mixture(const PipelineConfig& c) {
  stage("config", [&] {
    validate(c);
    return 0;
  });
  ensure_output(c);
  const RasterSeries series = prepare_series(c);
  AnalysisOptions options = analysis_options(c);
  options.reduce_dimension = true;
  const auto groups = stage("density", [&] { return analyze_subbands(series, options, c.mixture.subbands); });

  const std::size_t m = series.size();
  const std::size_t n = std::bit_ceil(m);
  MixtureOptions mo;
  mo.wavelet.family = c.analysis.wavelet.family;
  mo.wavelet.levels = c.mixture.levels.value_or(std::min(c.analysis.wavelet.levels, std::countr_zero(n)));
  mo.threshold = c.mixture.threshold;
  mo.valley_threshold = c.mixture.valley_threshold;

  std::vector<MixtureResult> results;
  json components = json::array();
  stage("mixture", [&] {
    for (const auto& g : groups) {
      const int k = std::min<int>(c.mixture.components.value_or(g.model->d_hat), static_cast<int>(g.curves.dim()));
      const Eigen::MatrixXd eta = project_loadings(*g.model, g.curves, k);
      for (int j = 0; j < k; ++j) {
        const Eigen::VectorXd col = eta.col(j);
        const double spread = col.maxCoeff() - col.minCoeff();
        if (!(spread > 1e-12 * std::max(1.0, col.cwiseAbs().maxCoeff()))) continue;  // no dynamics
        results.push_back(estimate_mixture(std::span<const double>(col.data(), static_cast<std::size_t>(col.size())), mo));
        components.push_back({{"subband", g.group.name}, {"component", j + 1}, {"valleys", results.back().valleys}});
      }
    }
    return 0;
  });

  // No usable loading series means no evidence of change: rho = 1 throughout.
  const std::vector<double> rho = results.empty() ? std::vector<double>(n, 1.0) : mean_mixture(results);
  std::vector<std::size_t> valleys;
  for (std::size_t g : find_valleys(rho, mo.valley_threshold)) {
    const std::size_t t = grid_to_index(g, n, m);
    if (valleys.empty() || valleys.back() != t) valleys.push_back(t);
  }

  stage("write", [&] {
    std::vector<double> t(n);
    for (std::size_t i = 0; i < n; ++i) t[i] = n > 1 ? static_cast<double>(i) / static_cast<double>(n - 1) : 0.0;
    const std::vector<std::string> headers = {"t", "rho"};
    const std::vector<std::vector<double>> cols = {t, rho};
    write_columns_csv(c.output_dir / "mixture.csv", headers, cols);
    json report = report_header(c);
    report["valleys"] = valleys;
    report["components"] = components;
    report["subbands"] = group_summary(groups);
    write_json(c.output_dir / "valleys.json", report);
    return 0;
  });
}

void run_variogram(const PipelineConfig& c) {
  stage("config", [&] {
    validate(c);
    return 0;
  });
  ensure_output(c);
  PipelineConfig unsmoothed = c;
  unsmoothed.smoother = SmootherKind::None;
  const RasterSeries series = prepare_series(unsmoothed);
  EmpiricalVariogram ev;
  const VariogramFit fit = stage("variogram", [&] { return kriging_model(series, c, &ev); });
  stage("write", [&] {
    json report = report_header(c);
    report["tau2"] = fit.model.tau2;
    report["sigma2"] = fit.model.sigma2;
    report["theta"] = fit.model.theta;
    report["taper_range"] = fit.model.taper_range;
    report["contrast_value"] = fit.contrast;
    json bins = json::array();
    for (std::size_t b = 0; b < ev.centers.size(); ++b)
      bins.push_back({{"center", ev.centers[b]}, {"gamma", ev.gamma[b]}, {"count", ev.counts[b]}});
    report["bins"] = bins;
    write_json(c.output_dir / "variogram.json", report);
    return 0;
  });
}

void run_smooth(const PipelineConfig& c) {
  stage("config", [&] {
    validate(c);
    return 0;
  });
  ensure_output(c);
  const RasterSeries series = prepare_series(c);
  stage("write", [&] {
    save_series(series, c.output_dir / "smoothed.rts1");
    return 0;
  });
}

FixtureKind parse_fixture_kind(std::string_view name) {
  if (name == "identical") return FixtureKind::Identical;
  if (name == "constant") return FixtureKind::Constant;
  if (name == "noise") return FixtureKind::Noise;
  if (name == "variance-change") return FixtureKind::VarianceChange;
  if (name == "single-change") return FixtureKind::SingleChange;
  if (name == "drift") return FixtureKind::Drift;
  throw std::invalid_argument("unknown fixture kind '" + std::string(name) + "'");
}

RasterSeries make_fixture(const FixtureSpec& spec) {
  if (spec.images < 2 || spec.rows < 1 || spec.cols < 1) throw std::invalid_argument("fixture dimensions too small");
  const int change = spec.change_index >= 0 ? spec.change_index : spec.images / 2;
  if (change >= spec.images) throw std::invalid_argument("fixture change index outside the series");

  std::normal_distribution<double> normal(0.0, 1.0);
  auto noise_image = [&](std::size_t m, double level, double sigma) {
    auto rng = make_stream(spec.seed, {stream::kFixture, m});
    Grid g(spec.rows, spec.cols);
    for (Eigen::Index i = 0; i < g.rows(); ++i)
      for (Eigen::Index j = 0; j < g.cols(); ++j) g(i, j) = std::max(1e-3, level + sigma * normal(rng));
    return g;
  };

  std::vector<Grid> images;
  for (int m = 0; m < spec.images; ++m) {
    const auto idx = static_cast<std::size_t>(m);
    switch (spec.kind) {
      case FixtureKind::Identical:
        images.push_back(noise_image(0, spec.level, spec.sigma));
        break;
      case FixtureKind::Constant:
        images.push_back(Grid::Constant(spec.rows, spec.cols, spec.level));
        break;
      case FixtureKind::Noise:
        images.push_back(noise_image(idx, spec.level, spec.sigma));
        break;
      case FixtureKind::VarianceChange:
        images.push_back(noise_image(idx, spec.level, m >= change ? spec.sigma * std::sqrt(2.0) : spec.sigma));
        break;
      case FixtureKind::SingleChange:
        images.push_back(std::abs(m - change) <= 1 ? noise_image(idx, spec.level + 2.0 * spec.sigma, 2.0 * spec.sigma)
                                                   : noise_image(idx, spec.level, spec.sigma));
        break;
      case FixtureKind::Drift: {
        const double frac = static_cast<double>(m) / static_cast<double>(spec.images - 1);
        images.push_back(noise_image(idx, spec.level, spec.sigma * (1.0 + frac)));
        break;
      }
    }
  }
  return RasterSeries(std::move(images));
}

}  // namespace npmddm
