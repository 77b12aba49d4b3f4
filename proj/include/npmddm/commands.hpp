#pragma once

#include "npmddm/config.hpp"
#include "npmddm/kriging.hpp"
#include "npmddm/raster.hpp"

#include <filesystem>
#include <stdexcept>
#include <string>
#include <string_view>

namespace npmddm {

inline constexpr const char* kToolName = "npmddm";
inline constexpr const char* kToolVersion = "0.1.0";

/// A pipeline failure tagged with the stage it happened in.
class StageError : public std::runtime_error {
 public:
  StageError(std::string stage, const std::string& message)
      : std::runtime_error("stage " + stage + ": " + message), stage_(std::move(stage)) {}
  const std::string& stage() const { return stage_; }

 private:
  std::string stage_;
};

/// Load, optional log transform and optional pre-smoothing.
RasterSeries prepare_series(const PipelineConfig& config);

/// Kriging model used by the kriging smoother: fitted from the pooled
/// empirical variogram unless fixed parameters are configured.
VariogramFit kriging_model(const RasterSeries& series, const PipelineConfig& config, EmpiricalVariogram* ev = nullptr);

/// Each command validates the config, runs its stages and writes its
/// artifacts into config.output_dir.
void run_mddm(const PipelineConfig& config);       // mddm.csv, scores.json
void run_predict(const PipelineConfig& config);    // forecast_distances.csv
void run_mixture(const PipelineConfig& config);    // mixture.csv, valleys.json
void run_variogram(const PipelineConfig& config);  // variogram.json
void run_smooth(const PipelineConfig& config);     // smoothed.rts1

enum class FixtureKind { Identical, Constant, Noise, VarianceChange, SingleChange, Drift };
FixtureKind parse_fixture_kind(std::string_view name);

struct FixtureSpec {
  FixtureKind kind = FixtureKind::Noise;
  int images = 16;
  int rows = 32;
  int cols = 32;
  int change_index = -1;  // first changed image (0-based); default images / 2
  double level = 10.0;
  double sigma = 1.0;
  std::uint64_t seed = 1;
};

/// Synthetic positive-valued image series: level + sigma * N(0, 1) per pixel,
/// with the change pattern of `kind` applied. `SingleChange` is a transient
/// shift (mean + 2 sigma, noise doubled) on the three images centred at the
/// change index; `VarianceChange` scales the noise by sqrt(2) from the change
/// index on; `Drift` grows the noise linearly from sigma to 2 sigma.
RasterSeries make_fixture(const FixtureSpec& spec);

}  // namespace npmddm
