#pragma once

#include "npmddm/mddm.hpp"
#include "npmddm/raster.hpp"
#include "npmddm/wavelet.hpp"

#include <json.hpp>

#include <filesystem>
#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>

namespace npmddm {

enum class SmootherKind { None, WaveletThreshold, Kriging };

struct KrigingSettings {
  int bins = 15;
  double max_lag = 8.0;
  std::size_t subsample = 4096;
  std::optional<double> taper_range;  // default 3 theta
  // When all three are set the variogram is not fitted.
  std::optional<double> tau2;
  std::optional<double> sigma2;
  std::optional<double> theta;
};

struct MixtureSettings {
  SubbandSelection subbands = SubbandSelection::ApproxAndCoarse;
  std::optional<int> components;  // nullopt: the estimated dimension of each subband
  double valley_threshold = 0.5;
  Threshold threshold = UniversalThreshold{};
  std::optional<int> levels;  // default: wavelet levels, capped by the grid
};

/// Everything a CLI run needs. Parsed from an INI-style file: top-level
/// `key = value` lines plus `[section]` blocks, `#` comments.
struct PipelineConfig {
  std::filesystem::path input_path;
  SeriesFormat input_format = SeriesFormat::Rts1;
  bool log_transform = true;
  double log_offset = 0.0;

  SmootherKind smoother = SmootherKind::None;
  Threshold smoother_threshold = UniversalThreshold{};

  AnalysisOptions analysis;
  KrigingSettings kriging;
  MixtureSettings mixture;
  int horizon = 1;

  std::filesystem::path output_dir = "out";
  std::uint64_t seed = 1;
  int threads = 1;
};

class ConfigError : public std::runtime_error {
 public:
  ConfigError(std::string key, const std::string& message)
      : std::runtime_error(message), key_(std::move(key)) {}
  const std::string& key() const { return key_; }

 private:
  std::string key_;
};

/// Relative paths in the text are resolved against `base_dir`.
PipelineConfig parse_config(std::string_view text, const std::filesystem::path& base_dir = {});
PipelineConfig load_config(const std::filesystem::path& file);

/// Sets one dotted key (e.g. "dimension.bootstrap") on an existing config.
void apply_setting(PipelineConfig& config, std::string_view key, std::string_view value,
                   const std::filesystem::path& base_dir = {});

/// Checks every numeric parameter against module preconditions.
void validate(const PipelineConfig& config);

/// Echo of every setting that can change results. Thread count and output
/// directory are left out so reports compare byte-for-byte across runs.
nlohmann::json to_json(const PipelineConfig& config);

}  // namespace npmddm
