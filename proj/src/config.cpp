#include "npmddm/config.hpp"

#include <charconv>
#include <fstream>
#include <functional>
#include <map>
#include <set>
#include <sstream>

namespace npmddm {

namespace fs = std::filesystem;

namespace {

std::string_view trim(std::string_view s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string_view::npos) return {};
  const auto e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

template <class T>
T parse_number(std::string_view key, std::string_view v) {
  T out{};
  const auto [ptr, ec] = std::from_chars(v.data(), v.data() + v.size(), out);
  if (ec != std::errc() || ptr != v.data() + v.size())
    throw ConfigError(std::string(key), "invalid value '" + std::string(v) + "' for key '" + std::string(key) + "'");
  return out;
}

bool parse_bool(std::string_view key, std::string_view v) {
  if (v == "true" || v == "yes" || v == "1") return true;
  if (v == "false" || v == "no" || v == "0") return false;
  throw ConfigError(std::string(key), "expected true/false for key '" + std::string(key) + "'");
}

template <class F>
auto wrap(std::string_view key, F&& f) {
  try {
    return f();
  } catch (const ConfigError&) {
    throw;
  } catch (const std::exception& e) {
    throw ConfigError(std::string(key), e.what());
  }
}

fs::path resolve(const fs::path& base, std::string_view v) {
  fs::path p{std::string(v)};
  return p.is_relative() && !base.empty() ? base / p : p;
}

using Setter = std::function<void(PipelineConfig&, std::string_view key, std::string_view value, const fs::path&)>;

const std::map<std::string, Setter, std::less<>>& setters() {
  static const std::map<std::string, Setter, std::less<>> table = {
      {"seed", [](auto& c, auto k, auto v, auto&) { c.seed = parse_number<std::uint64_t>(k, v); }},
      {"threads", [](auto& c, auto k, auto v, auto&) { c.threads = parse_number<int>(k, v); }},
      {"input.path", [](auto& c, auto, auto v, auto& base) { c.input_path = resolve(base, v); }},
      {"input.format", [](auto& c, auto k, auto v, auto&) { c.input_format = wrap(k, [&] { return parse_series_format(v); }); }},
      {"input.log_transform", [](auto& c, auto k, auto v, auto&) { c.log_transform = parse_bool(k, v); }},
      {"input.log_offset", [](auto& c, auto k, auto v, auto&) { c.log_offset = parse_number<double>(k, v); }},
      {"smoother.method",
       [](auto& c, auto k, auto v, auto&) {
         if (v == "none") c.smoother = SmootherKind::None;
         else if (v == "wavelet-threshold") c.smoother = SmootherKind::WaveletThreshold;
         else if (v == "kriging") c.smoother = SmootherKind::Kriging;
         else throw ConfigError(std::string(k), "unknown smoother '" + std::string(v) + "'");
       }},
      {"smoother.threshold", [](auto& c, auto k, auto v, auto&) { c.smoother_threshold = wrap(k, [&] { return parse_threshold(v); }); }},
      {"wavelet.family", [](auto& c, auto k, auto v, auto&) { c.analysis.wavelet.family = wrap(k, [&] { return parse_wavelet_family(v); }); }},
      {"wavelet.levels", [](auto& c, auto k, auto v, auto&) { c.analysis.wavelet.levels = parse_number<int>(k, v); }},
      {"density.resolution", [](auto& c, auto k, auto v, auto&) { c.analysis.density_resolution = parse_number<int>(k, v); }},
      {"density.threshold",
       [](auto& c, auto k, auto v, auto&) {
         if (v == "none") c.analysis.density_threshold.reset();
         else c.analysis.density_threshold = wrap(k, [&] { return parse_threshold(v); });
       }},
      {"dimension.lag", [](auto& c, auto k, auto v, auto&) { c.analysis.dimension.lag = parse_number<int>(k, v); }},
      {"dimension.bootstrap", [](auto& c, auto k, auto v, auto&) { c.analysis.dimension.replicates = parse_number<int>(k, v); }},
      {"dimension.alpha", [](auto& c, auto k, auto v, auto&) { c.analysis.dimension.alpha = parse_number<double>(k, v); }},
      {"dimension.block_length",
       [](auto& c, auto k, auto v, auto&) {
         if (v == "auto") c.analysis.dimension.block_length.reset();
         else c.analysis.dimension.block_length = parse_number<double>(k, v);
       }},
      {"dimension.reduce", [](auto& c, auto k, auto v, auto&) { c.analysis.reduce_dimension = parse_bool(k, v); }},
      {"mddm.subbands", [](auto& c, auto k, auto v, auto&) { c.analysis.subbands = wrap(k, [&] { return parse_subband_selection(v); }); }},
      {"mddm.half_factor", [](auto& c, auto k, auto v, auto&) { c.analysis.half_factor = parse_bool(k, v); }},
      {"mixture.subbands", [](auto& c, auto k, auto v, auto&) { c.mixture.subbands = wrap(k, [&] { return parse_subband_selection(v); }); }},
      {"mixture.components",
       [](auto& c, auto k, auto v, auto&) {
         if (v == "dhat") c.mixture.components.reset();
         else c.mixture.components = parse_number<int>(k, v);
       }},
      {"mixture.valley_threshold", [](auto& c, auto k, auto v, auto&) { c.mixture.valley_threshold = parse_number<double>(k, v); }},
      {"mixture.threshold", [](auto& c, auto k, auto v, auto&) { c.mixture.threshold = wrap(k, [&] { return parse_threshold(v); }); }},
      {"mixture.levels",
       [](auto& c, auto k, auto v, auto&) {
         if (v == "auto") c.mixture.levels.reset();
         else c.mixture.levels = parse_number<int>(k, v);
       }},
      {"kriging.bins", [](auto& c, auto k, auto v, auto&) { c.kriging.bins = parse_number<int>(k, v); }},
      {"kriging.max_lag", [](auto& c, auto k, auto v, auto&) { c.kriging.max_lag = parse_number<double>(k, v); }},
      {"kriging.subsample", [](auto& c, auto k, auto v, auto&) { c.kriging.subsample = parse_number<std::size_t>(k, v); }},
      {"kriging.taper_range",
       [](auto& c, auto k, auto v, auto&) {
         if (v == "auto") c.kriging.taper_range.reset();
         else c.kriging.taper_range = parse_number<double>(k, v);
       }},
      {"kriging.tau2", [](auto& c, auto k, auto v, auto&) { c.kriging.tau2 = parse_number<double>(k, v); }},
      {"kriging.sigma2", [](auto& c, auto k, auto v, auto&) { c.kriging.sigma2 = parse_number<double>(k, v); }},
      {"kriging.theta", [](auto& c, auto k, auto v, auto&) { c.kriging.theta = parse_number<double>(k, v); }},
      {"predict.horizon", [](auto& c, auto k, auto v, auto&) { c.horizon = parse_number<int>(k, v); }},
      {"output.dir", [](auto& c, auto, auto v, auto& base) { c.output_dir = resolve(base, v); }},
  };
  return table;
}

void require(bool ok, const char* key, const std::string& what) {
  if (!ok) throw ConfigError(key, what);
}

}  // namespace

void apply_setting(PipelineConfig& config, std::string_view key, std::string_view value, const fs::path& base_dir) {
  const auto& table = setters();
  const auto it = table.find(key);
  if (it == table.end()) throw ConfigError(std::string(key), "unknown config key '" + std::string(key) + "'");
  it->second(config, key, value, base_dir);
}

PipelineConfig parse_config(std::string_view text, const fs::path& base_dir) {
  PipelineConfig config;
  std::string section;
  std::set<std::string, std::less<>> seen;
  std::istringstream in{std::string(text)};
  std::string raw;
  int line_no = 0;
  while (std::getline(in, raw)) {
    ++line_no;
    std::string_view line = raw;
    if (const auto hash = line.find('#'); hash != std::string_view::npos) line = line.substr(0, hash);
    line = trim(line);
    if (line.empty()) continue;
    if (line.front() == '[') {
      if (line.back() != ']')
        throw ConfigError("[" + std::string(line), "line " + std::to_string(line_no) + ": malformed section header");
      section = std::string(trim(line.substr(1, line.size() - 2)));
      continue;
    }
    const auto eq = line.find('=');
    if (eq == std::string_view::npos)
      throw ConfigError(std::string(line), "line " + std::to_string(line_no) + ": expected key = value");
    const std::string key = (section.empty() ? "" : section + ".") + std::string(trim(line.substr(0, eq)));
    const std::string_view value = trim(line.substr(eq + 1));
    if (!seen.insert(key).second) throw ConfigError(key, "duplicate config key '" + key + "'");
    apply_setting(config, key, value, base_dir);
  }
  return config;
}

PipelineConfig load_config(const fs::path& file) {
  std::ifstream in(file);
  if (!in) throw ConfigError("", "cannot read config file " + file.string());
  std::stringstream buf;
  buf << in.rdbuf();
  return parse_config(buf.str(), file.parent_path());
}

void validate(const PipelineConfig& c) {
  require(!c.input_path.empty(), "input.path", "must be set");
  require(c.log_offset >= 0.0, "input.log_offset", "must be non-negative");
  require(c.threads >= 1, "threads", "must be >= 1");
  require(c.analysis.wavelet.levels >= 1 && c.analysis.wavelet.levels <= 12, "wavelet.levels", "must lie in [1, 12]");
  require(c.analysis.density_resolution >= 1 && c.analysis.density_resolution <= 16, "density.resolution",
          "must lie in [1, 16]");
  if (c.analysis.density_threshold)
    require(c.analysis.wavelet.levels <= c.analysis.density_resolution, "density.threshold",
            "needs wavelet.levels <= density.resolution");
  require(c.analysis.dimension.lag >= 1, "dimension.lag", "must be >= 1");
  require(c.analysis.dimension.replicates >= 100, "dimension.bootstrap", "must be >= 100");
  require(c.analysis.dimension.alpha > 0.0 && c.analysis.dimension.alpha < 1.0, "dimension.alpha",
          "must lie in (0, 1)");
  if (c.analysis.dimension.block_length)
    require(*c.analysis.dimension.block_length >= 1.0, "dimension.block_length", "must be >= 1");
  require(c.mixture.valley_threshold > 0.0 && c.mixture.valley_threshold <= 1.0, "mixture.valley_threshold",
          "must lie in (0, 1]");
  if (c.mixture.components) require(*c.mixture.components >= 1, "mixture.components", "must be >= 1 or 'dhat'");
  if (c.mixture.levels) require(*c.mixture.levels >= 1, "mixture.levels", "must be >= 1");
  require(c.kriging.bins >= 3, "kriging.bins", "must be >= 3");
  require(c.kriging.max_lag > 0.0, "kriging.max_lag", "must be positive");
  if (c.kriging.taper_range) require(*c.kriging.taper_range > 0.0, "kriging.taper_range", "must be positive");
  if (c.kriging.tau2) require(*c.kriging.tau2 >= 0.0, "kriging.tau2", "must be non-negative");
  if (c.kriging.sigma2) require(*c.kriging.sigma2 > 0.0, "kriging.sigma2", "must be positive");
  if (c.kriging.theta) require(*c.kriging.theta > 0.0, "kriging.theta", "must be positive");
  const int fixed = static_cast<int>(c.kriging.tau2.has_value()) + static_cast<int>(c.kriging.sigma2.has_value()) +
                    static_cast<int>(c.kriging.theta.has_value());
  require(fixed == 0 || fixed == 3, "kriging.theta", "tau2, sigma2 and theta must be given together");
  require(c.horizon >= 1, "predict.horizon", "must be >= 1");
}

nlohmann::json to_json(const PipelineConfig& c) {
  using nlohmann::json;
  auto opt = [](const auto& o) { return o ? json(*o) : json(nullptr); };
  const char* smoother = c.smoother == SmootherKind::None ? "none"
                         : c.smoother == SmootherKind::WaveletThreshold ? "wavelet-threshold"
                                                                         : "kriging";
  return json{
      {"seed", c.seed},
      {"input",
       {{"path", c.input_path.string()},
        {"format", c.input_format == SeriesFormat::Rts1 ? "rts1" : "ascii-matrix-dir"},
        {"log_transform", c.log_transform},
        {"log_offset", c.log_offset}}},
      {"smoother", {{"method", smoother}, {"threshold", to_string(c.smoother_threshold)}}},
      {"wavelet", {{"family", to_string(c.analysis.wavelet.family)}, {"levels", c.analysis.wavelet.levels}}},
      {"density",
       {{"resolution", c.analysis.density_resolution},
        {"threshold", c.analysis.density_threshold ? json(to_string(*c.analysis.density_threshold)) : json("none")}}},
      {"dimension",
       {{"lag", c.analysis.dimension.lag},
        {"bootstrap", c.analysis.dimension.replicates},
        {"alpha", c.analysis.dimension.alpha},
        {"block_length", c.analysis.dimension.block_length ? json(*c.analysis.dimension.block_length) : json("auto")},
        {"reduce", c.analysis.reduce_dimension}}},
      {"mddm", {{"subbands", to_string(c.analysis.subbands)}, {"half_factor", c.analysis.half_factor}}},
      {"mixture",
       {{"subbands", to_string(c.mixture.subbands)},
        {"components", c.mixture.components ? json(*c.mixture.components) : json("dhat")},
        {"valley_threshold", c.mixture.valley_threshold},
        {"threshold", to_string(c.mixture.threshold)},
        {"levels", c.mixture.levels ? json(*c.mixture.levels) : json("auto")}}},
      {"kriging",
       {{"bins", c.kriging.bins},
        {"max_lag", c.kriging.max_lag},
        {"subsample", c.kriging.subsample},
        {"taper_range", c.kriging.taper_range ? json(*c.kriging.taper_range) : json("auto")},
        {"tau2", opt(c.kriging.tau2)},
        {"sigma2", opt(c.kriging.sigma2)},
        {"theta", opt(c.kriging.theta)}}},
      {"predict", {{"horizon", c.horizon}}},
  };
}

}  // namespace npmddm
