#include "npmddm/commands.hpp"
#include "npmddm/config.hpp"

#include <CLI11.hpp>

#include <filesystem>
#include <functional>
#include <iostream>
#include <string>
#include <vector>

namespace fs = std::filesystem;

namespace {

struct PipelineArgs {
  fs::path config_file;
  std::vector<std::string> overrides;
  std::optional<int> threads;
  std::optional<fs::path> output;
  std::optional<int> horizon;
};

void add_pipeline_options(CLI::App* cmd, PipelineArgs& args, bool with_horizon) {
  cmd->add_option("-c,--config", args.config_file, "Pipeline config file")->required()->check(CLI::ExistingFile);
  cmd->add_option("--set", args.overrides, "Override a config key (key=value), repeatable");
  cmd->add_option("-j,--threads", args.threads, "Worker threads");
  cmd->add_option("-o,--output", args.output, "Output directory");
  if (with_horizon) cmd->add_option("--horizon", args.horizon, "Forecast horizon");
}

npmddm::PipelineConfig build_config(const PipelineArgs& args) {
  npmddm::PipelineConfig config = npmddm::load_config(args.config_file);
  for (const auto& kv : args.overrides) {
    const auto eq = kv.find('=');
    if (eq == std::string::npos) throw npmddm::ConfigError(kv, "override '" + kv + "' is not key=value");
    npmddm::apply_setting(config, kv.substr(0, eq), kv.substr(eq + 1), fs::current_path());
  }
  if (args.threads) npmddm::apply_setting(config, "threads", std::to_string(*args.threads));
  if (args.output) config.output_dir = *args.output;
  if (args.horizon) npmddm::apply_setting(config, "predict.horizon", std::to_string(*args.horizon));
  npmddm::validate(config);
  return config;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Nonparametric change detection for raster image time series"};
  app.set_version_flag("--version", std::string(npmddm::kToolVersion));
  app.require_subcommand(1);

  PipelineArgs args;
  std::function<void(const npmddm::PipelineConfig&)> run;

  const std::vector<std::tuple<const char*, const char*, void (*)(const npmddm::PipelineConfig&)>> commands = {
      {"mddm", "Multi-date divergence matrix and change scores", npmddm::run_mddm},
      {"predict", "Distances to forecast densities", npmddm::run_predict},
      {"mixture", "Mixture function and valley change points", npmddm::run_mixture},
      {"variogram", "Fit the exponential variogram", npmddm::run_variogram},
      {"smooth", "Write the pre-processed series", npmddm::run_smooth},
  };
  for (const auto& [name, help, fn] : commands) {
    auto* cmd = app.add_subcommand(name, help);
    add_pipeline_options(cmd, args, std::string_view(name) == "predict");
    cmd->callback([&run, fn = fn] { run = fn; });
  }

  npmddm::FixtureSpec fixture;
  std::string kind = "noise";
  fs::path fixture_out;
  auto* synth = app.add_subcommand("synth", "Write a synthetic fixture series (RTS1)");
  synth->add_option("kind", kind, "identical | constant | noise | variance-change | single-change | drift")
      ->required();
  synth->add_option("-o,--output", fixture_out, "Output file")->required();
  synth->add_option("--images", fixture.images, "Number of images");
  synth->add_option("--rows", fixture.rows, "Image rows");
  synth->add_option("--cols", fixture.cols, "Image columns");
  synth->add_option("--change", fixture.change_index, "First changed image (0-based)");
  synth->add_option("--level", fixture.level, "Mean level");
  synth->add_option("--sigma", fixture.sigma, "Noise standard deviation");
  synth->add_option("--seed", fixture.seed, "Random seed");

  CLI11_PARSE(app, argc, argv);

  try {
    if (synth->parsed()) {
      fixture.kind = npmddm::parse_fixture_kind(kind);
      npmddm::save_series(npmddm::make_fixture(fixture), fixture_out);
      return 0;
    }
    const npmddm::PipelineConfig config = build_config(args);
    run(config);
  } catch (const npmddm::ConfigError& e) {
    std::cerr << "config error [" << e.key() << "]: " << e.what() << '\n';
    return 2;
  } catch (const npmddm::StageError& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  }
  return 0;
}
