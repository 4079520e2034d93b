// Command-line front end: generate, run, spatialcorr, inspect.

#include <CLI11.hpp>

#include <iostream>
#include <optional>
#include <string>

#include "mmloc/commands.hpp"
#include "mmloc/config.hpp"
#include "mmloc/neuralnet.hpp"

namespace {

constexpr int kExitInternal = 1;
constexpr int kExitInvalidConfig = 2;

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Two-branch massive MIMO fingerprint localization workbench"};
  app.require_subcommand(1);

  std::string config_path;
  std::optional<std::uint64_t> seed;
  std::optional<double> fraction;
  std::optional<std::string> out_dir;
  std::optional<std::string> dataset_path;
  std::optional<std::string> split;
  bool literal_cov = false;
  double max_lambda = 2.0;
  double step_lambda = 1.0 / 16.0;
  std::string inspect_path;

  auto add_common = [&](CLI::App* sub) {
    sub->add_option("--config", config_path, "key=value configuration file");
    sub->add_option("--seed", seed, "global seed; overrides every component seed");
    sub->add_option("--out", out_dir, "output directory");
  };

  auto* generate = app.add_subcommand("generate", "synthesize a dataset file");
  add_common(generate);

  auto* run = app.add_subcommand("run", "train both branches and the baseline, write reports");
  add_common(run);
  run->add_option("--dataset", dataset_path, "dataset file (default: synthesize from config)");
  run->add_option("--fraction", fraction, "training fraction in (0, 1)");
  run->add_option("--split", split, "stride or random")->check(CLI::IsMember({"stride", "random"}));
  run->add_flag("--literal-cov", literal_cov, "literal triangular covariance packing");

  auto* spatial = app.add_subcommand("spatialcorr", "spatial correlation along the first line");
  add_common(spatial);
  spatial->add_option("--dataset", dataset_path, "dataset file (default: synthesize from config)");
  spatial->add_option("--max-lambda", max_lambda, "largest separation in wavelengths");
  spatial->add_option("--step-lambda", step_lambda, "grid step in wavelengths");

  auto* inspect = app.add_subcommand("inspect", "print a dataset header");
  inspect->add_option("path", inspect_path, "dataset file")->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : kExitInvalidConfig;
  }

  try {
    if (*inspect) {
      mmloc::cmd_inspect(inspect_path, std::cout);
      return 0;
    }
    mmloc::KeyValueConfig kv;
    if (!config_path.empty()) kv = mmloc::KeyValueConfig::load(config_path);
    mmloc::ConfigOverrides overrides;
    overrides.seed = seed;
    overrides.train_fraction = fraction;
    overrides.literal_cov = literal_cov;
    if (split) overrides.split = mmloc::parse_split_strategy(*split);
    if (out_dir) overrides.out_dir = *out_dir;
    if (dataset_path) overrides.dataset_path = *dataset_path;
    const mmloc::RunConfig config = mmloc::resolve_run_config(kv, overrides);

    if (*generate) {
      mmloc::cmd_generate(config, std::cout);
    } else if (*run) {
      mmloc::cmd_run(config, std::cout);
    } else if (*spatial) {
      const double lambda = config.scene.wavelength();
      mmloc::cmd_spatialcorr(config, mmloc::delta_grid(lambda, max_lambda, step_lambda),
                             std::cout);
    }
    return 0;
  } catch (const mmloc::TrainingDiverged& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kExitInternal;
  } catch (const std::invalid_argument& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kExitInvalidConfig;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kExitInternal;
  }
}
