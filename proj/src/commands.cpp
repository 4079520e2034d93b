#include "mmloc/commands.hpp"

#include <stdexcept>

#include "mmloc/fingerprint.hpp"
#include "mmloc/report.hpp"

namespace mmloc {

namespace {

void ensure_dir(const std::filesystem::path& dir) {
  std::error_code ec;
  std::filesystem::create_directories(dir, ec);
  if (ec) throw std::runtime_error("cannot create " + dir.string() + ": " + ec.message());
}

}  // namespace

Dataset load_or_generate(const RunConfig& config) {
  if (!config.dataset_path) return generate_dataset(config.scene, config.plan);
  if (!std::filesystem::exists(*config.dataset_path)) {
    throw ConfigError("dataset not found: " + config.dataset_path->string());
  }
  Dataset d = read_dataset(*config.dataset_path, config.scene);
  if (d.n_antennas() != config.scene.n_antennas() ||
      d.n_subcarriers() != config.scene.n_subcarriers) {
    throw ConfigError("dataset " + config.dataset_path->string() +
                      " dimensions do not match the configured scene");
  }
  return d;
}

std::filesystem::path cmd_generate(const RunConfig& config, std::ostream& log) {
  const Dataset dataset = generate_dataset(config.scene, config.plan);
  ensure_dir(config.out_dir);
  const auto path = config.out_dir / kDatasetFileName;
  write_dataset(dataset, path);
  log << "wrote " << path.string() << ": T=" << dataset.size() << " M=" << dataset.n_antennas()
      << " N=" << dataset.n_subcarriers() << " bytes=" << std::filesystem::file_size(path) << '\n';
  return path;
}

ExperimentResult cmd_run(const RunConfig& config, std::ostream& log) {
  NormalizedDataset normalized = normalize_dataset(load_or_generate(config));
  log << "dataset: T=" << normalized.dataset.size() << " M=" << normalized.dataset.n_antennas()
      << " N=" << normalized.dataset.n_subcarriers() << " alpha=" << format_number(normalized.alpha)
      << '\n';
  ExperimentResult result = run_experiment(normalized.dataset, config.split, config.branches);

  ensure_dir(config.out_dir);
  write_report_csv(config.out_dir / kReportFileName, normalized.dataset, result, config_hash(config));
  for (const auto& branch : result.branches) {
    const std::string kind = feature_kind_name(branch.kind);
    write_loss_csv(config.out_dir / ("loss_" + kind + ".csv"), branch.loss_history);
    if (branch.model) save_model(*branch.model, config.out_dir / ("model_" + kind + ".mlpw"));
  }
  for (const auto& m : result.report.methods) {
    write_cdf_csv(config.out_dir / ("cdf_" + m.label + ".csv"), m);
  }
  log << "train=" << result.split.train.size() << " test=" << result.split.test.size() << '\n';
  for (const auto& m : result.report.methods) {
    log << m.label << ": p50=" << format_number(m.p50) << " p90=" << format_number(m.p90)
        << " p95=" << format_number(m.p95) << '\n';
  }
  log << "rho=" << format_number(result.report.rho) << '\n';
  return result;
}

std::vector<CorrelationPoint> cmd_spatialcorr(const RunConfig& config, std::vector<double> deltas,
                                              std::ostream& log) {
  const Dataset dataset = load_or_generate(config);
  const double lambda = config.scene.wavelength();
  if (deltas.empty()) deltas = delta_grid(lambda);
  const auto line = first_line_indices(dataset);
  const auto points = spatial_correlation(dataset, line, deltas);
  ensure_dir(config.out_dir);
  const auto path = config.out_dir / kSpatialFileName;
  write_spatial_csv(path, points, lambda);
  log << "wrote " << path.string() << " (" << points.size() << " rows)\n";
  return points;
}

DatasetHeader cmd_inspect(const std::filesystem::path& path, std::ostream& log) {
  const DatasetHeader h = read_dataset_header(path);
  log << "file: " << path.string() << "\nversion: " << h.version << "\nT: " << h.count
      << "\nM: " << h.n_antennas << "\nN: " << h.n_subcarriers
      << "\nbytes: " << std::filesystem::file_size(path) << '\n';
  return h;
}

}  // namespace mmloc
