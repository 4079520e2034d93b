#pragma once

#include <filesystem>
#include <ostream>
#include <vector>

#include "mmloc/config.hpp"
#include "mmloc/dataset_io.hpp"
#include "mmloc/pipeline.hpp"

namespace mmloc {

inline constexpr const char* kDatasetFileName = "dataset.mmlc";
inline constexpr const char* kReportFileName = "report.csv";
inline constexpr const char* kSpatialFileName = "spatial_correlation.csv";

/// Synthesizes the dataset and writes <out>/dataset.mmlc. Returns the file path.
std::filesystem::path cmd_generate(const RunConfig& config, std::ostream& log);

/// normalize -> fingerprints -> split -> branches -> evaluate. Writes
/// report.csv, loss_<kind>.csv, cdf_<method>.csv and model_<kind>.mlpw to out.
ExperimentResult cmd_run(const RunConfig& config, std::ostream& log);

/// |rho| over `deltas` (m) along the first trajectory line; writes
/// spatial_correlation.csv. An empty grid means 0 .. 2 lambda in lambda / 16.
std::vector<CorrelationPoint> cmd_spatialcorr(const RunConfig& config, std::vector<double> deltas,
                                              std::ostream& log);

DatasetHeader cmd_inspect(const std::filesystem::path& path, std::ostream& log);

/// The configured dataset file, or a fresh synthesis from scene and plan.
Dataset load_or_generate(const RunConfig& config);

}  // namespace mmloc
