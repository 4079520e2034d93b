#pragma once

#include <cstdint>
#include <filesystem>
#include <span>
#include <string>

#include "mmloc/pipeline.hpp"

namespace mmloc {

// CSV conventions: ',' separator, '.' decimal point, header row, numbers
// printed with 12 significant digits.

std::string format_number(double v);

/// One row per test sample (index, x, y, e_cov, e_cir, e_raw, e_fused), a blank
/// line, then the summary block: method percentiles in the order fused, cov,
/// cir, raw, followed by rho and the config hash.
void write_report_csv(const std::filesystem::path& path, const Dataset& dataset,
                      const ExperimentResult& result, std::uint64_t config_hash);

void write_loss_csv(const std::filesystem::path& path, std::span<const double> losses);

/// (error, cumulative fraction) at one-percentile resolution.
void write_cdf_csv(const std::filesystem::path& path, const MethodErrors& method);

/// (delta / lambda, |rho|).
void write_spatial_csv(const std::filesystem::path& path, std::span<const CorrelationPoint> points,
                       double lambda);

}  // namespace mmloc
