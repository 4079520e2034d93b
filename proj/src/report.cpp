#include "mmloc/report.hpp"

#include <cstdio>
#include <fstream>
#include <stdexcept>

namespace mmloc {

namespace {

std::ofstream open_csv(const std::filesystem::path& path) {
  std::ofstream os(path);
  if (!os) throw std::runtime_error("cannot open " + path.string() + " for writing");
  return os;
}

void finish(std::ofstream& os, const std::filesystem::path& path) {
  os.flush();
  if (!os) throw std::runtime_error("write failed: " + path.string());
}

}  // namespace

std::string format_number(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.12g", v);
  return buf;
}

void write_report_csv(const std::filesystem::path& path, const Dataset& dataset,
                      const ExperimentResult& result, std::uint64_t config_hash) {
  const EvalReport& report = result.report;
  const MethodErrors* raw = nullptr;
  for (const auto& m : report.methods) {
    if (m.label == "raw") raw = &m;
  }
  const auto& cov = report.method("cov").errors;
  const auto& cir = report.method("cir").errors;
  const auto& fused = report.method("fused").errors;

  auto os = open_csv(path);
  os << "index,x,y,e_cov,e_cir,e_raw,e_fused\n";
  for (std::size_t i = 0; i < result.split.test.size(); ++i) {
    const std::size_t idx = result.split.test[i];
    const Point2 p = dataset.snapshots[idx].position;
    os << idx << ',' << format_number(p.x) << ',' << format_number(p.y) << ','
       << format_number(cov[i]) << ',' << format_number(cir[i]) << ','
       << (raw != nullptr ? format_number(raw->errors[i]) : std::string()) << ','
       << format_number(fused[i]) << '\n';
  }
  os << "\nmethod,p50,p90,p95\n";
  for (const char* label : {"fused", "cov", "cir", "raw"}) {
    if (std::string(label) == "raw" && raw == nullptr) continue;
    const MethodErrors& m = report.method(label);
    os << label << ',' << format_number(m.p50) << ',' << format_number(m.p90) << ','
       << format_number(m.p95) << '\n';
  }
  char hash[17];
  std::snprintf(hash, sizeof hash, "%016llx", static_cast<unsigned long long>(config_hash));
  os << "rho," << format_number(report.rho) << '\n';
  os << "config_hash," << hash << '\n';
  finish(os, path);
}

void write_loss_csv(const std::filesystem::path& path, std::span<const double> losses) {
  auto os = open_csv(path);
  os << "epoch,loss\n";
  for (std::size_t e = 0; e < losses.size(); ++e) os << e << ',' << format_number(losses[e]) << '\n';
  finish(os, path);
}

void write_cdf_csv(const std::filesystem::path& path, const MethodErrors& method) {
  auto os = open_csv(path);
  os << "error,fraction\n";
  for (const auto& pt : method.cdf) {
    os << format_number(pt.error) << ',' << format_number(pt.fraction) << '\n';
  }
  finish(os, path);
}

void write_spatial_csv(const std::filesystem::path& path, std::span<const CorrelationPoint> points,
                       double lambda) {
  auto os = open_csv(path);
  os << "delta_over_lambda,abs_rho\n";
  for (const auto& pt : points) {
    os << format_number(pt.delta / lambda) << ',' << format_number(pt.abs_rho) << '\n';
  }
  finish(os, path);
}

}  // namespace mmloc
