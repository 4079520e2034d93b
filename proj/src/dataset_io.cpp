#include "mmloc/dataset_io.hpp"

#include <algorithm>
#include <fstream>
#include <stdexcept>

#include "binary_io.hpp"

namespace mmloc {

namespace {

constexpr char kMagic[4] = {'M', 'M', 'L', 'C'};
constexpr std::uint16_t kVersion = 1;

DatasetHeader read_header(std::istream& is, const std::string& what) {
  char magic[4];
  is.read(magic, 4);
  if (!is || !std::equal(magic, magic + 4, kMagic)) throw std::runtime_error(what + ": bad magic");
  DatasetHeader h;
  h.version = detail::read_le<std::uint16_t>(is, what);
  if (h.version != kVersion) throw std::runtime_error(what + ": unsupported version");
  h.count = detail::read_le<std::uint32_t>(is, what);
  h.n_antennas = detail::read_le<std::uint32_t>(is, what);
  h.n_subcarriers = detail::read_le<std::uint32_t>(is, what);
  return h;
}

}  // namespace

void write_dataset(const Dataset& dataset, const std::filesystem::path& path) {
  std::ofstream os(path, std::ios::binary);
  if (!os) throw std::runtime_error("cannot open " + path.string() + " for writing");
  os.write(kMagic, 4);
  detail::write_le<std::uint16_t>(os, kVersion);
  detail::write_le<std::uint32_t>(os, static_cast<std::uint32_t>(dataset.size()));
  detail::write_le<std::uint32_t>(os, static_cast<std::uint32_t>(dataset.n_antennas()));
  detail::write_le<std::uint32_t>(os, static_cast<std::uint32_t>(dataset.n_subcarriers()));
  for (const auto& s : dataset.snapshots) {
    if (s.y.rows() != dataset.n_antennas() || s.y.cols() != dataset.n_subcarriers()) {
      throw std::invalid_argument("write_dataset: snapshots have differing dimensions");
    }
    for (const Complex& v : s.y.data()) {
      detail::write_f64(os, v.real());
      detail::write_f64(os, v.imag());
    }
    detail::write_f64(os, s.position.x);
    detail::write_f64(os, s.position.y);
  }
  if (!os) throw std::runtime_error("write failed: " + path.string());
}

Dataset read_dataset(const std::filesystem::path& path, const SceneConfig& scene) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw std::runtime_error("cannot open " + path.string());
  const std::string what = "dataset " + path.string();
  const DatasetHeader h = read_header(is, what);
  Dataset out;
  out.scene = scene;
  out.snapshots.reserve(h.count);
  for (std::uint32_t t = 0; t < h.count; ++t) {
    CMat y(h.n_antennas, h.n_subcarriers);
    for (Complex& v : y.data()) {
      const double re = detail::read_f64(is, what);
      const double im = detail::read_f64(is, what);
      v = {re, im};
    }
    Point2 p;
    p.x = detail::read_f64(is, what);
    p.y = detail::read_f64(is, what);
    out.snapshots.push_back({std::move(y), p});
  }
  return out;
}

DatasetHeader read_dataset_header(const std::filesystem::path& path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw std::runtime_error("cannot open " + path.string());
  return read_header(is, "dataset " + path.string());
}

}  // namespace mmloc
