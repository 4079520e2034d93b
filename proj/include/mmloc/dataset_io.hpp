#pragma once

#include <cstdint>
#include <filesystem>

#include "mmloc/channel_sim.hpp"

namespace mmloc {

// Layout, little-endian: "MMLC", u16 version, u32 T, u32 M, u32 N, then per
// snapshot M*N (f64 re, f64 im) pairs row-major followed by f64 x, f64 y.

struct DatasetHeader {
  std::uint16_t version = 0;
  std::uint32_t count = 0;
  std::uint32_t n_antennas = 0;
  std::uint32_t n_subcarriers = 0;
};

void write_dataset(const Dataset& dataset, const std::filesystem::path& path);

/// The scene is not stored in the file; the returned dataset carries `scene`.
Dataset read_dataset(const std::filesystem::path& path, const SceneConfig& scene = {});

DatasetHeader read_dataset_header(const std::filesystem::path& path);

}  // namespace mmloc
