#pragma once

#include <array>
#include <bit>
#include <cstdint>
#include <istream>
#include <ostream>
#include <stdexcept>
#include <string>

// Little-endian primitives shared by the dataset and model file formats.
namespace mmloc::detail {

template <typename UInt>
void write_le(std::ostream& os, UInt value) {
  std::array<char, sizeof(UInt)> bytes;
  for (std::size_t i = 0; i < sizeof(UInt); ++i) {
    bytes[i] = static_cast<char>((value >> (8 * i)) & 0xFF);
  }
  os.write(bytes.data(), bytes.size());
}

inline void write_f64(std::ostream& os, double value) {
  write_le(os, std::bit_cast<std::uint64_t>(value));
}

template <typename UInt>
UInt read_le(std::istream& is, const std::string& what) {
  std::array<unsigned char, sizeof(UInt)> bytes;
  is.read(reinterpret_cast<char*>(bytes.data()), bytes.size());
  if (!is) throw std::runtime_error(what + ": truncated file");
  UInt value = 0;
  for (std::size_t i = 0; i < sizeof(UInt); ++i) value |= static_cast<UInt>(bytes[i]) << (8 * i);
  return value;
}

inline double read_f64(std::istream& is, const std::string& what) {
  return std::bit_cast<double>(read_le<std::uint64_t>(is, what));
}

}  // namespace mmloc::detail
