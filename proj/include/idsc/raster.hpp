#pragma once

#include <string>

#include "idsc/tensor.hpp"

namespace idsc {

// Single-tensor raster container. Layout, all little-endian:
//   bytes 0..3   magic "IDSC"
//   bytes 4..7   format version, u32, currently 1
//   bytes 8..19  channels, height, width as u32
//   bytes 20..   channels*height*width 32-bit reals, row-major, channel-major
// Reading is the exact byte inverse; malformed input raises FormatError
// naming the byte offset.
void write_raster(const Tensor& t, const std::string& path);
Tensor read_raster(const std::string& path);

// In-memory variants used by the file functions and the tests.
std::string raster_bytes(const Tensor& t);
Tensor parse_raster(const std::string& bytes);

}  // namespace idsc
