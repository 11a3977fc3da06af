#pragma once

#include <string>
#include <utility>
#include <vector>

#include "idsc/tensor.hpp"

namespace idsc {

using NamedTensors = std::vector<std::pair<std::string, Tensor>>;

// Multi-tensor container for model state. Layout, all little-endian:
//   bytes 0..8   magic "IDSC-CKPT"
//   u32          format version, currently 1
//   u32          entry count
//   per entry:   u32 name length, name bytes,
//                u32 rank, rank u32 extents,
//                payload 32-bit reals, row-major
// Entry order is preserved; names must be unique and non-empty.
// Malformed input raises FormatError naming the byte offset.
void write_checkpoint(const NamedTensors& entries, const std::string& path);
NamedTensors read_checkpoint(const std::string& path);

std::string checkpoint_bytes(const NamedTensors& entries);
NamedTensors parse_checkpoint(const std::string& bytes);

}  // namespace idsc
