#include "idsc/raster.hpp"

#include <cstdint>
#include <cstring>
#include <fstream>

#include "idsc/errors.hpp"

namespace idsc {

namespace {

constexpr char kMagic[4] = {'I', 'D', 'S', 'C'};
constexpr uint32_t kVersion = 1;
constexpr uint32_t kMaxExtent = 1u << 20;

void put_u32(std::string* out, uint32_t v) {
  out->push_back(static_cast<char>(v & 0xff));
  out->push_back(static_cast<char>((v >> 8) & 0xff));
  out->push_back(static_cast<char>((v >> 16) & 0xff));
  out->push_back(static_cast<char>((v >> 24) & 0xff));
}

uint32_t take_u32(const std::string& in, size_t offset, const char* what) {
  if (offset + 4 > in.size()) {
    throw FormatError("raster: truncated " + std::string(what) + " at offset " +
                      std::to_string(in.size()));
  }
  const auto* p = reinterpret_cast<const unsigned char*>(in.data() + offset);
  return static_cast<uint32_t>(p[0]) | static_cast<uint32_t>(p[1]) << 8 |
         static_cast<uint32_t>(p[2]) << 16 | static_cast<uint32_t>(p[3]) << 24;
}

}  // namespace

std::string raster_bytes(const Tensor& t) {
  if (t.rank() != 3) {
    throw ShapeError("write_raster: expected [c x h x w], got " + shape_str(t.shape()));
  }
  std::string out;
  out.reserve(20 + sizeof(float) * static_cast<size_t>(t.numel()));
  out.append(kMagic, 4);
  put_u32(&out, kVersion);
  put_u32(&out, static_cast<uint32_t>(t.dim(0)));
  put_u32(&out, static_cast<uint32_t>(t.dim(1)));
  put_u32(&out, static_cast<uint32_t>(t.dim(2)));
  for (int64_t i = 0; i < t.numel(); ++i) {
    uint32_t bits;
    float v = t[i];
    std::memcpy(&bits, &v, sizeof(bits));
    put_u32(&out, bits);
  }
  return out;
}

Tensor parse_raster(const std::string& bytes) {
  if (bytes.size() < 4 || std::memcmp(bytes.data(), kMagic, 4) != 0) {
    throw FormatError("raster: bad magic at offset 0");
  }
  if (take_u32(bytes, 4, "version") != kVersion) {
    throw FormatError("raster: unsupported version at offset 4");
  }
  const uint32_t c = take_u32(bytes, 8, "channel count");
  const uint32_t h = take_u32(bytes, 12, "height");
  const uint32_t w = take_u32(bytes, 16, "width");
  if (c == 0 || h == 0 || w == 0 || c > kMaxExtent || h > kMaxExtent || w > kMaxExtent) {
    throw FormatError("raster: implausible extents at offset 8");
  }
  const uint64_t count = static_cast<uint64_t>(c) * h * w;
  const uint64_t need = 20 + 4 * count;
  if (bytes.size() != need) {
    throw FormatError("raster: expected " + std::to_string(need) + " bytes, file ends at offset " +
                      std::to_string(bytes.size()));
  }
  Tensor t({static_cast<int>(c), static_cast<int>(h), static_cast<int>(w)});
  for (uint64_t i = 0; i < count; ++i) {
    const uint32_t bits = take_u32(bytes, 20 + 4 * i, "sample");
    float v;
    std::memcpy(&v, &bits, sizeof(v));
    t[static_cast<int64_t>(i)] = v;
  }
  return t;
}

void write_raster(const Tensor& t, const std::string& path) {
  const std::string bytes = raster_bytes(t);
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw DataError("write_raster: cannot open " + path);
  out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
  if (!out) throw DataError("write_raster: short write to " + path);
}

Tensor read_raster(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError("read_raster: cannot open " + path);
  std::string bytes((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  return parse_raster(bytes);
}

}  // namespace idsc
