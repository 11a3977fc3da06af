#include "idsc/checkpoint.hpp"

#include <cstdint>
#include <cstring>
#include <fstream>
#include <set>

#include "idsc/errors.hpp"

namespace idsc {

namespace {

constexpr char kMagic[9] = {'I', 'D', 'S', 'C', '-', 'C', 'K', 'P', 'T'};
constexpr uint32_t kVersion = 1;
constexpr uint32_t kMaxEntries = 1u << 20;
constexpr uint32_t kMaxName = 1u << 12;
constexpr uint32_t kMaxRank = 8;
constexpr uint32_t kMaxExtent = 1u << 24;

void put_u32(std::string* out, uint32_t v) {
  out->push_back(static_cast<char>(v & 0xff));
  out->push_back(static_cast<char>((v >> 8) & 0xff));
  out->push_back(static_cast<char>((v >> 16) & 0xff));
  out->push_back(static_cast<char>((v >> 24) & 0xff));
}

struct Cursor {
  const std::string& bytes;
  size_t pos = 0;

  uint32_t u32(const char* what) {
    if (pos + 4 > bytes.size()) {
      throw FormatError("checkpoint: truncated " + std::string(what) + " at offset " +
                        std::to_string(bytes.size()));
    }
    const auto* p = reinterpret_cast<const unsigned char*>(bytes.data() + pos);
    pos += 4;
    return static_cast<uint32_t>(p[0]) | static_cast<uint32_t>(p[1]) << 8 |
           static_cast<uint32_t>(p[2]) << 16 | static_cast<uint32_t>(p[3]) << 24;
  }

  std::string str(uint32_t n, const char* what) {
    if (pos + n > bytes.size()) {
      throw FormatError("checkpoint: truncated " + std::string(what) + " at offset " +
                        std::to_string(bytes.size()));
    }
    std::string out = bytes.substr(pos, n);
    pos += n;
    return out;
  }
};

}  // namespace

std::string checkpoint_bytes(const NamedTensors& entries) {
  std::set<std::string> seen;
  for (const auto& [name, value] : entries) {
    (void)value;
    if (name.empty()) throw ContractError("checkpoint: empty tensor name");
    if (name.size() > kMaxName) throw ContractError("checkpoint: name too long: " + name);
    if (!seen.insert(name).second) {
      throw ContractError("checkpoint: duplicate tensor name '" + name + "'");
    }
  }

  std::string out;
  out.append(kMagic, sizeof(kMagic));
  put_u32(&out, kVersion);
  put_u32(&out, static_cast<uint32_t>(entries.size()));
  for (const auto& [name, value] : entries) {
    put_u32(&out, static_cast<uint32_t>(name.size()));
    out.append(name);
    put_u32(&out, static_cast<uint32_t>(value.rank()));
    for (int d = 0; d < value.rank(); ++d) {
      put_u32(&out, static_cast<uint32_t>(value.dim(d)));
    }
    for (int64_t i = 0; i < value.numel(); ++i) {
      uint32_t bits;
      float v = value[i];
      std::memcpy(&bits, &v, sizeof(bits));
      put_u32(&out, bits);
    }
  }
  return out;
}

NamedTensors parse_checkpoint(const std::string& bytes) {
  if (bytes.size() < sizeof(kMagic) || std::memcmp(bytes.data(), kMagic, sizeof(kMagic)) != 0) {
    throw FormatError("checkpoint: bad magic at offset 0");
  }
  Cursor cur{bytes, sizeof(kMagic)};
  if (cur.u32("version") != kVersion) {
    throw FormatError("checkpoint: unsupported version at offset 9");
  }
  const uint32_t count = cur.u32("entry count");
  if (count > kMaxEntries) throw FormatError("checkpoint: implausible entry count at offset 13");

  NamedTensors out;
  out.reserve(count);
  std::set<std::string> seen;
  for (uint32_t e = 0; e < count; ++e) {
    const size_t entry_at = cur.pos;
    const uint32_t name_len = cur.u32("name length");
    if (name_len == 0 || name_len > kMaxName) {
      throw FormatError("checkpoint: implausible name length at offset " +
                        std::to_string(entry_at));
    }
    std::string name = cur.str(name_len, "name");
    if (!seen.insert(name).second) {
      throw FormatError("checkpoint: duplicate tensor name '" + name + "' at offset " +
                        std::to_string(entry_at));
    }
    const uint32_t rank = cur.u32("rank");
    if (rank == 0 || rank > kMaxRank) {
      throw FormatError("checkpoint: implausible rank at offset " + std::to_string(entry_at));
    }
    std::vector<int> shape;
    uint64_t numel = 1;
    for (uint32_t d = 0; d < rank; ++d) {
      const uint32_t ext = cur.u32("extent");
      if (ext == 0 || ext > kMaxExtent) {
        throw FormatError("checkpoint: implausible extent at offset " + std::to_string(entry_at));
      }
      shape.push_back(static_cast<int>(ext));
      numel *= ext;
    }
    if (numel > (1ull << 32)) {
      throw FormatError("checkpoint: implausible tensor size at offset " +
                        std::to_string(entry_at));
    }
    Tensor t(shape);
    for (uint64_t i = 0; i < numel; ++i) {
      const uint32_t bits = cur.u32("sample");
      float v;
      std::memcpy(&v, &bits, sizeof(v));
      t[static_cast<int64_t>(i)] = v;
    }
    out.emplace_back(std::move(name), std::move(t));
  }
  if (cur.pos != bytes.size()) {
    throw FormatError("checkpoint: trailing bytes at offset " + std::to_string(cur.pos));
  }
  return out;
}

void write_checkpoint(const NamedTensors& entries, const std::string& path) {
  const std::string bytes = checkpoint_bytes(entries);
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw DataError("write_checkpoint: cannot open " + path);
  out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
  if (!out) throw DataError("write_checkpoint: short write to " + path);
}

NamedTensors read_checkpoint(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError("read_checkpoint: cannot open " + path);
  std::string bytes((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  return parse_checkpoint(bytes);
}

}  // namespace idsc
