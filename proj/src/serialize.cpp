#include "changecap/serialize.hpp"

#include <bit>
#include <cstring>
#include <fstream>
#include <istream>
#include <ostream>
#include <stdexcept>

namespace changecap {

namespace {

constexpr char kTensorMagic[4] = {'R', '3', 'T', '1'};
constexpr char kContainerMagic[4] = {'R', '3', 'C', '1'};

void write_u32(std::ostream& os, std::uint32_t v) {
  char b[4];
  for (int i = 0; i < 4; ++i) b[i] = static_cast<char>((v >> (8 * i)) & 0xFF);
  os.write(b, 4);
}

void write_u64(std::ostream& os, std::uint64_t v) {
  char b[8];
  for (int i = 0; i < 8; ++i) b[i] = static_cast<char>((v >> (8 * i)) & 0xFF);
  os.write(b, 8);
}

void write_f64(std::ostream& os, double v) { write_u64(os, std::bit_cast<std::uint64_t>(v)); }

std::uint32_t read_u32(std::istream& is) {
  unsigned char b[4];
  is.read(reinterpret_cast<char*>(b), 4);
  if (!is) throw std::runtime_error("tensor read: truncated stream");
  std::uint32_t v = 0;
  for (int i = 3; i >= 0; --i) v = (v << 8) | b[i];
  return v;
}

std::uint64_t read_u64(std::istream& is) {
  unsigned char b[8];
  is.read(reinterpret_cast<char*>(b), 8);
  if (!is) throw std::runtime_error("tensor read: truncated stream");
  std::uint64_t v = 0;
  for (int i = 7; i >= 0; --i) v = (v << 8) | b[i];
  return v;
}

double read_f64(std::istream& is) { return std::bit_cast<double>(read_u64(is)); }

std::pair<Index, Index> storage_dims(const Shape& shape) {
  switch (shape.size()) {
    case 0:
      return {1, 1};
    case 1:
      return {1, shape[0]};
    case 2:
      return {shape[0], shape[1]};
    default:
      throw std::runtime_error("tensor read: rank > 2 unsupported");
  }
}

}  // namespace

void write_tensor(std::ostream& os, const NamedTensor& t) {
  os.write(kTensorMagic, 4);
  write_u32(os, static_cast<std::uint32_t>(t.shape.size()));
  Index numel = 1;
  for (Index e : t.shape) {
    write_u64(os, static_cast<std::uint64_t>(e));
    numel *= e;
  }
  if (numel != t.data.size()) {
    throw std::runtime_error("tensor write: shape/data size mismatch for '" + t.name + "'");
  }
  write_u32(os, static_cast<std::uint32_t>(t.name.size()));
  os.write(t.name.data(), static_cast<std::streamsize>(t.name.size()));
  // Mat storage is row-major, so a linear scan is the row-major payload.
  for (Index i = 0; i < t.data.rows(); ++i) {
    for (Index j = 0; j < t.data.cols(); ++j) write_f64(os, t.data(i, j));
  }
  if (!os) throw std::runtime_error("tensor write: stream failure for '" + t.name + "'");
}

NamedTensor read_tensor(std::istream& is) {
  char magic[4];
  is.read(magic, 4);
  if (!is || std::memcmp(magic, kTensorMagic, 4) != 0) {
    throw std::runtime_error("tensor read: bad magic (expected R3T1)");
  }
  NamedTensor t;
  const std::uint32_t rank = read_u32(is);
  if (rank > 2) throw std::runtime_error("tensor read: rank > 2 unsupported");
  t.shape.resize(rank);
  for (std::uint32_t i = 0; i < rank; ++i) {
    t.shape[i] = static_cast<Index>(read_u64(is));
    if (t.shape[i] <= 0) throw std::runtime_error("tensor read: non-positive extent");
  }
  const std::uint32_t name_len = read_u32(is);
  t.name.resize(name_len);
  is.read(t.name.data(), name_len);
  if (!is) throw std::runtime_error("tensor read: truncated name");
  auto [r, c] = storage_dims(t.shape);
  t.data.resize(r, c);
  for (Index i = 0; i < r; ++i) {
    for (Index j = 0; j < c; ++j) t.data(i, j) = read_f64(is);
  }
  return t;
}

void write_container(const std::string& path, const Container& c) {
  std::ofstream os(path, std::ios::binary);
  if (!os) throw std::runtime_error("cannot open for write: " + path);
  os.write(kContainerMagic, 4);
  write_u32(os, c.version);
  write_u64(os, c.config_json.size());
  os.write(c.config_json.data(), static_cast<std::streamsize>(c.config_json.size()));
  write_u64(os, c.tensors.size());
  for (const NamedTensor& t : c.tensors) write_tensor(os, t);
  if (!os) throw std::runtime_error("write failure: " + path);
}

Container read_container(const std::string& path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw std::runtime_error("cannot open: " + path);
  char magic[4];
  is.read(magic, 4);
  if (!is || std::memcmp(magic, kContainerMagic, 4) != 0) {
    throw std::runtime_error("container read: bad magic in " + path);
  }
  Container c;
  c.version = read_u32(is);
  const std::uint64_t json_len = read_u64(is);
  c.config_json.resize(json_len);
  is.read(c.config_json.data(), static_cast<std::streamsize>(json_len));
  const std::uint64_t count = read_u64(is);
  c.tensors.reserve(count);
  for (std::uint64_t i = 0; i < count; ++i) c.tensors.push_back(read_tensor(is));
  return c;
}

std::uint64_t fnv1a64(const void* data, std::size_t len) {
  const auto* p = static_cast<const unsigned char*>(data);
  std::uint64_t h = 0xCBF29CE484222325ull;
  for (std::size_t i = 0; i < len; ++i) {
    h ^= p[i];
    h *= 0x100000001B3ull;
  }
  return h;
}

std::uint64_t hash_file(const std::string& path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw std::runtime_error("cannot open: " + path);
  std::uint64_t h = 0xCBF29CE484222325ull;
  char buf[1 << 16];
  while (is) {
    is.read(buf, sizeof(buf));
    const std::streamsize got = is.gcount();
    for (std::streamsize i = 0; i < got; ++i) {
      h ^= static_cast<unsigned char>(buf[i]);
      h *= 0x100000001B3ull;
    }
  }
  return h;
}

}  // namespace changecap
