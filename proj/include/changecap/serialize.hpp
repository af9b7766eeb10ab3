#pragma once

#include "changecap/types.hpp"

#include <cstdint>
#include <iosfwd>
#include <string>
#include <vector>

namespace changecap {

// Wire format for one tensor, all integers little-endian:
//   "R3T1" | rank:u32 | extents:u64[rank] | name_len:u32 | name bytes |
//   payload: f64[product(extents)], row-major.
struct NamedTensor {
  std::string name;
  Shape shape;
  Mat data;  // storage as in TensorNode: rank 0 -> 1x1, rank 1 -> 1xn
};

void write_tensor(std::ostream& os, const NamedTensor& t);
NamedTensor read_tensor(std::istream& is);

// Versioned container: "R3C1" | version:u32 | json_len:u64 | json bytes |
// count:u64 | tensors.
struct Container {
  std::uint32_t version = 1;
  std::string config_json;
  std::vector<NamedTensor> tensors;
};

void write_container(const std::string& path, const Container& c);
Container read_container(const std::string& path);

std::uint64_t fnv1a64(const void* data, std::size_t len);
std::uint64_t hash_file(const std::string& path);

}  // namespace changecap
