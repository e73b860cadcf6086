#pragma once

// Checkpoint container: magic "MANN1", then one record per parameter with
// name, dtype, shape, and raw little-endian values. Reload is bit-exact.

#include <cstdint>
#include <cstring>
#include <fstream>
#include <istream>
#include <ostream>
#include <stdexcept>
#include <string>
#include <unordered_map>
#include <vector>

#include "mann/nn/tensor.hpp"

namespace mann::nn {

inline constexpr char kCheckpointMagic[5] = {'M', 'A', 'N', 'N', '1'};

namespace detail {

inline void write_u32(std::ostream& out, std::uint32_t v) {
  unsigned char b[4] = {static_cast<unsigned char>(v), static_cast<unsigned char>(v >> 8),
                        static_cast<unsigned char>(v >> 16), static_cast<unsigned char>(v >> 24)};
  out.write(reinterpret_cast<const char*>(b), 4);
}

inline std::uint32_t read_u32(std::istream& in) {
  unsigned char b[4];
  in.read(reinterpret_cast<char*>(b), 4);
  if (!in) throw std::runtime_error("checkpoint: truncated");
  return static_cast<std::uint32_t>(b[0]) | static_cast<std::uint32_t>(b[1]) << 8 |
         static_cast<std::uint32_t>(b[2]) << 16 | static_cast<std::uint32_t>(b[3]) << 24;
}

template <typename T>
void write_value(std::ostream& out, T v) {
  static_assert(sizeof(T) == 4 || sizeof(T) == 8);
  if constexpr (sizeof(T) == 4) {
    std::uint32_t bits;
    std::memcpy(&bits, &v, 4);
    write_u32(out, bits);
  } else {
    std::uint64_t bits;
    std::memcpy(&bits, &v, 8);
    write_u32(out, static_cast<std::uint32_t>(bits));
    write_u32(out, static_cast<std::uint32_t>(bits >> 32));
  }
}

template <typename T>
T read_value(std::istream& in) {
  T v;
  if constexpr (sizeof(T) == 4) {
    std::uint32_t bits = read_u32(in);
    std::memcpy(&v, &bits, 4);
  } else {
    std::uint64_t lo = read_u32(in);
    std::uint64_t hi = read_u32(in);
    std::uint64_t bits = lo | hi << 32;
    std::memcpy(&v, &bits, 8);
  }
  return v;
}

}  // namespace detail

template <typename T>
void save_parameters(std::ostream& out, const std::vector<Parameter<T>*>& params) {
  out.write(kCheckpointMagic, sizeof(kCheckpointMagic));
  detail::write_u32(out, static_cast<std::uint32_t>(params.size()));
  for (const Parameter<T>* p : params) {
    detail::write_u32(out, static_cast<std::uint32_t>(p->name.size()));
    out.write(p->name.data(), static_cast<std::streamsize>(p->name.size()));
    out.put(sizeof(T) == 4 ? '\0' : '\1');
    const auto& shape = p->value.shape();
    detail::write_u32(out, static_cast<std::uint32_t>(shape.size()));
    for (int d : shape) detail::write_u32(out, static_cast<std::uint32_t>(d));
    for (T v : p->value.values()) detail::write_value(out, v);
  }
  if (!out) throw std::runtime_error("checkpoint: write failed");
}

template <typename T>
void save_parameters(const std::string& path, const std::vector<Parameter<T>*>& params) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("checkpoint: cannot open " + path);
  save_parameters(out, params);
}

// Loads into existing parameters matched by name; every parameter must be
// present with its exact shape and dtype.
template <typename T>
void load_parameters(std::istream& in, const std::vector<Parameter<T>*>& params) {
  char magic[5];
  in.read(magic, 5);
  if (!in || std::memcmp(magic, kCheckpointMagic, 5) != 0)
    throw std::runtime_error("checkpoint: bad magic");
  std::uint32_t count = detail::read_u32(in);

  std::unordered_map<std::string, Parameter<T>*> by_name;
  for (Parameter<T>* p : params) by_name[p->name] = p;

  std::size_t matched = 0;
  for (std::uint32_t r = 0; r < count; ++r) {
    std::uint32_t name_len = detail::read_u32(in);
    std::string name(name_len, '\0');
    in.read(name.data(), name_len);
    int dtype = in.get();
    std::uint32_t rank = detail::read_u32(in);
    std::vector<int> shape(rank);
    std::size_t total = 1;
    for (std::uint32_t i = 0; i < rank; ++i) {
      shape[i] = static_cast<int>(detail::read_u32(in));
      total *= static_cast<std::size_t>(shape[i]);
    }
    if (!in) throw std::runtime_error("checkpoint: truncated record header");
    auto it = by_name.find(name);
    if (it == by_name.end())
      throw std::runtime_error("checkpoint: unexpected parameter " + name);
    Parameter<T>* p = it->second;
    if (dtype != (sizeof(T) == 4 ? 0 : 1))
      throw std::runtime_error("checkpoint: dtype mismatch for " + name);
    if (p->value.shape() != shape)
      throw std::runtime_error("checkpoint: shape mismatch for " + name);
    auto& vals = p->value.values();
    for (std::size_t i = 0; i < total; ++i) vals[i] = detail::read_value<T>(in);
    ++matched;
  }
  if (matched != params.size())
    throw std::runtime_error("checkpoint: missing parameters, expected " +
                             std::to_string(params.size()) + ", found " + std::to_string(matched));
}

template <typename T>
void load_parameters(const std::string& path, const std::vector<Parameter<T>*>& params) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("checkpoint: cannot open " + path);
  load_parameters(in, params);
}

}  // namespace mann::nn
