#pragma once

#include <Eigen/Core>
#include <bit>
#include <cstdint>
#include <cstring>
#include <istream>
#include <ostream>
#include <string>
#include <vector>

#include "tsdeconv/errors.hpp"
#include "tsdeconv/tensor.hpp"

// Little-endian binary primitives shared by the checkpoint, split, and
// feature-bundle formats.

static_assert(std::endian::native == std::endian::little,
              "file formats are little-endian; big-endian hosts are unsupported");

namespace tsdeconv::io {

template <typename T>
void write_pod(std::ostream& out, const T& value) {
  out.write(reinterpret_cast<const char*>(&value), sizeof(T));
}

template <typename T>
T read_pod(std::istream& in, const char* what) {
  T value;
  in.read(reinterpret_cast<char*>(&value), sizeof(T));
  if (!in) throw FormatError(std::string("truncated file while reading ") + what);
  return value;
}

inline void write_string(std::ostream& out, const std::string& s) {
  write_pod<std::uint32_t>(out, static_cast<std::uint32_t>(s.size()));
  out.write(s.data(), static_cast<std::streamsize>(s.size()));
}

inline std::string read_string(std::istream& in, const char* what) {
  const auto len = read_pod<std::uint32_t>(in, what);
  if (len > (1u << 28)) throw FormatError(std::string("implausible string length in ") + what);
  std::string s(len, '\0');
  in.read(s.data(), len);
  if (!in) throw FormatError(std::string("truncated file while reading ") + what);
  return s;
}

inline void write_doubles(std::ostream& out, const double* data, std::size_t count) {
  out.write(reinterpret_cast<const char*>(data), static_cast<std::streamsize>(count * sizeof(double)));
}

inline void read_doubles(std::istream& in, double* data, std::size_t count, const char* what) {
  in.read(reinterpret_cast<char*>(data), static_cast<std::streamsize>(count * sizeof(double)));
  if (!in) throw FormatError(std::string("truncated file while reading ") + what);
}

inline void write_vector(std::ostream& out, const Eigen::VectorXd& v) {
  write_pod<std::uint64_t>(out, static_cast<std::uint64_t>(v.size()));
  write_doubles(out, v.data(), static_cast<std::size_t>(v.size()));
}

inline Eigen::VectorXd read_vector(std::istream& in, const char* what) {
  const auto n = read_pod<std::uint64_t>(in, what);
  if (n > (1ull << 32)) throw FormatError(std::string("implausible vector length in ") + what);
  Eigen::VectorXd v(static_cast<Eigen::Index>(n));
  read_doubles(in, v.data(), static_cast<std::size_t>(n), what);
  return v;
}

inline void write_tensor(std::ostream& out, const Tensord& t) {
  write_pod<std::uint32_t>(out, static_cast<std::uint32_t>(t.rank()));
  for (int i = 0; i < t.rank(); ++i) write_pod<std::int64_t>(out, t.extent(i));
  write_doubles(out, t.data(), static_cast<std::size_t>(t.size()));
}

inline Tensord read_tensor(std::istream& in, const char* what) {
  const auto rank = read_pod<std::uint32_t>(in, what);
  if (rank > 8) throw FormatError(std::string("implausible tensor rank in ") + what);
  std::vector<Index> shape(rank);
  for (auto& e : shape) e = read_pod<std::int64_t>(in, what);
  Tensord t(shape);
  read_doubles(in, t.data(), static_cast<std::size_t>(t.size()), what);
  return t;
}

}  // namespace tsdeconv::io
