#ifndef ANTISPOOF_BINARY_IO_H_
#define ANTISPOOF_BINARY_IO_H_

#include <bit>
#include <cstdint>
#include <cstring>
#include <istream>
#include <ostream>
#include <string>

#include "antispoof/errors.h"

namespace antispoof::binary_io {

static_assert(std::endian::native == std::endian::little,
              "on-disk formats are little-endian; add byte swapping for this target");

inline void write_u32(std::ostream& out, std::uint32_t v) {
  out.write(reinterpret_cast<const char*>(&v), sizeof v);
}

inline void write_f32(std::ostream& out, float v) {
  out.write(reinterpret_cast<const char*>(&v), sizeof v);
}

inline std::uint32_t read_u32(std::istream& in, const std::string& what) {
  std::uint32_t v = 0;
  if (!in.read(reinterpret_cast<char*>(&v), sizeof v)) throw FormatError("truncated " + what);
  return v;
}

inline void read_f32s(std::istream& in, float* dst, std::size_t n, const std::string& what) {
  if (!in.read(reinterpret_cast<char*>(dst), static_cast<std::streamsize>(n * sizeof(float))))
    throw FormatError("truncated payload in " + what);
}

inline void expect_magic(std::istream& in, const char (&magic)[5], const std::string& what) {
  char buf[4] = {};
  if (!in.read(buf, 4) || std::memcmp(buf, magic, 4) != 0)
    throw FormatError(what + ": bad magic (expected \"" + std::string(magic) + "\")");
}

}  // namespace antispoof::binary_io

#endif  // ANTISPOOF_BINARY_IO_H_
