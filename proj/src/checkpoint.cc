#include "antispoof/checkpoint.h"

#include <fstream>
#include <stdexcept>

#include "antispoof/binary_io.h"
#include "antispoof/errors.h"

namespace antispoof {

void write_checkpoint(const std::filesystem::path& path, std::span<const NamedTensor> tensors) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw std::runtime_error("write_checkpoint: cannot open " + path.string());
  out.write("LCNN", 4);
  binary_io::write_u32(out, kCheckpointVersion);
  for (const auto& t : tensors) {
    binary_io::write_u32(out, static_cast<std::uint32_t>(t.name.size()));
    out.write(t.name.data(), static_cast<std::streamsize>(t.name.size()));
    binary_io::write_u32(out, static_cast<std::uint32_t>(t.value.rank()));
    for (std::size_t d : t.value.shape()) binary_io::write_u32(out, static_cast<std::uint32_t>(d));
    out.write(reinterpret_cast<const char*>(t.value.raw()),
              static_cast<std::streamsize>(t.value.size() * sizeof(float)));
  }
  if (!out) throw std::runtime_error("write_checkpoint: write failed for " + path.string());
}

std::vector<NamedTensor> read_checkpoint(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("read_checkpoint: cannot open " + path.string());
  const std::string what = "checkpoint " + path.string();
  binary_io::expect_magic(in, "LCNN", what);
  const std::uint32_t version = binary_io::read_u32(in, what);
  if (version != kCheckpointVersion)
    throw FormatError(what + ": unsupported version " + std::to_string(version));

  std::vector<NamedTensor> tensors;
  while (in.peek() != std::char_traits<char>::eof()) {
    NamedTensor t;
    const std::uint32_t name_len = binary_io::read_u32(in, what);
    if (name_len > 4096) throw FormatError(what + ": implausible name length");
    t.name.resize(name_len);
    if (!in.read(t.name.data(), name_len)) throw FormatError("truncated name in " + what);
    const std::uint32_t rank = binary_io::read_u32(in, what);
    if (rank > 8) throw FormatError(what + ": implausible rank for '" + t.name + "'");
    Shape shape(rank);
    for (auto& d : shape) d = binary_io::read_u32(in, what);
    std::vector<float> data(shape_size(shape));
    binary_io::read_f32s(in, data.data(), data.size(), what);
    t.value = TensorF(std::move(shape), std::move(data));
    tensors.push_back(std::move(t));
  }
  return tensors;
}

const NamedTensor& find_tensor(std::span<const NamedTensor> tensors, const std::string& name) {
  for (const auto& t : tensors)
    if (t.name == name) return t;
  throw FormatError("missing tensor '" + name + "'");
}

}  // namespace antispoof
