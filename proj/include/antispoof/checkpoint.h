#ifndef ANTISPOOF_CHECKPOINT_H_
#define ANTISPOOF_CHECKPOINT_H_

#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <vector>

#include "antispoof/tensor.h"

namespace antispoof {

struct NamedTensor {
  std::string name;
  TensorF value;
  bool operator==(const NamedTensor&) const = default;
};

inline constexpr std::uint32_t kCheckpointVersion = 1;

// Little-endian container: "LCNN", u32 version, then one record per tensor
// (u32 name length, UTF-8 name, u32 rank, u32 dims..., float32 payload)
// until end of file.
void write_checkpoint(const std::filesystem::path& path, std::span<const NamedTensor> tensors);
std::vector<NamedTensor> read_checkpoint(const std::filesystem::path& path);

const NamedTensor& find_tensor(std::span<const NamedTensor> tensors, const std::string& name);

}  // namespace antispoof

#endif  // ANTISPOOF_CHECKPOINT_H_
