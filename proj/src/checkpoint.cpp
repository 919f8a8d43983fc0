#include "patrol/checkpoint.hpp"

#include <cstdint>
#include <cstring>
#include <fstream>

namespace patrol::ad {

namespace {

constexpr char kMagic[8] = {'P', 'A', 'T', 'R', 'L', 'C', 'K', '1'};

void write_u32(std::ostream& out, uint32_t v) {
  unsigned char b[4] = {static_cast<unsigned char>(v), static_cast<unsigned char>(v >> 8),
                        static_cast<unsigned char>(v >> 16),
                        static_cast<unsigned char>(v >> 24)};
  out.write(reinterpret_cast<const char*>(b), 4);
}

uint32_t read_u32(std::istream& in) {
  unsigned char b[4];
  in.read(reinterpret_cast<char*>(b), 4);
  return static_cast<uint32_t>(b[0]) | (static_cast<uint32_t>(b[1]) << 8) |
         (static_cast<uint32_t>(b[2]) << 16) | (static_cast<uint32_t>(b[3]) << 24);
}

}  // namespace

void save_checkpoint(const std::string& path,
                     const std::vector<std::pair<std::string, Tensor>>& tensors) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw CheckpointError("cannot write checkpoint: " + path);
  out.write(kMagic, 8);
  write_u32(out, static_cast<uint32_t>(tensors.size()));
  for (const auto& [name, tensor] : tensors) {
    write_u32(out, static_cast<uint32_t>(name.size()));
    out.write(name.data(), static_cast<std::streamsize>(name.size()));
    write_u32(out, static_cast<uint32_t>(tensor.shape().size()));
    for (int d : tensor.shape()) write_u32(out, static_cast<uint32_t>(d));
    static_assert(sizeof(double) == 8);
    out.write(reinterpret_cast<const char*>(tensor.data().data()),
              static_cast<std::streamsize>(tensor.data().size() * 8));
  }
  if (!out) throw CheckpointError("short write to checkpoint: " + path);
}

std::vector<std::pair<std::string, Tensor>> load_checkpoint(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw CheckpointError("cannot open checkpoint: " + path);
  char magic[8];
  in.read(magic, 8);
  if (!in || std::memcmp(magic, kMagic, 8) != 0)
    throw CheckpointError("not a checkpoint file: " + path);
  uint32_t count = read_u32(in);
  std::vector<std::pair<std::string, Tensor>> tensors;
  tensors.reserve(count);
  for (uint32_t i = 0; i < count; ++i) {
    uint32_t name_len = read_u32(in);
    std::string name(name_len, '\0');
    in.read(name.data(), name_len);
    uint32_t ndim = read_u32(in);
    std::vector<int> shape(ndim);
    for (uint32_t d = 0; d < ndim; ++d) shape[d] = static_cast<int>(read_u32(in));
    std::vector<double> data(shape_numel(shape));
    in.read(reinterpret_cast<char*>(data.data()),
            static_cast<std::streamsize>(data.size() * 8));
    if (!in) throw CheckpointError("truncated checkpoint: " + path);
    tensors.emplace_back(std::move(name), Tensor(std::move(shape), std::move(data)));
  }
  return tensors;
}

}  // namespace patrol::ad
