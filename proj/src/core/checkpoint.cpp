#include "core/checkpoint.hpp"

#include <bit>
#include <cstring>
#include <fstream>

#include "core/common.hpp"

static_assert(std::endian::native == std::endian::little,
              "checkpoint format assumes a little-endian host");

namespace nlr {

namespace {

constexpr char kMagic[4] = {'N', 'L', 'R', 'L'};
constexpr std::uint32_t kVersion = 1;

void write_u32(std::ofstream& f, std::uint32_t v) {
  f.write(reinterpret_cast<const char*>(&v), 4);
}

std::uint32_t read_u32(std::ifstream& f, const std::string& path) {
  std::uint32_t v = 0;
  f.read(reinterpret_cast<char*>(&v), 4);
  if (!f) throw_io("truncated checkpoint '" + path + "'");
  return v;
}

}  // namespace

void save_checkpoint(const ParamStore& params, const std::string& path) {
  std::ofstream f(path, std::ios::binary);
  if (!f) throw_io("cannot open '" + path + "' for writing");
  f.write(kMagic, 4);
  write_u32(f, kVersion);
  write_u32(f, static_cast<std::uint32_t>(params.entries().size()));
  for (const auto& e : params.entries()) {
    write_u32(f, static_cast<std::uint32_t>(e.name.size()));
    f.write(e.name.data(), static_cast<std::streamsize>(e.name.size()));
    write_u32(f, static_cast<std::uint32_t>(e.value.rank()));
    for (std::size_t d : e.value.shape()) write_u32(f, static_cast<std::uint32_t>(d));
    f.write(reinterpret_cast<const char*>(e.value.data()),
            static_cast<std::streamsize>(e.value.size() * sizeof(double)));
  }
  if (!f) throw_io("write failed for '" + path + "'");
}

std::vector<std::pair<std::string, Tensor>> read_checkpoint(const std::string& path) {
  std::ifstream f(path, std::ios::binary);
  if (!f) throw_io("cannot open checkpoint '" + path + "'");
  char magic[4];
  f.read(magic, 4);
  if (!f || std::memcmp(magic, kMagic, 4) != 0)
    throw_io("'" + path + "' is not a checkpoint file (bad magic)");
  const std::uint32_t version = read_u32(f, path);
  if (version != kVersion)
    throw_io("checkpoint '" + path + "' has unsupported version " + std::to_string(version));
  const std::uint32_t count = read_u32(f, path);

  std::vector<std::pair<std::string, Tensor>> records;
  records.reserve(count);
  for (std::uint32_t i = 0; i < count; ++i) {
    const std::uint32_t name_len = read_u32(f, path);
    std::string name(name_len, '\0');
    f.read(name.data(), name_len);
    if (!f) throw_io("truncated checkpoint '" + path + "'");
    const std::uint32_t rank = read_u32(f, path);
    Shape shape(rank);
    for (std::uint32_t d = 0; d < rank; ++d) shape[d] = read_u32(f, path);
    std::vector<double> data(shape_size(shape));
    f.read(reinterpret_cast<char*>(data.data()),
           static_cast<std::streamsize>(data.size() * sizeof(double)));
    if (!f) throw_io("truncated checkpoint '" + path + "'");
    records.emplace_back(std::move(name), Tensor(std::move(shape), std::move(data)));
  }
  return records;
}

void load_checkpoint(ParamStore& params, const std::string& path) {
  auto records = read_checkpoint(path);
  if (records.size() != params.entries().size())
    throw_io("checkpoint '" + path + "' holds " + std::to_string(records.size()) +
             " tensors, model expects " + std::to_string(params.entries().size()));
  for (auto& [name, tensor] : records) {
    if (!params.has(name)) throw_io("checkpoint tensor '" + name + "' unknown to this model");
    Tensor& slot = params.at(name);
    if (!slot.same_shape(tensor))
      throw_io("checkpoint tensor '" + name + "' has shape " + shape_str(tensor.shape()) +
               ", model expects " + shape_str(slot.shape()));
    slot = std::move(tensor);
  }
}

}  // namespace nlr
