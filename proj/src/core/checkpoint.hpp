#pragma once

#include <string>
#include <utility>
#include <vector>

#include "core/layers.hpp"

namespace nlr {

// Flat binary parameter container.
//
//   magic   "NLRL" (4 bytes)
//   version u32 little-endian (currently 1)
//   count   u32 little-endian, number of tensor records that follow
//   record: name_len u32 LE, name bytes (UTF-8, no terminator),
//           rank u32 LE, dims (rank x u32 LE), payload (f64 LE, row-major)
//
// Every ParamStore entry is recorded, trainable or not, in store order, so
// save -> load -> save reproduces the file byte for byte.
void save_checkpoint(const ParamStore& params, const std::string& path);

// Reads raw records in file order.
std::vector<std::pair<std::string, Tensor>> read_checkpoint(const std::string& path);

// Loads values into an existing store. Every record must match an entry by
// name and shape, and every entry must be covered.
void load_checkpoint(ParamStore& params, const std::string& path);

}  // namespace nlr
