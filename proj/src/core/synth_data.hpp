#pragma once

#include <cstdint>
#include <string>
#include <vector>

namespace nlr {

// Deterministic stand-in datasets written in the exact on-disk formats the
// loaders parse. "mnist" produces an IDX pair of jittered glyph digits,
// 28x28 grayscale, 10 classes; "cifar10" produces one binary batch of
// colored geometric patterns, 32x32 RGB, 10 classes. Class balance is
// near-uniform and every parameter of the generator derives from `seed`.
struct SynthConfig {
  std::string format = "mnist";  // "mnist" | "cifar10"
  std::size_t count = 3000;
  std::uint64_t seed = 42;

  void validate() const;
};

// Writes the files into out_dir (created if missing) under the conventional
// names (train-images-idx3-ubyte / train-labels-idx1-ubyte, data_batch_1.bin)
// and returns their paths.
std::vector<std::string> write_synth_dataset(const SynthConfig& config,
                                             const std::string& out_dir);

}  // namespace nlr
