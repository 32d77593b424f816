#pragma once

#include <string>
#include <utility>
#include <vector>

#include "core/tensor.hpp"

namespace nlr {

// Labeled image set; pixels scaled to [0,1], NCHW layout.
struct Dataset {
  Tensor images;            // [N x C x H x W]; default-constructed when empty
  std::vector<int> labels;  // class ids in [0, num_classes)
  std::size_t num_classes = 10;

  std::size_t n() const { return labels.size(); }
  bool empty() const { return labels.empty(); }
  Shape sample_shape() const;  // {C, H, W}
};

// IDX (big-endian) pair: images magic 0x00000803, labels magic 0x00000801.
// Fails on wrong magic, truncation, or a count mismatch between the files.
Dataset load_mnist(const std::string& images_path, const std::string& labels_path);

// CIFAR-10 binary batches: records of 1 label byte + 3072 channel-major
// pixel bytes. Fails when a file size is not a multiple of 3073 or a label
// byte exceeds 9.
Dataset load_cifar10(const std::vector<std::string>& batch_paths);

// Copies the selected samples, preserving index order.
Dataset gather(const Dataset& ds, const std::vector<std::size_t>& idx);

// Deterministic train/test split. Stratified mode keeps per-class counts
// within one sample of exact proportionality (largest-remainder rounding);
// both modes shuffle the resulting sets so downstream batches mix classes.
std::pair<Dataset, Dataset> subset(const Dataset& ds, std::size_t n_train, std::size_t n_test,
                                   std::uint64_t seed, bool stratified);

// k folds over [0, n): validation folds partition the range with sizes
// differing by at most one; train indices are the ascending complement.
std::vector<std::pair<std::vector<std::size_t>, std::vector<std::size_t>>> kfold_split(
    std::size_t n, std::size_t k, std::uint64_t seed);

}  // namespace nlr
