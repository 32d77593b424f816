#include "core/dataset.hpp"

#include <algorithm>
#include <cstdint>
#include <fstream>

#include "core/common.hpp"
#include "core/rng.hpp"

namespace nlr {

Shape Dataset::sample_shape() const {
  if (empty()) throw_internal("sample_shape of an empty dataset");
  return {images.dim(1), images.dim(2), images.dim(3)};
}

namespace {

std::vector<unsigned char> read_file(const std::string& path) {
  std::ifstream f(path, std::ios::binary | std::ios::ate);
  if (!f) throw_io("cannot open '" + path + "'");
  const std::streamsize size = f.tellg();
  f.seekg(0);
  std::vector<unsigned char> bytes(static_cast<std::size_t>(size));
  f.read(reinterpret_cast<char*>(bytes.data()), size);
  if (!f) throw_io("read failed for '" + path + "'");
  return bytes;
}

std::uint32_t be32(const std::vector<unsigned char>& b, std::size_t off, const std::string& path) {
  if (off + 4 > b.size()) throw_io("truncated file '" + path + "'");
  return (std::uint32_t(b[off]) << 24) | (std::uint32_t(b[off + 1]) << 16) |
         (std::uint32_t(b[off + 2]) << 8) | std::uint32_t(b[off + 3]);
}

std::string hex32(std::uint32_t v) {
  char buf[16];
  std::snprintf(buf, sizeof(buf), "0x%08x", v);
  return buf;
}

}  // namespace

Dataset load_mnist(const std::string& images_path, const std::string& labels_path) {
  const auto img_bytes = read_file(images_path);
  const std::uint32_t img_magic = be32(img_bytes, 0, images_path);
  if (img_magic != 0x00000803u)
    throw_io("'" + images_path + "': magic " + hex32(img_magic) +
             ", expected 0x00000803 (idx3 images)");
  const std::uint32_t n = be32(img_bytes, 4, images_path);
  const std::uint32_t rows = be32(img_bytes, 8, images_path);
  const std::uint32_t cols = be32(img_bytes, 12, images_path);
  const std::size_t expected = 16 + std::size_t(n) * rows * cols;
  if (img_bytes.size() != expected)
    throw_io("'" + images_path + "': " + std::to_string(img_bytes.size()) + " bytes, expected " +
             std::to_string(expected) + " for " + std::to_string(n) + " images of " +
             std::to_string(rows) + "x" + std::to_string(cols));

  const auto lab_bytes = read_file(labels_path);
  const std::uint32_t lab_magic = be32(lab_bytes, 0, labels_path);
  if (lab_magic != 0x00000801u)
    throw_io("'" + labels_path + "': magic " + hex32(lab_magic) +
             ", expected 0x00000801 (idx1 labels)");
  const std::uint32_t n_labels = be32(lab_bytes, 4, labels_path);
  if (lab_bytes.size() != 8 + std::size_t(n_labels))
    throw_io("'" + labels_path + "': truncated label payload");
  if (n_labels != n)
    throw_io("count mismatch: " + std::to_string(n) + " images in '" + images_path + "' vs " +
             std::to_string(n_labels) + " labels in '" + labels_path + "'");
  if (n == 0) throw_io("'" + images_path + "': empty dataset");

  Dataset ds;
  std::vector<double> pixels(std::size_t(n) * rows * cols);
  for (std::size_t i = 0; i < pixels.size(); ++i)
    pixels[i] = static_cast<double>(img_bytes[16 + i]) / 255.0;
  ds.images = Tensor({n, 1, rows, cols}, std::move(pixels));
  ds.labels.reserve(n);
  for (std::uint32_t i = 0; i < n; ++i) {
    const unsigned char l = lab_bytes[8 + i];
    if (l > 9) throw_io("'" + labels_path + "': label " + std::to_string(l) + " out of range");
    ds.labels.push_back(static_cast<int>(l));
  }
  return ds;
}

Dataset load_cifar10(const std::vector<std::string>& batch_paths) {
  constexpr std::size_t kRecord = 3073;  // 1 label byte + 3 x 32 x 32 pixels
  if (batch_paths.empty()) throw_config("load_cifar10: no batch files given");

  std::vector<double> pixels;
  std::vector<int> labels;
  for (const auto& path : batch_paths) {
    const auto bytes = read_file(path);
    if (bytes.empty() || bytes.size() % kRecord != 0)
      throw_io("'" + path + "': " + std::to_string(bytes.size()) +
               " bytes is not a whole number of 3073-byte records");
    const std::size_t records = bytes.size() / kRecord;
    for (std::size_t r = 0; r < records; ++r) {
      const unsigned char label = bytes[r * kRecord];
      if (label > 9)
        throw_io("'" + path + "': record " + std::to_string(r) + " has label " +
                 std::to_string(label) + " out of range");
      labels.push_back(static_cast<int>(label));
      const unsigned char* src = bytes.data() + r * kRecord + 1;
      for (std::size_t i = 0; i < 3072; ++i)
        pixels.push_back(static_cast<double>(src[i]) / 255.0);
    }
  }
  Dataset ds;
  ds.images = Tensor({labels.size(), 3, 32, 32}, std::move(pixels));
  ds.labels = std::move(labels);
  return ds;
}

Dataset gather(const Dataset& ds, const std::vector<std::size_t>& idx) {
  Dataset out;
  out.num_classes = ds.num_classes;
  if (idx.empty()) return out;
  const std::size_t sample = ds.images.size() / ds.n();
  std::vector<double> pixels;
  pixels.reserve(idx.size() * sample);
  for (std::size_t i : idx) {
    if (i >= ds.n()) throw_internal("gather: index out of range");
    const double* src = ds.images.data() + i * sample;
    pixels.insert(pixels.end(), src, src + sample);
    out.labels.push_back(ds.labels[i]);
  }
  Shape shape = ds.images.shape();
  shape[0] = idx.size();
  out.images = Tensor(std::move(shape), std::move(pixels));
  return out;
}

namespace {

// Largest-remainder apportionment of `want` picks across class buckets,
// proportional to bucket sizes. Ties go to the lower class id.
std::vector<std::size_t> apportion(const std::vector<std::size_t>& bucket_sizes, std::size_t want,
                                   std::size_t total) {
  const std::size_t classes = bucket_sizes.size();
  std::vector<std::size_t> take(classes, 0);
  if (want == 0) return take;
  std::vector<std::pair<double, std::size_t>> remainders;
  std::size_t assigned = 0;
  for (std::size_t c = 0; c < classes; ++c) {
    const double exact = static_cast<double>(want) * static_cast<double>(bucket_sizes[c]) /
                         static_cast<double>(total);
    take[c] = static_cast<std::size_t>(exact);
    assigned += take[c];
    remainders.push_back({exact - static_cast<double>(take[c]), c});
  }
  std::stable_sort(remainders.begin(), remainders.end(),
                   [](const auto& a, const auto& b) { return a.first > b.first; });
  for (std::size_t i = 0; assigned < want; ++i, ++assigned) take[remainders[i % classes].second]++;
  return take;
}

}  // namespace

std::pair<Dataset, Dataset> subset(const Dataset& ds, std::size_t n_train, std::size_t n_test,
                                   std::uint64_t seed, bool stratified) {
  if (n_train + n_test > ds.n())
    throw_config("subset: requested " + std::to_string(n_train) + "+" + std::to_string(n_test) +
                 " samples from a dataset of " + std::to_string(ds.n()));
  RngStream root(seed);

  std::vector<std::size_t> train_idx, test_idx;
  if (!stratified) {
    std::vector<std::size_t> perm(ds.n());
    for (std::size_t i = 0; i < perm.size(); ++i) perm[i] = i;
    RngStream r = root.split(0);
    r.shuffle(perm);
    train_idx.assign(perm.begin(), perm.begin() + static_cast<std::ptrdiff_t>(n_train));
    test_idx.assign(perm.begin() + static_cast<std::ptrdiff_t>(n_train),
                    perm.begin() + static_cast<std::ptrdiff_t>(n_train + n_test));
  } else {
    std::vector<std::vector<std::size_t>> buckets(ds.num_classes);
    for (std::size_t i = 0; i < ds.n(); ++i)
      buckets[static_cast<std::size_t>(ds.labels[i])].push_back(i);
    std::vector<std::size_t> sizes;
    for (auto& b : buckets) sizes.push_back(b.size());
    const auto train_take = apportion(sizes, n_train, ds.n());
    // Test picks come out of what the train split left behind, so a class
    // can never be asked for more samples than it holds.
    std::vector<std::size_t> remaining;
    for (std::size_t c = 0; c < sizes.size(); ++c) remaining.push_back(sizes[c] - train_take[c]);
    const auto test_take = apportion(remaining, n_test, ds.n() - n_train);
    for (std::size_t c = 0; c < buckets.size(); ++c) {
      if (train_take[c] + test_take[c] > buckets[c].size())
        throw_internal("subset: class " + std::to_string(c) + " over-allocated");
      RngStream r = root.split(1 + c);
      r.shuffle(buckets[c]);
      for (std::size_t i = 0; i < train_take[c]; ++i) train_idx.push_back(buckets[c][i]);
      for (std::size_t i = 0; i < test_take[c]; ++i)
        test_idx.push_back(buckets[c][train_take[c] + i]);
    }
  }

  RngStream mix_train = root.split(1000001);
  RngStream mix_test = root.split(1000002);
  mix_train.shuffle(train_idx);
  mix_test.shuffle(test_idx);
  return {gather(ds, train_idx), gather(ds, test_idx)};
}

std::vector<std::pair<std::vector<std::size_t>, std::vector<std::size_t>>> kfold_split(
    std::size_t n, std::size_t k, std::uint64_t seed) {
  if (k < 2) throw_config("kfold_split: k must be at least 2");
  if (k > n) throw_config("kfold_split: k=" + std::to_string(k) + " exceeds n=" + std::to_string(n));

  std::vector<std::size_t> perm(n);
  for (std::size_t i = 0; i < n; ++i) perm[i] = i;
  RngStream r = RngStream(seed).split(0);
  r.shuffle(perm);

  std::vector<std::pair<std::vector<std::size_t>, std::vector<std::size_t>>> folds;
  std::size_t start = 0;
  for (std::size_t f = 0; f < k; ++f) {
    const std::size_t size = n / k + (f < n % k ? 1 : 0);
    std::vector<std::size_t> val(perm.begin() + static_cast<std::ptrdiff_t>(start),
                                 perm.begin() + static_cast<std::ptrdiff_t>(start + size));
    std::vector<bool> in_val(n, false);
    for (std::size_t i : val) in_val[i] = true;
    std::vector<std::size_t> train;
    train.reserve(n - size);
    for (std::size_t i = 0; i < n; ++i)
      if (!in_val[i]) train.push_back(i);
    folds.emplace_back(std::move(train), std::move(val));
    start += size;
  }
  return folds;
}

}  // namespace nlr
