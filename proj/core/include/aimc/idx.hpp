#pragma once

#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <vector>

namespace aimc {

inline constexpr std::uint32_t kIdxImagesMagic = 0x00000803;
inline constexpr std::uint32_t kIdxLabelsMagic = 0x00000801;

/// Images normalized to [0, 1] (pixel / 255), one row of rows*cols values per
/// image, plus one label per image.
struct Dataset {
  std::size_t count = 0;
  std::size_t image_rows = 0;
  std::size_t image_cols = 0;
  std::vector<double> pixels;
  std::vector<std::uint8_t> labels;

  std::size_t features() const { return image_rows * image_cols; }
  std::span<const double> image(std::size_t k) const {
    return {pixels.data() + k * features(), features()};
  }
  /// First n samples (or all of them when n >= count).
  Dataset head(std::size_t n) const;
};

struct IdxImages {
  std::size_t count = 0;
  std::size_t rows = 0;
  std::size_t cols = 0;
  std::vector<std::uint8_t> data;
};

/// Parse big-endian IDX files (uncompressed). Throws FormatError naming the
/// byte offset of the problem.
IdxImages read_idx_images(const std::filesystem::path& path);
std::vector<std::uint8_t> read_idx_labels(const std::filesystem::path& path);

/// Loads an image/label pair and checks that the counts agree.
Dataset load_idx(const std::filesystem::path& images, const std::filesystem::path& labels);

/// Loads `<dir>/<prefix>-images-idx3-ubyte` and `<dir>/<prefix>-labels-idx1-ubyte`
/// (prefix "train" or "t10k").
Dataset load_mnist_split(const std::filesystem::path& dir, const std::string& prefix);

void write_idx_images(const std::filesystem::path& path, const IdxImages& images);
void write_idx_labels(const std::filesystem::path& path, std::span<const std::uint8_t> labels);

/// Writes a small synthetic MNIST-shaped data set (train and t10k splits)
/// whose classes are linearly separable blobs. Returns the directory.
std::filesystem::path write_synthetic_fixtures(const std::filesystem::path& dir,
                                               std::size_t train_count, std::size_t test_count,
                                               std::uint64_t seed);

}  // namespace aimc
