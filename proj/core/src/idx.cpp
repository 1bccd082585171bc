#include "aimc/idx.hpp"

#include <fstream>
#include <iterator>
#include <sstream>

#include "aimc/errors.hpp"
#include "aimc/rng.hpp"

namespace aimc {

namespace {

std::vector<std::uint8_t> slurp(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw FormatError("cannot open IDX file " + path.string());
  return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

[[noreturn]] void fail(const std::filesystem::path& path, std::size_t offset, const std::string& what) {
  std::ostringstream os;
  os << path.string() << ": " << what << " at byte offset " << offset;
  throw FormatError(os.str());
}

std::uint32_t read_be32(const std::vector<std::uint8_t>& bytes, std::size_t offset,
                        const std::filesystem::path& path) {
  if (offset + 4 > bytes.size()) fail(path, offset, "truncated header");
  return (std::uint32_t{bytes[offset]} << 24) | (std::uint32_t{bytes[offset + 1]} << 16) |
         (std::uint32_t{bytes[offset + 2]} << 8) | std::uint32_t{bytes[offset + 3]};
}

void put_be32(std::ostream& out, std::uint32_t v) {
  const char b[4] = {static_cast<char>(v >> 24), static_cast<char>(v >> 16),
                     static_cast<char>(v >> 8), static_cast<char>(v)};
  out.write(b, 4);
}

}  // namespace

IdxImages read_idx_images(const std::filesystem::path& path) {
  const auto bytes = slurp(path);
  const std::uint32_t magic = read_be32(bytes, 0, path);
  if (magic != kIdxImagesMagic) {
    std::ostringstream os;
    os << "bad magic 0x" << std::hex << magic << " (expected 0x803)";
    fail(path, 0, os.str());
  }
  IdxImages img;
  img.count = read_be32(bytes, 4, path);
  img.rows = read_be32(bytes, 8, path);
  img.cols = read_be32(bytes, 12, path);
  if (img.rows == 0 || img.cols == 0) fail(path, 8, "zero image dimension");
  const std::size_t payload = img.count * img.rows * img.cols;
  if (bytes.size() < 16 + payload) fail(path, bytes.size(), "truncated pixel data");
  if (bytes.size() > 16 + payload) fail(path, 16 + payload, "trailing bytes after pixel data");
  img.data.assign(bytes.begin() + 16, bytes.end());
  return img;
}

std::vector<std::uint8_t> read_idx_labels(const std::filesystem::path& path) {
  const auto bytes = slurp(path);
  const std::uint32_t magic = read_be32(bytes, 0, path);
  if (magic != kIdxLabelsMagic) {
    std::ostringstream os;
    os << "bad magic 0x" << std::hex << magic << " (expected 0x801)";
    fail(path, 0, os.str());
  }
  const std::size_t count = read_be32(bytes, 4, path);
  if (bytes.size() < 8 + count) fail(path, bytes.size(), "truncated label data");
  if (bytes.size() > 8 + count) fail(path, 8 + count, "trailing bytes after label data");
  return {bytes.begin() + 8, bytes.end()};
}

Dataset load_idx(const std::filesystem::path& images, const std::filesystem::path& labels) {
  IdxImages img = read_idx_images(images);
  std::vector<std::uint8_t> lab = read_idx_labels(labels);
  if (lab.size() != img.count) {
    std::ostringstream os;
    os << "label count " << lab.size() << " != image count " << img.count;
    fail(labels, 4, os.str());
  }
  Dataset ds;
  ds.count = img.count;
  ds.image_rows = img.rows;
  ds.image_cols = img.cols;
  ds.pixels.resize(img.data.size());
  for (std::size_t k = 0; k < img.data.size(); ++k) ds.pixels[k] = img.data[k] / 255.0;
  ds.labels = std::move(lab);
  return ds;
}

Dataset load_mnist_split(const std::filesystem::path& dir, const std::string& prefix) {
  return load_idx(dir / (prefix + "-images-idx3-ubyte"), dir / (prefix + "-labels-idx1-ubyte"));
}

Dataset Dataset::head(std::size_t n) const {
  if (n >= count) return *this;
  Dataset d;
  d.count = n;
  d.image_rows = image_rows;
  d.image_cols = image_cols;
  d.pixels.assign(pixels.begin(), pixels.begin() + static_cast<std::ptrdiff_t>(n * features()));
  d.labels.assign(labels.begin(), labels.begin() + static_cast<std::ptrdiff_t>(n));
  return d;
}

void write_idx_images(const std::filesystem::path& path, const IdxImages& images) {
  if (images.data.size() != images.count * images.rows * images.cols)
    throw FormatError("write_idx_images: data size does not match header");
  std::ofstream out(path, std::ios::binary);
  if (!out) throw FormatError("cannot write " + path.string());
  put_be32(out, kIdxImagesMagic);
  put_be32(out, static_cast<std::uint32_t>(images.count));
  put_be32(out, static_cast<std::uint32_t>(images.rows));
  put_be32(out, static_cast<std::uint32_t>(images.cols));
  out.write(reinterpret_cast<const char*>(images.data.data()),
            static_cast<std::streamsize>(images.data.size()));
}

void write_idx_labels(const std::filesystem::path& path, std::span<const std::uint8_t> labels) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw FormatError("cannot write " + path.string());
  put_be32(out, kIdxLabelsMagic);
  put_be32(out, static_cast<std::uint32_t>(labels.size()));
  out.write(reinterpret_cast<const char*>(labels.data()), static_cast<std::streamsize>(labels.size()));
}

std::filesystem::path write_synthetic_fixtures(const std::filesystem::path& dir,
                                               std::size_t train_count, std::size_t test_count,
                                               std::uint64_t seed) {
  std::filesystem::create_directories(dir);
  Rng rng = make_stream(seed, StreamPurpose::Data, 0xf1);
  constexpr std::size_t kSide = 28;
  constexpr std::size_t kPixels = kSide * kSide;
  // Class c lights a 7x7 block whose position depends on c, plus speckle.
  auto make = [&](std::size_t count, const std::string& prefix) {
    IdxImages img{count, kSide, kSide, std::vector<std::uint8_t>(count * kPixels, 0)};
    std::vector<std::uint8_t> labels(count);
    for (std::size_t k = 0; k < count; ++k) {
      const auto c = static_cast<std::uint8_t>(k % 10);
      labels[k] = c;
      const std::size_t r0 = 2 + (c / 5) * 12;
      const std::size_t c0 = 1 + (c % 5) * 5;
      for (std::size_t r = r0; r < r0 + 7; ++r)
        for (std::size_t q = c0; q < c0 + 7 && q < kSide; ++q)
          img.data[k * kPixels + r * kSide + q] = static_cast<std::uint8_t>(160 + (rng() % 96));
      for (int s = 0; s < 20; ++s) img.data[k * kPixels + rng() % kPixels] = static_cast<std::uint8_t>(rng() % 128);
    }
    write_idx_images(dir / (prefix + "-images-idx3-ubyte"), img);
    write_idx_labels(dir / (prefix + "-labels-idx1-ubyte"), labels);
  };
  make(train_count, "train");
  make(test_count, "t10k");
  return dir;
}

}  // namespace aimc
