#include "discoder/data/idx.hpp"

#include "discoder/errors.hpp"

#include <zlib.h>

#include <array>
#include <cmath>
#include <cstdint>
#include <memory>
#include <string>
#include <vector>

namespace discoder::data {
namespace {

struct GzCloser {
  void operator()(gzFile f) const { gzclose(f); }
};
using GzHandle = std::unique_ptr<std::remove_pointer_t<gzFile>, GzCloser>;

class IdxReader {
 public:
  explicit IdxReader(const std::filesystem::path& path) : path_(path.string()) {
    handle_.reset(gzopen(path_.c_str(), "rb"));
    if (!handle_) throw InputError("cannot open " + path_);
  }

  std::uint32_t read_u32(const char* field) {
    std::array<unsigned char, 4> b{};
    read_bytes(b.data(), 4, field);
    return (std::uint32_t{b[0]} << 24) | (std::uint32_t{b[1]} << 16) | (std::uint32_t{b[2]} << 8) | b[3];
  }

  void read_bytes(unsigned char* dst, std::size_t n, const char* field) {
    std::size_t done = 0;
    while (done < n) {
      const unsigned chunk = static_cast<unsigned>(std::min<std::size_t>(n - done, 1u << 30));
      const int got = gzread(handle_.get(), dst + done, chunk);
      if (got <= 0) throw FormatError(path_ + ": " + field + ": unexpected end of file");
      done += static_cast<std::size_t>(got);
    }
  }

  bool at_eof() {
    unsigned char c;
    return gzread(handle_.get(), &c, 1) == 0;
  }

  const std::string& path() const { return path_; }

 private:
  std::string path_;
  GzHandle handle_;
};

class ByteSink {
 public:
  explicit ByteSink(const std::filesystem::path& path) : path_(path.string()) {
    const bool gz = path.extension() == ".gz";
    handle_.reset(gzopen(path_.c_str(), gz ? "wb9" : "wbT"));
    if (!handle_) throw InputError("cannot write " + path_);
  }
  void put_u32(std::uint32_t v) {
    const std::array<unsigned char, 4> b{static_cast<unsigned char>(v >> 24), static_cast<unsigned char>(v >> 16),
                                         static_cast<unsigned char>(v >> 8), static_cast<unsigned char>(v)};
    put(b.data(), 4);
  }
  void put(const unsigned char* p, std::size_t n) {
    if (n > 0 && gzwrite(handle_.get(), p, static_cast<unsigned>(n)) != static_cast<int>(n))
      throw InputError("short write to " + path_);
  }

 private:
  std::string path_;
  GzHandle handle_;
};

}  // namespace

DenseDataset load_idx(const std::filesystem::path& images, const std::filesystem::path& labels) {
  IdxReader img(images);
  const std::uint32_t img_magic = img.read_u32("magic");
  if (img_magic != 0x00000803)
    throw FormatError(img.path() + ": magic: expected 0x00000803, found " + std::to_string(img_magic));
  const std::uint32_t n = img.read_u32("image count");
  const std::uint32_t rows = img.read_u32("row count");
  const std::uint32_t cols = img.read_u32("column count");
  if (rows == 0 || cols == 0) throw FormatError(img.path() + ": image dimensions: zero rows or columns");

  IdxReader lab(labels);
  const std::uint32_t lab_magic = lab.read_u32("magic");
  if (lab_magic != 0x00000801)
    throw FormatError(lab.path() + ": magic: expected 0x00000801, found " + std::to_string(lab_magic));
  const std::uint32_t ln = lab.read_u32("label count");
  if (ln != n)
    throw FormatError(lab.path() + ": label count: " + std::to_string(ln) + " labels for " + std::to_string(n) +
                      " images");

  const std::size_t d = std::size_t{rows} * cols;
  std::vector<unsigned char> pixels(std::size_t{n} * d);
  img.read_bytes(pixels.data(), pixels.size(), "pixel data");
  if (!img.at_eof()) throw FormatError(img.path() + ": pixel data: trailing bytes after declared images");
  std::vector<unsigned char> raw_labels(n);
  lab.read_bytes(raw_labels.data(), raw_labels.size(), "label data");
  if (!lab.at_eof()) throw FormatError(lab.path() + ": label data: trailing bytes after declared labels");

  DenseDataset ds;
  ds.normalization = Normalization::unit;
  ds.features.resize(n, static_cast<Eigen::Index>(d));
  for (std::size_t i = 0; i < pixels.size(); ++i) ds.features.data()[i] = pixels[i] / 255.0;
  ds.labels.emplace(raw_labels.begin(), raw_labels.end());
  return ds;
}

void write_idx(const std::filesystem::path& images, const std::filesystem::path& labels, const DenseDataset& ds,
               std::size_t rows, std::size_t cols) {
  if (rows * cols != ds.dim()) throw InputError("write_idx: rows*cols does not match feature width");
  if (!ds.labels) throw InputError("write_idx: dataset has no labels");
  if (ds.size() > 0 && (ds.features.minCoeff() < 0.0 || ds.features.maxCoeff() > 1.0))
    throw InputError("write_idx: features must lie in [0,1]");
  {
    ByteSink out(images);
    out.put_u32(0x00000803);
    out.put_u32(static_cast<std::uint32_t>(ds.size()));
    out.put_u32(static_cast<std::uint32_t>(rows));
    out.put_u32(static_cast<std::uint32_t>(cols));
    std::vector<unsigned char> bytes(static_cast<std::size_t>(ds.features.size()));
    for (std::size_t i = 0; i < bytes.size(); ++i)
      bytes[i] = static_cast<unsigned char>(std::lround(ds.features.data()[i] * 255.0));
    out.put(bytes.data(), bytes.size());
  }
  ByteSink out(labels);
  out.put_u32(0x00000801);
  out.put_u32(static_cast<std::uint32_t>(ds.size()));
  std::vector<unsigned char> bytes;
  for (std::size_t y : *ds.labels) {
    if (y > 255) throw InputError("write_idx: label exceeds one byte");
    bytes.push_back(static_cast<unsigned char>(y));
  }
  out.put(bytes.data(), bytes.size());
}

}  // namespace discoder::data
