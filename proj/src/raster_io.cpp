#include "lact/core.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <fstream>
#include <iterator>

namespace lact {
namespace {

constexpr std::uint8_t kDtypeF32 = 0;
constexpr std::size_t kHeaderBytes = 16;

void put_u8(std::vector<std::uint8_t> &out, std::uint8_t v) { out.push_back(v); }

void put_u16(std::vector<std::uint8_t> &out, std::uint16_t v) {
  out.push_back(static_cast<std::uint8_t>(v));
  out.push_back(static_cast<std::uint8_t>(v >> 8));
}

void put_u32(std::vector<std::uint8_t> &out, std::uint32_t v) {
  for (int s = 0; s < 32; s += 8)
    out.push_back(static_cast<std::uint8_t>(v >> s));
}

void put_f32(std::vector<std::uint8_t> &out, double v) {
  put_u32(out, std::bit_cast<std::uint32_t>(static_cast<float>(v)));
}

class Reader {
public:
  explicit Reader(const std::vector<std::uint8_t> &bytes) : bytes_(bytes) {}

  void need(std::size_t n, const char *what) const {
    if (bytes_.size() - pos_ < n)
      throw FormatError(std::string("CTR1: truncated ") + what);
  }
  std::uint8_t u8() {
    need(1, "header");
    return bytes_[pos_++];
  }
  std::uint16_t u16() {
    need(2, "header");
    std::uint16_t v = bytes_[pos_] | (std::uint16_t(bytes_[pos_ + 1]) << 8);
    pos_ += 2;
    return v;
  }
  std::uint32_t u32(const char *what = "header") {
    need(4, what);
    std::uint32_t v = 0;
    for (int i = 0; i < 4; ++i)
      v |= std::uint32_t(bytes_[pos_ + i]) << (8 * i);
    pos_ += 4;
    return v;
  }
  float f32(const char *what) { return std::bit_cast<float>(u32(what)); }
  std::size_t remaining() const { return bytes_.size() - pos_; }

private:
  const std::vector<std::uint8_t> &bytes_;
  std::size_t pos_ = 0;
};

void check_f32_range(const Vector &v, const char *what) {
  for (double x : v)
    if (!std::isfinite(static_cast<float>(x)))
      throw DataError(std::string(what) + ": value overflows 32-bit float");
}

void write_bytes(const std::filesystem::path &path,
                 const std::vector<std::uint8_t> &bytes) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out)
    throw IoError("cannot open " + path.string() + " for writing");
  out.write(reinterpret_cast<const char *>(bytes.data()),
            static_cast<std::streamsize>(bytes.size()));
  if (!out)
    throw IoError("write failed for " + path.string());
}

} // namespace

std::vector<std::uint8_t> encode_raster(const Raster &raster) {
  std::vector<std::uint8_t> out;
  out.insert(out.end(), {'C', 'T', 'R', '1'});
  std::visit(
      [&](const auto &r) {
        using T = std::decay_t<decltype(r)>;
        r.validate();
        check_f32_range(r.vec(), "raster");
        if constexpr (std::is_same_v<T, Image>) {
          put_u8(out, static_cast<std::uint8_t>(RasterKind::image));
          put_u8(out, kDtypeF32);
          put_u16(out, 0);
          put_u32(out, static_cast<std::uint32_t>(r.rows()));
          put_u32(out, static_cast<std::uint32_t>(r.cols()));
        } else {
          put_u8(out, static_cast<std::uint8_t>(RasterKind::sinogram));
          put_u8(out, kDtypeF32);
          put_u16(out, 0);
          put_u32(out, static_cast<std::uint32_t>(r.views()));
          put_u32(out, static_cast<std::uint32_t>(r.detectors()));
          put_u32(out, static_cast<std::uint32_t>(r.views()));
          for (double a : r.angles_deg())
            put_f32(out, a);
        }
        out.reserve(out.size() + 4 * static_cast<std::size_t>(r.size()));
        for (double v : r.vec())
          put_f32(out, v);
      },
      raster);
  return out;
}

Raster decode_raster(const std::vector<std::uint8_t> &bytes) {
  if (bytes.size() < 4 || !std::equal(bytes.begin(), bytes.begin() + 4, "CTR1"))
    throw FormatError("CTR1: bad magic");
  if (bytes.size() < kHeaderBytes)
    throw FormatError("CTR1: truncated header");
  Reader in(bytes);
  for (int i = 0; i < 4; ++i)
    in.u8();
  const std::uint8_t kind = in.u8();
  const std::uint8_t dtype = in.u8();
  const std::uint16_t reserved = in.u16();
  const std::uint32_t rows = in.u32();
  const std::uint32_t cols = in.u32();
  if (dtype != kDtypeF32)
    throw FormatError("CTR1: unsupported dtype " + std::to_string(dtype));
  if (reserved != 0)
    throw FormatError("CTR1: reserved field must be zero");
  if (kind > 1)
    throw FormatError("CTR1: unknown kind " + std::to_string(kind));
  if (rows == 0 || cols == 0)
    throw FormatError("CTR1: zero dimension");

  std::vector<double> angles;
  if (kind == 1) {
    const std::uint32_t count = in.u32("angle block");
    if (count != rows)
      throw FormatError("CTR1: angle count does not match view count");
    in.need(4 * std::size_t(count), "angle block");
    angles.resize(count);
    for (auto &a : angles)
      a = in.f32("angle block");
  }

  const std::size_t n = std::size_t(rows) * cols;
  if (in.remaining() != 4 * n)
    throw FormatError("CTR1: payload length mismatch (expected " +
                      std::to_string(4 * n) + " bytes, found " +
                      std::to_string(in.remaining()) + ")");
  Vector data(static_cast<Eigen::Index>(n));
  for (std::size_t i = 0; i < n; ++i)
    data[static_cast<Eigen::Index>(i)] = in.f32("payload");
  if (!data.allFinite())
    throw DataError("CTR1: non-finite payload value");

  if (kind == 0)
    return Image(rows, cols, std::move(data));
  try {
    return Sinogram(std::move(angles), cols, std::move(data));
  } catch (const ParameterError &e) {
    throw FormatError(std::string("CTR1: ") + e.what());
  }
}

void write_raster(const std::filesystem::path &path, const Image &image) {
  write_bytes(path, encode_raster(image));
}

void write_raster(const std::filesystem::path &path, const Sinogram &sino) {
  write_bytes(path, encode_raster(sino));
}

Raster read_raster(const std::filesystem::path &path) {
  std::ifstream in(path, std::ios::binary);
  if (!in)
    throw IoError("cannot open " + path.string());
  std::vector<std::uint8_t> bytes((std::istreambuf_iterator<char>(in)),
                                  std::istreambuf_iterator<char>());
  return decode_raster(bytes);
}

Image read_image(const std::filesystem::path &path) {
  auto r = read_raster(path);
  if (auto *img = std::get_if<Image>(&r))
    return std::move(*img);
  throw FormatError(path.string() + " holds a sinogram, expected an image");
}

Sinogram read_sinogram(const std::filesystem::path &path) {
  auto r = read_raster(path);
  if (auto *s = std::get_if<Sinogram>(&r))
    return std::move(*s);
  throw FormatError(path.string() + " holds an image, expected a sinogram");
}

void write_pgm(const std::filesystem::path &path,
               const Eigen::Ref<const RowMajorMatrix> &values) {
  if (values.size() == 0)
    throw DimensionError("PGM export of an empty raster");
  const double lo = values.minCoeff();
  const double hi = values.maxCoeff();
  const double span = hi - lo;
  std::string header = "P5\n" + std::to_string(values.cols()) + " " +
                       std::to_string(values.rows()) + "\n255\n";
  std::vector<std::uint8_t> bytes(header.begin(), header.end());
  for (Eigen::Index r = 0; r < values.rows(); ++r)
    for (Eigen::Index c = 0; c < values.cols(); ++c) {
      double u = span > 0.0 ? (values(r, c) - lo) / span : 0.0;
      bytes.push_back(static_cast<std::uint8_t>(std::lround(u * 255.0)));
    }
  write_bytes(path, bytes);
}

} // namespace lact
