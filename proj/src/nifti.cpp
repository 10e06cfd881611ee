#include "lesiontrack/nifti.hpp"

#include <zlib.h>

#include <array>
#include <bit>
#include <cmath>
#include <cstring>
#include <limits>
#include <memory>
#include <string>
#include <vector>

namespace lesiontrack {
namespace {

static_assert(std::endian::native == std::endian::little, "NIfTI I/O assumes a little-endian host");

constexpr int kHeaderSize = 348;
constexpr int kVoxOffset = 352;

constexpr std::int16_t kDtUint8 = 2;
constexpr std::int16_t kDtInt16 = 4;
constexpr std::int16_t kDtFloat32 = 16;

// Byte offsets of the honored header fields.
namespace off {
constexpr int sizeof_hdr = 0;
constexpr int dim = 40;
constexpr int datatype = 70;
constexpr int bitpix = 72;
constexpr int pixdim = 76;
constexpr int vox_offset = 108;
constexpr int scl_slope = 112;
constexpr int scl_inter = 116;
constexpr int xyzt_units = 123;
constexpr int qform_code = 252;
constexpr int sform_code = 254;
constexpr int srow_x = 280;
constexpr int magic = 344;
}  // namespace off

template <typename T>
T read_field(const std::array<char, kHeaderSize>& h, int offset) {
  T v;
  std::memcpy(&v, h.data() + offset, sizeof(T));
  return v;
}

template <typename T>
void write_field(std::array<char, kHeaderSize>& h, int offset, T v) {
  std::memcpy(h.data() + offset, &v, sizeof(T));
}

struct GzCloser {
  void operator()(gzFile f) const { gzclose(f); }
};
using GzHandle = std::unique_ptr<std::remove_pointer_t<gzFile>, GzCloser>;

void read_exact(gzFile f, void* dst, std::size_t n, const std::filesystem::path& path, const char* what) {
  auto* out = static_cast<char*>(dst);
  while (n > 0) {
    const unsigned chunk = static_cast<unsigned>(std::min<std::size_t>(n, 1u << 30));
    const int got = gzread(f, out, chunk);
    if (got <= 0) {
      throw Error(ErrorCode::CorruptFile, path.string() + ": truncated " + what);
    }
    out += got;
    n -= static_cast<std::size_t>(got);
  }
}

bool has_gz_suffix(const std::filesystem::path& path) { return path.extension() == ".gz"; }

template <typename Stored>
void decode(const std::vector<char>& raw, std::vector<float>& out, float slope, float inter) {
  const std::size_t n = out.size();
  const bool scaled = slope != 0.0f && std::isfinite(slope);
  for (std::size_t i = 0; i < n; ++i) {
    Stored s;
    std::memcpy(&s, raw.data() + i * sizeof(Stored), sizeof(Stored));
    const float v = static_cast<float>(s);
    out[i] = scaled ? slope * v + inter : v;
  }
}

void flip_axis(std::vector<float>& data, const Dims& d, int axis) {
  const std::int64_t nx = d[0], ny = d[1], nz = d[2];
  auto idx = [&](std::int64_t i, std::int64_t j, std::int64_t k) { return static_cast<std::size_t>(i + nx * (j + ny * k)); };
  for (std::int64_t k = 0; k < nz; ++k) {
    for (std::int64_t j = 0; j < ny; ++j) {
      for (std::int64_t i = 0; i < nx; ++i) {
        std::int64_t a[3] = {i, j, k};
        std::int64_t b[3] = {i, j, k};
        b[axis] = d[axis] - 1 - a[axis];
        if (b[axis] > a[axis]) {
          std::swap(data[idx(a[0], a[1], a[2])], data[idx(b[0], b[1], b[2])]);
        }
      }
    }
  }
}

void write_file(const Geometry& g, std::int16_t datatype, std::int16_t bitpix, const std::vector<char>& payload,
                const std::filesystem::path& path) {
  std::array<char, kHeaderSize> h{};
  write_field<std::int32_t>(h, off::sizeof_hdr, kHeaderSize);
  std::array<std::int16_t, 8> dim{3, static_cast<std::int16_t>(g.dims()[0]), static_cast<std::int16_t>(g.dims()[1]),
                                  static_cast<std::int16_t>(g.dims()[2]), 1, 1, 1, 1};
  for (int i = 0; i < 8; ++i) write_field<std::int16_t>(h, off::dim + 2 * i, dim[i]);
  write_field<std::int16_t>(h, off::datatype, datatype);
  write_field<std::int16_t>(h, off::bitpix, bitpix);
  std::array<float, 8> pixdim{1.0f, static_cast<float>(g.spacing()[0]), static_cast<float>(g.spacing()[1]),
                              static_cast<float>(g.spacing()[2]), 0.0f, 0.0f, 0.0f, 0.0f};
  for (int i = 0; i < 8; ++i) write_field<float>(h, off::pixdim + 4 * i, pixdim[i]);
  write_field<float>(h, off::vox_offset, static_cast<float>(kVoxOffset));
  write_field<float>(h, off::scl_slope, 1.0f);
  write_field<float>(h, off::scl_inter, 0.0f);
  h[off::xyzt_units] = 2;  // mm
  write_field<std::int16_t>(h, off::qform_code, 0);
  write_field<std::int16_t>(h, off::sform_code, 1);
  for (int r = 0; r < 3; ++r) {
    for (int c = 0; c < 4; ++c) {
      float v = 0.0f;
      if (c == r) v = static_cast<float>(g.spacing()[r]);
      if (c == 3) v = static_cast<float>(g.origin()[r]);
      write_field<float>(h, off::srow_x + 16 * r + 4 * c, v);
    }
  }
  std::memcpy(h.data() + off::magic, "n+1\0", 4);

  const std::array<char, kVoxOffset - kHeaderSize> extension{};
  if (has_gz_suffix(path)) {
    GzHandle f(gzopen(path.string().c_str(), "wb6"));
    if (!f) throw Error(ErrorCode::IoError, "cannot open " + path.string() + " for writing");
    auto put = [&](const char* p, std::size_t n) {
      while (n > 0) {
        const unsigned chunk = static_cast<unsigned>(std::min<std::size_t>(n, 1u << 30));
        if (gzwrite(f.get(), p, chunk) != static_cast<int>(chunk)) {
          throw Error(ErrorCode::IoError, "write failed for " + path.string());
        }
        p += chunk;
        n -= chunk;
      }
    };
    put(h.data(), h.size());
    put(extension.data(), extension.size());
    put(payload.data(), payload.size());
    if (gzclose(f.release()) != Z_OK) throw Error(ErrorCode::IoError, "close failed for " + path.string());
  } else {
    std::unique_ptr<std::FILE, int (*)(std::FILE*)> f(std::fopen(path.string().c_str(), "wb"), &std::fclose);
    if (!f) throw Error(ErrorCode::IoError, "cannot open " + path.string() + " for writing");
    bool ok = std::fwrite(h.data(), 1, h.size(), f.get()) == h.size() &&
              std::fwrite(extension.data(), 1, extension.size(), f.get()) == extension.size() &&
              std::fwrite(payload.data(), 1, payload.size(), f.get()) == payload.size();
    if (!ok || std::fclose(f.release()) != 0) throw Error(ErrorCode::IoError, "write failed for " + path.string());
  }
}

template <typename Stored, typename T>
std::vector<char> encode(std::span<const T> data) {
  std::vector<char> out(data.size() * sizeof(Stored));
  for (std::size_t i = 0; i < data.size(); ++i) {
    const Stored s = static_cast<Stored>(data[i]);
    std::memcpy(out.data() + i * sizeof(Stored), &s, sizeof(Stored));
  }
  return out;
}

void check_dims_fit(const Geometry& g, const std::filesystem::path& path) {
  for (int a = 0; a < 3; ++a) {
    if (g.dims()[a] > std::numeric_limits<std::int16_t>::max()) {
      throw Error(ErrorCode::RangeError, path.string() + ": dimension exceeds NIfTI-1 limit");
    }
  }
}

}  // namespace

IntensityVolume load_volume(const std::filesystem::path& path) {
  if (!std::filesystem::exists(path)) {
    throw Error(ErrorCode::IoError, path.string() + ": no such file");
  }
  GzHandle f(gzopen(path.string().c_str(), "rb"));
  if (!f) throw Error(ErrorCode::IoError, "cannot open " + path.string());

  std::array<char, kHeaderSize> h{};
  read_exact(f.get(), h.data(), h.size(), path, "header");

  const auto sizeof_hdr = read_field<std::int32_t>(h, off::sizeof_hdr);
  if (sizeof_hdr != kHeaderSize) {
    const auto u = static_cast<std::uint32_t>(sizeof_hdr);
    const std::uint32_t swapped = (u >> 24) | ((u >> 8) & 0xff00u) | ((u << 8) & 0xff0000u) | (u << 24);
    if (swapped == static_cast<std::uint32_t>(kHeaderSize)) {
      throw Error(ErrorCode::UnsupportedFormat, path.string() + ": big-endian NIfTI is not supported");
    }
    throw Error(ErrorCode::UnsupportedFormat, path.string() + ": not a NIfTI-1 header");
  }
  if (std::memcmp(h.data() + off::magic, "n+1\0", 4) != 0) {
    throw Error(ErrorCode::UnsupportedFormat, path.string() + ": missing single-file NIfTI-1 magic");
  }

  std::array<std::int16_t, 8> dim{};
  for (int i = 0; i < 8; ++i) dim[i] = read_field<std::int16_t>(h, off::dim + 2 * i);
  if (dim[0] < 3 || dim[0] > 7) {
    throw Error(ErrorCode::UnsupportedFormat, path.string() + ": expected 3 spatial dimensions, got " + std::to_string(dim[0]));
  }
  for (int i = 4; i <= dim[0]; ++i) {
    if (dim[i] > 1) throw Error(ErrorCode::UnsupportedFormat, path.string() + ": volumes with more than 3 dimensions are not supported");
  }
  for (int i = 1; i <= 3; ++i) {
    if (dim[i] < 1) throw Error(ErrorCode::CorruptFile, path.string() + ": non-positive dimension");
  }

  const auto datatype = read_field<std::int16_t>(h, off::datatype);
  std::size_t bytes_per_voxel = 0;
  switch (datatype) {
    case kDtUint8: bytes_per_voxel = 1; break;
    case kDtInt16: bytes_per_voxel = 2; break;
    case kDtFloat32: bytes_per_voxel = 4; break;
    default:
      throw Error(ErrorCode::UnsupportedFormat, path.string() + ": unsupported datatype " + std::to_string(datatype));
  }

  const auto sform_code = read_field<std::int16_t>(h, off::sform_code);
  const auto qform_code = read_field<std::int16_t>(h, off::qform_code);

  Dims dims{dim[1], dim[2], dim[3]};
  Spacing spacing{};
  WorldPoint origin{};
  std::array<bool, 3> flip{false, false, false};

  if (sform_code > 0) {
    float srow[3][4];
    for (int r = 0; r < 3; ++r)
      for (int c = 0; c < 4; ++c) srow[r][c] = read_field<float>(h, off::srow_x + 16 * r + 4 * c);
    double max_diag = 0.0;
    for (int a = 0; a < 3; ++a) max_diag = std::max(max_diag, std::fabs(static_cast<double>(srow[a][a])));
    for (int r = 0; r < 3; ++r) {
      for (int c = 0; c < 3; ++c) {
        if (r != c && std::fabs(srow[r][c]) > 1e-6 * max_diag) {
          throw Error(ErrorCode::UnsupportedFormat, path.string() + ": oblique sform affines are not supported");
        }
      }
    }
    for (int a = 0; a < 3; ++a) {
      const double s = srow[a][a];
      if (!std::isfinite(s) || s == 0.0 || !std::isfinite(srow[a][3])) {
        throw Error(ErrorCode::CorruptFile, path.string() + ": degenerate sform affine");
      }
      spacing[a] = std::fabs(s);
      origin[a] = srow[a][3];
      if (s < 0.0) {
        flip[a] = true;
        origin[a] = srow[a][3] + s * (dims[a] - 1);
      }
    }
  } else if (qform_code > 0) {
    throw Error(ErrorCode::UnsupportedFormat, path.string() + ": qform-only orientation is not supported (set an sform)");
  } else {
    for (int a = 0; a < 3; ++a) {
      const double s = read_field<float>(h, off::pixdim + 4 * (a + 1));
      if (!std::isfinite(s) || s == 0.0) {
        throw Error(ErrorCode::CorruptFile, path.string() + ": invalid pixdim");
      }
      spacing[a] = std::fabs(s);
    }
  }

  const float vox_offset = read_field<float>(h, off::vox_offset);
  if (!std::isfinite(vox_offset) || vox_offset < static_cast<float>(kHeaderSize)) {
    throw Error(ErrorCode::CorruptFile, path.string() + ": invalid vox_offset");
  }
  const auto skip = static_cast<std::size_t>(vox_offset) - kHeaderSize;
  if (skip > 0) {
    std::vector<char> ext(skip);
    read_exact(f.get(), ext.data(), skip, path, "extension block");
  }

  Geometry geometry(dims, spacing, origin);
  const std::size_t n = geometry.voxel_count();
  std::vector<char> raw(n * bytes_per_voxel);
  read_exact(f.get(), raw.data(), raw.size(), path, "voxel data");

  const float slope = read_field<float>(h, off::scl_slope);
  const float inter = read_field<float>(h, off::scl_inter);
  std::vector<float> values(n);
  switch (datatype) {
    case kDtUint8: decode<std::uint8_t>(raw, values, slope, inter); break;
    case kDtInt16: decode<std::int16_t>(raw, values, slope, inter); break;
    default: decode<float>(raw, values, slope, inter); break;
  }
  for (int a = 0; a < 3; ++a) {
    if (flip[a]) flip_axis(values, dims, a);
  }
  return IntensityVolume(geometry, std::move(values));
}

MaskVolume load_mask(const std::filesystem::path& path) { return as_mask(load_volume(path)); }
LabelVolume load_labels(const std::filesystem::path& path) { return as_labels(load_volume(path)); }

void save_volume(const MaskVolume& v, const std::filesystem::path& path) {
  check_dims_fit(v.geometry(), path);
  for (auto x : v.data()) {
    if (x > 1) throw Error(ErrorCode::InvalidMask, "mask voxel outside {0,1}");
  }
  write_file(v.geometry(), kDtUint8, 8, encode<std::uint8_t>(v.data()), path);
}

void save_volume(const LabelVolume& v, const std::filesystem::path& path) {
  check_dims_fit(v.geometry(), path);
  for (auto x : v.data()) {
    if (x < 0) throw Error(ErrorCode::InvalidMask, "negative instance label");
    if (x > std::numeric_limits<std::int16_t>::max()) {
      throw Error(ErrorCode::RangeError, "instance label " + std::to_string(x) + " exceeds int16 storage");
    }
  }
  write_file(v.geometry(), kDtInt16, 16, encode<std::int16_t>(v.data()), path);
}

void save_volume(const IntensityVolume& v, const std::filesystem::path& path) {
  check_dims_fit(v.geometry(), path);
  write_file(v.geometry(), kDtFloat32, 32, encode<float>(v.data()), path);
}

}  // namespace lesiontrack
