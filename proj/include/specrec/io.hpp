#pragma once

// Persistence: the SPECREC1 raw container, 16-bit PNG import/export and
// CAVE-style per-band PNG directories.
//
// Raw container layout:
//   line 1  : JSON header, e.g.
//             {"magic":"SPECREC1","kind":"cube","width":64,"height":64,
//              "bands_or_kernels":8,"dtype":"f32","layout":"band-major"}\n
//   payload : width*height*bands_or_kernels little-endian IEEE-754 floats.
// For kind "dict", width == height == kernel size.

#include <png.h>

#include <algorithm>
#include <array>
#include <bit>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <limits>
#include <memory>
#include <sstream>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "specrec/core.hpp"
#include "specrec/csc.hpp"
#include "specrec/forward_model.hpp"

namespace specrec {

inline constexpr const char* kRawMagic = "SPECREC1";

struct RawContainer {
  std::string kind;  // cube | image | mask | dict
  std::size_t width = 0;
  std::size_t height = 0;
  std::size_t count = 0;  // bands or kernels
  std::vector<float> payload;
};

namespace detail {

inline void put_le32(std::string& out, float v) {
  const auto u = std::bit_cast<std::uint32_t>(v);
  for (int i = 0; i < 4; ++i) out.push_back(static_cast<char>((u >> (8 * i)) & 0xFFu));
}

inline float get_le32(const unsigned char* p) {
  std::uint32_t u = 0;
  for (int i = 0; i < 4; ++i) u |= static_cast<std::uint32_t>(p[i]) << (8 * i);
  return std::bit_cast<float>(u);
}

inline std::size_t checked_product(std::size_t a, std::size_t b, const std::string& path) {
  if (a != 0 && b > std::numeric_limits<std::size_t>::max() / a)
    throw FormatError(path + ": header dimensions overflow (byte offset 0)");
  return a * b;
}

inline std::vector<float> to_f32(std::span<const double> v) {
  std::vector<float> out(v.size());
  std::transform(v.begin(), v.end(), out.begin(), [](double s) { return static_cast<float>(s); });
  return out;
}

inline std::vector<double> to_f64(const std::vector<float>& v) {
  return std::vector<double>(v.begin(), v.end());
}

}  // namespace detail

inline void write_raw(const RawContainer& c, const std::filesystem::path& path) {
  if (c.payload.size() != c.width * c.height * c.count)
    throw ShapeError("write_raw: payload length does not match dims");
  nlohmann::ordered_json header;
  header["magic"] = kRawMagic;
  header["kind"] = c.kind;
  header["width"] = c.width;
  header["height"] = c.height;
  header["bands_or_kernels"] = c.count;
  header["dtype"] = "f32";
  header["layout"] = "band-major";
  std::string bytes = header.dump();
  bytes.push_back('\n');
  bytes.reserve(bytes.size() + 4 * c.payload.size());
  for (float v : c.payload) detail::put_le32(bytes, v);
  std::ofstream f(path, std::ios::binary | std::ios::trunc);
  if (!f) throw Error("cannot open " + path.string() + " for writing");
  f.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
  if (!f) throw Error("write failed: " + path.string());
}

inline RawContainer read_raw(const std::filesystem::path& path) {
  std::ifstream f(path, std::ios::binary);
  if (!f) throw Error("cannot open " + path.string());
  std::string bytes((std::istreambuf_iterator<char>(f)), std::istreambuf_iterator<char>());
  const std::string name = path.string();

  const auto nl = bytes.find('\n');
  if (nl == std::string::npos)
    throw FormatError(name + ": missing header terminator (expected newline after JSON header)");
  nlohmann::json header;
  try {
    header = nlohmann::json::parse(bytes.substr(0, nl));
  } catch (const nlohmann::json::exception& e) {
    throw FormatError(name + ": not a SPECREC1 file, header at byte offset 0 is not valid JSON (" +
                      e.what() + ")");
  }
  if (!header.is_object() || header.value("magic", std::string()) != kRawMagic)
    throw FormatError(name + ": bad magic at byte offset 0, expected \"SPECREC1\"");

  RawContainer c;
  try {
    c.kind = header.at("kind").get<std::string>();
    c.width = header.at("width").get<std::size_t>();
    c.height = header.at("height").get<std::size_t>();
    c.count = header.at("bands_or_kernels").get<std::size_t>();
    if (header.at("dtype").get<std::string>() != "f32")
      throw FormatError(name + ": unsupported dtype, expected \"f32\"");
    if (header.at("layout").get<std::string>() != "band-major")
      throw FormatError(name + ": unsupported layout, expected \"band-major\"");
  } catch (const nlohmann::json::exception& e) {
    throw FormatError(name + ": malformed header: " + e.what());
  }
  if (c.kind != "cube" && c.kind != "image" && c.kind != "mask" && c.kind != "dict")
    throw FormatError(name + ": unknown kind \"" + c.kind + "\"");

  const std::size_t samples =
      detail::checked_product(detail::checked_product(c.width, c.height, name), c.count, name);
  const std::size_t need = detail::checked_product(samples, 4, name);
  const std::size_t offset = nl + 1;
  const std::size_t have = bytes.size() - offset;
  if (have < need)
    throw FormatError(name + ": truncated payload at byte offset " + std::to_string(offset) +
                      ": header declares " + std::to_string(need) + " bytes, found " +
                      std::to_string(have));
  if (have > need)
    throw FormatError(name + ": " + std::to_string(have - need) +
                      " trailing bytes after payload end at byte offset " +
                      std::to_string(offset + need));
  c.payload.resize(samples);
  const auto* p = reinterpret_cast<const unsigned char*>(bytes.data()) + offset;
  for (std::size_t i = 0; i < samples; ++i) c.payload[i] = detail::get_le32(p + 4 * i);
  return c;
}

namespace detail {

inline RawContainer read_kind(const std::filesystem::path& path, std::initializer_list<const char*> kinds) {
  RawContainer c = read_raw(path);
  for (const char* k : kinds)
    if (c.kind == k) return c;
  std::string expected;
  for (const char* k : kinds) expected += std::string(expected.empty() ? "" : " or ") + k;
  throw FormatError(path.string() + ": container kind \"" + c.kind + "\", expected " + expected);
}

}  // namespace detail

inline void save_cube(const SpectralCube& cube, const std::filesystem::path& path) {
  write_raw({"cube", cube.width(), cube.height(), cube.bands(), detail::to_f32(cube.data())}, path);
}

inline SpectralCube load_cube(const std::filesystem::path& path) {
  auto c = detail::read_kind(path, {"cube"});
  SpectralCube cube(c.width, c.height, c.count, detail::to_f64(c.payload));
  if (!all_finite(cube.data())) throw DataError(path.string() + ": non-finite sample");
  return cube;
}

inline void save_image(const Image2D& img, const std::filesystem::path& path,
                       const char* kind = "image") {
  write_raw({kind, img.width(), img.height(), 1, detail::to_f32(img.data())}, path);
}

inline Image2D load_image(const std::filesystem::path& path) {
  auto c = detail::read_kind(path, {"image", "mask"});
  if (c.count != 1)
    throw FormatError(path.string() + ": expected a single plane, found " +
                      std::to_string(c.count));
  return Image2D(c.width, c.height, detail::to_f64(c.payload));
}

inline void save_measurement(const Measurement& y, const std::filesystem::path& path) {
  save_image(y, path, "image");
}

inline Measurement load_measurement(const std::filesystem::path& path) {
  return Measurement(load_image(path));
}

inline void save_mask(const Image2D& mask, const std::filesystem::path& path) {
  save_image(mask, path, "mask");
}

inline void save_system(const SystemMasks& sys, const std::filesystem::path& path) {
  const auto& p = sys.planes();
  write_raw({"mask", p.width(), p.height(), p.bands(), detail::to_f32(p.data())}, path);
}

/// Mask container with one plane (a base mask) or one plane per band.
inline SpectralCube load_mask_planes(const std::filesystem::path& path) {
  auto c = detail::read_kind(path, {"mask"});
  return SpectralCube(c.width, c.height, c.count, detail::to_f64(c.payload));
}

inline void save_dictionary(const ConvDictionary& dict, const std::filesystem::path& path) {
  const std::size_t k = dict.kernel_size();
  std::vector<double> flat;
  flat.reserve(k * k * dict.num_kernels());
  for (std::size_t m = 0; m < dict.num_kernels(); ++m) {
    const auto d = dict.kernel(m);
    flat.insert(flat.end(), d.begin(), d.end());
  }
  write_raw({"dict", k, k, dict.num_kernels(), detail::to_f32(flat)}, path);
}

/// Kernels are rescaled to unit norm on load.
inline ConvDictionary load_dictionary(const std::filesystem::path& path) {
  auto c = detail::read_kind(path, {"dict"});
  if (c.width != c.height)
    throw FormatError(path.string() + ": dictionary kernels must be square, got " +
                      std::to_string(c.width) + "x" + std::to_string(c.height));
  const std::size_t kk = c.width * c.height;
  std::vector<std::vector<double>> kernels(c.count);
  for (std::size_t m = 0; m < c.count; ++m)
    kernels[m].assign(c.payload.begin() + static_cast<std::ptrdiff_t>(m * kk),
                      c.payload.begin() + static_cast<std::ptrdiff_t>((m + 1) * kk));
  return ConvDictionary(c.width, std::move(kernels));
}

// ---------------------------------------------------------------------------
// PNG

/// [0,1] -> [0,65535], clamped, rounding half up.
inline std::uint16_t to_u16(double v) {
  if (!(v > 0.0)) return 0;  // also maps NaN to 0
  if (v >= 1.0) return 65535;
  return static_cast<std::uint16_t>(std::floor(v * 65535.0 + 0.5));
}

struct PngImage {
  std::size_t width = 0;
  std::size_t height = 0;
  int channels = 1;
  std::vector<std::uint16_t> samples;  // interleaved
};

namespace detail {

struct FileCloser {
  void operator()(std::FILE* f) const noexcept {
    if (f) std::fclose(f);
  }
};

[[noreturn]] inline void png_error_fn(png_structp png, png_const_charp msg) {
  auto* err = static_cast<std::string*>(png_get_error_ptr(png));
  if (err) *err = msg;
  png_longjmp(png, 1);
}

inline void png_warning_fn(png_structp, png_const_charp) {}

}  // namespace detail

inline void write_png16(const PngImage& img, const std::filesystem::path& path) {
  if (img.samples.size() != img.width * img.height * static_cast<std::size_t>(img.channels))
    throw ShapeError("write_png16: sample count mismatch");
  std::unique_ptr<std::FILE, detail::FileCloser> fp(std::fopen(path.string().c_str(), "wb"));
  if (!fp) throw Error("cannot open " + path.string() + " for writing");
  std::string err;
  png_structp png = png_create_write_struct(PNG_LIBPNG_VER_STRING, &err, detail::png_error_fn,
                                            detail::png_warning_fn);
  png_infop info = png ? png_create_info_struct(png) : nullptr;
  if (!png || !info) {
    png_destroy_write_struct(&png, &info);
    throw Error("libpng initialisation failed for " + path.string());
  }
  // Rows are built before setjmp so no C++ object needs unwinding across longjmp.
  const std::size_t row_len = img.width * static_cast<std::size_t>(img.channels) * 2;
  std::vector<png_byte> buf(row_len * img.height);
  for (std::size_t i = 0; i < img.samples.size(); ++i) {
    buf[2 * i] = static_cast<png_byte>(img.samples[i] >> 8);  // PNG is big-endian
    buf[2 * i + 1] = static_cast<png_byte>(img.samples[i] & 0xFF);
  }
  std::vector<png_bytep> rows(img.height);
  for (std::size_t y = 0; y < img.height; ++y) rows[y] = buf.data() + y * row_len;

  if (setjmp(png_jmpbuf(png))) {
    png_destroy_write_struct(&png, &info);
    throw Error("PNG write failed for " + path.string() + ": " + err);
  }
  png_init_io(png, fp.get());
  png_set_compression_level(png, 6);
  png_set_IHDR(png, info, static_cast<png_uint_32>(img.width), static_cast<png_uint_32>(img.height),
               16, img.channels == 3 ? PNG_COLOR_TYPE_RGB : PNG_COLOR_TYPE_GRAY,
               PNG_INTERLACE_NONE, PNG_COMPRESSION_TYPE_DEFAULT, PNG_FILTER_TYPE_DEFAULT);
  png_set_rows(png, info, rows.data());
  png_write_png(png, info, PNG_TRANSFORM_IDENTITY, nullptr);
  png_destroy_write_struct(&png, &info);
}

/// Reads a 16-bit grayscale PNG.
inline PngImage read_png16_gray(const std::filesystem::path& path) {
  std::unique_ptr<std::FILE, detail::FileCloser> fp(std::fopen(path.string().c_str(), "rb"));
  if (!fp) throw Error("cannot open " + path.string());
  std::string err;
  png_structp png = png_create_read_struct(PNG_LIBPNG_VER_STRING, &err, detail::png_error_fn,
                                           detail::png_warning_fn);
  png_infop info = png ? png_create_info_struct(png) : nullptr;
  if (!png || !info) {
    png_destroy_read_struct(&png, &info, nullptr);
    throw Error("libpng initialisation failed for " + path.string());
  }
  if (setjmp(png_jmpbuf(png))) {
    png_destroy_read_struct(&png, &info, nullptr);
    throw FormatError(path.string() + ": " + (err.empty() ? "not a PNG file" : err));
  }
  png_init_io(png, fp.get());
  png_read_png(png, info, PNG_TRANSFORM_IDENTITY, nullptr);
  const png_uint_32 w = png_get_image_width(png, info);
  const png_uint_32 h = png_get_image_height(png, info);
  const int depth = png_get_bit_depth(png, info);
  const int type = png_get_color_type(png, info);
  png_bytepp rows = png_get_rows(png, info);
  PngImage img;
  bool ok = depth == 16 && type == PNG_COLOR_TYPE_GRAY;
  if (ok) {
    img.width = w;
    img.height = h;
    img.samples.resize(static_cast<std::size_t>(w) * h);
    for (png_uint_32 y = 0; y < h; ++y)
      for (png_uint_32 x = 0; x < w; ++x)
        img.samples[static_cast<std::size_t>(y) * w + x] =
            static_cast<std::uint16_t>((rows[y][2 * x] << 8) | rows[y][2 * x + 1]);
  }
  png_destroy_read_struct(&png, &info, nullptr);
  if (!ok)
    throw FormatError(path.string() + ": expected 16-bit grayscale PNG (bit depth " +
                      std::to_string(depth) + ", color type " + std::to_string(type) + ")");
  return img;
}

inline void export_png(const Image2D& img, const std::filesystem::path& path) {
  if (!all_finite(img.data())) throw DataError("export_png: non-finite sample");
  PngImage out{img.width(), img.height(), 1, std::vector<std::uint16_t>(img.size())};
  for (std::size_t i = 0; i < img.size(); ++i) out.samples[i] = to_u16(img[i]);
  write_png16(out, path);
}

/// Three bands mapped to the R, G and B channels of a 16-bit PNG.
inline void export_rgb(const SpectralCube& cube, std::array<std::size_t, 3> bands,
                       const std::filesystem::path& path) {
  if (!all_finite(cube.data())) throw DataError("export_rgb: non-finite sample");
  PngImage out{cube.width(), cube.height(), 3, std::vector<std::uint16_t>(cube.plane_size() * 3)};
  for (int c = 0; c < 3; ++c) {
    const auto p = cube.plane(bands[c]);
    for (std::size_t i = 0; i < p.size(); ++i) out.samples[3 * i + c] = to_u16(p[i]);
  }
  write_png16(out, path);
}

/// Loads one 16-bit grayscale PNG per band. Band order is the sorted file
/// name order unless `order` lists the file names explicitly.
inline SpectralCube load_cube_dir(const std::filesystem::path& dir,
                                  const std::vector<std::string>& order = {}) {
  namespace fs = std::filesystem;
  if (!fs::is_directory(dir)) throw Error(dir.string() + " is not a directory");
  std::vector<fs::path> files;
  if (order.empty()) {
    for (const auto& e : fs::directory_iterator(dir)) {
      if (!e.is_regular_file()) continue;
      auto ext = e.path().extension().string();
      std::transform(ext.begin(), ext.end(), ext.begin(), [](unsigned char ch) { return std::tolower(ch); });
      if (ext == ".png") files.push_back(e.path());
    }
    std::sort(files.begin(), files.end(),
              [](const fs::path& a, const fs::path& b) { return a.filename() < b.filename(); });
  } else {
    for (const auto& name : order) files.push_back(dir / name);
  }
  if (files.empty()) throw DataError(dir.string() + ": empty band directory (no PNG files)");

  std::vector<Image2D> planes;
  for (const auto& f : files) {
    const PngImage png = read_png16_gray(f);
    if (!planes.empty() && (png.width != planes.front().width() || png.height != planes.front().height()))
      throw FormatError(f.string() + ": band is " + std::to_string(png.width) + "x" +
                        std::to_string(png.height) + ", expected " +
                        std::to_string(planes.front().width()) + "x" +
                        std::to_string(planes.front().height()));
    Image2D img(png.width, png.height);
    for (std::size_t i = 0; i < img.size(); ++i) img[i] = png.samples[i] / 65535.0;
    planes.push_back(std::move(img));
  }
  return stack_bands(planes);
}

/// Reads a cube from a raw container or a directory of band PNGs.
inline SpectralCube load_cube_any(const std::filesystem::path& path,
                                  const std::vector<std::string>& order = {}) {
  if (std::filesystem::is_directory(path)) return load_cube_dir(path, order);
  return load_cube(path);
}

}  // namespace specrec
