// tvnlr - TV + nonlocal regularized image CS recovery
// Copyright 2026 tvnlr contributors
// Licensed under Apache 2.0

#include "tvnlr/image.hpp"

#include <png.h>

#include <algorithm>
#include <cctype>
#include <cmath>
#include <cstdio>
#include <cstring>
#include <fstream>
#include <limits>
#include <stdexcept>

namespace tvnlr {

namespace {

constexpr unsigned char kPngSig[8] = {0x89, 'P', 'N', 'G', '\r', '\n', 0x1a, '\n'};

// Reads the next unsigned integer from a PNM header, skipping whitespace
// and '#' comments.
int next_pnm_int(std::istream& in, const char* what) {
  int c = in.get();
  while (c != EOF) {
    if (c == '#') {
      while (c != EOF && c != '\n') c = in.get();
    } else if (std::isspace(c)) {
      c = in.get();
    } else {
      break;
    }
  }
  if (c == EOF || !std::isdigit(c)) {
    throw std::runtime_error(std::string("invalid PGM header: missing ") + what);
  }
  long value = 0;
  while (c != EOF && std::isdigit(c)) {
    value = value * 10 + (c - '0');
    if (value > 1 << 30) throw std::runtime_error("invalid PGM header: value out of range");
    c = in.get();
  }
  return static_cast<int>(value);
}

Image load_pgm(std::ifstream& in, bool binary) {
  const int width = next_pnm_int(in, "width");
  const int height = next_pnm_int(in, "height");
  const int maxval = next_pnm_int(in, "maxval");
  if (width <= 0 || height <= 0) throw std::runtime_error("invalid PGM header: bad dimensions");
  if (maxval <= 0 || maxval > 255) throw std::runtime_error("unsupported bit depth (PGM maxval > 255)");

  Image img;
  img.width = width;
  img.height = height;
  img.data.resize(static_cast<size_t>(width) * height);

  if (binary) {
    // next_pnm_int consumed the single whitespace byte after maxval
    std::vector<unsigned char> raw(img.data.size());
    in.read(reinterpret_cast<char*>(raw.data()), static_cast<std::streamsize>(raw.size()));
    if (static_cast<size_t>(in.gcount()) != raw.size()) throw std::runtime_error("truncated PGM data");
    for (size_t i = 0; i < raw.size(); ++i) img.data[i] = raw[i] / 255.0;
  } else {
    for (size_t i = 0; i < img.data.size(); ++i) {
      const int s = next_pnm_int(in, "sample");
      if (s > maxval) throw std::runtime_error("invalid PGM data: sample exceeds maxval");
      img.data[i] = s / 255.0;
    }
  }
  return img;
}

struct PngRead {
  FILE* fp = nullptr;
  png_structp png = nullptr;
  png_infop info = nullptr;
  ~PngRead() {
    if (png) png_destroy_read_struct(&png, info ? &info : nullptr, nullptr);
    if (fp) std::fclose(fp);
  }
};

Image load_png(const std::string& path) {
  PngRead ctx;
  ctx.fp = std::fopen(path.c_str(), "rb");
  if (!ctx.fp) throw std::runtime_error("unreadable file: " + path);

  ctx.png = png_create_read_struct(PNG_LIBPNG_VER_STRING, nullptr, nullptr, nullptr);
  if (!ctx.png) throw std::runtime_error("libpng init failed");
  ctx.info = png_create_info_struct(ctx.png);
  if (!ctx.info) throw std::runtime_error("libpng init failed");

  Image img;
  std::vector<unsigned char> raw;
  std::vector<png_bytep> rows;

  if (setjmp(png_jmpbuf(ctx.png))) {
    throw std::runtime_error("corrupt PNG file: " + path);
  }
  png_init_io(ctx.png, ctx.fp);
  png_read_info(ctx.png, ctx.info);

  const png_uint_32 width = png_get_image_width(ctx.png, ctx.info);
  const png_uint_32 height = png_get_image_height(ctx.png, ctx.info);
  const int color_type = png_get_color_type(ctx.png, ctx.info);
  const int bit_depth = png_get_bit_depth(ctx.png, ctx.info);

  if (color_type != PNG_COLOR_TYPE_GRAY) throw std::runtime_error("non-grayscale input: " + path);
  if (bit_depth != 8) throw std::runtime_error("unsupported bit depth (PNG must be 8-bit)");

  img.width = static_cast<int>(width);
  img.height = static_cast<int>(height);
  img.data.resize(static_cast<size_t>(width) * height);
  raw.resize(img.data.size());
  rows.resize(height);
  for (png_uint_32 r = 0; r < height; ++r) rows[r] = raw.data() + static_cast<size_t>(r) * width;

  png_read_image(ctx.png, rows.data());
  png_read_end(ctx.png, nullptr);

  for (size_t i = 0; i < raw.size(); ++i) img.data[i] = raw[i] / 255.0;
  return img;
}

struct PngWrite {
  FILE* fp = nullptr;
  png_structp png = nullptr;
  png_infop info = nullptr;
  ~PngWrite() {
    if (png) png_destroy_write_struct(&png, info ? &info : nullptr);
    if (fp) std::fclose(fp);
  }
};

unsigned char quantize(double x) {
  const double c = std::clamp(x, 0.0, 1.0);
  return static_cast<unsigned char>(std::lround(c * 255.0));
}

void save_png(const Image& img, const std::string& path) {
  PngWrite ctx;
  ctx.fp = std::fopen(path.c_str(), "wb");
  if (!ctx.fp) throw std::runtime_error("unwritable path: " + path);

  ctx.png = png_create_write_struct(PNG_LIBPNG_VER_STRING, nullptr, nullptr, nullptr);
  if (!ctx.png) throw std::runtime_error("libpng init failed");
  ctx.info = png_create_info_struct(ctx.png);
  if (!ctx.info) throw std::runtime_error("libpng init failed");

  std::vector<unsigned char> raw(img.data.size());
  std::vector<png_bytep> rows(img.height);
  for (int i = 0; i < img.size(); ++i) raw[i] = quantize(img.data[i]);
  for (int r = 0; r < img.height; ++r) rows[r] = raw.data() + static_cast<size_t>(r) * img.width;

  if (setjmp(png_jmpbuf(ctx.png))) {
    throw std::runtime_error("PNG write failed: " + path);
  }
  png_init_io(ctx.png, ctx.fp);
  png_set_IHDR(ctx.png, ctx.info, img.width, img.height, 8, PNG_COLOR_TYPE_GRAY,
               PNG_INTERLACE_NONE, PNG_COMPRESSION_TYPE_DEFAULT, PNG_FILTER_TYPE_DEFAULT);
  png_write_info(ctx.png, ctx.info);
  png_write_image(ctx.png, rows.data());
  png_write_end(ctx.png, nullptr);
}

void save_pgm(const Image& img, const std::string& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("unwritable path: " + path);
  out << "P5\n" << img.width << " " << img.height << "\n255\n";
  std::vector<unsigned char> raw(img.data.size());
  for (int i = 0; i < img.size(); ++i) raw[i] = quantize(img.data[i]);
  out.write(reinterpret_cast<const char*>(raw.data()), static_cast<std::streamsize>(raw.size()));
  if (!out) throw std::runtime_error("write failed: " + path);
}

bool ends_with_icase(const std::string& s, const std::string& suffix) {
  if (s.size() < suffix.size()) return false;
  for (size_t i = 0; i < suffix.size(); ++i) {
    if (std::tolower(s[s.size() - suffix.size() + i]) != suffix[i]) return false;
  }
  return true;
}

}  // namespace

Image load_image(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("unreadable file: " + path);

  unsigned char sig[8] = {};
  in.read(reinterpret_cast<char*>(sig), 8);
  const auto got = in.gcount();
  if (got >= 8 && std::memcmp(sig, kPngSig, 8) == 0) {
    in.close();
    return load_png(path);
  }
  if (got >= 2 && sig[0] == 'P' && (sig[1] == '2' || sig[1] == '5')) {
    in.clear();
    in.seekg(2);
    return load_pgm(in, sig[1] == '5');
  }
  throw std::runtime_error("unsupported format: " + path);
}

void save_image(const Image& img, const std::string& path) {
  if (img.width <= 0 || img.height <= 0 || img.data.size() != static_cast<size_t>(img.size())) {
    throw std::invalid_argument("save_image: invalid image");
  }
  if (ends_with_icase(path, ".png")) {
    save_png(img, path);
  } else if (ends_with_icase(path, ".pgm")) {
    save_pgm(img, path);
  } else {
    throw std::runtime_error("unsupported format (expected .pgm or .png): " + path);
  }
}

Image crop(const Image& img, int x0, int y0, int w, int h) {
  if (w <= 0 || h <= 0 || x0 < 0 || y0 < 0 || x0 + w > img.width || y0 + h > img.height) {
    throw std::invalid_argument("crop: rectangle out of bounds");
  }
  Image out;
  out.width = w;
  out.height = h;
  out.data.resize(static_cast<size_t>(w) * h);
  for (int r = 0; r < h; ++r) {
    const double* src = img.data.data() + static_cast<size_t>(y0 + r) * img.width + x0;
    std::copy(src, src + w, out.data.begin() + static_cast<size_t>(r) * w);
  }
  return out;
}

double psnr(std::span<const double> a, std::span<const double> b) {
  if (a.size() != b.size() || a.empty()) throw std::invalid_argument("psnr: dimension mismatch");
  double sq = 0.0;
  for (size_t i = 0; i < a.size(); ++i) {
    const double d = (a[i] - b[i]) * 255.0;
    sq += d * d;
  }
  const double mse = sq / static_cast<double>(a.size());
  if (mse == 0.0) return std::numeric_limits<double>::infinity();
  return 10.0 * std::log10(255.0 * 255.0 / mse);
}

double psnr(const Image& a, const Image& b) {
  if (a.width != b.width || a.height != b.height) {
    throw std::invalid_argument("psnr: dimension mismatch");
  }
  return psnr(std::span<const double>(a.data), std::span<const double>(b.data));
}

}  // namespace tvnlr
