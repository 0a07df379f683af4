// tvnlr - TV + nonlocal regularized image CS recovery
// Copyright 2026 tvnlr contributors
// Licensed under Apache 2.0

#ifndef TVNLR_IMAGE_HPP
#define TVNLR_IMAGE_HPP

#include <span>
#include <string>
#include <vector>

namespace tvnlr {

/// Grayscale image with intensities in [0,1], stored row-major.
struct Image {
  int width = 0;
  int height = 0;
  std::vector<double> data;  // length width*height

  int size() const { return width * height; }
};

/// Loads an 8-bit grayscale PGM (P2/P5) or PNG file, normalizing samples by 255.
/// Throws std::runtime_error on unreadable files, unsupported formats,
/// non-grayscale input or bit depths other than 8.
Image load_image(const std::string& path);

/// Writes an 8-bit grayscale file; format chosen by extension (.pgm or .png).
/// Samples are round(clamp(x,0,1)*255).
void save_image(const Image& img, const std::string& path);

/// Extracts the w x h sub-image with top-left corner (x0, y0).
Image crop(const Image& img, int x0, int y0, int w, int h);

/// PSNR in dB between two equal-length signals interpreted on the 0-255
/// scale (values scaled by 255, no quantization). Returns +infinity when
/// the signals are identical.
double psnr(std::span<const double> a, std::span<const double> b);

/// PSNR between two images of equal dimensions.
double psnr(const Image& a, const Image& b);

}  // namespace tvnlr

#endif
