// tvnlr - TV + nonlocal regularized image CS recovery
// Copyright 2026 tvnlr contributors
// Licensed under Apache 2.0

#ifndef TVNLR_SENSING_HPP
#define TVNLR_SENSING_HPP

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "tvnlr/image.hpp"

namespace tvnlr {

/// Dense M x N Gaussian random projection, regenerated bit-exactly from
/// (rows, cols, seed). Entries are i.i.d. standard normal (see GaussianSampler).
struct MeasurementOperator {
  int rows = 0;  // M
  int cols = 0;  // N
  std::uint64_t seed = 0;
  std::vector<double> entries;  // row-major, rows*cols
};

/// Builds the operator; requires 0 < M <= N.
MeasurementOperator build_operator(int rows, int cols, std::uint64_t seed);

/// y = A u (exact matrix-vector product, 64-bit accumulation).
std::vector<double> forward(const MeasurementOperator& a, std::span<const double> u);

/// x = A^T y.
std::vector<double> adjoint(const MeasurementOperator& a, std::span<const double> y);

/// Largest singular value, estimated by a fixed number of deterministic
/// power iterations on A^T A.
double spectral_norm(const MeasurementOperator& a);

/// Linear measurements of a flattened image, b = A u, with the metadata
/// needed to regenerate A.
struct Measurements {
  std::vector<double> b;
  std::uint64_t seed = 0;
  int signal_length = 0;  // N = width*height
  int width = 0;
  int height = 0;

  int m() const { return static_cast<int>(b.size()); }
  double ratio() const { return signal_length ? static_cast<double>(b.size()) / signal_length : 0.0; }
};

/// Senses an image: M = round(ratio*N), b = A u with A = build_operator(M, N, seed).
/// Requires 0 < ratio <= 1.
Measurements sense(const Image& img, double ratio, std::uint64_t seed);

/// Binary container: magic "TVNLRB1\0", then little-endian u64
/// {M, N, width, height, seed}, then M little-endian f64 measurements.
void save_measurements(const Measurements& m, const std::string& path);
Measurements load_measurements(const std::string& path);

}  // namespace tvnlr

#endif
