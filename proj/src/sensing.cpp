// tvnlr - TV + nonlocal regularized image CS recovery
// Copyright 2026 tvnlr contributors
// Licensed under Apache 2.0

#include "tvnlr/sensing.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstring>
#include <fstream>
#include <numbers>
#include <stdexcept>

#include "tvnlr/random.hpp"

namespace tvnlr {

double GaussianSampler::next() {
  if (has_spare_) {
    has_spare_ = false;
    return spare_;
  }
  const double u1 = next_uniform();
  const double u2 = next_uniform();
  const double r = std::sqrt(-2.0 * std::log(1.0 - u1));
  const double t = 2.0 * std::numbers::pi * u2;
  spare_ = r * std::sin(t);
  has_spare_ = true;
  return r * std::cos(t);
}

void GaussianSampler::fill(std::span<double> out) {
  for (double& v : out) v = next();
}

MeasurementOperator build_operator(int rows, int cols, std::uint64_t seed) {
  if (rows <= 0 || cols <= 0) throw std::invalid_argument("build_operator: zero dimensions");
  if (rows > cols) throw std::invalid_argument("build_operator: M > N");
  MeasurementOperator a;
  a.rows = rows;
  a.cols = cols;
  a.seed = seed;
  a.entries.resize(static_cast<size_t>(rows) * cols);
  GaussianSampler(seed).fill(a.entries);
  return a;
}

std::vector<double> forward(const MeasurementOperator& a, std::span<const double> u) {
  if (u.size() != static_cast<size_t>(a.cols)) throw std::invalid_argument("forward: length mismatch");
  std::vector<double> y(a.rows);
  const double* e = a.entries.data();
  const int m = a.rows, n = a.cols;
#pragma omp parallel for schedule(static)
  for (int i = 0; i < m; ++i) {
    const double* row = e + static_cast<size_t>(i) * n;
    double acc = 0.0;
    for (int j = 0; j < n; ++j) acc += row[j] * u[j];
    y[i] = acc;
  }
  return y;
}

std::vector<double> adjoint(const MeasurementOperator& a, std::span<const double> y) {
  if (y.size() != static_cast<size_t>(a.rows)) throw std::invalid_argument("adjoint: length mismatch");
  const int m = a.rows, n = a.cols;
  std::vector<double> x(n, 0.0);
  const double* e = a.entries.data();
  // Column blocks are processed independently; within a block each output
  // element accumulates over rows in ascending order, so the result does not
  // depend on the number of threads.
  constexpr int kBlock = 256;
  const int nblocks = (n + kBlock - 1) / kBlock;
#pragma omp parallel for schedule(static)
  for (int blk = 0; blk < nblocks; ++blk) {
    const int j0 = blk * kBlock;
    const int j1 = std::min(n, j0 + kBlock);
    for (int i = 0; i < m; ++i) {
      const double yi = y[i];
      const double* row = e + static_cast<size_t>(i) * n;
      for (int j = j0; j < j1; ++j) x[j] += row[j] * yi;
    }
  }
  return x;
}

double spectral_norm(const MeasurementOperator& a) {
  std::vector<double> v(a.cols, 1.0 / std::sqrt(static_cast<double>(a.cols)));
  double sigma_sq = 0.0;
  for (int it = 0; it < 30; ++it) {
    const std::vector<double> atav = adjoint(a, forward(a, v));
    double norm = 0.0;
    for (double x : atav) norm += x * x;
    norm = std::sqrt(norm);
    if (norm == 0.0) return 0.0;
    sigma_sq = norm;
    for (int j = 0; j < a.cols; ++j) v[j] = atav[j] / norm;
  }
  return std::sqrt(sigma_sq);
}

Measurements sense(const Image& img, double ratio, std::uint64_t seed) {
  if (!(ratio > 0.0) || ratio > 1.0) throw std::invalid_argument("sense: ratio out of range (0,1]");
  if (img.size() <= 0 || img.data.size() != static_cast<size_t>(img.size())) {
    throw std::invalid_argument("sense: invalid image");
  }
  const int n = img.size();
  const int m = static_cast<int>(std::llround(ratio * n));
  const MeasurementOperator a = build_operator(m, n, seed);
  Measurements meas;
  meas.b = forward(a, img.data);
  meas.seed = seed;
  meas.signal_length = n;
  meas.width = img.width;
  meas.height = img.height;
  return meas;
}

namespace {

constexpr char kMagic[8] = {'T', 'V', 'N', 'L', 'R', 'B', '1', '\0'};

void put_u64(std::ostream& out, std::uint64_t v) {
  unsigned char b[8];
  for (int k = 0; k < 8; ++k) b[k] = static_cast<unsigned char>(v >> (8 * k));
  out.write(reinterpret_cast<const char*>(b), 8);
}

std::uint64_t get_u64(std::istream& in) {
  unsigned char b[8];
  in.read(reinterpret_cast<char*>(b), 8);
  if (in.gcount() != 8) throw std::runtime_error("corrupt measurements file: truncated header");
  std::uint64_t v = 0;
  for (int k = 0; k < 8; ++k) v |= static_cast<std::uint64_t>(b[k]) << (8 * k);
  return v;
}

}  // namespace

void save_measurements(const Measurements& m, const std::string& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("unwritable path: " + path);
  out.write(kMagic, 8);
  put_u64(out, static_cast<std::uint64_t>(m.b.size()));
  put_u64(out, static_cast<std::uint64_t>(m.signal_length));
  put_u64(out, static_cast<std::uint64_t>(m.width));
  put_u64(out, static_cast<std::uint64_t>(m.height));
  put_u64(out, m.seed);
  for (double v : m.b) put_u64(out, std::bit_cast<std::uint64_t>(v));
  if (!out) throw std::runtime_error("write failed: " + path);
}

Measurements load_measurements(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("unreadable file: " + path);
  char magic[8];
  in.read(magic, 8);
  if (in.gcount() != 8 || std::memcmp(magic, kMagic, 8) != 0) {
    throw std::runtime_error("corrupt measurements file: bad magic");
  }
  const std::uint64_t m64 = get_u64(in);
  const std::uint64_t n64 = get_u64(in);
  const std::uint64_t w64 = get_u64(in);
  const std::uint64_t h64 = get_u64(in);
  const std::uint64_t seed = get_u64(in);
  if (m64 == 0 || n64 == 0 || m64 > n64 || n64 > (1u << 30) || w64 * h64 != n64) {
    throw std::runtime_error("corrupt measurements file: inconsistent header");
  }
  Measurements meas;
  meas.seed = seed;
  meas.signal_length = static_cast<int>(n64);
  meas.width = static_cast<int>(w64);
  meas.height = static_cast<int>(h64);
  meas.b.resize(m64);
  for (double& v : meas.b) v = std::bit_cast<double>(get_u64(in));
  return meas;
}

}  // namespace tvnlr
