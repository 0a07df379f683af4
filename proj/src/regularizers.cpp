// tvnlr - TV + nonlocal regularized image CS recovery
// Copyright 2026 tvnlr contributors
// Licensed under Apache 2.0

#include "tvnlr/regularizers.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace tvnlr {

DifferenceField apply_D(std::span<const double> u, int width, int height) {
  if (width <= 0 || height <= 0 || u.size() != static_cast<size_t>(width) * height) {
    throw std::invalid_argument("apply_D: size mismatch");
  }
  DifferenceField f;
  f.width = width;
  f.height = height;
  f.dv.assign(u.size(), 0.0);
  f.dh.assign(u.size(), 0.0);
  for (int r = 0; r < height; ++r) {
    const int base = r * width;
    for (int c = 0; c < width; ++c) {
      const int i = base + c;
      if (r < height - 1) f.dv[i] = u[i + width] - u[i];
      if (c < width - 1) f.dh[i] = u[i + 1] - u[i];
    }
  }
  return f;
}

std::vector<double> apply_Dt(const DifferenceField& f) {
  const int width = f.width, height = f.height;
  if (width <= 0 || height <= 0 || f.dv.size() != static_cast<size_t>(f.size()) ||
      f.dh.size() != f.dv.size()) {
    throw std::invalid_argument("apply_Dt: shape mismatch");
  }
  std::vector<double> out(f.size(), 0.0);
  for (int r = 0; r < height; ++r) {
    const int base = r * width;
    for (int c = 0; c < width; ++c) {
      const int i = base + c;
      double acc = 0.0;
      if (r < height - 1) acc -= f.dv[i];
      if (r > 0) acc += f.dv[i - width];
      if (c < width - 1) acc -= f.dh[i];
      if (c > 0) acc += f.dh[i - 1];
      out[i] = acc;
    }
  }
  return out;
}

void NlmParams::validate() const {
  if (patch < 1 || patch % 2 == 0) throw std::invalid_argument("NlmParams: patch side must be odd and >= 1");
  if (window < 3 || window % 2 == 0) throw std::invalid_argument("NlmParams: window side must be odd and >= 3");
  if (!(h > 0.0)) throw std::invalid_argument("NlmParams: h must be positive");
}

namespace {

// Symmetric (mirror, edge-repeating) index table covering [-pad, size-1+pad];
// entry [t + pad] holds the reflected in-range index for coordinate t.
std::vector<int> mirror_table(int size, int pad) {
  std::vector<int> table(size + 2 * pad);
  for (int t = -pad; t < size + pad; ++t) {
    int v = t;
    while (v < 0 || v >= size) {
      if (v < 0) v = -v - 1;
      if (v >= size) v = 2 * size - v - 1;
    }
    table[t + pad] = v;
  }
  return table;
}

double patch_d2(const double* u, int width, const std::vector<int>& mrow,
                const std::vector<int>& mcol, int ri, int ci, int rj, int cj, int pad) {
  double acc = 0.0;
  for (int dr = -pad; dr <= pad; ++dr) {
    const double* rowi = u + static_cast<size_t>(mrow[ri + dr + pad]) * width;
    const double* rowj = u + static_cast<size_t>(mrow[rj + dr + pad]) * width;
    for (int dc = -pad; dc <= pad; ++dc) {
      const int col_i = mcol[ci + dc + pad];
      const int col_j = mcol[cj + dc + pad];
      const double d = rowj[col_j] - rowi[col_i];
      acc += d * d;
    }
  }
  return acc;
}

}  // namespace

double patch_sq_distance(std::span<const double> u, int width, int height, int i, int j, int patch) {
  if (width <= 0 || height <= 0 || u.size() != static_cast<size_t>(width) * height) {
    throw std::invalid_argument("patch_sq_distance: size mismatch");
  }
  if (patch < 1 || patch % 2 == 0) throw std::invalid_argument("patch_sq_distance: patch side must be odd");
  const int n = width * height;
  if (i < 0 || i >= n || j < 0 || j >= n) throw std::invalid_argument("patch_sq_distance: pixel out of range");
  const int pad = patch / 2;
  const auto mrow = mirror_table(height, pad);
  const auto mcol = mirror_table(width, pad);
  return patch_d2(u.data(), width, mrow, mcol, i / width, i % width, j / width, j % width, pad);
}

NonlocalWeights compute_weights(std::span<const double> u, int width, int height,
                                const NlmParams& p, int top_k) {
  p.validate();
  if (top_k < 0) throw std::invalid_argument("compute_weights: top_k must be >= 0");
  if (width <= 0 || height <= 0 || u.size() != static_cast<size_t>(width) * height) {
    throw std::invalid_argument("compute_weights: size mismatch");
  }

  const int n = width * height;
  const int pad = p.patch / 2;
  const int win = p.window / 2;
  const double inv_h2 = 1.0 / (p.h * p.h);
  const auto mrow = mirror_table(height, pad);
  const auto mcol = mirror_table(width, pad);

  const int cap = p.window * p.window - 1;
  std::vector<int> counts(n, 0);
  std::vector<int> scratch_cols(static_cast<size_t>(n) * cap);
  std::vector<double> scratch_vals(static_cast<size_t>(n) * cap);
  const double* ud = u.data();

#pragma omp parallel
  {
    std::vector<std::pair<double, int>> cand;  // (patch distance, neighbor)
    cand.reserve(cap);
#pragma omp for schedule(static)
    for (int i = 0; i < n; ++i) {
      const int r = i / width;
      const int c = i % width;
      const int r0 = std::max(0, r - win), r1 = std::min(height - 1, r + win);
      const int c0 = std::max(0, c - win), c1 = std::min(width - 1, c + win);

      cand.clear();
      double d2min = 0.0;
      bool first = true;
      for (int rj = r0; rj <= r1; ++rj) {
        for (int cj = c0; cj <= c1; ++cj) {
          const int j = rj * width + cj;
          if (j == i) continue;
          const double d2 = patch_d2(ud, width, mrow, mcol, r, c, rj, cj, pad);
          cand.emplace_back(d2, j);
          if (first || d2 < d2min) {
            d2min = d2;
            first = false;
          }
        }
      }
      if (top_k > 0 && static_cast<int>(cand.size()) > top_k) {
        std::sort(cand.begin(), cand.end());  // ascending distance, index breaks ties
        cand.resize(top_k);
      }
      std::sort(cand.begin(), cand.end(),
                [](const auto& a, const auto& b) { return a.second < b.second; });

      double norm = 0.0;
      for (auto& [d2, j] : cand) {
        d2 = std::exp(-(d2 - d2min) * inv_h2);  // reuse slot for the similarity
        norm += d2;
      }
      int count = 0;
      int* cols = scratch_cols.data() + static_cast<size_t>(i) * cap;
      double* vals = scratch_vals.data() + static_cast<size_t>(i) * cap;
      for (const auto& [s, j] : cand) {
        const double w = s / norm;
        if (w > 0.0) {
          cols[count] = j;
          vals[count] = w;
          ++count;
        }
      }
      counts[i] = count;
    }
  }

  NonlocalWeights w;
  w.width = width;
  w.height = height;
  w.row_offsets.resize(n + 1);
  w.row_offsets[0] = 0;
  for (int i = 0; i < n; ++i) w.row_offsets[i + 1] = w.row_offsets[i] + counts[i];
  const std::int64_t nnz = w.row_offsets[n];
  w.columns.resize(nnz);
  w.values.resize(nnz);
  for (int i = 0; i < n; ++i) {
    const std::int64_t at = w.row_offsets[i];
    std::copy_n(scratch_cols.data() + static_cast<size_t>(i) * cap, counts[i], w.columns.data() + at);
    std::copy_n(scratch_vals.data() + static_cast<size_t>(i) * cap, counts[i], w.values.data() + at);
  }
  return w;
}

std::vector<double> apply_W(const NonlocalWeights& w, std::span<const double> x) {
  const int n = w.size();
  if (w.empty() || x.size() != static_cast<size_t>(n)) {
    throw std::invalid_argument("apply_W: length mismatch");
  }
  std::vector<double> out(n);
#pragma omp parallel for schedule(static)
  for (int i = 0; i < n; ++i) {
    double acc = 0.0;
    for (std::int64_t k = w.row_offsets[i]; k < w.row_offsets[i + 1]; ++k) {
      acc += w.values[k] * x[w.columns[k]];
    }
    out[i] = acc;
  }
  return out;
}

double nonlocal_residual(const NonlocalWeights& w, std::span<const double> x) {
  const std::vector<double> wx = apply_W(w, x);
  double acc = 0.0;
  for (size_t i = 0; i < x.size(); ++i) {
    const double d = x[i] - wx[i];
    acc += d * d;
  }
  return acc;
}

void dump_weights(const NonlocalWeights& w, std::ostream& out) {
  for (int i = 0; i < w.size(); ++i) {
    for (std::int64_t k = w.row_offsets[i]; k < w.row_offsets[i + 1]; ++k) {
      out << i << ' ' << w.columns[k] << ' ' << w.values[k] << '\n';
    }
  }
}

}  // namespace tvnlr
