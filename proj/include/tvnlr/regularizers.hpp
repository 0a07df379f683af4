// tvnlr - TV + nonlocal regularized image CS recovery
// Copyright 2026 tvnlr contributors
// Licensed under Apache 2.0

#ifndef TVNLR_REGULARIZERS_HPP
#define TVNLR_REGULARIZERS_HPP

#include <cstdint>
#include <ostream>
#include <span>
#include <vector>

namespace tvnlr {

/// Vertical/horizontal forward-difference pair of an image signal.
/// dv is zero on the last image row and dh on the last column
/// (replicate boundary).
struct DifferenceField {
  int width = 0;
  int height = 0;
  std::vector<double> dv;  // length width*height
  std::vector<double> dh;

  int size() const { return width * height; }
};

/// Forward differences: dv(i,j) = u(i+1,j) - u(i,j), dh(i,j) = u(i,j+1) - u(i,j),
/// zero at the last row/column.
DifferenceField apply_D(std::span<const double> u, int width, int height);

/// Exact adjoint of apply_D under the standard inner product
/// (negative divergence with the matching boundary stencil).
std::vector<double> apply_Dt(const DifferenceField& f);

/// Nonlocal-means parameters: odd patch side b_s, odd search-window side L,
/// Gaussian kernel controlling factor h on the unit intensity scale.
struct NlmParams {
  int patch = 7;    // b_s
  int window = 13;  // L
  double h = 0.03;

  void validate() const;  // throws std::invalid_argument
};

/// Row-stochastic sparse weight operator with structurally absent diagonal,
/// stored in CSR form. Rows with at least one neighbor sum to 1.
struct NonlocalWeights {
  int width = 0;
  int height = 0;
  std::vector<std::int64_t> row_offsets;  // size N+1
  std::vector<int> columns;
  std::vector<double> values;

  int size() const { return width * height; }
  bool empty() const { return row_offsets.empty(); }
};

/// Squared L2 distance between the patch x patch blocks centered at pixels
/// i and j, with symmetric (mirror) padding at the image borders.
double patch_sq_distance(std::span<const double> u, int width, int height, int i, int j, int patch);

/// NLM weights: for each pixel i, raw similarities exp(-||patch_j - patch_i||^2 / h^2)
/// over all j != i in the clipped window x window neighborhood, normalized per
/// row. If top_k > 0, only the top_k most similar neighbors are kept before
/// normalization. Similarities are evaluated relative to the row's nearest
/// patch so normalization survives underflow; entries that still underflow to
/// zero are dropped.
NonlocalWeights compute_weights(std::span<const double> u, int width, int height,
                                const NlmParams& p, int top_k = 0);

/// (Wx)_i = sum_j w_ij x_j over stored neighbors.
std::vector<double> apply_W(const NonlocalWeights& w, std::span<const double> x);

/// ||x - Wx||^2.
double nonlocal_residual(const NonlocalWeights& w, std::span<const double> x);

/// Debug dump: one "pixel neighbor weight" line per stored entry.
void dump_weights(const NonlocalWeights& w, std::ostream& out);

}  // namespace tvnlr

#endif
