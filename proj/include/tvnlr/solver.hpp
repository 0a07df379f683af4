// tvnlr - TV + nonlocal regularized image CS recovery
// Copyright 2026 tvnlr contributors
// Licensed under Apache 2.0

#ifndef TVNLR_SOLVER_HPP
#define TVNLR_SOLVER_HPP

#include <span>
#include <string>
#include <vector>

#include "tvnlr/image.hpp"
#include "tvnlr/regularizers.hpp"
#include "tvnlr/sensing.hpp"

namespace tvnlr {

/// Solver parameters. Defaults are the reference working set:
/// mu=128, theta=2, beta=32, alpha=16, patch 7, window 13, h=0.03.
struct SolverParams {
  double beta = 32.0;   // penalty on Du = w
  double theta = 2.0;   // penalty on u = x
  double mu = 128.0;    // penalty on Au = b
  double alpha = 16.0;  // nonlocal regularization weight; 0 gives the TV-only baseline
  NlmParams nlm{};
  int top_k = 0;  // 0 keeps the full search window
  int max_outer = 12;
  int max_inner = 16;
  double inner_tol = 1e-3;  // relative u-change threshold
  double outer_tol = 5e-4;  // relative residual threshold
  int u_steps_per_inner = 1;
  int w_update_every = 1;  // recompute W every k-th inner iteration

  void validate() const;  // throws std::invalid_argument
};

/// Iterates, multipliers and coupling data of a running solve.
struct SolverState {
  int width = 0;
  int height = 0;
  std::vector<double> u;       // image iterate, length N
  DifferenceField w;           // split variable for Du
  std::vector<double> x;       // split variable for u
  DifferenceField v;           // multiplier for Du = w
  std::vector<double> gamma;   // multiplier for u = x
  std::vector<double> lambda;  // multiplier for Au = b
  std::vector<double> b;       // measurements, length M
  NonlocalWeights weights;
  int outer_iter = 0;
  int inner_iter = 0;  // total inner passes
};

/// u = A^T b, everything else zero.
SolverState init_state(const Measurements& meas, const MeasurementOperator& a);

/// Final image plus per-outer-iteration instrumentation.
struct RecoveryResult {
  Image u_final;  // clamped to [0,1]
  std::vector<double> psnr_trace;      // empty without ground truth
  std::vector<double> residual_trace;  // ||Au - b|| / ||b||
  std::vector<double> lagrangian_trace;
  std::vector<int> inner_iters_per_outer;
  double clamped_fraction = 0.0;  // pixels changed by the final clamp
  double wall_time_s = 0.0;
  int outer_iters = 0;
  int inner_iters_total = 0;
};

/// Elementwise soft thresholding of (t - v/beta) at level 1/beta, sgn(0) = 0.
DifferenceField shrink(const DifferenceField& t, const DifferenceField& v, double beta);

/// Gradient of the quadratic u sub-problem:
/// d = D^T(beta*Du - v - beta*w) - gamma + theta*(u - x) + A^T(mu*(Au - b) - lambda).
std::vector<double> u_gradient(const SolverState& s, const MeasurementOperator& a,
                               const SolverParams& p);

/// Exact line-search step ||d||^2 / (beta*||Dd||^2 + theta*||d||^2 + mu*||Ad||^2).
/// Throws on d = 0.
double optimal_step(std::span<const double> d, const MeasurementOperator& a, double beta,
                    double theta, double mu, int width, int height);

/// Applies u <- u - eta*d for u_steps_per_inner steepest-descent steps,
/// recomputing d and eta each time; a zero gradient stops early.
void u_step(SolverState& s, const MeasurementOperator& a, const SolverParams& p);

/// Closed-form x update: r = u - gamma/theta, x = (theta*r + 2*alpha*W*r) / (theta + 2*alpha).
/// alpha = 0 returns r unchanged.
std::vector<double> x_step(std::span<const double> u, std::span<const double> gamma,
                           double theta, double alpha, const NonlocalWeights& w);

/// v <- v - beta*(Du - w); gamma <- gamma - theta*(u - x); lambda <- lambda - mu*(Au - b).
void update_multipliers(SolverState& s, const MeasurementOperator& a, const SolverParams& p);

/// Value of the augmented Lagrangian
/// ||w||_1 - v.(Du-w) + beta/2 ||Du-w||^2 + alpha ||x-Wx||^2
/// - gamma.(u-x) + theta/2 ||u-x||^2 + mu/2 ||Au-b||^2 - lambda.(Au-b).
double augmented_lagrangian_value(const SolverState& s, const MeasurementOperator& a,
                                  const SolverParams& p);

/// Full recovery: regenerates A from the measurement metadata and runs the
/// double loop (shrink / u descent / weight update / x update per inner pass,
/// multiplier updates per outer pass). The system is normalized internally to
/// unit spectral norm (b scaled to match) so the penalty weights keep their
/// meaning at every problem size; the relative residual is invariant under
/// that scaling. Ground truth, when given, enables the PSNR trace; all trace
/// entries use unclamped iterates except the final one.
///
/// Outer stopping: relative residual below outer_tol, max_outer reached, or
/// the divergence guard (two consecutive outer iterations more than 10% above
/// the best residual so far; with alpha > 0 the surrogate x update plus
/// full-step multiplier ascent can otherwise ratchet gamma without bound).
RecoveryResult recover(const Measurements& meas, const SolverParams& p,
                       const Image* ground_truth = nullptr);

/// Trace CSV with columns outer,inner,residual_rel,lagrangian,psnr
/// (psnr blank without ground truth).
void write_trace_csv(const RecoveryResult& r, const std::string& path);

}  // namespace tvnlr

#endif
