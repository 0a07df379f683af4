// tvnlr - TV + nonlocal regularized image CS recovery
// Copyright 2026 tvnlr contributors
// Licensed under Apache 2.0

#include <CLI11.hpp>

#include <cstdint>
#include <cstdio>
#include <filesystem>
#include <iostream>
#include <string>

#include "tvnlr/bench.hpp"
#include "tvnlr/image.hpp"
#include "tvnlr/sensing.hpp"
#include "tvnlr/solver.hpp"

namespace {

constexpr int kExitUsage = 1;
constexpr int kExitRuntime = 2;
constexpr int kDeskScaleN = 16384;  // 128x128, dense A grows quadratically past this

void warn_desk_scale(int n) {
  if (n > kDeskScaleN) {
    std::cerr << "warning: N = " << n << " exceeds desk scale (" << kDeskScaleN
              << "); the dense sensing matrix may need several GB of memory\n";
  }
}

void add_solver_flags(CLI::App* cmd, tvnlr::SolverParams& p) {
  cmd->add_option("--alpha", p.alpha, "nonlocal regularization weight (0 = TV-only baseline)")
      ->check(CLI::NonNegativeNumber);
  cmd->add_option("--beta", p.beta, "penalty on Du = w")->check(CLI::PositiveNumber);
  cmd->add_option("--mu", p.mu, "penalty on Au = b")->check(CLI::PositiveNumber);
  cmd->add_option("--theta", p.theta, "penalty on u = x")->check(CLI::PositiveNumber);
  cmd->add_option("--patch", p.nlm.patch, "NLM patch side b_s (odd)")->check(CLI::PositiveNumber);
  cmd->add_option("--window", p.nlm.window, "NLM search-window side L (odd)")
      ->check(CLI::PositiveNumber);
  cmd->add_option("--h", p.nlm.h, "NLM Gaussian kernel controlling factor")
      ->check(CLI::PositiveNumber);
  cmd->add_option("--max-outer", p.max_outer, "maximum outer iterations")
      ->check(CLI::PositiveNumber);
  cmd->add_option("--max-inner", p.max_inner, "maximum inner iterations per outer pass")
      ->check(CLI::PositiveNumber);
  cmd->add_option("--inner-tol", p.inner_tol, "relative u-change stopping threshold")
      ->check(CLI::PositiveNumber);
  cmd->add_option("--outer-tol", p.outer_tol, "relative residual stopping threshold")
      ->check(CLI::PositiveNumber);
  cmd->add_option("--u-steps", p.u_steps_per_inner, "steepest-descent steps per inner pass")
      ->check(CLI::PositiveNumber);
  cmd->add_option("--w-update-every", p.w_update_every,
                  "recompute NLM weights every k-th inner iteration")
      ->check(CLI::PositiveNumber);
  cmd->add_option("--top-k", p.top_k, "keep only the k most similar neighbors (0 = full window)")
      ->check(CLI::NonNegativeNumber);
}

int cmd_sense(const std::string& input, double ratio, std::uint64_t seed,
              const std::string& output) {
  const tvnlr::Image img = tvnlr::load_image(input);
  warn_desk_scale(img.size());
  const tvnlr::Measurements meas = tvnlr::sense(img, ratio, seed);
  tvnlr::save_measurements(meas, output);
  std::printf("M=%d N=%d\n", meas.m(), meas.signal_length);
  return 0;
}

int cmd_recover(const std::string& input, const tvnlr::SolverParams& params,
                const std::string& truth_path, const std::string& output,
                const std::string& trace_path, bool verbose) {
  params.validate();
  if (verbose) {
    std::printf("mu=%g theta=%g beta=%g alpha=%g b_s=%d L=%d h=%g\n", params.mu, params.theta,
                params.beta, params.alpha, params.nlm.patch, params.nlm.window, params.nlm.h);
    std::printf("max_outer=%d max_inner=%d inner_tol=%g outer_tol=%g u_steps=%d "
                "w_update_every=%d top_k=%d\n",
                params.max_outer, params.max_inner, params.inner_tol, params.outer_tol,
                params.u_steps_per_inner, params.w_update_every, params.top_k);
  }
  const tvnlr::Measurements meas = tvnlr::load_measurements(input);
  warn_desk_scale(meas.signal_length);

  tvnlr::Image truth;
  const tvnlr::Image* truth_ptr = nullptr;
  if (!truth_path.empty()) {
    truth = tvnlr::load_image(truth_path);
    if (truth.width != meas.width || truth.height != meas.height) {
      throw std::runtime_error("ground truth dimensions do not match the measurements");
    }
    truth_ptr = &truth;
  }

  const tvnlr::RecoveryResult res = tvnlr::recover(meas, params, truth_ptr);
  tvnlr::save_image(res.u_final, output);
  if (!trace_path.empty()) tvnlr::write_trace_csv(res, trace_path);

  if (truth_ptr) std::printf("psnr_db=%.4f\n", tvnlr::psnr(res.u_final, truth));
  std::printf("outer_iters=%d inner_iters_total=%d residual_rel=%.6e wall_s=%.3f\n",
              res.outer_iters, res.inner_iters_total,
              res.residual_trace.empty() ? 0.0 : res.residual_trace.back(), res.wall_time_s);
  return 0;
}

int cmd_bench(const std::string& config_path) {
  const tvnlr::BenchConfig config = tvnlr::load_bench_config(config_path);
  const auto records = tvnlr::run_bench(config);
  const auto csv_path = (std::filesystem::path(config.output_dir) / "bench.csv").string();
  tvnlr::write_bench_csv(records, csv_path);

  int failed = 0;
  for (const auto& r : records) {
    if (!r.ok) {
      ++failed;
      std::fprintf(stderr, "cell failed: %s ratio=%g seed=%llu %s: %s\n", r.image.c_str(),
                   r.ratio, static_cast<unsigned long long>(r.seed), r.algorithm.c_str(),
                   r.error.c_str());
    }
  }
  std::printf("wrote %s (%zu rows, %d failed)\n", csv_path.c_str(), records.size(), failed);
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"TVNLR compressive-sensing image recovery"};
  app.set_help_flag("--help", "print help");  // frees -h; --h is a solver flag
  app.require_subcommand(1);

  // sense
  auto* sense = app.add_subcommand("sense", "apply a seeded Gaussian projection to an image");
  sense->set_help_flag("--help", "print help");
  std::string sense_input, sense_output;
  double sense_ratio = 0.3;
  std::uint64_t sense_seed = 0;
  sense->add_option("--input,-i", sense_input, "grayscale PGM/PNG image")->required();
  sense->add_option("--ratio,-r", sense_ratio, "measurement ratio M/N in (0,1]")
      ->required()
      ->check(CLI::Range(std::numeric_limits<double>::min(), 1.0));
  sense->add_option("--seed,-s", sense_seed, "generator seed");
  sense->add_option("--output,-o", sense_output, "measurements file")->required();

  // recover
  auto* recover = app.add_subcommand("recover", "reconstruct an image from measurements");
  recover->set_help_flag("--help", "print help");
  std::string rec_input, rec_output, rec_truth, rec_trace;
  bool rec_verbose = false;
  tvnlr::SolverParams params;
  recover->add_option("--input,-i", rec_input, "measurements file")->required();
  recover->add_option("--output,-o", rec_output, "output image (.pgm or .png)")->required();
  recover->add_option("--truth,-t", rec_truth, "ground-truth image for PSNR reporting");
  recover->add_option("--trace", rec_trace, "per-outer-iteration trace CSV");
  recover->add_flag("--verbose,-v", rec_verbose, "print the parameter set");
  add_solver_flags(recover, params);

  // bench
  auto* bench = app.add_subcommand("bench", "run the image x ratio x seed benchmark grid");
  bench->set_help_flag("--help", "print help");
  std::string bench_config;
  bench->add_option("--config,-c", bench_config, "bench config file")->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return kExitUsage;
  }

  try {
    if (sense->parsed()) return cmd_sense(sense_input, sense_ratio, sense_seed, sense_output);
    if (recover->parsed())
      return cmd_recover(rec_input, params, rec_truth, rec_output, rec_trace, rec_verbose);
    if (bench->parsed()) return cmd_bench(bench_config);
  } catch (const std::invalid_argument& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return kExitUsage;
  } catch (const std::exception& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return kExitRuntime;
  }
  return 0;
}
