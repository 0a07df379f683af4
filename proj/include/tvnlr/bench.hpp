// tvnlr - TV + nonlocal regularized image CS recovery
// Copyright 2026 tvnlr contributors
// Licensed under Apache 2.0

#ifndef TVNLR_BENCH_HPP
#define TVNLR_BENCH_HPP

#include <cstdint>
#include <ostream>
#include <string>
#include <vector>

#include "tvnlr/solver.hpp"

namespace tvnlr {

/// Benchmark grid: every image x ratio x seed cell is recovered with the
/// nonlocal algorithm and, when baseline is set, once more with alpha = 0.
struct BenchConfig {
  std::vector<std::string> images;
  std::vector<double> ratios;
  std::vector<std::uint64_t> seeds{0};
  SolverParams params;
  std::string output_dir = ".";
  bool baseline = true;
  bool save_recovered = true;
  int jobs = 1;  // > 1 runs independent cells concurrently

  void validate() const;  // throws std::invalid_argument
};

/// Parses the flat key-value config format (see README): one "key = value"
/// per line, '#' comments, "image" repeatable, list values space- or
/// comma-separated. Unknown keys are errors.
BenchConfig load_bench_config(const std::string& path);

/// One grid cell. A failed cell keeps ok = false plus the error text and
/// leaves the numeric fields unset.
struct BenchRecord {
  std::string image;
  double ratio = 0.0;
  std::uint64_t seed = 0;
  std::string algorithm;  // "tvnlr" | "tv-only"
  bool ok = false;
  std::string error;
  double psnr_db = 0.0;
  double wall_s = 0.0;
  int outer_iters = 0;
  int inner_iters_total = 0;
  double residual_rel = 0.0;
};

/// Runs the grid in deterministic order; cell failures are recorded and the
/// grid continues. Recovered images are written to output_dir when enabled.
std::vector<BenchRecord> run_bench(const BenchConfig& c);

/// Data rows with the fixed header, then a per-cell gain section and a
/// per-ratio mean-gain section. Only wall_s varies between reruns.
void write_bench_csv(const std::vector<BenchRecord>& records, std::ostream& out);
void write_bench_csv(const std::vector<BenchRecord>& records, const std::string& path);

}  // namespace tvnlr

#endif
