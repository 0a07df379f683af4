// tvnlr - TV + nonlocal regularized image CS recovery
// Copyright 2026 tvnlr contributors
// Licensed under Apache 2.0

#ifndef TVNLR_RANDOM_HPP
#define TVNLR_RANDOM_HPP

#include <cstdint>
#include <random>
#include <span>

namespace tvnlr {

/// Deterministic standard-normal stream. The sequence depends only on the
/// seed: an mt19937_64 engine produces 53-bit uniforms u = (x >> 11) * 2^-53,
/// which are mapped in pairs through the Box-Muller transform
/// (r = sqrt(-2 ln(1-u1)), z0 = r cos(2 pi u2), z1 = r sin(2 pi u2)).
/// std::normal_distribution is avoided because its output is not specified
/// across standard library implementations.
class GaussianSampler {
 public:
  explicit GaussianSampler(std::uint64_t seed) : rng_(seed) {}

  double next();
  void fill(std::span<double> out);

 private:
  double next_uniform() {
    return static_cast<double>(rng_() >> 11) * 0x1.0p-53;
  }

  std::mt19937_64 rng_;
  double spare_ = 0.0;
  bool has_spare_ = false;
};

}  // namespace tvnlr

#endif
