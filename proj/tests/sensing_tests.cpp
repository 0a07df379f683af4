// tvnlr - TV + nonlocal regularized image CS recovery
// Copyright 2026 tvnlr contributors
// Licensed under Apache 2.0

#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#ifdef _OPENMP
#include <omp.h>
#endif

#include <algorithm>
#include <cmath>
#include <fstream>
#include <span>
#include <vector>

#include "support/scenes.hpp"
#include "tvnlr/random.hpp"
#include "tvnlr/sensing.hpp"

using namespace tvnlr;

namespace {

std::vector<double> random_vector(size_t n, std::uint64_t seed, double lo = -1.0, double hi = 1.0) {
  testing::Lcg rng(seed);
  std::vector<double> v(n);
  for (double& x : v) x = rng.uniform(lo, hi);
  return v;
}

double dot(const std::vector<double>& a, const std::vector<double>& b) {
  double acc = 0;
  for (size_t i = 0; i < a.size(); ++i) acc += a[i] * b[i];
  return acc;
}

}  // namespace

TEST_CASE("build_operator is deterministic") {
  const auto a1 = build_operator(4, 16, 7);
  const auto a2 = build_operator(4, 16, 7);
  REQUIRE(a1.entries.size() == 64);
  CHECK(a1.entries == a2.entries);

  const auto a3 = build_operator(4, 16, 8);
  CHECK(a1.entries != a3.entries);
}

TEST_CASE("build_operator entries come straight from the seeded sampler") {
  const auto a = build_operator(8, 16, 123);
  GaussianSampler g(123);
  for (double v : a.entries) CHECK(v == g.next());
}

TEST_CASE("build_operator rejects bad shapes") {
  CHECK_THROWS_AS(build_operator(0, 16, 1), std::invalid_argument);
  CHECK_THROWS_AS(build_operator(4, 0, 1), std::invalid_argument);
  CHECK_THROWS_AS(build_operator(17, 16, 1), std::invalid_argument);
}

TEST_CASE("forward basics") {
  const auto a = build_operator(8, 16, 5);

  const std::vector<double> zero(16, 0.0);
  for (double v : forward(a, zero)) CHECK(v == 0.0);

  for (int j : {0, 7, 15}) {
    std::vector<double> e(16, 0.0);
    e[j] = 1.0;
    const auto col = forward(a, e);
    for (int i = 0; i < 8; ++i) CHECK(col[i] == a.entries[static_cast<size_t>(i) * 16 + j]);
  }

  CHECK_THROWS_AS(forward(a, std::vector<double>(15, 0.0)), std::invalid_argument);
}

TEST_CASE("forward matches the naive double loop") {
  const auto a = build_operator(8, 16, 99);
  const auto u = random_vector(16, 4);
  const auto y = forward(a, u);
  for (int i = 0; i < 8; ++i) {
    double ref = 0;
    for (int j = 0; j < 16; ++j) ref += a.entries[static_cast<size_t>(i) * 16 + j] * u[j];
    CHECK(std::abs(y[i] - ref) <= 1e-12 * (1.0 + std::abs(ref)));
  }
}

TEST_CASE("adjoint basics") {
  const auto a = build_operator(8, 16, 5);

  for (double v : adjoint(a, std::vector<double>(8, 0.0))) CHECK(v == 0.0);

  for (int i : {0, 3, 7}) {
    std::vector<double> e(8, 0.0);
    e[i] = 1.0;
    const auto row = adjoint(a, e);
    for (int j = 0; j < 16; ++j) CHECK(row[j] == a.entries[static_cast<size_t>(i) * 16 + j]);
  }

  CHECK_THROWS_AS(adjoint(a, std::vector<double>(9, 0.0)), std::invalid_argument);
}

TEST_CASE("adjoint identity <Au,y> == <u,Aty>") {
  const int shapes[][2] = {{8, 16}, {5, 25}, {12, 12}, {3, 40}};
  int draws = 0;
  for (const auto& s : shapes) {
    const auto a = build_operator(s[0], s[1], 1000 + s[0]);
    for (int t = 0; t < 30; ++t) {
      const auto u = random_vector(s[1], 2 * t + 1);
      const auto y = random_vector(s[0], 2 * t + 2);
      const double lhs = dot(forward(a, u), y);
      const double rhs = dot(u, adjoint(a, y));
      CHECK(std::abs(lhs - rhs) <= 1e-10 * std::max(1.0, std::max(std::abs(lhs), std::abs(rhs))));
      ++draws;
    }
  }
  CHECK(draws >= 100);
}

TEST_CASE("forward linearity") {
  const auto a = build_operator(6, 20, 77);
  const auto u = random_vector(20, 10);
  const auto v = random_vector(20, 11);
  const double c1 = 0.7, c2 = -2.3;
  std::vector<double> mix(20);
  for (int j = 0; j < 20; ++j) mix[j] = c1 * u[j] + c2 * v[j];
  const auto lhs = forward(a, mix);
  const auto au = forward(a, u);
  const auto av = forward(a, v);
  for (int i = 0; i < 6; ++i) {
    const double rhs = c1 * au[i] + c2 * av[i];
    CHECK(std::abs(lhs[i] - rhs) <= 1e-12 * (1.0 + std::abs(rhs)));
  }
}

#ifdef _OPENMP
TEST_CASE("products do not depend on the thread count") {
  const auto a = build_operator(16, 40, 3);
  const auto u = random_vector(40, 21);
  const auto y = random_vector(16, 22);
  const int saved = omp_get_max_threads();
  omp_set_num_threads(1);
  const auto f1 = forward(a, u);
  const auto t1 = adjoint(a, y);
  omp_set_num_threads(2);
  const auto f2 = forward(a, u);
  const auto t2 = adjoint(a, y);
  omp_set_num_threads(saved);
  CHECK(f1 == f2);
  CHECK(t1 == t2);
}
#endif

TEST_CASE("spectral norm estimate matches the Gaussian-matrix edge") {
  // sigma_max of an MxN standard-normal matrix concentrates near sqrt(N)+sqrt(M)
  const auto a = build_operator(64, 256, 7);
  const double est = spectral_norm(a);
  const double edge = std::sqrt(256.0) + std::sqrt(64.0);
  CHECK(est == doctest::Approx(edge).epsilon(0.15));
  CHECK(spectral_norm(a) == est);  // deterministic
}

TEST_CASE("sense shapes and determinism") {
  const Image img8 = testing::random_image(8, 8, 31);
  const auto m1 = sense(img8, 1.0, 9);
  CHECK(m1.m() == 64);
  CHECK(m1.signal_length == 64);

  const Image img64 = testing::scene_smooth(64);
  const auto m2 = sense(img64, 0.30, 9);
  CHECK(m2.m() == 1229);  // round(0.30 * 4096)

  const auto m3 = sense(img64, 0.30, 9);
  CHECK(m2.b == m3.b);

  CHECK_THROWS_AS(sense(img8, 0.0, 1), std::invalid_argument);
  CHECK_THROWS_AS(sense(img8, 1.5, 1), std::invalid_argument);
}

TEST_CASE("gaussian sample mean obeys the CLT bound") {
  // Mean of the 16384 x 16384 operator's entry stream, taken in chunks so the
  // 2 GB matrix is never materialized.
  GaussianSampler g(42);
  const std::uint64_t total = 16384ull * 16384ull;
  std::vector<double> chunk(1 << 20);
  double sum = 0.0;
  std::uint64_t done = 0;
  while (done < total) {
    const std::uint64_t take = std::min<std::uint64_t>(chunk.size(), total - done);
    g.fill(std::span<double>(chunk.data(), take));
    for (std::uint64_t i = 0; i < take; ++i) sum += chunk[i];
    done += take;
  }
  const double mean = sum / static_cast<double>(total);
  CHECK(std::abs(mean) < 3.0 / 16384.0);
}

TEST_CASE("measurements file round trip") {
  const Image img = testing::random_image(6, 4, 17);
  const auto meas = sense(img, 0.5, 1234567);
  save_measurements(meas, "sens_meas.bin");
  const auto back = load_measurements("sens_meas.bin");
  CHECK(back.b == meas.b);
  CHECK(back.seed == meas.seed);
  CHECK(back.signal_length == meas.signal_length);
  CHECK(back.width == meas.width);
  CHECK(back.height == meas.height);
}

TEST_CASE("measurements file corruption is detected") {
  const Image img = testing::random_image(4, 4, 18);
  save_measurements(sense(img, 0.5, 5), "sens_ok.bin");

  {
    std::ifstream in("sens_ok.bin", std::ios::binary);
    std::string bytes(std::istreambuf_iterator<char>(in), {});
    bytes[0] = 'X';
    std::ofstream out("sens_badmagic.bin", std::ios::binary);
    out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
  }
  CHECK_THROWS_AS(load_measurements("sens_badmagic.bin"), std::runtime_error);

  {
    std::ifstream in("sens_ok.bin", std::ios::binary);
    std::string bytes(std::istreambuf_iterator<char>(in), {});
    bytes.resize(bytes.size() - 9);
    std::ofstream out("sens_trunc.bin", std::ios::binary);
    out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
  }
  CHECK_THROWS_AS(load_measurements("sens_trunc.bin"), std::runtime_error);

  CHECK_THROWS_AS(load_measurements("sens_missing.bin"), std::runtime_error);
}
