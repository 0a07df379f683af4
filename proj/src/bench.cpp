// tvnlr - TV + nonlocal regularized image CS recovery
// Copyright 2026 tvnlr contributors
// Licensed under Apache 2.0

#include "tvnlr/bench.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <sstream>
#include <stdexcept>
#include <thread>

namespace tvnlr {

namespace {

std::string trim(const std::string& s) {
  const auto a = s.find_first_not_of(" \t\r\n");
  if (a == std::string::npos) return "";
  const auto b = s.find_last_not_of(" \t\r\n");
  return s.substr(a, b - a + 1);
}

std::vector<std::string> split_list(const std::string& s) {
  std::vector<std::string> out;
  std::string cur;
  for (char c : s) {
    if (c == ',' || c == ' ' || c == '\t') {
      if (!cur.empty()) out.push_back(cur);
      cur.clear();
    } else {
      cur.push_back(c);
    }
  }
  if (!cur.empty()) out.push_back(cur);
  return out;
}

double parse_double(const std::string& v, const std::string& key) {
  size_t pos = 0;
  double d;
  try {
    d = std::stod(v, &pos);
  } catch (const std::exception&) {
    throw std::invalid_argument("bench config: bad value for " + key + ": " + v);
  }
  if (pos != v.size()) throw std::invalid_argument("bench config: bad value for " + key + ": " + v);
  return d;
}

int parse_int(const std::string& v, const std::string& key) {
  const double d = parse_double(v, key);
  const int i = static_cast<int>(d);
  if (d != i) throw std::invalid_argument("bench config: bad integer for " + key + ": " + v);
  return i;
}

bool parse_bool(const std::string& v, const std::string& key) {
  if (v == "true" || v == "1" || v == "yes" || v == "on") return true;
  if (v == "false" || v == "0" || v == "no" || v == "off") return false;
  throw std::invalid_argument("bench config: bad boolean for " + key + ": " + v);
}

std::string stem_of(const std::string& path) {
  return std::filesystem::path(path).stem().string();
}

std::string format_ratio(double r) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.6g", r);
  return buf;
}

}  // namespace

void BenchConfig::validate() const {
  if (images.empty()) throw std::invalid_argument("bench config: no images");
  if (ratios.empty()) throw std::invalid_argument("bench config: no ratios");
  if (seeds.empty()) throw std::invalid_argument("bench config: no seeds");
  for (double r : ratios) {
    if (!(r > 0.0) || r > 1.0) throw std::invalid_argument("bench config: ratio out of range (0,1]");
  }
  if (jobs < 1) throw std::invalid_argument("bench config: jobs must be >= 1");
  params.validate();
}

BenchConfig load_bench_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("unreadable file: " + path);

  BenchConfig c;
  bool seeds_set = false;
  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    const auto hash = line.find('#');
    if (hash != std::string::npos) line.erase(hash);
    line = trim(line);
    if (line.empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos) {
      throw std::invalid_argument("bench config: line " + std::to_string(lineno) +
                                  ": expected key = value");
    }
    const std::string key = trim(line.substr(0, eq));
    const std::string value = trim(line.substr(eq + 1));
    if (value.empty()) throw std::invalid_argument("bench config: empty value for " + key);

    if (key == "image") {
      c.images.push_back(value);
    } else if (key == "ratios") {
      c.ratios.clear();
      for (const auto& t : split_list(value)) c.ratios.push_back(parse_double(t, key));
    } else if (key == "seeds") {
      c.seeds.clear();
      for (const auto& t : split_list(value)) {
        c.seeds.push_back(static_cast<std::uint64_t>(std::stoull(t)));
      }
      seeds_set = true;
    } else if (key == "output") {
      c.output_dir = value;
    } else if (key == "baseline") {
      c.baseline = parse_bool(value, key);
    } else if (key == "save-recovered") {
      c.save_recovered = parse_bool(value, key);
    } else if (key == "jobs") {
      c.jobs = parse_int(value, key);
    } else if (key == "alpha") {
      c.params.alpha = parse_double(value, key);
    } else if (key == "beta") {
      c.params.beta = parse_double(value, key);
    } else if (key == "mu") {
      c.params.mu = parse_double(value, key);
    } else if (key == "theta") {
      c.params.theta = parse_double(value, key);
    } else if (key == "patch") {
      c.params.nlm.patch = parse_int(value, key);
    } else if (key == "window") {
      c.params.nlm.window = parse_int(value, key);
    } else if (key == "h") {
      c.params.nlm.h = parse_double(value, key);
    } else if (key == "max-outer") {
      c.params.max_outer = parse_int(value, key);
    } else if (key == "max-inner") {
      c.params.max_inner = parse_int(value, key);
    } else if (key == "inner-tol") {
      c.params.inner_tol = parse_double(value, key);
    } else if (key == "outer-tol") {
      c.params.outer_tol = parse_double(value, key);
    } else if (key == "u-steps") {
      c.params.u_steps_per_inner = parse_int(value, key);
    } else if (key == "w-update-every") {
      c.params.w_update_every = parse_int(value, key);
    } else if (key == "top-k") {
      c.params.top_k = parse_int(value, key);
    } else {
      throw std::invalid_argument("bench config: unknown key: " + key);
    }
  }
  if (!seeds_set) c.seeds = {0};
  c.validate();
  return c;
}

std::vector<BenchRecord> run_bench(const BenchConfig& c) {
  c.validate();
  if (!c.output_dir.empty()) std::filesystem::create_directories(c.output_dir);

  // Images are loaded up front so a bad path fails every cell of that image
  // without aborting the others.
  std::map<std::string, Image> cache;
  std::map<std::string, std::string> load_errors;
  for (const auto& path : c.images) {
    if (cache.count(path) || load_errors.count(path)) continue;
    try {
      cache[path] = load_image(path);
      if (cache[path].size() > 16384) {
        std::cerr << "warning: " << path << " has N = " << cache[path].size()
                  << " pixels; the dense sensing matrix may need several GB of memory\n";
      }
    } catch (const std::exception& e) {
      load_errors[path] = e.what();
    }
  }

  std::vector<std::string> algorithms{"tvnlr"};
  if (c.baseline) algorithms.push_back("tv-only");

  std::vector<BenchRecord> records;
  for (const auto& path : c.images) {
    for (double ratio : c.ratios) {
      for (std::uint64_t seed : c.seeds) {
        for (const auto& alg : algorithms) {
          BenchRecord rec;
          rec.image = stem_of(path);
          rec.ratio = ratio;
          rec.seed = seed;
          rec.algorithm = alg;
          records.push_back(std::move(rec));
        }
      }
    }
  }

  const auto run_cell = [&](size_t idx) {
    BenchRecord& rec = records[idx];
    const std::string& path = c.images[idx / (c.ratios.size() * c.seeds.size() * algorithms.size())];
    try {
      const auto err = load_errors.find(path);
      if (err != load_errors.end()) throw std::runtime_error(err->second);
      const Image& img = cache.at(path);

      SolverParams params = c.params;
      if (rec.algorithm == "tv-only") params.alpha = 0.0;

      const Measurements meas = sense(img, rec.ratio, rec.seed);
      const RecoveryResult res = recover(meas, params, &img);
      rec.psnr_db = psnr(res.u_final, img);
      rec.wall_s = res.wall_time_s;
      rec.outer_iters = res.outer_iters;
      rec.inner_iters_total = res.inner_iters_total;
      rec.residual_rel = res.residual_trace.empty() ? 0.0 : res.residual_trace.back();
      rec.ok = true;

      if (c.save_recovered) {
        std::ostringstream name;
        name << rec.image << "_r" << format_ratio(rec.ratio) << "_s" << rec.seed << "_"
             << rec.algorithm << ".pgm";
        save_image(res.u_final, (std::filesystem::path(c.output_dir) / name.str()).string());
      }
    } catch (const std::exception& e) {
      rec.ok = false;
      rec.error = e.what();
    }
  };

  if (c.jobs <= 1 || records.size() <= 1) {
    for (size_t i = 0; i < records.size(); ++i) run_cell(i);
  } else {
    std::atomic<size_t> next{0};
    const int workers = std::min<int>(c.jobs, static_cast<int>(records.size()));
    std::vector<std::thread> pool;
    pool.reserve(workers);
    for (int t = 0; t < workers; ++t) {
      pool.emplace_back([&] {
        for (size_t i = next.fetch_add(1); i < records.size(); i = next.fetch_add(1)) {
          run_cell(i);
        }
      });
    }
    for (auto& th : pool) th.join();
  }
  return records;
}

namespace {

std::string format_psnr(double v) {
  if (std::isinf(v)) return "inf";
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.6f", v);
  return buf;
}

}  // namespace

void write_bench_csv(const std::vector<BenchRecord>& records, std::ostream& out) {
  out << "image,ratio,seed,algorithm,psnr_db,wall_s,outer_iters,inner_iters_total,residual_rel\n";
  char buf[160];
  for (const auto& r : records) {
    out << r.image << ',' << format_ratio(r.ratio) << ',' << r.seed << ',' << r.algorithm << ',';
    if (r.ok) {
      std::snprintf(buf, sizeof buf, "%s,%.3f,%d,%d,%.6e", format_psnr(r.psnr_db).c_str(),
                    r.wall_s, r.outer_iters, r.inner_iters_total, r.residual_rel);
      out << buf;
    } else {
      out << ",,,,";
    }
    out << '\n';
  }

  // Per-cell gain of tvnlr over tv-only, then the per-ratio mean (the
  // benchmark's headline number).
  std::map<std::pair<std::string, std::string>, const BenchRecord*> by_cell;
  for (const auto& r : records) {
    if (r.ok) by_cell[{r.image + "|" + format_ratio(r.ratio) + "|" + std::to_string(r.seed),
                       r.algorithm}] = &r;
  }
  std::vector<std::pair<double, double>> gains;  // (ratio, gain)
  out << "\ngain,image,ratio,seed,gain_db\n";
  for (const auto& r : records) {
    if (r.algorithm != "tvnlr" || !r.ok) continue;
    const std::string cell = r.image + "|" + format_ratio(r.ratio) + "|" + std::to_string(r.seed);
    const auto base = by_cell.find({cell, "tv-only"});
    if (base == by_cell.end()) continue;
    const double gain = r.psnr_db - base->second->psnr_db;
    gains.emplace_back(r.ratio, gain);
    std::snprintf(buf, sizeof buf, "gain,%s,%s,%llu,%.6f", r.image.c_str(),
                  format_ratio(r.ratio).c_str(), static_cast<unsigned long long>(r.seed), gain);
    out << buf << '\n';
  }

  out << "\nmean_gain,ratio,mean_gain_db\n";
  std::vector<double> seen;
  for (const auto& [ratio, gain] : gains) {
    if (std::find(seen.begin(), seen.end(), ratio) != seen.end()) continue;
    seen.push_back(ratio);
    double sum = 0.0;
    int count = 0;
    for (const auto& [r2, g2] : gains) {
      if (r2 == ratio) {
        sum += g2;
        ++count;
      }
    }
    std::snprintf(buf, sizeof buf, "mean_gain,%s,%.6f", format_ratio(ratio).c_str(), sum / count);
    out << buf << '\n';
  }
}

void write_bench_csv(const std::vector<BenchRecord>& records, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("unwritable path: " + path);
  write_bench_csv(records, out);
  if (!out) throw std::runtime_error("write failed: " + path);
}

}  // namespace tvnlr
