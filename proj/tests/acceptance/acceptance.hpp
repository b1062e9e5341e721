// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstdio>
#include <sstream>
#include <string>

#include "umri/mri.hpp"
#include "umri/phantom.hpp"

namespace umri::acceptance {

struct Outcome {
  bool pass = false;
  std::string detail;
};

/// Accumulates pass/fail across several checks of one criterion.
class Checks {
 public:
  void expect(bool ok, const std::string& what) {
    pass_ = pass_ && ok;
    if (!detail_.empty()) detail_ += "; ";
    detail_ += (ok ? "" : "FAILED ") + what;
  }
  Outcome outcome() const { return {pass_, detail_}; }

 private:
  bool pass_ = true;
  std::string detail_;
};

template <class... Args>
std::string fmt(const char* f, Args... args) {
  char buf[512];
  std::snprintf(buf, sizeof(buf), f, args...);
  return buf;
}

/// Progress line on stderr so long criteria show signs of life.
void note(const std::string& line);

/// The problem written by `umri phantom` with its defaults.
struct ShippedProblem {
  Phantom phantom;
  SensitivityMaps maps;
  Mask mask;
  CoilMeasurement y;
  RealGrid gt;
};

inline constexpr std::uint64_t kShippedSeed = 1234;
inline constexpr std::size_t kShippedCoils = 15;
inline constexpr double kShippedNoise = 0.05;

ShippedProblem shipped_problem(std::uint64_t seed = kShippedSeed);

/// PSNR after meanstd_gt normalization, the default evaluation setting.
double scored_psnr(const RealGrid& gt, const RealGrid& recon);

Outcome criterion1();
Outcome criterion2();
Outcome criterion3();
Outcome criterion4();
Outcome criterion5();
Outcome criterion6();
Outcome criterion7();
Outcome criterion8();
Outcome criterion9();
Outcome criterion10();

}  // namespace umri::acceptance
