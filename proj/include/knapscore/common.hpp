// Copyright 2026 The knapscore Authors
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <stdexcept>
#include <string>
#include <vector>

namespace knapscore {

// Comparison tolerances used throughout. Utility/IC comparisons use kIcTol,
// probability-mass checks kMassTol, LP feasibility kLpTol (simplex accumulates
// more error than direct evaluation).
inline constexpr double kIcTol = 1e-9;
inline constexpr double kMassTol = 1e-12;
inline constexpr double kLpTol = 1e-7;
inline constexpr double kInf = std::numeric_limits<double>::infinity();

class validation_error : public std::runtime_error {
 public:
  explicit validation_error(const std::string& what) : std::runtime_error(what) {}
};

class size_limit_error : public std::runtime_error {
 public:
  explicit size_limit_error(const std::string& what) : std::runtime_error(what) {}
};

class not_incentivizable_error : public std::runtime_error {
 public:
  explicit not_incentivizable_error(const std::string& what) : std::runtime_error(what) {}
};

// Task sets are exposed as sorted id vectors and handled as bitmasks
// internally (n stays well below 32 everywhere).
using TaskMask = std::uint32_t;

inline TaskMask mask_from_ids(const std::vector<int>& ids) {
  TaskMask m = 0;
  for (int id : ids) {
    if (id < 0 || id >= 32) throw validation_error("task id out of mask range");
    m |= TaskMask{1} << id;
  }
  return m;
}

inline std::vector<int> ids_from_mask(TaskMask m) {
  std::vector<int> ids;
  for (int i = 0; m != 0; ++i, m >>= 1)
    if (m & 1) ids.push_back(i);
  return ids;
}

inline int popcount(TaskMask m) { return __builtin_popcount(m); }

// Key used to merge numerically equal sums in score-distribution supports.
// Scores are short dyadic/rational combinations, so exact collision is the
// common case and 1e-12 rounding keeps supports small.
inline std::int64_t support_key(double value) {
  return static_cast<std::int64_t>(std::llround(value * 1e12));
}

// Discrete distribution over real score values: sorted support, merged keys.
struct Distribution {
  std::vector<std::pair<double, double>> atoms;  // (value, probability)

  void add(double value, double prob) { atoms.emplace_back(value, prob); }

  void normalize_support() {
    std::sort(atoms.begin(), atoms.end());
    std::vector<std::pair<double, double>> merged;
    for (const auto& [v, p] : atoms) {
      if (!merged.empty() && support_key(merged.back().first) == support_key(v)) {
        merged.back().second += p;
      } else {
        merged.emplace_back(v, p);
      }
    }
    atoms = std::move(merged);
  }

  double total_mass() const {
    double s = 0;
    for (const auto& a : atoms) s += a.second;
    return s;
  }

  template <typename F>
  double expect(F&& f) const {
    double s = 0;
    for (const auto& [v, p] : atoms) s += p * f(v);
    return s;
  }
};

// Convolves `dist` with a two-point (or one-point) lottery.
inline Distribution convolve(const Distribution& dist,
                             const std::vector<std::pair<double, double>>& lottery) {
  Distribution out;
  out.atoms.reserve(dist.atoms.size() * lottery.size());
  for (const auto& [v, p] : dist.atoms)
    for (const auto& [lv, lp] : lottery) out.add(v + lv, p * lp);
  out.normalize_support();
  return out;
}

inline double clamp(double x, double lo, double hi) { return std::min(hi, std::max(lo, x)); }

}  // namespace knapscore
