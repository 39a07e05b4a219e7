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

#include <cstdint>
#include <numeric>
#include <string>
#include <vector>

#include "knapscore/common.hpp"
#include "knapscore/model.hpp"

namespace knapscore {

// Reduction from integer subset sum to the knapsack scoring problem. All
// reduction quantities stay in integer arithmetic; the normalized (budget 1)
// floating instance is a separate lossy view.

struct SubsetSumInstance {
  std::vector<std::int64_t> z;
  std::int64_t target = 0;  // Z, must exceed every z_i
};

inline void validate_subset_sum(const SubsetSumInstance& ss) {
  if (ss.z.empty()) throw validation_error("subset sum needs at least one integer");
  for (std::int64_t zi : ss.z) {
    if (zi <= 0) throw validation_error("subset sum integers must be positive");
    if (ss.target <= zi) throw validation_error("target Z must exceed every z_i");
  }
}

struct ReducedInstance {
  SubsetSumInstance source;
  std::int64_t v_bar = 0;       // 1 + sum z
  std::int64_t c_bar = 0;       // 1 + max z
  std::int64_t k = 0;           // minimal k with 2^{kn} > Z + 2kn c_bar + 1
  std::int64_t raw_budget = 0;  // Z + 2kn c_bar + 1
  Instance normalized;          // (2k+1)n tasks, p = 1, costs / raw_budget, budget 1

  std::int64_t n_source() const { return static_cast<std::int64_t>(source.z.size()); }
  std::int64_t task_count() const { return (2 * k + 1) * n_source(); }
};

namespace detail {

// 2^e > bound, without overflowing: e >= 63 wins whenever bound fits i64.
inline bool pow2_exceeds(std::int64_t e, std::int64_t bound) {
  if (e >= 63) return true;
  return (std::int64_t{1} << e) > bound;
}

}  // namespace detail

inline ReducedInstance reduce_subset_sum(const SubsetSumInstance& ss) {
  validate_subset_sum(ss);
  ReducedInstance red;
  red.source = ss;
  const std::int64_t n = red.n_source();
  red.v_bar = 1 + std::accumulate(ss.z.begin(), ss.z.end(), std::int64_t{0});
  red.c_bar = 1 + *std::max_element(ss.z.begin(), ss.z.end());
  for (std::int64_t k = 1;; ++k) {
    if (detail::pow2_exceeds(k * n, ss.target + 2 * k * n * red.c_bar + 1)) {
      red.k = k;
      break;
    }
    if (k > 128) throw std::runtime_error("k search runaway");
  }
  red.raw_budget = ss.target + 2 * red.k * n * red.c_bar + 1;

  red.normalized.budget = 1.0;
  const double scale = static_cast<double>(red.raw_budget);
  for (std::int64_t i = 0; i < red.task_count(); ++i) {
    Task t;
    t.id = static_cast<int>(i);
    t.prob = 1.0;
    const std::int64_t raw_cost = i < n ? ss.z[i] : red.c_bar;
    const std::int64_t raw_value = i < n ? ss.z[i] : red.v_bar;
    t.cost = static_cast<double>(raw_cost) / scale;
    t.value = static_cast<double>(raw_value);
    red.normalized.tasks.push_back(t);
  }
  return red;
}

// Certificate arithmetic for a claimed subset-sum witness: full-effort agent
// utility exactly 1, the two deviation-class inequalities from the reduction,
// and the principal value the witness collects.
struct CertificateReport {
  bool subset_sums_to_target = false;
  bool valid = false;
  std::int64_t agent_utility = 0;         // raw_budget - total cost over psi
  std::int64_t principal_value = 0;       // Z + 2kn v_bar
  bool small_deviation_ok = false;        // 2^{-kn} raw_budget < 1
  bool mid_deviation_ok = false;          // cost floor >= raw_budget / 2
  std::int64_t psi_size = 0;
  std::string note;
};

inline CertificateReport certificate_check(const ReducedInstance& red,
                                           const std::vector<int>& subset) {
  CertificateReport report;
  const std::int64_t n = red.n_source();
  std::int64_t sum = 0;
  for (int i : subset) {
    if (i < 0 || i >= n) throw validation_error("certificate subset must index source integers");
    sum += red.source.z[i];
  }
  report.subset_sums_to_target = sum == red.source.target;
  if (!report.subset_sums_to_target) {
    report.note = "subset sums to " + std::to_string(sum) + ", target is " +
                  std::to_string(red.source.target);
    return report;
  }
  // Psi = subset plus all 2kn filler tasks.
  const std::int64_t filler = 2 * red.k * n;
  report.psi_size = static_cast<std::int64_t>(subset.size()) + filler;
  const std::int64_t total_cost = sum + filler * red.c_bar;
  report.agent_utility = red.raw_budget - total_cost;
  report.principal_value = red.source.target + filler * red.v_bar;
  // Small deviations leave at least kn guesses: expected score
  // 2^{-kn} raw_budget must fall below the on-path utility of 1.
  report.small_deviation_ok = detail::pow2_exceeds(red.k * n, red.raw_budget);
  // Mid-size deviations cost at least Z + kn c_bar while at least one guess
  // caps the expected score at raw_budget / 2.
  report.mid_deviation_ok =
      2 * (red.source.target + red.k * n * red.c_bar) >= red.raw_budget;
  report.valid =
      report.agent_utility == 1 && report.small_deviation_ok && report.mid_deviation_ok;
  return report;
}

}  // namespace knapscore
