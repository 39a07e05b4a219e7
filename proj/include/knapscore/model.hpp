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
#include <optional>
#include <string>
#include <vector>

#include "knapscore/common.hpp"

namespace knapscore {

// One task the principal can ask the agent to work on. Exerting effort costs
// `cost` and reveals the binary state with probability `prob`; `value` is the
// task's additive value to the principal (ignored under coverage valuations).
struct Task {
  int id = 0;
  double cost = 0.0;
  double prob = 0.0;
  double value = 0.0;
};

enum class ValuationKind { additive, coverage };

// Principal's valuation over completed task sets. Coverage valuations are the
// concrete monotone submodular family: task i covers a set of weighted
// universe elements, v(S) is the weight of the union.
struct Valuation {
  ValuationKind kind = ValuationKind::additive;
  std::vector<double> universe_weights;  // coverage only
  std::vector<std::vector<int>> covers;  // coverage only, one list per task
};

struct Instance {
  std::vector<Task> tasks;
  Valuation valuation;
  double budget = 1.0;
  // Original ids of the tasks, in case preprocessing dropped/re-indexed.
  // original_ids[i] is the id task i carried in the source document.
  std::vector<int> original_ids;

  int n() const { return static_cast<int>(tasks.size()); }
  TaskMask all_mask() const {
    return n() == 0 ? 0 : (n() >= 32 ? ~TaskMask{0} : ((TaskMask{1} << n()) - 1));
  }
};

inline void validate_instance(const Instance& inst) {
  const int n = inst.n();
  if (inst.budget <= 0) throw validation_error("budget must be positive");
  for (int i = 0; i < n; ++i) {
    const Task& t = inst.tasks[i];
    if (t.id != i) throw validation_error("task ids must be 0..n-1 with no gaps");
    if (!(t.prob > 0.0 && t.prob <= 1.0))
      throw validation_error("prob out of range for task " + std::to_string(i));
    if (t.cost < 0.0) throw validation_error("cost must be nonnegative for task " + std::to_string(i));
    if (t.value < 0.0) throw validation_error("value must be nonnegative for task " + std::to_string(i));
  }
  if (inst.valuation.kind == ValuationKind::coverage) {
    if (static_cast<int>(inst.valuation.covers.size()) != n)
      throw validation_error("coverage valuation needs one cover list per task");
    for (double w : inst.valuation.universe_weights)
      if (w < 0.0) throw validation_error("universe weights must be nonnegative");
    for (const auto& cover : inst.valuation.covers)
      for (int e : cover)
        if (e < 0 || e >= static_cast<int>(inst.valuation.universe_weights.size()))
          throw validation_error("cover refers to unknown universe element");
  }
}

// Principal value of a completed set. Additive: sum of member values;
// coverage: weight of the union of covered elements.
inline double valuation_value(const Instance& inst, TaskMask set) {
  if (set & ~inst.all_mask()) throw validation_error("unknown task id in set");
  if (inst.valuation.kind == ValuationKind::additive) {
    double v = 0;
    for (int i = 0; i < inst.n(); ++i)
      if (set >> i & 1) v += inst.tasks[i].value;
    return v;
  }
  std::vector<char> covered(inst.valuation.universe_weights.size(), 0);
  for (int i = 0; i < inst.n(); ++i)
    if (set >> i & 1)
      for (int e : inst.valuation.covers[i]) covered[e] = 1;
  double v = 0;
  for (size_t e = 0; e < covered.size(); ++e)
    if (covered[e]) v += inst.valuation.universe_weights[e];
  return v;
}

inline double valuation_value(const Instance& inst, const std::vector<int>& set) {
  for (int id : set)
    if (id < 0 || id >= inst.n()) throw validation_error("unknown task id in set");
  return valuation_value(inst, mask_from_ids(set));
}

// Drops every task with 2c > p (such a task cannot be incentivized within
// budget 1, and the set-monotonicity of incentivizability makes the drop
// lossless). Remaining tasks are re-indexed 0..m-1; original_ids keeps the map
// back to the source ids. Idempotent.
inline Instance preprocess(const Instance& inst) {
  Instance out;
  out.budget = inst.budget;
  out.valuation.kind = inst.valuation.kind;
  out.valuation.universe_weights = inst.valuation.universe_weights;
  for (int i = 0; i < inst.n(); ++i) {
    const Task& t = inst.tasks[i];
    if (2.0 * t.cost <= t.prob) {
      Task kept = t;
      kept.id = static_cast<int>(out.tasks.size());
      out.tasks.push_back(kept);
      out.original_ids.push_back(inst.original_ids.empty() ? i : inst.original_ids[i]);
      if (inst.valuation.kind == ValuationKind::coverage)
        out.valuation.covers.push_back(inst.valuation.covers[i]);
    }
  }
  return out;
}

// One informativeness pattern over an effort set: bit i of `informative` set
// means task i's signal matched the state (the informative trit is symbolic,
// its value always equals the realized state).
struct SignalPattern {
  TaskMask informative = 0;
  double prob = 1.0;
};

// Enumerates the 2^|effort| informativeness patterns. Entry order: the first
// entry is all-informative and the last all-bot; within the order, the
// highest-indexed effort task toggles fastest and informative precedes bot.
inline std::vector<SignalPattern> enumerate_effort_outcomes(const Instance& inst, TaskMask effort) {
  if (effort & ~inst.all_mask()) throw validation_error("effort set contains unknown task id");
  std::vector<int> ids = ids_from_mask(effort);
  const int k = static_cast<int>(ids.size());
  if (k > 25) throw size_limit_error("effort set too large to enumerate");
  std::vector<SignalPattern> out;
  out.reserve(std::size_t{1} << k);
  for (std::uint32_t r = 0; r < (std::uint32_t{1} << k); ++r) {
    SignalPattern pat;
    for (int j = 0; j < k; ++j) {
      const bool bot = (r >> (k - 1 - j)) & 1;
      const double p = inst.tasks[ids[j]].prob;
      if (bot) {
        pat.prob *= 1.0 - p;
      } else {
        pat.prob *= p;
        pat.informative |= TaskMask{1} << ids[j];
      }
    }
    out.push_back(pat);
  }
  return out;
}

}  // namespace knapscore
