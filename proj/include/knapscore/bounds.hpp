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

#include <cmath>
#include <functional>
#include <limits>
#include <optional>
#include <string>
#include <vector>

#include "knapscore/common.hpp"
#include "knapscore/model.hpp"

namespace knapscore {



struct BoundReport {
  std::string name;
  double value = 0.0;
  std::optional<bool> satisfied;
  bool applicable = true;
};

// ---------------------------------------------------------------------------
// Knapsack optimum without incentive constraints

// Exact max v(S) s.t. sum of costs <= budget. Branch and bound with the
// fractional relaxation for additive values, plain subset enumeration for
// coverage. n <= 20.
inline double alg_opt(const Instance& inst, double budget) {
  const int n = inst.n();
  if (n > 20) throw size_limit_error("alg_opt limited to n <= 20");
  if (budget < 0) return 0.0;
  if (inst.valuation.kind == ValuationKind::coverage) {
    double best = 0;
    for (TaskMask s = 0; s < (TaskMask{1} << n); ++s) {
      double c = 0;
      for (int i = 0; i < n; ++i)
        if (s >> i & 1) c += inst.tasks[i].cost;
      if (c > budget + kMassTol) continue;
      best = std::max(best, valuation_value(inst, s));
    }
    return best;
  }
  // Sort by value density for the fractional bound.
  std::vector<int> order(n);
  for (int i = 0; i < n; ++i) order[i] = i;
  std::sort(order.begin(), order.end(), [&](int a, int b) {
    const Task &ta = inst.tasks[a], &tb = inst.tasks[b];
    const double ra = ta.cost > 0 ? ta.value / ta.cost : kInf;
    const double rb = tb.cost > 0 ? tb.value / tb.cost : kInf;
    if (ra != rb) return ra > rb;
    return a < b;
  });
  double best = 0;
  std::function<void(int, double, double)> go = [&](int idx, double remaining, double value) {
    best = std::max(best, value);
    if (idx == n) return;
    double bound = value, rem = remaining;
    for (int j = idx; j < n; ++j) {
      const Task& t = inst.tasks[order[j]];
      if (t.cost <= rem) {
        bound += t.value;
        rem -= t.cost;
      } else {
        if (t.cost > 0) bound += t.value * rem / t.cost;
        break;
      }
    }
    if (bound <= best + kMassTol) return;
    const Task& t = inst.tasks[order[idx]];
    if (t.cost <= remaining + kMassTol)
      go(idx + 1, remaining - t.cost, value + t.value);
    go(idx + 1, remaining, value);
  };
  go(0, budget, 0.0);
  return best;
}

// ---------------------------------------------------------------------------
// Probability-budget bound (budget-pivotal task)

// For sets where every task has p <= 1/4 and 2c/p >= 15/16, an incentivizable
// set must satisfy sum p_i <= (16/3)(1 - 2c/p)_{i*} + p_{i*} with i* the task
// minimizing that key.
inline BoundReport prob_budget_bound(const std::vector<Task>& psi) {
  BoundReport report;
  report.name = "prob_budget_bound";
  if (psi.empty()) {
    report.applicable = false;
    return report;
  }
  for (const Task& t : psi) {
    if (!(t.prob <= 0.25 + kMassTol && 2.0 * t.cost / t.prob >= 15.0 / 16.0 - kMassTol)) {
      report.applicable = false;
      return report;
    }
  }
  double sum_p = 0, best_key = kInf;
  for (const Task& t : psi) {
    sum_p += t.prob;
    best_key = std::min(best_key, 16.0 / 3.0 * (1.0 - 2.0 * t.cost / t.prob) + t.prob);
  }
  report.value = best_key;
  report.satisfied = sum_p <= best_key + kIcTol;
  return report;
}

// Companion-document variant of the same bound: |psi| <= -3 log(p/2c*) /
// log(1-p) + 1, stated for p <= 1/2 and c_i >= p/2.1. Exposed for comparison;
// tests target the 16/3 form above.
inline BoundReport asym_upper_bound_companion(const std::vector<Task>& psi) {
  BoundReport report;
  report.name = "asym_upper_bound_companion";
  if (psi.empty()) {
    report.applicable = false;
    return report;
  }
  const double p = psi.front().prob;
  double cmax = 0;
  for (const Task& t : psi) {
    cmax = std::max(cmax, t.cost);
    if (std::abs(t.prob - p) > kMassTol || t.prob > 0.5 || t.cost < t.prob / 2.1) {
      report.applicable = false;
      return report;
    }
  }
  report.value = -3.0 * std::log(p / (2.0 * cmax)) / std::log(1.0 - p) + 1.0;
  report.satisfied = static_cast<double>(psi.size()) <= report.value + kIcTol;
  return report;
}

// ---------------------------------------------------------------------------
// Symmetric-environment bounds

// Upper bound -4 ln(1+eps)/ln(1-p) on the incentivizable effort level, valid
// for p <= 1/2 and eps = p/2c - 1 in (0, 1/8); +infinity (not applicable)
// outside that region.
inline BoundReport symmetric_effort_upper(double p, double c) {
  BoundReport report;
  report.name = "symmetric_effort_upper";
  const double eps = c > 0 ? p / (2.0 * c) - 1.0 : kInf;
  if (!(p <= 0.5 && eps > 0 && eps < 1.0 / 8.0)) {
    report.value = kInf;
    report.applicable = false;
    return report;
  }
  report.value = -4.0 * std::log1p(eps) / std::log1p(-p);
  return report;
}

// Effort level incentivized by the threshold-1 rule in the symmetric
// environment: the agent keeps going while (1/2) p (1-p)^l > c, capped at n.
inline int threshold_stop_level(double p, double c, int n) {
  if (2.0 * c > p) throw validation_error("threshold_stop_level needs 2c <= p");
  int level = 0;
  double marginal = 0.5 * p;
  while (level < n && marginal > c) {
    ++level;
    marginal *= 1.0 - p;
  }
  return level;
}

// ---------------------------------------------------------------------------
// General information structures (posterior-distribution statistics)

// Signal structure of one task: atoms of the induced posterior-mean
// distribution. Bayes-plausible means the atom means average to 1/2.
struct PosteriorDistribution {
  std::vector<std::pair<double, double>> atoms;  // (posterior mean mu, probability)

  void validate() const {
    double mass = 0, mean = 0;
    for (const auto& [mu, pr] : atoms) {
      if (mu < 0 || mu > 1 || pr < 0) throw validation_error("invalid posterior atom");
      mass += pr;
      mean += pr * mu;
    }
    if (std::abs(mass - 1.0) > 1e-9 || std::abs(mean - 0.5) > 1e-9)
      throw validation_error("posterior distribution must be Bayes-plausible");
  }

  static PosteriorDistribution revealing(double p) {
    return PosteriorDistribution{{{0.0, p / 2}, {1.0, p / 2}, {0.5, 1.0 - p}}};
  }
  static PosteriorDistribution noisy(double p) {
    return PosteriorDistribution{{{(1.0 + p) / 2, 0.5}, {(1.0 - p) / 2, 0.5}}};
  }
};

// Expected KL divergence between the uniform prior and the posterior, in nats.
// +infinity as soon as an atom puts the posterior on {0,1} (the bound built on
// this statistic is vacuous for fully revealing structures).
inline double kl_stat(const PosteriorDistribution& post) {
  post.validate();
  double lambda = 0;
  for (const auto& [mu, pr] : post.atoms) {
    if (pr == 0) continue;
    if (mu <= 0.0 || mu >= 1.0) return kInf;
    lambda += pr * (0.5 * std::log(0.5 / mu) + 0.5 * std::log(0.5 / (1.0 - mu)));
  }
  return lambda;
}

// Expected |posterior mean - prior mean|; a single task is incentivizable with
// budget 1 iff this is at least its cost.
inline double info_gain_single(const PosteriorDistribution& post) {
  post.validate();
  double g = 0;
  for (const auto& [mu, pr] : post.atoms) g += pr * std::abs(mu - 0.5);
  return g;
}

// Pinsker-based cap on the total cost of an incentivizable set:
// sum c_i <= sqrt((1/2) sum Lambda_i).
inline BoundReport pinsker_cost_bound(const std::vector<PosteriorDistribution>& posts,
                                      const std::vector<double>& costs) {
  BoundReport report;
  report.name = "pinsker_cost_bound";
  double lambda_sum = 0, cost_sum = 0;
  for (const auto& post : posts) lambda_sum += kl_stat(post);
  for (double c : costs) cost_sum += c;
  report.value = std::isinf(lambda_sum) ? kInf : std::sqrt(lambda_sum / 2.0);
  report.satisfied = cost_sum <= report.value + kIcTol;
  return report;
}

// ---------------------------------------------------------------------------
// Tail inequalities

// P(X - E[X] >= delta) for a sum of independent X_i in [a_i, b_i].
inline double hoeffding_tail(double delta, double sq_range_sum) {
  if (delta < 0) throw validation_error("hoeffding_tail needs delta >= 0");
  if (delta == 0) return 1.0;
  if (sq_range_sum <= 0) return 0.0;
  return std::exp(-2.0 * delta * delta / sq_range_sum);
}

// Two-sided Bernstein bound P(|X| >= delta) <= 2 exp(-(delta^2/2)/(V + M/3))
// for zero-mean X_i with |X_i| <= M and V = sum E[X_i^2].
inline double bernstein_tail(double delta, double variance_sum, double m_bound) {
  if (delta < 0) throw validation_error("bernstein_tail needs delta >= 0");
  const double denom = variance_sum + m_bound / 3.0;
  if (denom <= 0) return delta == 0 ? 1.0 : 0.0;
  return std::min(1.0, 2.0 * std::exp(-0.5 * delta * delta / denom));
}

// Probability that the truncated mechanism keeps clamp headroom for every
// task, via the one-sided Bernstein instantiation with delta = 11 - 45/8,
// variance term 6*(9/8)^2 and M term 3/2. Success >= 8/9.
inline double truncation_success_probability() {
  const double delta = 11.0 - 45.0 / 8.0;
  const double denom = 6.0 * (9.0 / 8.0) * (9.0 / 8.0) + 3.0 / 2.0;
  return 1.0 - std::exp(-delta * delta / denom);
}

}  // namespace knapscore
