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

#include <array>
#include <cmath>
#include <limits>
#include <variant>
#include <vector>

#include "knapscore/common.hpp"
#include "knapscore/model.hpp"

namespace knapscore {

// Reported signal per task. Ordered bot < zero < one; every tie-break on
// reports uses this order with task 0 most significant.
enum class Trit : std::uint8_t { bot = 0, zero = 1, one = 2 };

using SignalProfile = std::vector<Trit>;
using Outcome = std::vector<std::uint8_t>;  // one bit per task

inline bool trit_matches(Trit t, std::uint8_t bit) {
  return (t == Trit::zero && bit == 0) || (t == Trit::one && bit == 1);
}
inline bool trit_informative(Trit t) { return t != Trit::bot; }

inline int signal_index(const SignalProfile& sig) {
  int idx = 0, base = 1;
  for (Trit t : sig) {
    idx += base * static_cast<int>(t);
    base *= 3;
  }
  return idx;
}

inline SignalProfile signal_from_index(int idx, int n) {
  SignalProfile sig(n);
  for (int i = 0; i < n; ++i) {
    sig[i] = static_cast<Trit>(idx % 3);
    idx /= 3;
  }
  return sig;
}

inline int outcome_index(const Outcome& out) {
  int idx = 0;
  for (int i = static_cast<int>(out.size()) - 1; i >= 0; --i) idx = idx * 2 + out[i];
  return idx;
}

inline Outcome outcome_from_index(int idx, int n) {
  Outcome out(n);
  for (int i = 0; i < n; ++i) out[i] = (idx >> i) & 1;
  return out;
}

// Single-task rule of Lemma "budget-minimal": pays score_bot on a bot report
// and score_correct on a correct informative report, zero on a wrong one.
struct SingleTaskRule {
  int task = 0;
  double score_bot = 0.0;
  double score_correct = 0.0;

  double eval(Trit report, std::uint8_t state) const {
    if (report == Trit::bot) return score_bot;
    return trit_matches(report, state) ? score_correct : 0.0;
  }
};

// Sum of per-task rules over the recommendation set, shifted by `shift` and
// clamped to [0, cap]. scale records the inflation factor applied to the
// budget-minimal per-task rules (9/8 in the standard construction).
struct TruncatedSeparateRule {
  std::vector<SingleTaskRule> per_task;
  double shift = 0.0;
  double cap = 1.0;
  double scale = 1.0;

  TaskMask recommendation() const {
    TaskMask m = 0;
    for (const auto& r : per_task) m |= TaskMask{1} << r.task;
    return m;
  }
  // The construction ties the shift to the per-task rules; rules built that
  // way admit the fast truthful-dominance argument in best responses.
  bool canonical_shift() const {
    double s = 0;
    for (const auto& r : per_task) s += r.score_bot;
    return std::abs(shift - (-cap / 2.0 + s)) <= 1e-12 * (1.0 + std::abs(shift));
  }
};

// Pays cap * 2^(k - eta) (capped at cap) where k is the number of correct
// informative reports inside the recommendation set; any informative wrong
// report zeroes the score.
struct ThresholdRule {
  TaskMask recommendation = 0;
  int eta = 1;
  double cap = 1.0;
};

struct TabularRule {
  int n = 0;
  double cap = 1.0;
  // Indexed by signal_index(sig) * 2^n + outcome_index(out); task 0 is the
  // least significant digit in both mixed radices.
  std::vector<double> table;

  double at(int sig_idx, int out_idx) const { return table[sig_idx * (1 << n) + out_idx]; }
  double& at(int sig_idx, int out_idx) { return table[sig_idx * (std::size_t{1} << n) + out_idx]; }
};

using ScoringRule = std::variant<SingleTaskRule, TruncatedSeparateRule, ThresholdRule, TabularRule>;

inline double rule_cap(const ScoringRule& rule) {
  return std::visit(
      [](const auto& r) -> double {
        using T = std::decay_t<decltype(r)>;
        if constexpr (std::is_same_v<T, SingleTaskRule>)
          return r.score_correct;
        else
          return r.cap;
      },
      rule);
}

// ---------------------------------------------------------------------------
// Constructors

// Budget-minimal single-task rule: score_bot = c/p, score_correct = 2c/p.
inline SingleTaskRule single_budget_minimal(const Task& task) {
  if (2.0 * task.cost > task.prob)
    throw not_incentivizable_error("task " + std::to_string(task.id) +
                                   " needs budget 2c/p > 1");
  SingleTaskRule rule;
  rule.task = task.id;
  rule.score_bot = task.cost / task.prob;
  rule.score_correct = 2.0 * task.cost / task.prob;
  return rule;
}

// Truncated separate rule over `psi`: per-task rules are scale x budget-minimal
// shape (scale*c/p on bot, twice that on correct), shift = -cap/2 + scale*sum c/p.
inline TruncatedSeparateRule build_truncated_separate(const Instance& inst, TaskMask psi,
                                                      double cap, double scale) {
  if (psi & ~inst.all_mask()) throw validation_error("recommendation contains unknown task");
  if (cap <= 0) throw validation_error("cap must be positive");
  TruncatedSeparateRule rule;
  rule.cap = cap;
  rule.scale = scale;
  double ratio_sum = 0.0;
  for (int i = 0; i < inst.n(); ++i) {
    if (!(psi >> i & 1)) continue;
    const Task& t = inst.tasks[i];
    SingleTaskRule r;
    r.task = i;
    r.score_bot = scale * t.cost / t.prob;
    r.score_correct = 2.0 * r.score_bot;
    rule.per_task.push_back(r);
    ratio_sum += t.cost / t.prob;
  }
  rule.shift = -cap / 2.0 + scale * ratio_sum;
  return rule;
}

// ---------------------------------------------------------------------------
// Pointwise evaluation

inline double score_truncated(const TruncatedSeparateRule& rule, const SignalProfile& sig,
                              const Outcome& out) {
  double sum = 0;
  for (const auto& r : rule.per_task) sum += r.eval(sig[r.task], out[r.task]);
  return clamp(sum - rule.shift, 0.0, rule.cap);
}

inline double score_threshold(const ThresholdRule& rule, const SignalProfile& sig,
                              const Outcome& out) {
  int correct = 0;
  for (int i : ids_from_mask(rule.recommendation)) {
    if (!trit_informative(sig[i])) continue;
    if (trit_matches(sig[i], out[i]))
      ++correct;
    else
      return 0.0;
  }
  return rule.cap * std::pow(2.0, std::min(0, correct - rule.eta));
}

inline double score(const ScoringRule& rule, const SignalProfile& sig, const Outcome& out) {
  return std::visit(
      [&](const auto& r) -> double {
        using T = std::decay_t<decltype(r)>;
        if constexpr (std::is_same_v<T, SingleTaskRule>)
          return r.eval(sig[r.task], out[r.task]);
        else if constexpr (std::is_same_v<T, TruncatedSeparateRule>)
          return score_truncated(r, sig, out);
        else if constexpr (std::is_same_v<T, ThresholdRule>)
          return score_threshold(r, sig, out);
        else
          return r.at(signal_index(sig), outcome_index(out));
      },
      rule);
}

// ---------------------------------------------------------------------------
// Exact expected scores

// Expected score of a threshold rule when the agent exerts effort on tasks
// with revelation probabilities `probs` and reports truthfully:
// E[cap * 2^min(0, m - eta)] with m ~ PoissonBinomial(probs). Truthful
// reporting attains the optimal-reporting value (guessing is never better
// under the proper form).
inline double expected_score_threshold(const ThresholdRule& rule, const std::vector<double>& probs) {
  std::vector<double> pmf{1.0};
  for (double p : probs) {
    std::vector<double> next(pmf.size() + 1, 0.0);
    for (std::size_t k = 0; k < pmf.size(); ++k) {
      next[k] += pmf[k] * (1.0 - p);
      next[k + 1] += pmf[k] * p;
    }
    pmf = std::move(next);
  }
  double e = 0;
  for (std::size_t k = 0; k < pmf.size(); ++k)
    e += pmf[k] * rule.cap * std::pow(2.0, std::min(0.0, static_cast<double>(k) - rule.eta));
  return e;
}

inline double expected_score_threshold(const ThresholdRule& rule, const Instance& inst,
                                       TaskMask effort) {
  if (effort & ~rule.recommendation)
    throw validation_error("effort must lie inside the recommendation set");
  std::vector<double> probs;
  for (int i : ids_from_mask(effort)) probs.push_back(inst.tasks[i].prob);
  return expected_score_threshold(rule, probs);
}

// Per-task branch lottery for the truncated rule: an effort task is correct
// w.p. p, otherwise lands in its bot branch; a bot branch pays score_bot if
// reported truthfully and a fair {score_correct, 0} coin if guessed.
inline Distribution truncated_sum_distribution(const TruncatedSeparateRule& rule,
                                               const Instance& inst, TaskMask effort,
                                               TaskMask guess) {
  Distribution dist;
  dist.add(-rule.shift, 1.0);
  for (const auto& r : rule.per_task) {
    const double p = (effort >> r.task & 1) ? inst.tasks[r.task].prob : 0.0;
    std::vector<std::pair<double, double>> lottery;
    if (guess >> r.task & 1) {
      lottery = {{r.score_correct, p + (1.0 - p) / 2.0}, {0.0, (1.0 - p) / 2.0}};
    } else if (p > 0.0) {
      lottery = {{r.score_correct, p}, {r.score_bot, 1.0 - p}};
    } else {
      lottery = {{r.score_bot, 1.0}};
    }
    dist = convolve(dist, lottery);
  }
  return dist;
}

// Exact E[clamp(sum - shift, 0, cap)] by convolution over the discrete sum.
inline double expected_score_truncated(const TruncatedSeparateRule& rule, const Instance& inst,
                                       TaskMask effort, TaskMask guess) {
  const TaskMask psi = rule.recommendation();
  if ((effort & ~psi) || (guess & ~psi))
    throw validation_error("effort/guess sets must lie inside the recommendation set");
  Distribution dist = truncated_sum_distribution(rule, inst, effort, guess);
  return dist.expect([&](double v) { return clamp(v, 0.0, rule.cap); });
}

// Distribution of the *unclamped* shifted sum when signals landed informative
// on z0, bot-and-truthful on z1 and bot-and-guessed on z2. Symmetric about
// (sum_{z0} 2*score_bot + cap)/2 for canonically shifted rules.
inline Distribution shifted_sum_distribution(const TruncatedSeparateRule& rule, TaskMask z0,
                                             TaskMask z1, TaskMask z2) {
  Distribution dist;
  dist.add(-rule.shift, 1.0);
  for (const auto& r : rule.per_task) {
    std::vector<std::pair<double, double>> lottery;
    if (z0 >> r.task & 1)
      lottery = {{r.score_correct, 1.0}};
    else if (z1 >> r.task & 1)
      lottery = {{r.score_bot, 1.0}};
    else if (z2 >> r.task & 1)
      lottery = {{r.score_correct, 0.5}, {0.0, 0.5}};
    else
      lottery = {{r.score_bot, 1.0}};
    dist = convolve(dist, lottery);
  }
  return dist;
}

// ---------------------------------------------------------------------------
// Tabular bridge

inline TabularRule to_tabular(const ScoringRule& rule, int n) {
  if (n > 6) throw size_limit_error("tabular bridge limited to n <= 6");
  int sig_count = 1;
  for (int i = 0; i < n; ++i) sig_count *= 3;
  TabularRule tab;
  tab.n = n;
  tab.cap = rule_cap(rule);
  tab.table.assign(static_cast<std::size_t>(sig_count) << n, 0.0);
  for (int s = 0; s < sig_count; ++s) {
    SignalProfile sig = signal_from_index(s, n);
    for (int o = 0; o < (1 << n); ++o) {
      Outcome out = outcome_from_index(o, n);
      tab.at(s, o) = score(rule, sig, out);
    }
  }
  return tab;
}

// ---------------------------------------------------------------------------
// Belief-based rules

// Canonical max-over-separate rule: picks the coordinate with the most
// confident belief (ties to the lowest index; mu <= 1/2 predicts 0) and pays 1
// iff the implied prediction matches the realized state.
inline double max_over_separate_score(const std::vector<double>& beliefs, const Outcome& out) {
  int best = 0;
  double best_conf = -1.0;
  for (int i = 0; i < static_cast<int>(beliefs.size()); ++i) {
    const double conf = std::max(beliefs[i], 1.0 - beliefs[i]);
    if (conf > best_conf + 1e-15) {
      best_conf = conf;
      best = i;
    }
  }
  const std::uint8_t prediction = beliefs[best] > 0.5 ? 1 : 0;
  return prediction == out[best] ? 1.0 : 0.0;
}

// Taxation-principle wrapper: the best report to feed a signal-space rule for
// a given belief over outcomes, with ties broken to the lexicographically
// smallest profile (bot < 0 < 1, task 0 most significant).
inline std::pair<SignalProfile, double> belief_proper_wrapper(const TabularRule& rule,
                                                              const std::vector<double>& belief) {
  if (rule.n > 4) throw size_limit_error("belief wrapper limited to n <= 4");
  int sig_count = 1;
  for (int i = 0; i < rule.n; ++i) sig_count *= 3;
  const auto value_of = [&](int s) {
    double e = 0;
    for (int o = 0; o < (1 << rule.n); ++o) e += belief[o] * rule.at(s, o);
    return e;
  };
  double best = -std::numeric_limits<double>::infinity();
  for (int s = 0; s < sig_count; ++s) best = std::max(best, value_of(s));
  // Among reports within tolerance of the maximum, take the lexicographically
  // smallest profile.
  SignalProfile best_sig;
  double best_e = 0;
  for (int s = 0; s < sig_count; ++s) {
    const double e = value_of(s);
    if (e < best - kIcTol) continue;
    SignalProfile sig = signal_from_index(s, rule.n);
    if (best_sig.empty() || sig < best_sig) {
      best_sig = std::move(sig);
      best_e = e;
    }
  }
  return {best_sig, best_e};
}

// Lemma "monotonicity in tasks", constructively: scores reports on psi_sub and
// simulates effort on psi \ psi_sub by averaging the rule over the signals
// those tasks would have produced given the realized state.
inline TabularRule simulate_restriction(const Instance& inst, const TabularRule& rule,
                                        TaskMask psi, TaskMask psi_sub) {
  if (psi_sub & ~psi) throw validation_error("psi_sub must be a subset of psi");
  const int n = rule.n;
  const TaskMask simulated = psi & ~psi_sub;
  TabularRule out;
  out.n = n;
  out.cap = rule.cap;
  int sig_count = 1;
  for (int i = 0; i < n; ++i) sig_count *= 3;
  out.table.assign(static_cast<std::size_t>(sig_count) << n, 0.0);
  const std::vector<int> sim_ids = ids_from_mask(simulated);
  for (int s = 0; s < sig_count; ++s) {
    SignalProfile reported = signal_from_index(s, n);
    for (int o = 0; o < (1 << n); ++o) {
      Outcome state = outcome_from_index(o, n);
      // Reports outside psi_sub are ignored: rebuild the inner profile from
      // psi_sub reports plus simulated signals.
      double total = 0;
      const int m = static_cast<int>(sim_ids.size());
      for (std::uint32_t pat = 0; pat < (std::uint32_t{1} << m); ++pat) {
        SignalProfile inner(n, Trit::bot);
        for (int i : ids_from_mask(psi_sub)) inner[i] = reported[i];
        double prob = 1.0;
        for (int j = 0; j < m; ++j) {
          const int i = sim_ids[j];
          if (pat >> j & 1) {
            prob *= inst.tasks[i].prob;
            inner[i] = state[i] ? Trit::one : Trit::zero;
          } else {
            prob *= 1.0 - inst.tasks[i].prob;
          }
        }
        total += prob * rule.at(signal_index(inner), o);
      }
      out.at(s, o) = total;
    }
  }
  return out;
}

}  // namespace knapscore
