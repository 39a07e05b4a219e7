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
#include <functional>
#include <limits>
#include <map>
#include <optional>
#include <random>
#include <string>
#include <tuple>
#include <vector>

#include "knapscore/common.hpp"
#include "knapscore/model.hpp"
#include "knapscore/scoring.hpp"

namespace knapscore {

// What the agent reports on a task whose signal came back bot: report bot
// truthfully, or guess a uniform random state. Informative signals are always
// reported truthfully under this policy family (misreporting them is
// dominated for every rule family here; the tabular best response below
// additionally searches full deterministic reporting maps).
enum class ReportAction : std::uint8_t { truthful = 0, guess_on_bot = 1 };

struct ReportPolicy {
  std::vector<ReportAction> actions;  // indexed by task id

  TaskMask guess_mask() const {
    TaskMask m = 0;
    for (std::size_t i = 0; i < actions.size(); ++i)
      if (actions[i] == ReportAction::guess_on_bot) m |= TaskMask{1} << i;
    return m;
  }
  static ReportPolicy truthful(int n) { return ReportPolicy{std::vector<ReportAction>(n, ReportAction::truthful)}; }
  static ReportPolicy from_guess_mask(TaskMask guess, int n) {
    ReportPolicy p = truthful(n);
    for (int i : ids_from_mask(guess)) p.actions[i] = ReportAction::guess_on_bot;
    return p;
  }
};

// Deterministic per-task reporting map for tabular rules: what to report when
// the received signal is bot / zero / one.
using ReportMap = std::array<Trit, 3>;

inline ReportMap identity_report_map() { return {Trit::bot, Trit::zero, Trit::one}; }

struct BestResponse {
  std::vector<int> effort;
  ReportPolicy policy;
  double utility = 0.0;
  // Only set by the tabular search (full reporting-map deviations).
  std::optional<std::vector<ReportMap>> report_maps;
};

struct Mechanism {
  ScoringRule rule;
  std::vector<int> recommendation;
  std::string provenance;

  TaskMask recommendation_mask() const { return mask_from_ids(recommendation); }
};

// ---------------------------------------------------------------------------
// Expected utility

namespace detail {

// Threshold rule with a static guess set: DP over (correct count capped at
// eta, not-yet-zapped). A guessed bot branch is right or fatally wrong with
// probability 1/2 each.
inline double threshold_score_with_policy(const ThresholdRule& rule, const Instance& inst,
                                          TaskMask effort, TaskMask guess) {
  std::vector<double> alive(static_cast<std::size_t>(rule.eta) + 1, 0.0);
  alive[0] = 1.0;
  for (int i : ids_from_mask(rule.recommendation)) {
    const double p = (effort >> i & 1) ? inst.tasks[i].prob : 0.0;
    const bool g = (guess >> i & 1) != 0;
    const double up = g ? p + (1.0 - p) / 2.0 : p;      // probability of one more correct
    const double stay = g ? 0.0 : 1.0 - p;              // bot reported truthfully
    std::vector<double> next(alive.size(), 0.0);
    for (std::size_t k = 0; k < alive.size(); ++k) {
      if (alive[k] == 0.0) continue;
      const std::size_t kk = std::min(alive.size() - 1, k + 1);
      next[kk] += alive[k] * up;
      next[k] += alive[k] * stay;
      // The remaining mass (wrong guess) is zapped and contributes zero.
    }
    alive = std::move(next);
  }
  double e = 0;
  for (std::size_t k = 0; k < alive.size(); ++k)
    e += alive[k] * rule.cap * std::pow(2.0, std::min(0.0, static_cast<double>(k) - rule.eta));
  return e;
}

inline double single_rule_score(const SingleTaskRule& rule, const Instance& inst, TaskMask effort,
                                TaskMask guess) {
  const double p = (effort >> rule.task & 1) ? inst.tasks[rule.task].prob : 0.0;
  const double bot_value =
      (guess >> rule.task & 1) ? 0.5 * rule.score_correct : rule.score_bot;
  return p * rule.score_correct + (1.0 - p) * bot_value;
}

// Exhaustive expectation for tabular rules under per-task reporting maps.
inline double tabular_score_with_maps(const TabularRule& rule, const Instance& inst,
                                      TaskMask effort, const std::vector<ReportMap>& maps) {
  const int n = rule.n;
  if (n > 6) throw size_limit_error("tabular evaluation limited to n <= 6");
  const std::vector<int> effort_ids = ids_from_mask(effort);
  double total = 0;
  for (int o = 0; o < (1 << n); ++o) {
    const Outcome state = outcome_from_index(o, n);
    const double p_state = 1.0 / (1 << n);
    const int m = static_cast<int>(effort_ids.size());
    for (std::uint32_t pat = 0; pat < (std::uint32_t{1} << m); ++pat) {
      double prob = p_state;
      SignalProfile received(n, Trit::bot);
      for (int j = 0; j < m; ++j) {
        const int i = effort_ids[j];
        if (pat >> j & 1) {
          prob *= inst.tasks[i].prob;
          received[i] = state[i] ? Trit::one : Trit::zero;
        } else {
          prob *= 1.0 - inst.tasks[i].prob;
        }
      }
      SignalProfile reported(n);
      for (int i = 0; i < n; ++i) reported[i] = maps[i][static_cast<int>(received[i])];
      total += prob * rule.at(signal_index(reported), o);
    }
  }
  return total;
}

// GuessOnBot as a randomized map = average of the two deterministic guesses.
inline double tabular_score_with_policy(const TabularRule& rule, const Instance& inst,
                                        TaskMask effort, TaskMask guess) {
  const int n = rule.n;
  std::vector<ReportMap> maps(n, identity_report_map());
  const std::vector<int> guess_ids = ids_from_mask(guess);
  const int g = static_cast<int>(guess_ids.size());
  double total = 0;
  for (std::uint32_t bits = 0; bits < (std::uint32_t{1} << g); ++bits) {
    for (int j = 0; j < g; ++j)
      maps[guess_ids[j]][0] = (bits >> j & 1) ? Trit::one : Trit::zero;
    total += tabular_score_with_maps(rule, inst, effort, maps);
  }
  return total / (1 << g);
}

}  // namespace detail

// Expected score under (effort set, report policy), before costs.
inline double expected_score(const Instance& inst, const ScoringRule& rule, TaskMask effort,
                             TaskMask guess) {
  return std::visit(
      [&](const auto& r) -> double {
        using T = std::decay_t<decltype(r)>;
        if constexpr (std::is_same_v<T, SingleTaskRule>)
          return detail::single_rule_score(r, inst, effort, guess);
        else if constexpr (std::is_same_v<T, ThresholdRule>)
          return detail::threshold_score_with_policy(r, inst, effort & r.recommendation,
                                                     guess & r.recommendation);
        else if constexpr (std::is_same_v<T, TruncatedSeparateRule>)
          return expected_score_truncated(r, inst, effort & r.recommendation(),
                                          guess & r.recommendation());
        else
          return detail::tabular_score_with_policy(r, inst, effort, guess);
      },
      rule);
}

inline double effort_cost(const Instance& inst, TaskMask effort) {
  double c = 0;
  for (int i : ids_from_mask(effort)) c += inst.tasks[i].cost;
  return c;
}

inline double expected_utility(const Instance& inst, const ScoringRule& rule, TaskMask effort,
                               const ReportPolicy& policy) {
  return expected_score(inst, rule, effort, policy.guess_mask()) - effort_cost(inst, effort);
}

// ---------------------------------------------------------------------------
// Best response

namespace detail {

// Domain the rule actually reads. Effort outside it only adds cost, so the
// search is restricted there (ties already break toward smaller sets).
inline TaskMask rule_domain(const ScoringRule& rule, const Instance& inst) {
  return std::visit(
      [&](const auto& r) -> TaskMask {
        using T = std::decay_t<decltype(r)>;
        if constexpr (std::is_same_v<T, SingleTaskRule>)
          return TaskMask{1} << r.task;
        else if constexpr (std::is_same_v<T, ThresholdRule>)
          return r.recommendation;
        else if constexpr (std::is_same_v<T, TruncatedSeparateRule>)
          return r.recommendation();
        else
          return inst.all_mask();
      },
      rule);
}

// For threshold rules (proper form) and canonically shifted truncated rules,
// all-truthful reporting weakly dominates every static guess choice at every
// effort set, so the guess dimension can be skipped.
inline bool guess_search_needed(const ScoringRule& rule) {
  if (const auto* tr = std::get_if<TruncatedSeparateRule>(&rule)) return !tr->canonical_shift();
  return std::holds_alternative<SingleTaskRule>(rule) || std::holds_alternative<TabularRule>(rule);
}

// Branch-enumeration evaluation of E[clamp] for truthful reporting; cheaper
// than the convolution when scanning all 2^|psi| effort sets.
inline double truncated_clamp_dfs(const TruncatedSeparateRule& rule, const Instance& inst,
                                  TaskMask effort, std::size_t idx, double sum, double prob) {
  if (idx == rule.per_task.size()) return prob * clamp(sum, 0.0, rule.cap);
  const auto& r = rule.per_task[idx];
  if (effort >> r.task & 1) {
    const double p = inst.tasks[r.task].prob;
    return truncated_clamp_dfs(rule, inst, effort, idx + 1, sum + r.score_correct, prob * p) +
           truncated_clamp_dfs(rule, inst, effort, idx + 1, sum + r.score_bot, prob * (1.0 - p));
  }
  return truncated_clamp_dfs(rule, inst, effort, idx + 1, sum + r.score_bot, prob);
}

}  // namespace detail

// Global maximizer of expected utility over effort subsets of the rule's
// domain and the static reporting-policy family. Tabular rules instead search
// full deterministic per-task reporting maps (27 per task, n <= 3).
inline BestResponse best_response(const Instance& inst, const ScoringRule& rule) {
  const int n = inst.n();
  if (std::holds_alternative<TabularRule>(rule)) {
    if (n > 3) throw size_limit_error("tabular best response limited to n <= 3");
    const auto& tab = std::get<TabularRule>(rule);
    // Candidate maps per task: all 27 for effort tasks; only the bot entry
    // matters for no-effort tasks (their signal is a.s. bot).
    std::vector<ReportMap> maps(n);
    const auto for_each_candidate = [&](auto&& visit) {
      for (TaskMask effort = 0; effort < (TaskMask{1} << n); ++effort) {
        const double cost = effort_cost(inst, effort);
        std::vector<int> radix(n);
        for (int i = 0; i < n; ++i) radix[i] = (effort >> i & 1) ? 27 : 3;
        std::vector<int> digits(n, 0);
        while (true) {
          for (int i = 0; i < n; ++i) {
            if (effort >> i & 1) {
              maps[i] = {static_cast<Trit>(digits[i] % 3), static_cast<Trit>(digits[i] / 3 % 3),
                         static_cast<Trit>(digits[i] / 9 % 3)};
            } else {
              maps[i] = identity_report_map();
              maps[i][0] = static_cast<Trit>(digits[i]);
            }
          }
          visit(effort, maps, detail::tabular_score_with_maps(tab, inst, effort, maps) - cost);
          int i = 0;
          for (; i < n; ++i) {
            if (++digits[i] < radix[i]) break;
            digits[i] = 0;
          }
          if (i == n) break;
        }
      }
    };
    double max_u = -std::numeric_limits<double>::infinity();
    for_each_candidate([&](TaskMask, const std::vector<ReportMap>&, double u) {
      max_u = std::max(max_u, u);
    });
    // Among candidates within tolerance of the maximum: smaller effort set,
    // then lexicographic effort, then the first map in enumeration order.
    TaskMask best_effort = 0;
    std::vector<ReportMap> best_maps;
    double best_u = 0;
    bool have = false;
    for_each_candidate([&](TaskMask effort, const std::vector<ReportMap>& m, double u) {
      if (u < max_u - kIcTol) return;
      const auto rank = std::make_pair(popcount(effort), effort);
      if (!have || rank < std::make_pair(popcount(best_effort), best_effort)) {
        have = true;
        best_effort = effort;
        best_maps = m;
        best_u = u;
      }
    });
    BestResponse br;
    br.effort = ids_from_mask(best_effort);
    br.utility = best_u;
    br.report_maps = best_maps;
    br.policy = ReportPolicy::truthful(n);
    for (int i = 0; i < n; ++i)
      if (best_maps[i][0] != Trit::bot) br.policy.actions[i] = ReportAction::guess_on_bot;
    return br;
  }

  const TaskMask domain = detail::rule_domain(rule, inst);
  const int d = popcount(domain);
  const bool search_guess = detail::guess_search_needed(rule);
  if (d > (search_guess && !std::holds_alternative<SingleTaskRule>(rule) ? 10 : 14))
    throw size_limit_error("best response limited to 14 recommended tasks (10 with guess search)");
  const std::vector<int> ids = ids_from_mask(domain);
  const auto expand = [&](std::uint32_t bits) {
    TaskMask m = 0;
    for (int j = 0; j < d; ++j)
      if (bits >> j & 1) m |= TaskMask{1} << ids[j];
    return m;
  };
  const auto score_of = [&](TaskMask effort, TaskMask guess) -> double {
    if (guess == 0) {
      if (const auto* tr = std::get_if<TruncatedSeparateRule>(&rule))
        return detail::truncated_clamp_dfs(*tr, inst, effort, 0, -tr->shift, 1.0);
    }
    return expected_score(inst, rule, effort, guess);
  };
  const auto for_each_candidate = [&](auto&& visit) {
    for (std::uint32_t eb = 0; eb < (std::uint32_t{1} << d); ++eb) {
      const TaskMask effort = expand(eb);
      const double cost = effort_cost(inst, effort);
      const std::uint32_t guess_limit = search_guess ? (std::uint32_t{1} << d) : 1;
      for (std::uint32_t gb = 0; gb < guess_limit; ++gb) {
        const TaskMask guess = expand(gb);
        visit(effort, guess, score_of(effort, guess) - cost);
      }
    }
  };
  double max_u = -std::numeric_limits<double>::infinity();
  for_each_candidate([&](TaskMask, TaskMask, double u) { max_u = std::max(max_u, u); });
  // Ties within kIcTol break to smaller effort, then lexicographic effort,
  // then fewer guesses, then lexicographic guesses.
  bool have = false;
  TaskMask best_effort = 0, best_guess = 0;
  double best_u = 0;
  for_each_candidate([&](TaskMask effort, TaskMask guess, double u) {
    if (u < max_u - kIcTol) return;
    const auto rank = std::make_tuple(popcount(effort), effort, popcount(guess), guess);
    if (!have || rank < std::make_tuple(popcount(best_effort), best_effort, popcount(best_guess),
                                        best_guess)) {
      have = true;
      best_effort = effort;
      best_guess = guess;
      best_u = u;
    }
  });
  BestResponse br;
  br.effort = ids_from_mask(best_effort);
  br.policy = ReportPolicy::from_guess_mask(best_guess, n);
  br.utility = best_u;
  return br;
}

// ---------------------------------------------------------------------------
// Incentive compatibility

struct IcReport {
  bool holds = false;
  double gap = 0.0;  // best deviation utility minus recommended utility
  BestResponse worst_deviation;
  double recommended_utility = 0.0;
};

// Holds iff following the recommendation (full effort on psi, truthful
// reports) attains the best-response utility within kIcTol.
inline IcReport verify_ic(const Instance& inst, const Mechanism& mech) {
  const TaskMask psi = mech.recommendation_mask();
  IcReport report;
  report.recommended_utility =
      expected_utility(inst, mech.rule, psi, ReportPolicy::truthful(inst.n()));
  report.worst_deviation = best_response(inst, mech.rule);
  report.gap = report.worst_deviation.utility - report.recommended_utility;
  report.holds = report.gap <= kIcTol;
  return report;
}

// ---------------------------------------------------------------------------
// Sequential effort

enum class SequentialKind { eager_marginal, fixed_order_greedy };

struct SequentialStrategy {
  SequentialKind kind = SequentialKind::eager_marginal;
  std::vector<int> order;  // fixed_order_greedy only
};

struct SequentialResult {
  std::map<TaskMask, double> completion_distribution;
  double expected_value = 0.0;
  double completion_prob_all = 0.0;     // P(completed set == psi)
  double prob_complete_uninformed = 0;  // P(completed all with no informative signal)
};

namespace detail {

// Expected score if the agent stops now and reports truthfully, given which
// exerted tasks came back informative. Deterministic for the structured
// families (an informative signal is correct with certainty).
inline double stop_value(const ScoringRule& rule, const Instance& inst, TaskMask psi,
                         TaskMask informative) {
  if (const auto* th = std::get_if<ThresholdRule>(&rule)) {
    const int k = popcount(informative & th->recommendation);
    return th->cap * std::pow(2.0, std::min(0, k - th->eta));
  }
  if (const auto* tr = std::get_if<TruncatedSeparateRule>(&rule)) {
    double sum = 0;
    for (const auto& r : tr->per_task)
      sum += (informative >> r.task & 1) ? r.score_correct : r.score_bot;
    return clamp(sum - tr->shift, 0.0, tr->cap);
  }
  if (const auto* sr = std::get_if<SingleTaskRule>(&rule)) {
    return (informative >> sr->task & 1) ? sr->score_correct : sr->score_bot;
  }
  (void)psi;
  (void)inst;
  throw validation_error("sequential simulation needs a structured rule");
}

// One-step marginal of exerting effort on `task` and then stopping.
inline double one_step_marginal(const ScoringRule& rule, const Instance& inst, TaskMask psi,
                                TaskMask informative, int task) {
  const double p = inst.tasks[task].prob;
  const double now = stop_value(rule, inst, psi, informative);
  const double with = p * stop_value(rule, inst, psi, informative | (TaskMask{1} << task)) +
                      (1.0 - p) * stop_value(rule, inst, psi, informative);
  return with - inst.tasks[task].cost - now;
}

// Next task per the strategy, or -1 to stop. Never stops while some remaining
// task has marginal > kIcTol.
inline int next_task(const SequentialStrategy& strat, const ScoringRule& rule,
                     const Instance& inst, TaskMask psi, TaskMask done, TaskMask informative) {
  if (strat.kind == SequentialKind::fixed_order_greedy) {
    for (int i : strat.order) {
      if (done >> i & 1) continue;
      if (!(psi >> i & 1)) continue;
      if (one_step_marginal(rule, inst, psi, informative, i) > kIcTol) return i;
    }
    return -1;
  }
  int best = -1;
  double best_marginal = kIcTol;
  for (int i : ids_from_mask(psi & ~done)) {
    const double m = one_step_marginal(rule, inst, psi, informative, i);
    if (m > best_marginal) {
      best_marginal = m;
      best = i;
    }
  }
  return best;
}

}  // namespace detail

// Exact distribution over completed effort sets via depth-first enumeration of
// informative/uninformative branches in strategy order.
inline SequentialResult sequential_simulate(const Instance& inst, const Mechanism& mech,
                                            const SequentialStrategy& strat) {
  const TaskMask psi = mech.recommendation_mask();
  if (popcount(psi) > 20) throw size_limit_error("sequential simulation limited to 20 tasks");
  SequentialResult result;
  std::function<void(TaskMask, TaskMask, double)> dfs = [&](TaskMask done, TaskMask informative,
                                                            double prob) {
    const int next = detail::next_task(strat, mech.rule, inst, psi, done, informative);
    if (next < 0) {
      result.completion_distribution[done] += prob;
      if (done == psi) {
        result.completion_prob_all += prob;
        if (informative == 0) result.prob_complete_uninformed += prob;
      }
      return;
    }
    const double p = inst.tasks[next].prob;
    dfs(done | (TaskMask{1} << next), informative | (TaskMask{1} << next), prob * p);
    dfs(done | (TaskMask{1} << next), informative, prob * (1.0 - p));
  };
  dfs(0, 0, 1.0);
  for (const auto& [set, prob] : result.completion_distribution)
    result.expected_value += prob * valuation_value(inst, set);
  return result;
}

// Seeded Monte-Carlo estimate of the principal's expected value under the same
// strategy; returns (mean, standard error).
inline std::pair<double, double> sequential_monte_carlo(const Instance& inst, const Mechanism& mech,
                                                        const SequentialStrategy& strat,
                                                        int paths, std::uint64_t seed) {
  const TaskMask psi = mech.recommendation_mask();
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> unif(0.0, 1.0);
  double sum = 0, sum_sq = 0;
  for (int it = 0; it < paths; ++it) {
    TaskMask done = 0, informative = 0;
    while (true) {
      const int next = detail::next_task(strat, mech.rule, inst, psi, done, informative);
      if (next < 0) break;
      done |= TaskMask{1} << next;
      if (unif(rng) < inst.tasks[next].prob) informative |= TaskMask{1} << next;
    }
    const double v = valuation_value(inst, done);
    sum += v;
    sum_sq += v * v;
  }
  const double mean = sum / paths;
  const double var = std::max(0.0, sum_sq / paths - mean * mean);
  return {mean, std::sqrt(var / paths)};
}

// ---------------------------------------------------------------------------
// Obvious dominance of sequential traces

struct DecisionStep {
  TaskMask done = 0;
  TaskMask informative = 0;
  int action = -1;  // task id, or -1 for stop
};

// True iff no stop decision in the trace leaves a task with positive one-step
// marginal on the table (Def. of obviously dominated strategies, negated).
inline bool check_not_obviously_dominated(const std::vector<DecisionStep>& trace,
                                          const Instance& inst, const Mechanism& mech) {
  const TaskMask psi = mech.recommendation_mask();
  for (const auto& step : trace) {
    if (step.action >= 0) continue;
    for (int i : ids_from_mask(psi & ~step.done)) {
      if (detail::one_step_marginal(mech.rule, inst, psi, step.informative, i) > kIcTol)
        return false;
    }
  }
  return true;
}

}  // namespace knapscore
