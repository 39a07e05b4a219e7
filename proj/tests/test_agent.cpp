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

#include <doctest.h>

#include <cmath>

#include "knapscore/agent.hpp"
#include "knapscore/gen.hpp"
#include "knapscore/mechanisms.hpp"
#include "knapscore/model.hpp"

using namespace knapscore;

namespace {

Instance make_instance(std::vector<Task> tasks) {
  Instance inst;
  for (std::size_t i = 0; i < tasks.size(); ++i) tasks[i].id = static_cast<int>(i);
  inst.tasks = std::move(tasks);
  return inst;
}

Mechanism threshold_mech(const Instance& inst, TaskMask psi, int eta = 1, double cap = 1.0) {
  Mechanism mech;
  ThresholdRule rule;
  rule.recommendation = psi;
  rule.eta = eta;
  rule.cap = cap;
  mech.rule = rule;
  mech.recommendation = ids_from_mask(psi);
  (void)inst;
  return mech;
}

}  // namespace

TEST_CASE("expected_utility dispatch") {
  const Instance inst = make_instance({{0, 0.1, 0.5, 1.0}, {0, 0.1, 0.5, 1.0}});
  const Mechanism th = threshold_mech(inst, 3);
  CHECK(expected_utility(inst, th.rule, 3, ReportPolicy::truthful(2)) ==
        doctest::Approx(0.875 - 0.2));
  CHECK(expected_utility(inst, th.rule, 0, ReportPolicy::truthful(2)) == doctest::Approx(0.5));

  const Instance one = make_instance({{0, 0.1, 0.5, 1.0}});
  const TruncatedSeparateRule tr = build_truncated_separate(one, 1, 11.0, 9.0 / 8.0);
  CHECK(expected_utility(one, ScoringRule{tr}, 1, ReportPolicy::truthful(1)) ==
        doctest::Approx(5.6125 - 0.1));
}

TEST_CASE("best_response ties break to less effort at exact indifference") {
  const Instance inst = make_instance({{0, 0.1, 0.5, 1.0}});
  const SingleTaskRule rule = single_budget_minimal(inst.tasks[0]);
  const BestResponse br = best_response(inst, ScoringRule{rule});
  CHECK(br.effort.empty());
  CHECK(br.utility == doctest::Approx(0.2));

  SingleTaskRule scaled = rule;
  scaled.score_bot *= 1.01;
  scaled.score_correct *= 1.01;
  const BestResponse br2 = best_response(inst, ScoringRule{scaled});
  CHECK(br2.effort == std::vector<int>{0});

  SingleTaskRule zero;
  zero.task = 0;
  const BestResponse br3 = best_response(inst, ScoringRule{zero});
  CHECK(br3.effort.empty());
  CHECK(br3.utility == doctest::Approx(0.0));
}

TEST_CASE("best_response consistency against sampled deviations") {
  for (std::uint64_t seed = 1; seed <= 6; ++seed) {
    const Instance inst = preprocess(gen_instance(seed, 9, parse_regime("mixed")));
    if (inst.n() == 0) continue;
    const TaskMask psi = inst.all_mask();
    const std::vector<ScoringRule> rules = {
        ScoringRule{build_truncated_separate(inst, psi, 11.0, 9.0 / 8.0)},
        ScoringRule{ThresholdRule{psi, 1, 1.0}},
        ScoringRule{ThresholdRule{psi, 2, 1.0}},
    };
    for (const ScoringRule& rule : rules) {
      const BestResponse br = best_response(inst, rule);
      Rng rng(seed, 13);
      for (int rep = 0; rep < 30; ++rep) {
        const TaskMask effort = static_cast<TaskMask>(rng.next_u64()) & psi;
        const TaskMask guess = static_cast<TaskMask>(rng.next_u64()) & psi;
        const double u =
            expected_utility(inst, rule, effort, ReportPolicy::from_guess_mask(guess, inst.n()));
        CHECK(br.utility >= u - kIcTol);
      }
    }
  }
}

TEST_CASE("policy evaluators agree with the tabular bridge") {
  // The closed-form/convolution policy paths and the exhaustive evaluation of
  // the bridged table are independent routes to the same expectation.
  for (std::uint64_t seed = 1; seed <= 5; ++seed) {
    const Instance inst = preprocess(gen_instance(seed, 5, parse_regime("mixed")));
    const int n = inst.n();
    if (n < 2) continue;
    const TaskMask psi = inst.all_mask();
    std::vector<ScoringRule> rules = {
        ScoringRule{ThresholdRule{psi, 1, 1.0}},
        ScoringRule{ThresholdRule{psi, 2, 0.7}},
        ScoringRule{build_truncated_separate(inst, psi, 11.0, 9.0 / 8.0)},
        ScoringRule{single_budget_minimal(inst.tasks[0])},
    };
    Rng rng(seed, 57);
    for (const ScoringRule& rule : rules) {
      const TabularRule tab = to_tabular(rule, n);
      for (int rep = 0; rep < 6; ++rep) {
        const TaskMask effort = static_cast<TaskMask>(rng.next_u64()) & psi;
        const TaskMask guess = static_cast<TaskMask>(rng.next_u64()) & psi;
        const double direct = expected_score(inst, rule, effort, guess);
        const double bridged = expected_score(inst, ScoringRule{tab}, effort, guess);
        CHECK(direct == doctest::Approx(bridged).epsilon(1e-9));
      }
    }
  }
}

TEST_CASE("verify_ic on the worked mechanisms") {
  // Truncated mechanism over a small preprocessed instance.
  for (std::uint64_t seed = 1; seed <= 6; ++seed) {
    const Instance inst = preprocess(gen_instance(seed, 8, parse_regime("mixed")));
    if (inst.n() == 0) continue;
    const std::vector<int> psi = recommend_truncated(inst);
    const Mechanism mech = build_truncated_mechanism(inst, psi, 11.0);
    const IcReport report = verify_ic(inst, mech);
    CHECK(report.holds);
  }

  // Threshold rule with a cost pushed just above its marginal: IC must fail
  // and the witness deviation drops the expensive task.
  const Instance bad = make_instance({{0, 0.05, 0.5, 1.0}, {0, 0.13, 0.5, 1.0}});
  const Mechanism mech = threshold_mech(bad, 3);
  const IcReport report = verify_ic(bad, mech);
  CHECK_FALSE(report.holds);
  CHECK(report.worst_deviation.effort == std::vector<int>{0});
  CHECK(report.gap == doctest::Approx(0.005));

  // Empty recommendation with a zero-scoring rule.
  Instance empty_inst;
  Mechanism empty_mech;
  SingleTaskRule zero;
  zero.task = 0;
  empty_mech.rule = zero;
  Instance one_task = make_instance({{0, 0.1, 0.5, 1.0}});
  CHECK(verify_ic(one_task, empty_mech).holds);
}

TEST_CASE("sequential simulation: threshold stops at first informative signal") {
  const Instance inst =
      make_instance({{0, 0.03, 0.1, 1.0}, {0, 0.03, 0.1, 1.0}, {0, 0.03, 0.1, 1.0},
                     {0, 0.03, 0.1, 1.0}, {0, 0.03, 0.1, 1.0}});
  const Mechanism mech = threshold_mech(inst, 0x1f);
  SequentialStrategy strat;  // eager marginal
  const SequentialResult res = sequential_simulate(inst, mech, strat);

  double mass = 0;
  for (const auto& [set, prob] : res.completion_distribution) mass += prob;
  CHECK(mass == doctest::Approx(1.0).epsilon(1e-12));

  // Completing everything only needs the first four tasks uninformative.
  CHECK(res.completion_prob_all == doctest::Approx(std::pow(0.9, 4)));
  // The no-informative completion event has probability (1-p)^5 exactly.
  CHECK(res.prob_complete_uninformed == doctest::Approx(std::pow(0.9, 5)).epsilon(1e-12));
  // Expected completed count: sum_{j=0..4} 0.9^j = (1 - 0.9^5) / 0.1.
  CHECK(res.expected_value == doctest::Approx((1.0 - std::pow(0.9, 5)) / 0.1));

  // Empty recommendation.
  Mechanism empty_mech = threshold_mech(inst, 0);
  const SequentialResult empty_res = sequential_simulate(inst, empty_mech, strat);
  CHECK(empty_res.expected_value == doctest::Approx(0.0));
  CHECK(empty_res.completion_prob_all == doctest::Approx(1.0));
}

TEST_CASE("sequential simulation: truncated mechanisms complete with clamp headroom") {
  for (std::uint64_t seed = 1; seed <= 4; ++seed) {
    const Instance inst = preprocess(gen_instance(seed, 8, parse_regime("x-heavy")));
    const std::vector<int> psi = recommend_truncated(inst, 11.0);
    if (psi.empty()) continue;
    const Mechanism mech = build_truncated_mechanism(inst, psi, 1.0);
    SequentialStrategy strat;
    const SequentialResult res = sequential_simulate(inst, mech, strat);
    CHECK(res.completion_prob_all >= 8.0 / 9.0);
  }
}

TEST_CASE("sequential monte carlo stays within four standard errors") {
  const Instance inst =
      make_instance({{0, 0.02, 0.08, 2.0}, {0, 0.03, 0.09, 1.0}, {0, 0.01, 0.05, 3.0},
                     {0, 0.02, 0.07, 1.5}, {0, 0.03, 0.09, 2.5}});
  const Mechanism mech = threshold_mech(inst, 0x1f);
  SequentialStrategy strat;
  const SequentialResult exact = sequential_simulate(inst, mech, strat);
  const auto [mean, se] = sequential_monte_carlo(inst, mech, strat, 100000, 2026);
  CHECK(std::abs(mean - exact.expected_value) <= 4.0 * se + 1e-12);
}

TEST_CASE("fixed order strategies respect the given permutation") {
  const Instance inst =
      make_instance({{0, 0.02, 0.08, 1.0}, {0, 0.02, 0.08, 1.0}, {0, 0.02, 0.08, 1.0}});
  const Mechanism mech = threshold_mech(inst, 0x7);
  for (const std::vector<int>& order :
       {std::vector<int>{0, 1, 2}, {2, 1, 0}, {1, 2, 0}}) {
    SequentialStrategy strat;
    strat.kind = SequentialKind::fixed_order_greedy;
    strat.order = order;
    const SequentialResult res = sequential_simulate(inst, mech, strat);
    // Symmetric tasks: the distribution over completed-set sizes is
    // order-invariant even though the sets differ.
    CHECK(res.expected_value == doctest::Approx((1.0 - std::pow(0.92, 3)) / 0.08));
    CHECK(res.prob_complete_uninformed == doctest::Approx(std::pow(0.92, 3)));
  }
}

TEST_CASE("check_not_obviously_dominated") {
  const Instance inst = make_instance({{0, 0.02, 0.1, 1.0}, {0, 0.02, 0.1, 1.0}});
  const Mechanism mech = threshold_mech(inst, 0x3);

  // Stopping immediately while both tasks carry positive marginal: dominated.
  CHECK_FALSE(check_not_obviously_dominated({{0, 0, -1}}, inst, mech));

  // Stopping after an informative signal: marginal of further effort is gone.
  CHECK(check_not_obviously_dominated({{1, 1, -1}}, inst, mech));

  // An eager-marginal path: exert 0, see bot, exert 1, stop.
  std::vector<DecisionStep> trace = {{0, 0, 0}, {1, 0, 1}, {3, 0, -1}};
  CHECK(check_not_obviously_dominated(trace, inst, mech));
}

TEST_CASE("tabular best response explores full reporting maps") {
  // A rule rewarding a *wrong* report on task 0: the identity-map family
  // misses the optimum, the full map search must find it.
  TabularRule tab;
  tab.n = 1;
  tab.cap = 1.0;
  tab.table.assign(6, 0.0);
  tab.at(signal_index({Trit::zero}), outcome_index({1})) = 1.0;
  tab.at(signal_index({Trit::one}), outcome_index({0})) = 1.0;
  const Instance inst = make_instance({{0, 0.01, 0.9, 1.0}});
  const BestResponse br = best_response(inst, ScoringRule{tab});
  CHECK(br.effort == std::vector<int>{0});
  CHECK(br.utility == doctest::Approx(0.9 * 1.0 + 0.1 * 0.5 - 0.01));
  REQUIRE(br.report_maps.has_value());
  CHECK((*br.report_maps)[0][static_cast<int>(Trit::one)] == Trit::zero);
}

TEST_CASE("constructive task monotonicity on tabular rules") {
  // If (S, psi) is incentive compatible, the restriction that simulates
  // effort outside a subset keeps the subset incentive compatible.
  for (std::uint64_t seed = 1; seed <= 6; ++seed) {
    Rng rng(seed, 21);
    const int n = 3;
    std::vector<Task> tasks;
    for (int i = 0; i < n; ++i) {
      const double p = rng.uniform(0.3, 0.9);
      tasks.push_back({i, rng.uniform(0.2, 0.45) * p, p, 1.0});
    }
    const Instance inst = make_instance(tasks);
    const TaskMask psi = inst.all_mask();
    if (!verify_ic(inst, threshold_mech(inst, psi)).holds) continue;
    const TabularRule tab = to_tabular(ScoringRule{ThresholdRule{psi, 1, 1.0}}, n);
    Mechanism full;
    full.rule = tab;
    full.recommendation = ids_from_mask(psi);
    REQUIRE(verify_ic(inst, full).holds);
    for (TaskMask sub = 0; sub < psi; ++sub) {
      if ((sub & psi) != sub) continue;
      Mechanism restricted;
      restricted.rule = simulate_restriction(inst, tab, psi, sub);
      restricted.recommendation = ids_from_mask(sub);
      CHECK(verify_ic(inst, restricted).holds);
    }
  }
}
