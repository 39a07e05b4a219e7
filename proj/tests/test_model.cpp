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

#include "knapscore/gen.hpp"
#include "knapscore/model.hpp"
#include "knapscore/scoring.hpp"
#include "knapscore/serialize.hpp"

using namespace knapscore;

namespace {

Instance make_instance(std::vector<Task> tasks) {
  Instance inst;
  for (std::size_t i = 0; i < tasks.size(); ++i) tasks[i].id = static_cast<int>(i);
  inst.tasks = std::move(tasks);
  return inst;
}

}  // namespace

TEST_CASE("load_instance maps fields and validates") {
  const std::string doc = R"({
    "budget": 1.0,
    "tasks": [{"id": 0, "cost": 0.1, "prob": 0.5, "value": 1.0}],
    "valuation": {"kind": "additive"}
  })";
  const Instance inst = load_instance(doc);
  CHECK(inst.n() == 1);
  CHECK(inst.tasks[0].cost == doctest::Approx(0.1));
  CHECK(inst.tasks[0].prob == doctest::Approx(0.5));

  const std::string bad = R"({
    "budget": 1.0,
    "tasks": [{"id": 0, "cost": 0.1, "prob": 1.2, "value": 1.0}],
    "valuation": {"kind": "additive"}
  })";
  CHECK_THROWS_AS(load_instance(bad), validation_error);
  CHECK_THROWS_WITH_AS(load_instance(bad), "prob out of range for task 0", validation_error);
}

TEST_CASE("load_instance coverage valuation") {
  const std::string doc = R"({
    "budget": 1.0,
    "tasks": [{"id": 0, "cost": 0.1, "prob": 0.5, "value": 0.0},
              {"id": 1, "cost": 0.1, "prob": 0.5, "value": 0.0}],
    "valuation": {"kind": "coverage", "universe_weights": [2, 3], "covers": [[0], [0, 1]]}
  })";
  const Instance inst = load_instance(doc);
  CHECK(valuation_value(inst, std::vector<int>{1}) == doctest::Approx(5.0));
  CHECK(valuation_value(inst, std::vector<int>{0, 1}) == doctest::Approx(5.0));
  CHECK(valuation_value(inst, TaskMask{0}) == doctest::Approx(0.0));
}

TEST_CASE("preprocess drops tasks with 2c > p and re-indexes") {
  const Instance inst = make_instance({{0, 0.1, 0.5, 1.0}, {0, 0.3, 0.5, 2.0}});
  const Instance pre = preprocess(inst);
  REQUIRE(pre.n() == 1);
  CHECK(pre.tasks[0].cost == doctest::Approx(0.1));
  CHECK(pre.original_ids == std::vector<int>{0});

  const Instance pre2 = preprocess(pre);
  CHECK(pre2.n() == 1);  // idempotent
  CHECK(pre2.original_ids == pre.original_ids);

  const Instance all_ok = make_instance({{0, 0.1, 0.5, 1.0}, {0, 0.2, 0.5, 2.0}});
  CHECK(preprocess(all_ok).n() == 2);
  CHECK(preprocess(Instance{}).n() == 0);
}

TEST_CASE("preprocess keeps the coverage structure aligned") {
  Instance inst = make_instance({{0, 0.4, 0.5, 0.0}, {0, 0.1, 0.5, 0.0}});
  inst.valuation.kind = ValuationKind::coverage;
  inst.valuation.universe_weights = {2, 3};
  inst.valuation.covers = {{0}, {0, 1}};
  const Instance pre = preprocess(inst);
  REQUIRE(pre.n() == 1);
  CHECK(pre.original_ids == std::vector<int>{1});
  CHECK(valuation_value(pre, TaskMask{1}) == doctest::Approx(5.0));
}

TEST_CASE("valuation_value additive") {
  const Instance inst = make_instance({{0, 0.1, 0.5, 6.0}, {0, 0.1, 0.5, 10.0}, {0, 0.1, 0.5, 12.0}});
  CHECK(valuation_value(inst, std::vector<int>{0, 2}) == doctest::Approx(18.0));
  CHECK(valuation_value(inst, TaskMask{0}) == doctest::Approx(0.0));
  CHECK_THROWS_AS(valuation_value(inst, std::vector<int>{3}), validation_error);
}

TEST_CASE("enumerate_effort_outcomes orders and sums to one") {
  const Instance inst = make_instance({{0, 0.1, 0.5, 1.0}, {0, 0.01, 0.1, 1.0}});

  const auto empty = enumerate_effort_outcomes(inst, 0);
  REQUIRE(empty.size() == 1);
  CHECK(empty[0].informative == 0);
  CHECK(empty[0].prob == doctest::Approx(1.0));

  const auto single = enumerate_effort_outcomes(inst, TaskMask{1});
  REQUIRE(single.size() == 2);
  CHECK(single[0].prob == doctest::Approx(0.5));
  CHECK(single[1].prob == doctest::Approx(0.5));

  // p = (0.5, 0.1): entries run all-informative first, last task toggling
  // fastest: 0.05, 0.45, 0.05, 0.45.
  const auto both = enumerate_effort_outcomes(inst, TaskMask{3});
  REQUIRE(both.size() == 4);
  CHECK(both[0].prob == doctest::Approx(0.05));
  CHECK(both[0].informative == 3);
  CHECK(both[1].prob == doctest::Approx(0.45));
  CHECK(both[1].informative == 1);
  CHECK(both[2].prob == doctest::Approx(0.05));
  CHECK(both[2].informative == 2);
  CHECK(both[3].prob == doctest::Approx(0.45));
  CHECK(both[3].informative == 0);
}

TEST_CASE("enumerate_effort_outcomes mass property over random instances") {
  for (std::uint64_t seed = 1; seed <= 10; ++seed) {
    const Instance inst = gen_instance(seed, 10, parse_regime("mixed"));
    Rng rng(seed, 77);
    for (int rep = 0; rep < 5; ++rep) {
      const TaskMask effort = static_cast<TaskMask>(rng.next_u64()) & inst.all_mask();
      const auto outcomes = enumerate_effort_outcomes(inst, effort);
      double mass = 0;
      for (const auto& o : outcomes) mass += o.prob;
      CHECK(std::abs(mass - 1.0) <= kMassTol);
    }
  }
}

TEST_CASE("coverage valuations are monotone and submodular") {
  Rng rng(42);
  for (int rep = 0; rep < 20; ++rep) {
    const int n = rng.uniform_int(1, 8);
    const int universe = rng.uniform_int(1, 6);
    Instance inst;
    inst.valuation.kind = ValuationKind::coverage;
    for (int e = 0; e < universe; ++e)
      inst.valuation.universe_weights.push_back(rng.uniform(0.0, 5.0));
    for (int i = 0; i < n; ++i) {
      inst.tasks.push_back({i, 0.1, 0.5, 0.0});
      std::vector<int> cover;
      for (int e = 0; e < universe; ++e)
        if (rng.next_double() < 0.4) cover.push_back(e);
      inst.valuation.covers.push_back(cover);
    }
    for (TaskMask big = 0; big < (TaskMask{1} << n); ++big) {
      for (TaskMask small = big;; small = (small - 1) & big) {
        // small subset of big: monotone and decreasing marginals.
        CHECK(valuation_value(inst, small) <= valuation_value(inst, big) + kMassTol);
        for (int i = 0; i < n; ++i) {
          if (big >> i & 1) continue;
          const double gain_small =
              valuation_value(inst, small | (TaskMask{1} << i)) - valuation_value(inst, small);
          const double gain_big =
              valuation_value(inst, big | (TaskMask{1} << i)) - valuation_value(inst, big);
          CHECK(gain_small >= gain_big - kMassTol);
        }
        if (small == 0) break;
      }
    }
  }
}

TEST_CASE("instance json round trip") {
  const Instance inst = gen_instance(7, 6, parse_regime("mixed"));
  const Instance back = instance_from_json(instance_to_json(inst));
  REQUIRE(back.n() == inst.n());
  for (int i = 0; i < inst.n(); ++i) {
    CHECK(back.tasks[i].cost == inst.tasks[i].cost);
    CHECK(back.tasks[i].prob == inst.tasks[i].prob);
    CHECK(back.tasks[i].value == inst.tasks[i].value);
  }
}

TEST_CASE("mechanism json round trip across rule kinds") {
  const Instance inst = preprocess(gen_instance(11, 4, parse_regime("mixed")));
  REQUIRE(inst.n() >= 2);
  std::vector<Mechanism> mechs;
  {
    Mechanism m;
    m.rule = single_budget_minimal(inst.tasks[0]);
    m.recommendation = {0};
    mechs.push_back(m);
  }
  {
    Mechanism m;
    m.rule = ThresholdRule{inst.all_mask(), 2, 1.0};
    m.recommendation = ids_from_mask(inst.all_mask());
    mechs.push_back(m);
  }
  {
    Mechanism m;
    m.rule = build_truncated_separate(inst, inst.all_mask(), 11.0, 9.0 / 8.0);
    m.recommendation = ids_from_mask(inst.all_mask());
    mechs.push_back(m);
  }
  {
    Mechanism m;
    m.rule = to_tabular(ScoringRule{ThresholdRule{0x3, 1, 1.0}}, 2);
    m.recommendation = {0, 1};
    mechs.push_back(m);
  }
  for (const Mechanism& mech : mechs) {
    const Mechanism back = mechanism_from_json(mechanism_to_json(mech));
    CHECK(back.recommendation == mech.recommendation);
    // Pointwise score agreement over a small grid.
    const int n = inst.n();
    SignalProfile sig(n, Trit::bot);
    Outcome out(n, 0);
    Rng rng(4, 41);
    for (int rep = 0; rep < 40; ++rep) {
      for (int i = 0; i < n; ++i) {
        sig[i] = static_cast<Trit>(rng.uniform_int(0, 2));
        out[i] = static_cast<std::uint8_t>(rng.uniform_int(0, 1));
      }
      if (std::holds_alternative<TabularRule>(mech.rule)) {
        SignalProfile s2(sig.begin(), sig.begin() + 2);
        Outcome o2(out.begin(), out.begin() + 2);
        CHECK(score(back.rule, s2, o2) == doctest::Approx(score(mech.rule, s2, o2)));
      } else {
        CHECK(score(back.rule, sig, out) == doctest::Approx(score(mech.rule, sig, out)));
      }
    }
  }
}
