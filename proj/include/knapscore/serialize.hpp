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

#include <string>
#include <vector>

#include <json.hpp>

#include "knapscore/agent.hpp"
#include "knapscore/bounds.hpp"
#include "knapscore/common.hpp"
#include "knapscore/hardness.hpp"
#include "knapscore/model.hpp"
#include "knapscore/scoring.hpp"

namespace knapscore {

using json = nlohmann::json;

// ---------------------------------------------------------------------------
// Instance documents

inline json instance_to_json(const Instance& inst) {
  json doc;
  doc["budget"] = inst.budget;
  doc["tasks"] = json::array();
  for (const Task& t : inst.tasks)
    doc["tasks"].push_back({{"id", t.id}, {"cost", t.cost}, {"prob", t.prob}, {"value", t.value}});
  if (inst.valuation.kind == ValuationKind::additive) {
    doc["valuation"] = {{"kind", "additive"}};
  } else {
    doc["valuation"] = {{"kind", "coverage"},
                        {"universe_weights", inst.valuation.universe_weights},
                        {"covers", inst.valuation.covers}};
  }
  if (!inst.original_ids.empty()) doc["original_ids"] = inst.original_ids;
  return doc;
}

inline Instance instance_from_json(const json& doc) {
  Instance inst;
  try {
    inst.budget = doc.at("budget").get<double>();
    std::vector<Task> tasks;
    for (const json& jt : doc.at("tasks")) {
      Task t;
      t.id = jt.at("id").get<int>();
      t.cost = jt.at("cost").get<double>();
      t.prob = jt.at("prob").get<double>();
      t.value = jt.value("value", 0.0);
      tasks.push_back(t);
    }
    std::sort(tasks.begin(), tasks.end(), [](const Task& a, const Task& b) { return a.id < b.id; });
    inst.tasks = std::move(tasks);
    const json& val = doc.at("valuation");
    const std::string kind = val.at("kind").get<std::string>();
    if (kind == "additive") {
      inst.valuation.kind = ValuationKind::additive;
    } else if (kind == "coverage") {
      inst.valuation.kind = ValuationKind::coverage;
      inst.valuation.universe_weights = val.at("universe_weights").get<std::vector<double>>();
      inst.valuation.covers = val.at("covers").get<std::vector<std::vector<int>>>();
    } else {
      throw validation_error("unknown valuation kind: " + kind);
    }
    if (doc.contains("original_ids"))
      inst.original_ids = doc.at("original_ids").get<std::vector<int>>();
  } catch (const json::exception& e) {
    throw validation_error(std::string("instance parse failure: ") + e.what());
  }
  validate_instance(inst);
  return inst;
}

inline Instance load_instance(const std::string& text) {
  json doc;
  try {
    doc = json::parse(text);
  } catch (const json::exception& e) {
    throw validation_error(std::string("instance parse failure: ") + e.what());
  }
  return instance_from_json(doc);
}

// ---------------------------------------------------------------------------
// Mechanism documents

inline json mechanism_to_json(const Mechanism& mech) {
  json doc;
  doc["recommendation"] = mech.recommendation;
  if (!mech.provenance.empty()) doc["provenance"] = mech.provenance;
  std::visit(
      [&](const auto& r) {
        using T = std::decay_t<decltype(r)>;
        if constexpr (std::is_same_v<T, SingleTaskRule>) {
          doc["kind"] = "single";
          doc["task"] = r.task;
          doc["score_bot"] = r.score_bot;
          doc["score_correct"] = r.score_correct;
        } else if constexpr (std::is_same_v<T, ThresholdRule>) {
          doc["kind"] = "threshold";
          doc["threshold"] = r.eta;
          doc["cap"] = r.cap;
          doc["rule_recommendation"] = ids_from_mask(r.recommendation);
        } else if constexpr (std::is_same_v<T, TruncatedSeparateRule>) {
          doc["kind"] = "truncated_separate";
          doc["cap"] = r.cap;
          doc["scale"] = r.scale;
          doc["shift"] = r.shift;
          doc["per_task"] = json::array();
          for (const auto& s : r.per_task)
            doc["per_task"].push_back(
                {{"task", s.task}, {"score_bot", s.score_bot}, {"score_correct", s.score_correct}});
        } else {
          doc["kind"] = "tabular";
          doc["n"] = r.n;
          doc["cap"] = r.cap;
          // Flat array indexed by signal_index * 2^n + outcome_index; task 0
          // is the least significant digit of both mixed radices, trit order
          // bot < 0 < 1.
          doc["table"] = r.table;
        }
      },
      mech.rule);
  return doc;
}

inline Mechanism mechanism_from_json(const json& doc) {
  Mechanism mech;
  try {
    mech.recommendation = doc.at("recommendation").get<std::vector<int>>();
    mech.provenance = doc.value("provenance", "");
    const std::string kind = doc.at("kind").get<std::string>();
    if (kind == "single") {
      SingleTaskRule r;
      r.task = doc.at("task").get<int>();
      r.score_bot = doc.at("score_bot").get<double>();
      r.score_correct = doc.at("score_correct").get<double>();
      mech.rule = r;
    } else if (kind == "threshold") {
      ThresholdRule r;
      r.eta = doc.at("threshold").get<int>();
      r.cap = doc.at("cap").get<double>();
      r.recommendation = doc.contains("rule_recommendation")
                             ? mask_from_ids(doc.at("rule_recommendation").get<std::vector<int>>())
                             : mask_from_ids(mech.recommendation);
      mech.rule = r;
    } else if (kind == "truncated_separate") {
      TruncatedSeparateRule r;
      r.cap = doc.at("cap").get<double>();
      r.scale = doc.value("scale", 1.0);
      r.shift = doc.at("shift").get<double>();
      for (const json& js : doc.at("per_task")) {
        SingleTaskRule s;
        s.task = js.at("task").get<int>();
        s.score_bot = js.at("score_bot").get<double>();
        s.score_correct = js.at("score_correct").get<double>();
        r.per_task.push_back(s);
      }
      mech.rule = r;
    } else if (kind == "tabular") {
      TabularRule r;
      r.n = doc.at("n").get<int>();
      r.cap = doc.at("cap").get<double>();
      r.table = doc.at("table").get<std::vector<double>>();
      mech.rule = r;
    } else {
      throw validation_error("unknown mechanism kind: " + kind);
    }
  } catch (const json::exception& e) {
    throw validation_error(std::string("mechanism parse failure: ") + e.what());
  }
  return mech;
}

// ---------------------------------------------------------------------------
// Reports

inline json ic_report_to_json(const IcReport& report) {
  json worst;
  worst["effort"] = report.worst_deviation.effort;
  std::vector<std::string> policy;
  for (ReportAction a : report.worst_deviation.policy.actions)
    policy.push_back(a == ReportAction::truthful ? "truthful" : "guess");
  worst["policy"] = policy;
  return json{{"holds", report.holds},
              {"gap", report.gap},
              {"recommended_utility", report.recommended_utility},
              {"worst_deviation", worst}};
}

inline json sequential_result_to_json(const SequentialResult& result) {
  json doc;
  doc["completion_prob_all"] = result.completion_prob_all;
  doc["expected_value"] = result.expected_value;
  doc["prob_complete_uninformed"] = result.prob_complete_uninformed;
  json dist = json::array();
  for (const auto& [set, prob] : result.completion_distribution)
    dist.push_back({{"set", ids_from_mask(set)}, {"prob", prob}});
  doc["completion_distribution"] = dist;
  return doc;
}

inline json bound_report_to_json(const BoundReport& report) {
  json doc;
  doc["name"] = report.name;
  doc["value"] = std::isinf(report.value) ? json("inf") : json(report.value);
  doc["applicable"] = report.applicable;
  if (report.satisfied.has_value()) doc["satisfied"] = *report.satisfied;
  return doc;
}

// ---------------------------------------------------------------------------
// Hardness documents

inline SubsetSumInstance subset_sum_from_json(const json& doc) {
  SubsetSumInstance ss;
  try {
    ss.z = doc.at("z").get<std::vector<std::int64_t>>();
    ss.target = doc.at("Z").get<std::int64_t>();
  } catch (const json::exception& e) {
    throw validation_error(std::string("subset sum parse failure: ") + e.what());
  }
  validate_subset_sum(ss);
  return ss;
}

inline json reduced_to_json(const ReducedInstance& red) {
  json doc;
  doc["z"] = red.source.z;
  doc["Z"] = red.source.target;
  doc["v_bar"] = red.v_bar;
  doc["c_bar"] = red.c_bar;
  doc["k"] = red.k;
  doc["raw_budget"] = red.raw_budget;
  doc["task_count"] = red.task_count();
  doc["normalized"] = instance_to_json(red.normalized);
  return doc;
}

inline ReducedInstance reduced_from_json(const json& doc) {
  SubsetSumInstance ss;
  try {
    ss.z = doc.at("z").get<std::vector<std::int64_t>>();
    ss.target = doc.at("Z").get<std::int64_t>();
  } catch (const json::exception& e) {
    throw validation_error(std::string("reduced instance parse failure: ") + e.what());
  }
  return reduce_subset_sum(ss);
}

inline json certificate_report_to_json(const CertificateReport& report) {
  return json{{"valid", report.valid},
              {"subset_sums_to_target", report.subset_sums_to_target},
              {"agent_utility", report.agent_utility},
              {"principal_value", report.principal_value},
              {"small_deviation_ok", report.small_deviation_ok},
              {"mid_deviation_ok", report.mid_deviation_ok},
              {"psi_size", report.psi_size},
              {"note", report.note}};
}

}  // namespace knapscore
