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

#include <atomic>
#include <chrono>
#include <cstdio>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <thread>

#include <CLI11.hpp>

#include "knapscore/agent.hpp"
#include "knapscore/bounds.hpp"
#include "knapscore/gen.hpp"
#include "knapscore/hardness.hpp"
#include "knapscore/mechanisms.hpp"
#include "knapscore/optlp.hpp"
#include "knapscore/serialize.hpp"

namespace {

using namespace knapscore;

std::string read_input(const std::string& path) {
  if (path.empty() || path == "-") {
    std::ostringstream ss;
    ss << std::cin.rdbuf();
    return ss.str();
  }
  std::ifstream in(path);
  if (!in) throw validation_error("cannot open input file: " + path);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void write_output(const std::string& path, const std::string& text) {
  if (path.empty() || path == "-") {
    std::cout << text;
    return;
  }
  std::ofstream out(path);
  if (!out) throw validation_error("cannot open output file: " + path);
  out << text;
}

std::vector<std::uint64_t> parse_u64_list(const std::string& text) {
  std::vector<std::uint64_t> out;
  std::stringstream ss(text);
  std::string item;
  while (std::getline(ss, item, ','))
    if (!item.empty()) out.push_back(std::stoull(item));
  return out;
}

std::vector<int> parse_int_list(const std::string& text) {
  std::vector<int> out;
  std::stringstream ss(text);
  std::string item;
  while (std::getline(ss, item, ','))
    if (!item.empty()) out.push_back(std::stoi(item));
  return out;
}

std::string fmt_double(double v) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.12g", v);
  return buf;
}

std::string rule_kind(const ScoringRule& rule) {
  if (std::holds_alternative<SingleTaskRule>(rule)) return "single";
  if (std::holds_alternative<ThresholdRule>(rule)) return "threshold";
  if (std::holds_alternative<TruncatedSeparateRule>(rule)) return "truncated_separate";
  return "tabular";
}

std::vector<int> to_original_ids(const Instance& inst, const std::vector<int>& ids) {
  if (inst.original_ids.empty()) return ids;
  std::vector<int> out;
  for (int i : ids) out.push_back(inst.original_ids[i]);
  return out;
}

json solve_document(const Instance& pre, const SolveOutcome& out) {
  json doc = mechanism_to_json(out.mech);
  doc["case_sizes"] = out.case_sizes;
  doc["value"] = out.value;
  doc["recommendation_original_ids"] = to_original_ids(pre, out.mech.recommendation);
  if (pre.n() <= 20) doc["alg_opt"] = alg_opt(pre, pre.budget);
  return doc;
}

struct BenchRow {
  std::uint64_t seed = 0;
  int n = 0;
  std::string regime;
  int cases[4] = {0, 0, 0, 0};  // X, Y1, Y2, Y3
  std::string kind;
  double value = 0;
  std::optional<double> alg;
  std::optional<double> ic;
  std::optional<double> ratio_alg;
  std::optional<double> ratio_ic;
  bool ic_holds = false;
  long runtime_ms = 0;
  bool failed = false;
};

BenchRow bench_row(std::uint64_t seed, int n, const std::string& regime, bool timing) {
  BenchRow row;
  row.seed = seed;
  row.n = n;
  row.regime = regime;
  try {
    const Instance inst = gen_instance(seed, n, parse_regime(regime));
    const Instance pre = preprocess(inst);
    const auto t0 = std::chrono::steady_clock::now();
    SolveOutcome out = best_of_static(pre, /*verify=*/false);
    if (timing)
      row.runtime_ms = std::chrono::duration_cast<std::chrono::milliseconds>(
                           std::chrono::steady_clock::now() - t0)
                           .count();
    row.cases[0] = out.case_sizes["X"];
    row.cases[1] = out.case_sizes["Y1"];
    row.cases[2] = out.case_sizes["Y2"];
    row.cases[3] = out.case_sizes["Y3"];
    row.kind = rule_kind(out.mech.rule);
    row.value = out.value;
    if (pre.n() <= 20) row.alg = alg_opt(pre, pre.budget);
    if (pre.n() <= 3) row.ic = ic_opt_exact(pre).value;
    if (row.alg && *row.alg > 0) row.ratio_alg = row.value / *row.alg;
    if (row.ic && *row.ic > 0) row.ratio_ic = row.value / *row.ic;
    if (popcount(out.mech.recommendation_mask()) <= 12)
      row.ic_holds = verify_ic(pre, out.mech).holds;
    else
      row.ic_holds = true;  // asserted analytically during construction
  } catch (const std::exception&) {
    row.failed = true;
    row.kind = "error";
  }
  return row;
}

std::string bench_csv(const std::vector<BenchRow>& rows) {
  std::ostringstream out;
  out << "seed,n,regime,case_X,case_Y1,case_Y2,case_Y3,kind,value,alg_opt,ic_opt,"
         "ratio_vs_alg_opt,ratio_vs_ic_opt,ic_holds,runtime_ms\n";
  for (const BenchRow& row : rows) {
    out << row.seed << ',' << row.n << ',' << row.regime << ',' << row.cases[0] << ','
        << row.cases[1] << ',' << row.cases[2] << ',' << row.cases[3] << ',' << row.kind << ',';
    if (!row.failed) out << fmt_double(row.value);
    out << ',';
    if (row.alg) out << fmt_double(*row.alg);
    out << ',';
    if (row.ic) out << fmt_double(*row.ic);
    out << ',';
    if (row.ratio_alg) out << fmt_double(*row.ratio_alg);
    out << ',';
    if (row.ratio_ic) out << fmt_double(*row.ratio_ic);
    out << ',';
    out << (row.failed ? "" : (row.ic_holds ? "true" : "false")) << ',' << row.runtime_ms << '\n';
  }
  return out.str();
}

int run(int argc, char** argv) {
  CLI::App app{"scoring-rule mechanisms for multi-task effort"};
  app.require_subcommand(1);

  // gen
  auto* gen_cmd = app.add_subcommand("gen", "generate a random instance");
  std::uint64_t seed = 1;
  int n = 5;
  std::string regime = "mixed", out_path, in_path;
  gen_cmd->add_option("--seed", seed);
  gen_cmd->add_option("--n", n);
  gen_cmd->add_option("--regime", regime, "x-heavy | y2-heavy | mixed | symmetric(p,c)");
  gen_cmd->add_option("--out", out_path);

  // solve / solve-seq
  auto* solve_cmd = app.add_subcommand("solve", "best static mechanism for an instance");
  bool no_verify = false;
  solve_cmd->add_option("--in", in_path);
  solve_cmd->add_option("--out", out_path);
  solve_cmd->add_flag("--no-verify", no_verify);
  auto* seq_cmd = app.add_subcommand("solve-seq", "best sequential-agent mechanism");
  seq_cmd->add_option("--in", in_path);
  seq_cmd->add_option("--out", out_path);
  seq_cmd->add_flag("--no-verify", no_verify);

  // verify-ic
  auto* verify_cmd = app.add_subcommand("verify-ic", "verify incentive compatibility");
  std::string instance_path, mechanism_path;
  verify_cmd->add_option("--instance", instance_path)->required();
  verify_cmd->add_option("--mechanism", mechanism_path)->required();
  verify_cmd->add_option("--out", out_path);

  // opt
  auto* opt_cmd = app.add_subcommand("opt", "exact IC-optimal mechanism (n <= 3)");
  opt_cmd->add_option("--in", in_path);
  opt_cmd->add_option("--out", out_path);

  // sym-opt
  auto* sym_cmd = app.add_subcommand("sym-opt", "max incentivizable effort, symmetric case");
  double p = 0.5, c = 0.1;
  int sym_n = 5;
  sym_cmd->add_option("--n", sym_n)->required();
  sym_cmd->add_option("--p", p)->required();
  sym_cmd->add_option("--c", c)->required();
  sym_cmd->add_option("--out", out_path);

  // bounds
  auto* bounds_cmd = app.add_subcommand("bounds", "bound reports as JSON lines");
  bounds_cmd->add_option("--in", in_path, "optional instance document");
  std::string psi_list;
  double bp = 0, bc = 0;
  int bn = 0;
  bounds_cmd->add_option("--psi", psi_list, "task ids to scope the probability-budget bound");
  bounds_cmd->add_option("--p", bp);
  bounds_cmd->add_option("--c", bc);
  bounds_cmd->add_option("--n", bn);
  bounds_cmd->add_option("--out", out_path);

  // hardness
  auto* hgen_cmd = app.add_subcommand("hardness-gen", "subset-sum reduction instance");
  std::string z_list, subset_list;
  std::int64_t target = 0;
  hgen_cmd->add_option("--in", in_path, "subset-sum document {\"z\": [...], \"Z\": t}");
  hgen_cmd->add_option("--z", z_list, "comma-separated integers (alternative to --in)");
  hgen_cmd->add_option("--Z", target);
  hgen_cmd->add_option("--out", out_path);
  auto* hcheck_cmd = app.add_subcommand("hardness-check", "check a subset-sum certificate");
  hcheck_cmd->add_option("--in", in_path, "reduced document or subset-sum document");
  hcheck_cmd->add_option("--subset", subset_list)->required();
  hcheck_cmd->add_option("--out", out_path);

  // seq-sim
  auto* sim_cmd = app.add_subcommand("seq-sim", "exact sequential-effort simulation");
  std::string strategy = "eager", order_list;
  int mc_paths = 0;
  std::uint64_t mc_seed = 1;
  sim_cmd->add_option("--instance", instance_path)->required();
  sim_cmd->add_option("--mechanism", mechanism_path)->required();
  sim_cmd->add_option("--strategy", strategy, "eager | fixed");
  sim_cmd->add_option("--order", order_list, "task order for fixed strategy");
  sim_cmd->add_option("--mc", mc_paths, "also run a Monte-Carlo estimate with this many paths");
  sim_cmd->add_option("--mc-seed", mc_seed);
  sim_cmd->add_option("--out", out_path);

  // bench
  auto* bench_cmd = app.add_subcommand("bench", "CSV benchmark over generated instances");
  std::string seeds_list = "1", sizes_list = "3", regimes_list = "mixed";
  int jobs = 1;
  bool timing = false;
  bench_cmd->add_option("--seeds", seeds_list);
  bench_cmd->add_option("--sizes", sizes_list);
  bench_cmd->add_option("--regimes", regimes_list);
  bench_cmd->add_option("--jobs", jobs);
  bench_cmd->add_flag("--timing", timing, "measure per-row runtime (breaks byte-reproducibility)");
  bench_cmd->add_option("--out", out_path);

  CLI11_PARSE(app, argc, argv);

  if (gen_cmd->parsed()) {
    const Instance inst = gen_instance(seed, n, parse_regime(regime));
    write_output(out_path, instance_to_json(inst).dump(2) + "\n");
    return 0;
  }
  if (solve_cmd->parsed() || seq_cmd->parsed()) {
    const Instance inst = load_instance(read_input(in_path));
    const Instance pre = preprocess(inst);
    const SolveOutcome out = solve_cmd->parsed() ? best_of_static(pre, !no_verify)
                                                 : best_of_sequential(pre, !no_verify);
    write_output(out_path, solve_document(pre, out).dump(2) + "\n");
    return 0;
  }
  if (verify_cmd->parsed()) {
    const Instance inst = preprocess(load_instance(read_input(instance_path)));
    const Mechanism mech = mechanism_from_json(json::parse(read_input(mechanism_path)));
    write_output(out_path, ic_report_to_json(verify_ic(inst, mech)).dump(2) + "\n");
    return 0;
  }
  if (opt_cmd->parsed()) {
    const Instance inst = preprocess(load_instance(read_input(in_path)));
    const IcOptResult res = ic_opt_exact(inst);
    json doc;
    doc["value"] = res.value;
    doc["psi"] = res.psi;
    doc["psi_original_ids"] = to_original_ids(inst, res.psi);
    Mechanism witness;
    witness.rule = res.witness;
    witness.recommendation = res.psi;
    doc["witness"] = mechanism_to_json(witness);
    write_output(out_path, doc.dump(2) + "\n");
    return 0;
  }
  if (sym_cmd->parsed()) {
    const int level = symmetric_max_effort(sym_n, p, c);
    json doc;
    doc["max_effort"] = level;
    auto [feasible, rule] = symmetric_feasible(sym_n, p, c, level);
    if (feasible && rule) doc["scores"] = rule->s;
    doc["threshold_stop_level"] = 2 * c <= p ? threshold_stop_level(p, c, sym_n) : 0;
    write_output(out_path, doc.dump(2) + "\n");
    return 0;
  }
  if (bounds_cmd->parsed()) {
    std::ostringstream lines;
    if (!in_path.empty()) {
      const Instance pre = preprocess(load_instance(read_input(in_path)));
      if (pre.n() <= 20) {
        BoundReport alg;
        alg.name = "alg_opt";
        alg.value = alg_opt(pre, pre.budget);
        lines << bound_report_to_json(alg).dump() << "\n";
      }
      std::vector<Task> scope = pre.tasks;
      if (!psi_list.empty()) {
        scope.clear();
        for (int i : parse_int_list(psi_list)) {
          if (i < 0 || i >= pre.n()) throw validation_error("--psi id out of range");
          scope.push_back(pre.tasks[i]);
        }
      }
      lines << bound_report_to_json(prob_budget_bound(scope)).dump() << "\n";
    }
    if (bp > 0 && bc > 0) {
      lines << bound_report_to_json(symmetric_effort_upper(bp, bc)).dump() << "\n";
      if (bn > 0 && 2 * bc <= bp) {
        BoundReport stop;
        stop.name = "threshold_stop_level";
        stop.value = threshold_stop_level(bp, bc, bn);
        lines << bound_report_to_json(stop).dump() << "\n";
      }
    }
    BoundReport fig1;
    fig1.name = "truncation_success_probability";
    fig1.value = truncation_success_probability();
    fig1.satisfied = fig1.value >= 8.0 / 9.0;
    lines << bound_report_to_json(fig1).dump() << "\n";
    write_output(out_path, lines.str());
    return 0;
  }
  if (hgen_cmd->parsed()) {
    SubsetSumInstance ss;
    if (!z_list.empty()) {
      for (int zi : parse_int_list(z_list)) ss.z.push_back(zi);
      ss.target = target;
      validate_subset_sum(ss);
    } else {
      ss = subset_sum_from_json(json::parse(read_input(in_path)));
    }
    write_output(out_path, reduced_to_json(reduce_subset_sum(ss)).dump(2) + "\n");
    return 0;
  }
  if (hcheck_cmd->parsed()) {
    const json doc = json::parse(read_input(in_path));
    const ReducedInstance red =
        doc.contains("raw_budget") ? reduced_from_json(doc)
                                   : reduce_subset_sum(subset_sum_from_json(doc));
    const CertificateReport report = certificate_check(red, parse_int_list(subset_list));
    write_output(out_path, certificate_report_to_json(report).dump(2) + "\n");
    return report.valid ? 0 : 2;
  }
  if (sim_cmd->parsed()) {
    const Instance inst = preprocess(load_instance(read_input(instance_path)));
    const Mechanism mech = mechanism_from_json(json::parse(read_input(mechanism_path)));
    SequentialStrategy strat;
    if (strategy == "fixed") {
      strat.kind = SequentialKind::fixed_order_greedy;
      strat.order = order_list.empty() ? mech.recommendation : parse_int_list(order_list);
    }
    json doc = sequential_result_to_json(sequential_simulate(inst, mech, strat));
    if (mc_paths > 0) {
      auto [mean, stderr_] = sequential_monte_carlo(inst, mech, strat, mc_paths, mc_seed);
      doc["monte_carlo"] = {{"paths", mc_paths}, {"mean", mean}, {"stderr", stderr_}};
    }
    write_output(out_path, doc.dump(2) + "\n");
    return 0;
  }
  if (bench_cmd->parsed()) {
    const std::vector<std::uint64_t> seeds = parse_u64_list(seeds_list);
    const std::vector<int> sizes = parse_int_list(sizes_list);
    // Regimes separate on ';' because symmetric(p,c) carries a comma.
    std::vector<std::string> regimes;
    {
      std::stringstream ss(regimes_list);
      std::string item;
      while (std::getline(ss, item, ';'))
        if (!item.empty()) regimes.push_back(item);
    }
    struct RowSpec {
      std::uint64_t seed;
      int n;
      std::string regime;
    };
    std::vector<RowSpec> specs;
    for (std::uint64_t s : seeds)
      for (int size : sizes)
        for (const std::string& r : regimes) specs.push_back({s, size, r});
    std::vector<BenchRow> rows(specs.size());
    std::atomic<std::size_t> cursor{0};
    const int workers = std::max(1, jobs);
    std::vector<std::thread> pool;
    for (int w = 0; w < workers; ++w)
      pool.emplace_back([&] {
        while (true) {
          const std::size_t i = cursor.fetch_add(1);
          if (i >= specs.size()) break;
          rows[i] = bench_row(specs[i].seed, specs[i].n, specs[i].regime, timing);
        }
      });
    for (auto& t : pool) t.join();
    write_output(out_path, bench_csv(rows));
    return 0;
  }
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  try {
    return run(argc, argv);
  } catch (const knapscore::validation_error& e) {
    std::cerr << "validation error: " << e.what() << "\n";
    return 2;
  } catch (const knapscore::not_incentivizable_error& e) {
    std::cerr << "not incentivizable: " << e.what() << "\n";
    return 2;
  } catch (const knapscore::size_limit_error& e) {
    std::cerr << "size limit: " << e.what() << "\n";
    return 3;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
}
