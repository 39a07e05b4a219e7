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
#include <map>
#include <optional>
#include <vector>

#include "knapscore/agent.hpp"
#include "knapscore/common.hpp"
#include "knapscore/lp.hpp"
#include "knapscore/model.hpp"
#include "knapscore/scoring.hpp"

namespace knapscore {

// ---------------------------------------------------------------------------
// Exact IC feasibility of a candidate recommendation set.
//
// Variables are the full score table S(sigma, omega) in [0,1] over all
// 3^n * 2^n pairs. Constraints:
//   (a) properness: for every signal profile on-path under effort psi and
//       every alternative report, the truthful report weakly wins;
//   (b) effort IC: following (psi, truthful) beats every deviation
//       (effort subset, deterministic per-task reporting map).
// Deterministic maps suffice because utility is linear in the (product)
// reporting strategy. For tasks outside the deviating effort set only the
// bot entry of the map is payoff-relevant, so deviations enumerate as
// 27 maps per effort task and 3 per idle task. Rows are generated lazily
// against the current witness to keep the tableau small.

namespace icdetail {

// Sparse linear form over table entries.
struct Coeffs {
  std::vector<std::pair<int, double>> entries;  // (variable index, coefficient)

  void add(int idx, double c) { entries.emplace_back(idx, c); }
  void compress() {
    std::sort(entries.begin(), entries.end());
    std::vector<std::pair<int, double>> merged;
    for (const auto& [i, c] : entries) {
      if (!merged.empty() && merged.back().first == i)
        merged.back().second += c;
      else
        merged.emplace_back(i, c);
    }
    entries = std::move(merged);
  }
  double dot(const std::vector<double>& x) const {
    double s = 0;
    for (const auto& [i, c] : entries) s += c * x[i];
    return s;
  }
};

// Joint distribution of (reported profile, state) under effort set and
// reporting maps, as coefficients on the table variables.
inline Coeffs play_coeffs(const Instance& inst, TaskMask effort,
                          const std::vector<ReportMap>& maps) {
  const int n = inst.n();
  const std::vector<int> effort_ids = ids_from_mask(effort);
  const int m = static_cast<int>(effort_ids.size());
  Coeffs out;
  for (int o = 0; o < (1 << n); ++o) {
    const Outcome state = outcome_from_index(o, n);
    for (std::uint32_t pat = 0; pat < (std::uint32_t{1} << m); ++pat) {
      double prob = 1.0 / (1 << n);
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
      out.add(signal_index(reported) * (1 << n) + o, prob);
    }
  }
  out.compress();
  return out;
}

struct Deviation {
  TaskMask effort = 0;
  double cost = 0.0;
  Coeffs coeffs;
};

inline std::vector<Deviation> enumerate_deviations(const Instance& inst) {
  const int n = inst.n();
  std::vector<Deviation> devs;
  std::vector<ReportMap> maps(n);
  for (TaskMask effort = 0; effort < (TaskMask{1} << n); ++effort) {
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
      Deviation dev;
      dev.effort = effort;
      dev.cost = effort_cost(inst, effort);
      dev.coeffs = play_coeffs(inst, effort, maps);
      devs.push_back(std::move(dev));
      int i = 0;
      for (; i < n; ++i) {
        if (++digits[i] < radix[i]) break;
        digits[i] = 0;
      }
      if (i == n) break;
    }
  }
  return devs;
}

// Properness rows for one on-path profile: truthful report vs alternatives,
// in posterior expectation.
struct PropernessRow {
  Coeffs coeffs;  // E[S(sig,.) - S(alt,.) | sig] >= 0
};

inline std::vector<PropernessRow> enumerate_properness(const Instance& inst, TaskMask psi) {
  const int n = inst.n();
  int sig_count = 1;
  for (int i = 0; i < n; ++i) sig_count *= 3;
  std::vector<PropernessRow> rows;
  const std::vector<int> psi_ids = ids_from_mask(psi);
  // On-path profiles: any trit on psi tasks, bot elsewhere.
  std::vector<int> digits(psi_ids.size(), 0);
  while (true) {
    SignalProfile sig(n, Trit::bot);
    for (std::size_t j = 0; j < psi_ids.size(); ++j)
      sig[psi_ids[j]] = static_cast<Trit>(digits[j]);
    const int sig_idx = signal_index(sig);
    // Posterior over states: informative coordinates pinned, rest uniform.
    std::vector<int> free_ids;
    for (int i = 0; i < n; ++i)
      if (!trit_informative(sig[i])) free_ids.push_back(i);
    std::vector<std::pair<int, double>> posterior;  // (outcome index, probability)
    const int f = static_cast<int>(free_ids.size());
    for (std::uint32_t bits = 0; bits < (std::uint32_t{1} << f); ++bits) {
      int o = 0;
      for (int i = 0; i < n; ++i)
        if (sig[i] == Trit::one) o |= 1 << i;
      for (int j = 0; j < f; ++j)
        if (bits >> j & 1) o |= 1 << free_ids[j];
      posterior.emplace_back(o, 1.0 / (1 << f));
    }
    for (int alt = 0; alt < sig_count; ++alt) {
      if (alt == sig_idx) continue;
      PropernessRow row;
      for (const auto& [o, pr] : posterior) {
        row.coeffs.add(sig_idx * (1 << n) + o, pr);
        row.coeffs.add(alt * (1 << n) + o, -pr);
      }
      row.coeffs.compress();
      rows.push_back(std::move(row));
    }
    std::size_t j = 0;
    for (; j < digits.size(); ++j) {
      if (++digits[j] < 3) break;
      digits[j] = 0;
    }
    if (j == digits.size()) break;
  }
  return rows;
}

}  // namespace icdetail

struct IcFeasibility {
  bool feasible = false;
  TabularRule witness;
};

// Lazily row-generated feasibility LP for "psi is incentivizable with budget
// cap 1". The returned witness satisfies every constraint within kLpTol.
inline IcFeasibility ic_feasible(const Instance& inst, TaskMask psi) {
  const int n = inst.n();
  if (n > 3) throw size_limit_error("ic feasibility LP limited to n <= 3");
  int sig_count = 1;
  for (int i = 0; i < n; ++i) sig_count *= 3;
  const int num_vars = sig_count * (1 << n);

  std::vector<ReportMap> truthful_maps(n, identity_report_map());
  icdetail::Coeffs truth = icdetail::play_coeffs(inst, psi, truthful_maps);
  const double truth_cost = effort_cost(inst, psi);
  const std::vector<icdetail::Deviation> devs = icdetail::enumerate_deviations(inst);
  const std::vector<icdetail::PropernessRow> proper = icdetail::enumerate_properness(inst, psi);

  LinearProgram lp;
  lp.set_vars(num_vars);
  for (int j = 0; j < num_vars; ++j) lp.upper[j] = 1.0;
  std::vector<char> dev_added(devs.size(), 0), proper_added(proper.size(), 0);

  // Scores may ignore reports outside psi without loss: the projection of a
  // feasible table stays feasible (every projected constraint maps to an
  // enumerated one), and it rules out any score dependence on coordinates the
  // deviation family treats coarsely.
  const auto project_onto_psi = [&](const std::vector<double>& table) {
    std::vector<double> out(table.size());
    for (int s = 0; s < sig_count; ++s) {
      SignalProfile sig = signal_from_index(s, n);
      for (int i = 0; i < n; ++i)
        if (!(psi >> i & 1)) sig[i] = Trit::bot;
      const int proj = signal_index(sig);
      for (int o = 0; o < (1 << n); ++o)
        out[s * (1 << n) + o] = table[proj * (1 << n) + o];
    }
    return out;
  };
  const auto max_violation = [&](const std::vector<double>& table) {
    double worst = 0;
    for (const auto& dev : devs)
      worst = std::max(worst, (truth_cost - dev.cost) - (truth.dot(table) - dev.coeffs.dot(table)));
    for (const auto& row : proper) worst = std::max(worst, -row.coeffs.dot(table));
    return worst;
  };

  std::vector<double> x(num_vars, 0.0);
  for (int round = 0; round < 400; ++round) {
    // Collect the most violated rows against the current witness.
    struct Violation {
      double amount;
      bool is_dev;
      std::size_t idx;
    };
    std::vector<Violation> violations;
    for (std::size_t k = 0; k < devs.size(); ++k) {
      if (dev_added[k]) continue;
      const double lhs = truth.dot(x) - devs[k].coeffs.dot(x);
      const double rhs = truth_cost - devs[k].cost;
      if (lhs < rhs - kLpTol) violations.push_back({rhs - lhs, true, k});
    }
    for (std::size_t k = 0; k < proper.size(); ++k) {
      if (proper_added[k]) continue;
      if (proper[k].coeffs.dot(x) < -kLpTol)
        violations.push_back({-proper[k].coeffs.dot(x), false, k});
    }
    if (violations.empty()) {
      IcFeasibility result;
      result.feasible = true;
      result.witness.n = n;
      result.witness.cap = 1.0;
      std::vector<double> projected = project_onto_psi(x);
      result.witness.table = max_violation(projected) <= kLpTol ? std::move(projected) : x;
      return result;
    }
    std::sort(violations.begin(), violations.end(), [](const Violation& a, const Violation& b) {
      if (a.amount != b.amount) return a.amount > b.amount;
      return std::make_pair(a.is_dev, a.idx) < std::make_pair(b.is_dev, b.idx);
    });
    const std::size_t take = std::min<std::size_t>(violations.size(), 25);
    for (std::size_t v = 0; v < take; ++v) {
      const Violation& viol = violations[v];
      std::vector<double> coeffs(num_vars, 0.0);
      double rhs = 0;
      if (viol.is_dev) {
        const auto& dev = devs[viol.idx];
        for (const auto& [i, c] : truth.entries) coeffs[i] += c;
        for (const auto& [i, c] : dev.coeffs.entries) coeffs[i] -= c;
        rhs = truth_cost - dev.cost;
        dev_added[viol.idx] = 1;
      } else {
        for (const auto& [i, c] : proper[viol.idx].coeffs.entries) coeffs[i] += c;
        rhs = 0;
        proper_added[viol.idx] = 1;
      }
      lp.add_row(std::move(coeffs), RowSense::ge, rhs);
    }
    LPResult res = simplex_solve(lp);
    if (res.status == LPStatus::infeasible) return {};
    if (res.status != LPStatus::optimal)
      throw std::runtime_error("ic feasibility LP: simplex failure");
    x = res.x;
  }
  throw std::runtime_error("ic feasibility LP did not converge");
}

struct IcOptResult {
  double value = 0.0;
  std::vector<int> psi;
  TabularRule witness;
};

// IC-OPT by scanning candidate recommendation sets in decreasing value order
// (ties to smaller cardinality, then lexicographic); the first feasible
// candidate is optimal under that order.
inline IcOptResult ic_opt_exact(const Instance& inst) {
  const int n = inst.n();
  if (n > 3) throw size_limit_error("ic_opt_exact limited to n <= 3");
  std::vector<TaskMask> candidates;
  for (TaskMask s = 0; s < (TaskMask{1} << n); ++s) candidates.push_back(s);
  std::sort(candidates.begin(), candidates.end(), [&](TaskMask a, TaskMask b) {
    const double va = valuation_value(inst, a), vb = valuation_value(inst, b);
    if (std::abs(va - vb) > kMassTol) return va > vb;
    return std::make_pair(popcount(a), a) < std::make_pair(popcount(b), b);
  });
  for (TaskMask psi : candidates) {
    IcFeasibility feas = ic_feasible(inst, psi);
    if (feas.feasible) {
      IcOptResult result;
      result.value = valuation_value(inst, psi);
      result.psi = ids_from_mask(psi);
      result.witness = std::move(feas.witness);
      return result;
    }
  }
  return {};  // the empty set is always feasible, so this is unreachable
}

// ---------------------------------------------------------------------------
// Symmetric-environment LP oracle
//
// In the symmetric environment the optimal rule pays s_k as a function of the
// number of reported informative signals only, with s_{k+1} >= s_k >=
// s_{k+1}/2. Feasibility of incentivizing effort level l reduces to a small
// LP over s_0..s_n.

struct SymmetricRule {
  std::vector<double> s;  // s[k], k = 0..n
};

namespace icdetail {

inline std::vector<double> binomial_pmf(int l, double p) {
  std::vector<double> pmf{1.0};
  for (int i = 0; i < l; ++i) {
    std::vector<double> next(pmf.size() + 1, 0.0);
    for (std::size_t k = 0; k < pmf.size(); ++k) {
      next[k] += pmf[k] * (1.0 - p);
      next[k + 1] += pmf[k] * p;
    }
    pmf = std::move(next);
  }
  return pmf;
}

}  // namespace icdetail

inline std::pair<bool, std::optional<SymmetricRule>> symmetric_feasible(int n, double p, double c,
                                                                        int target_l) {
  if (target_l < 0 || target_l > n) throw validation_error("target effort out of range");
  LinearProgram lp;
  lp.set_vars(n + 1);
  for (int k = 0; k <= n; ++k) lp.upper[k] = 1.0;
  for (int k = 0; k + 1 <= n; ++k) {
    // s_{k+1} - s_k >= 0
    std::vector<double> mono(n + 1, 0.0);
    mono[k + 1] = 1.0;
    mono[k] = -1.0;
    lp.add_row(std::move(mono), RowSense::ge, 0.0);
    // s_k - s_{k+1}/2 >= 0 (the k = 0 case is implied by guessing and imposed)
    std::vector<double> halve(n + 1, 0.0);
    halve[k] = 1.0;
    halve[k + 1] = -0.5;
    lp.add_row(std::move(halve), RowSense::ge, 0.0);
  }
  const std::vector<double> target_pmf = icdetail::binomial_pmf(target_l, p);
  for (int l = 0; l <= n; ++l) {
    if (l == target_l) continue;
    const std::vector<double> pmf = icdetail::binomial_pmf(l, p);
    std::vector<double> row(n + 1, 0.0);
    for (std::size_t k = 0; k < target_pmf.size(); ++k) row[k] += target_pmf[k];
    for (std::size_t k = 0; k < pmf.size(); ++k) row[k] -= pmf[k];
    lp.add_row(std::move(row), RowSense::ge, (target_l - l) * c);
  }
  LPResult res = simplex_solve(lp);
  if (res.status == LPStatus::infeasible) return {false, std::nullopt};
  if (res.status != LPStatus::optimal)
    throw std::runtime_error("symmetric feasibility LP: simplex failure");
  return {true, SymmetricRule{res.x}};
}

// Largest feasible incentivized effort level, by descending scan.
inline int symmetric_max_effort(int n, double p, double c) {
  for (int l = n; l >= 1; --l)
    if (symmetric_feasible(n, p, c, l).first) return l;
  return 0;
}

}  // namespace knapscore
