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
#include <limits>
#include <vector>

#include "knapscore/common.hpp"

namespace knapscore {

enum class RowSense : char { le = '<', eq = '=', ge = '>' };

struct LinearProgram {
  int num_vars = 0;
  std::vector<double> objective;  // maximize objective . x
  struct Row {
    std::vector<double> coeffs;
    RowSense sense = RowSense::le;
    double rhs = 0.0;
  };
  std::vector<Row> rows;
  std::vector<double> lower;  // defaults to 0
  std::vector<double> upper;  // defaults to +infinity

  void set_vars(int n) {
    num_vars = n;
    objective.assign(n, 0.0);
    lower.assign(n, 0.0);
    upper.assign(n, std::numeric_limits<double>::infinity());
  }
  void add_row(std::vector<double> coeffs, RowSense sense, double rhs) {
    rows.push_back({std::move(coeffs), sense, rhs});
  }
};

enum class LPStatus { optimal, infeasible, unbounded, numerical_failure };

struct LPResult {
  LPStatus status = LPStatus::numerical_failure;
  double objective = 0.0;
  std::vector<double> x;
};

// Dense two-phase simplex. Dantzig pricing with a permanent switch to Bland's
// rule after a fixed iteration budget keeps it cycle-free and deterministic.
inline LPResult simplex_solve(const LinearProgram& lp) {
  constexpr double kPivotTol = 1e-9;
  const int n = lp.num_vars;
  for (int j = 0; j < n; ++j)
    if (!std::isfinite(lp.lower.empty() ? 0.0 : lp.lower[j]))
      throw validation_error("simplex requires finite lower bounds");

  // Shift variables to y = x - lower >= 0 and turn finite upper bounds into
  // explicit rows.
  std::vector<LinearProgram::Row> rows = lp.rows;
  const auto lb = [&](int j) { return lp.lower.empty() ? 0.0 : lp.lower[j]; };
  for (auto& row : rows) {
    double shift = 0;
    for (int j = 0; j < n; ++j) shift += row.coeffs[j] * lb(j);
    row.rhs -= shift;
  }
  for (int j = 0; j < n; ++j) {
    const double ub = lp.upper.empty() ? std::numeric_limits<double>::infinity() : lp.upper[j];
    if (std::isfinite(ub)) {
      std::vector<double> coeffs(n, 0.0);
      coeffs[j] = 1.0;
      rows.push_back({std::move(coeffs), RowSense::le, ub - lb(j)});
    }
  }
  const int m = static_cast<int>(rows.size());

  // Column layout: structural | slack/surplus | artificial.
  int n_slack = 0;
  for (const auto& row : rows)
    if (row.sense != RowSense::eq) ++n_slack;
  std::vector<int> art_rows;
  for (int i = 0; i < m; ++i) {
    const bool b_neg = rows[i].rhs < 0;
    const RowSense s = rows[i].sense;
    // After normalizing rhs >= 0: '<=' keeps a basic slack unless flipped;
    // flipped '<=' behaves like '>=' and needs an artificial (and vice versa).
    const bool needs_art =
        s == RowSense::eq || (s == RowSense::ge && !b_neg) || (s == RowSense::le && b_neg);
    if (needs_art) art_rows.push_back(i);
  }
  const int n_art = static_cast<int>(art_rows.size());
  const int total = n + n_slack + n_art;

  std::vector<std::vector<double>> tab(m, std::vector<double>(total + 1, 0.0));
  std::vector<int> basis(m, -1);
  {
    int slack_idx = n, art_idx = n + n_slack;
    for (int i = 0; i < m; ++i) {
      double sign = rows[i].rhs < 0 ? -1.0 : 1.0;
      for (int j = 0; j < n; ++j) tab[i][j] = sign * rows[i].coeffs[j];
      tab[i][total] = sign * rows[i].rhs;
      RowSense s = rows[i].sense;
      if (sign < 0) s = (s == RowSense::le ? RowSense::ge : (s == RowSense::ge ? RowSense::le : RowSense::eq));
      if (s == RowSense::le) {
        tab[i][slack_idx] = 1.0;
        basis[i] = slack_idx++;
      } else if (s == RowSense::ge) {
        tab[i][slack_idx++] = -1.0;
        tab[i][art_idx] = 1.0;
        basis[i] = art_idx++;
      } else {
        tab[i][art_idx] = 1.0;
        basis[i] = art_idx++;
      }
    }
  }

  // Reduced-cost rows for both phases, kept in sync through pivots.
  std::vector<double> cost1(total + 1, 0.0), cost2(total + 1, 0.0);
  for (int j = n + n_slack; j < total; ++j) cost1[j] = -1.0;  // maximize -sum(artificials)
  for (int j = 0; j < n; ++j) cost2[j] = lp.objective[j];
  const auto eliminate_basics = [&](std::vector<double>& cost) {
    for (int i = 0; i < m; ++i) {
      const double c = cost[basis[i]];
      if (c == 0.0) continue;
      for (int j = 0; j <= total; ++j) cost[j] -= c * tab[i][j];
    }
  };
  eliminate_basics(cost1);

  long iterations = 0;
  const long bland_after = 2000;
  const long max_iterations = 20000 + 200L * (m + total);
  const auto pivot = [&](int row, int col) {
    const double piv = tab[row][col];
    for (int j = 0; j <= total; ++j) tab[row][j] /= piv;
    for (int i = 0; i < m; ++i) {
      if (i == row) continue;
      const double f = tab[i][col];
      if (f == 0.0) continue;
      for (int j = 0; j <= total; ++j) tab[i][j] -= f * tab[row][j];
    }
    for (auto* cost : {&cost1, &cost2}) {
      const double f = (*cost)[col];
      if (f == 0.0) continue;
      for (int j = 0; j <= total; ++j) (*cost)[j] -= f * tab[row][j];
    }
    basis[row] = col;
  };

  // Runs the simplex on `cost`; returns false on iteration blow-up.
  // `allowed_max` bars artificial columns from re-entering in phase 2.
  const auto optimize = [&](std::vector<double>& cost, int allowed_max) -> int {
    while (true) {
      if (++iterations > max_iterations) return 2;  // numerical failure
      int enter = -1;
      if (iterations <= bland_after) {
        double best = kPivotTol;
        for (int j = 0; j < allowed_max; ++j)
          if (cost[j] > best) {
            best = cost[j];
            enter = j;
          }
      } else {
        for (int j = 0; j < allowed_max; ++j)
          if (cost[j] > kPivotTol) {
            enter = j;
            break;
          }
      }
      if (enter < 0) return 0;  // optimal
      // Exact ratio comparisons: degenerate ties are exact zeros, and Bland's
      // tie-break (smallest basis index) only prevents cycling when the
      // minimum-ratio set is computed without a tolerance window.
      int leave = -1;
      double best_ratio = 0;
      for (int i = 0; i < m; ++i) {
        if (tab[i][enter] <= kPivotTol) continue;
        const double ratio = tab[i][total] / tab[i][enter];
        if (leave < 0 || ratio < best_ratio ||
            (ratio == best_ratio && basis[i] < basis[leave])) {
          leave = i;
          best_ratio = ratio;
        }
      }
      if (leave < 0) return 1;  // unbounded
      pivot(leave, enter);
    }
  };

  LPResult result;
  if (n_art > 0) {
    const int r1 = optimize(cost1, total);
    if (r1 == 2) {
      result.status = LPStatus::numerical_failure;
      return result;
    }
    // The cost row's rhs entry carries -z; phase-1 optimum below zero (some
    // artificial stuck positive) means the original system is infeasible.
    if (cost1[total] > kLpTol) {
      result.status = LPStatus::infeasible;
      return result;
    }
    // Drive any artificial still basic (at zero) out of the basis.
    for (int i = 0; i < m; ++i) {
      if (basis[i] < n + n_slack) continue;
      int col = -1;
      for (int j = 0; j < n + n_slack; ++j)
        if (std::abs(tab[i][j]) > kPivotTol) {
          col = j;
          break;
        }
      if (col >= 0) pivot(i, col);
      // Otherwise the row is redundant; the artificial stays basic at 0 and
      // artificial columns are barred below.
    }
  }
  const int r2 = optimize(cost2, n + n_slack);
  if (r2 == 2) {
    result.status = LPStatus::numerical_failure;
    return result;
  }
  if (r2 == 1) {
    result.status = LPStatus::unbounded;
    return result;
  }
  result.status = LPStatus::optimal;
  result.x.assign(n, 0.0);
  for (int i = 0; i < m; ++i)
    if (basis[i] < n) result.x[basis[i]] = tab[i][total];
  for (int j = 0; j < n; ++j) result.x[j] += lb(j);
  result.objective = 0;
  for (int j = 0; j < n; ++j) result.objective += lp.objective[j] * result.x[j];
  return result;
}

// Re-checks an assignment against the raw constraints; the simplex result for
// every Optimal status is expected to pass within kLpTol.
inline double max_constraint_violation(const LinearProgram& lp, const std::vector<double>& x) {
  double worst = 0;
  for (const auto& row : lp.rows) {
    double lhs = 0;
    for (int j = 0; j < lp.num_vars; ++j) lhs += row.coeffs[j] * x[j];
    double v = 0;
    if (row.sense == RowSense::le) v = lhs - row.rhs;
    else if (row.sense == RowSense::ge) v = row.rhs - lhs;
    else v = std::abs(lhs - row.rhs);
    worst = std::max(worst, v);
  }
  for (int j = 0; j < lp.num_vars; ++j) {
    if (!lp.lower.empty()) worst = std::max(worst, lp.lower[j] - x[j]);
    if (!lp.upper.empty() && std::isfinite(lp.upper[j])) worst = std::max(worst, x[j] - lp.upper[j]);
  }
  return worst;
}

}  // namespace knapscore
