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
#include <string>

#include "knapscore/common.hpp"
#include "knapscore/model.hpp"

namespace knapscore {

// Counter-based deterministic RNG: splitmix64 over a key mixed from
// (master seed, stream index), so parallel benchmark rows reproduce the
// serial bit stream.
class Rng {
 public:
  explicit Rng(std::uint64_t seed, std::uint64_t stream = 0)
      : state_(mix(seed + 0x9e3779b97f4a7c15ULL * (stream + 1))) {}

  std::uint64_t next_u64() {
    state_ += 0x9e3779b97f4a7c15ULL;
    return mix(state_);
  }
  double next_double() {  // [0, 1)
    return static_cast<double>(next_u64() >> 11) * 0x1.0p-53;
  }
  double uniform(double lo, double hi) { return lo + (hi - lo) * next_double(); }
  int uniform_int(int lo, int hi) {  // inclusive bounds
    return lo + static_cast<int>(next_u64() % static_cast<std::uint64_t>(hi - lo + 1));
  }

 private:
  static std::uint64_t mix(std::uint64_t z) {
    z ^= z >> 30;
    z *= 0xbf58476d1ce4e5b9ULL;
    z ^= z >> 27;
    z *= 0x94d049bb133111ebULL;
    z ^= z >> 31;
    return z;
  }
  std::uint64_t state_;
};

enum class Regime { x_heavy, y2_heavy, mixed, symmetric };

struct GenSpec {
  Regime regime = Regime::mixed;
  double p = 0.5;  // symmetric only
  double c = 0.1;  // symmetric only
};

// Accepts "x-heavy" | "y2-heavy" | "mixed" | "symmetric(p,c)".
inline GenSpec parse_regime(const std::string& text) {
  GenSpec spec;
  if (text == "x-heavy") {
    spec.regime = Regime::x_heavy;
  } else if (text == "y2-heavy") {
    spec.regime = Regime::y2_heavy;
  } else if (text == "mixed") {
    spec.regime = Regime::mixed;
  } else if (text.rfind("symmetric", 0) == 0) {
    spec.regime = Regime::symmetric;
    const auto open = text.find('(');
    if (open != std::string::npos) {
      const auto comma = text.find(',', open);
      const auto close = text.find(')', open);
      if (comma == std::string::npos || close == std::string::npos)
        throw validation_error("symmetric regime syntax: symmetric(p,c)");
      spec.p = std::stod(text.substr(open + 1, comma - open - 1));
      spec.c = std::stod(text.substr(comma + 1, close - comma - 1));
    }
  } else {
    throw validation_error("unknown regime: " + text);
  }
  return spec;
}

namespace gendetail {

// Sampling ranges keep each case label reachable: the partition reads
// p/(2c) > 11 as X, <= 16/15 as Y1/Y2 by p, the band between as Y3.
inline Task sample_task(Rng& rng, int case_pick) {
  Task t;
  double ratio = 1.0;
  switch (case_pick) {
    case 0:  // X
      t.prob = rng.uniform(0.3, 1.0);
      ratio = rng.uniform(11.001, 40.0);
      break;
    case 1:  // Y1
      t.prob = rng.uniform(0.25, 1.0);
      ratio = rng.uniform(1.0, 16.0 / 15.0);
      break;
    case 2:  // Y2
      t.prob = rng.uniform(0.02, 0.2499);
      ratio = rng.uniform(1.0, 16.0 / 15.0);
      break;
    default:  // Y3
      t.prob = rng.uniform(0.05, 1.0);
      ratio = rng.uniform(16.0 / 15.0 + 1e-6, 11.0);
      break;
  }
  t.cost = t.prob / (2.0 * ratio);
  t.value = rng.uniform(0.5, 10.0);
  return t;
}

}  // namespace gendetail

inline Instance gen_instance(std::uint64_t seed, int n, const GenSpec& spec) {
  if (n < 1) throw validation_error("gen needs n >= 1");
  Rng rng(seed);
  Instance inst;
  inst.budget = 1.0;
  for (int i = 0; i < n; ++i) {
    Task t;
    switch (spec.regime) {
      case Regime::x_heavy:
        t = gendetail::sample_task(rng, 0);
        break;
      case Regime::y2_heavy:
        t = gendetail::sample_task(rng, 2);
        break;
      case Regime::mixed:
        t = gendetail::sample_task(rng, rng.uniform_int(0, 3));
        break;
      case Regime::symmetric:
        t.prob = spec.p;
        t.cost = spec.c;
        t.value = 1.0;
        break;
    }
    t.id = i;
    inst.tasks.push_back(t);
  }
  validate_instance(inst);
  return inst;
}

}  // namespace knapscore
