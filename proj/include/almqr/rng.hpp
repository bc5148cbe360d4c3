// Copyright 2026 The almqr Authors
//
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
#include <cstdint>
#include <random>
#include <vector>

#include <boost/random/sobol.hpp>

namespace almqr {

/// Counter-based generator: output i is splitmix64 finalization of key + i * golden.
class CounterEngine {
public:
  using result_type = std::uint64_t;
  static constexpr result_type min() { return 0; }
  static constexpr result_type max() { return ~result_type{0}; }

  explicit CounterEngine(result_type key = 0) : key_(key) {}

  static result_type mix(result_type z) {
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
  }

  result_type operator()() { return mix(key_ + (++counter_) * 0x9e3779b97f4a7c15ULL); }

private:
  result_type key_;
  result_type counter_ = 0;
};

/// Deterministic random stream derived from a 64-bit seed and a stream index.
/// Independent tasks use distinct stream indices so results do not depend on
/// scheduling order.
class RandomStream {
public:
  RandomStream(std::uint64_t seed, std::uint64_t stream)
      : engine_(CounterEngine::mix(CounterEngine::mix(seed ^ 0x616c6d71ULL) + stream)) {}

  double uniform() { return unit_(engine_); }
  double uniform(double lo, double hi) { return lo + (hi - lo) * unit_(engine_); }
  double normal() { return gauss_(engine_); }
  int integer(int lo, int hi) { return std::uniform_int_distribution<int>(lo, hi)(engine_); }

  /// Random permutation of {0, ..., n-1}.
  std::vector<int> permutation(int n) {
    std::vector<int> p(n);
    for (int i = 0; i < n; ++i) p[i] = i;
    std::shuffle(p.begin(), p.end(), engine_);
    return p;
  }

  CounterEngine& engine() { return engine_; }

private:
  CounterEngine engine_;
  std::uniform_real_distribution<double> unit_{0.0, 1.0};
  std::normal_distribution<double> gauss_{0.0, 1.0};
};

/// Sobol points in [0,1)^dim.
class LowDiscrepancy {
public:
  explicit LowDiscrepancy(int dim) : dim_(dim), gen_(static_cast<std::size_t>(dim)) {}

  std::vector<double> next() {
    std::vector<double> u(dim_);
    const double scale = 1.0 / (static_cast<double>(gen_.max()) + 1.0);
    for (auto& x : u) x = (static_cast<double>(gen_()) + 0.5) * scale;
    return u;
  }

  int dim() const { return dim_; }

private:
  int dim_;
  boost::random::sobol gen_;
};

}  // namespace almqr
