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
#include <cmath>
#include <limits>
#include <string>
#include <vector>

#include <json.hpp>

namespace almqr {

/// Fixed-width histogram with underflow/overflow counters. Merging is
/// order independent.
class Histogram {
public:
  Histogram(double lo, double hi, int bins) : lo_(lo), hi_(hi), counts_(bins, 0) {}

  void add(double v) {
    if (!std::isfinite(v) || v < lo_) {
      ++under_;
      return;
    }
    if (v >= hi_) {
      ++over_;
      return;
    }
    const int b = static_cast<int>((v - lo_) / (hi_ - lo_) * counts_.size());
    ++counts_[std::min<std::size_t>(b, counts_.size() - 1)];
  }

  void merge(const Histogram& o) {
    for (std::size_t i = 0; i < counts_.size(); ++i) counts_[i] += o.counts_[i];
    under_ += o.under_;
    over_ += o.over_;
  }

  nlohmann::json to_json() const {
    return {{"lo", lo_}, {"hi", hi_}, {"counts", counts_}, {"underflow", under_}, {"overflow", over_}};
  }

private:
  double lo_, hi_;
  std::vector<long> counts_;
  long under_ = 0, over_ = 0;
};

/// Running max/min/mean.
struct Summary {
  long count = 0;
  double max = -std::numeric_limits<double>::infinity();
  double min = std::numeric_limits<double>::infinity();
  double sum = 0.0;

  void add(double v) {
    ++count;
    max = std::max(max, v);
    min = std::min(min, v);
    sum += v;
  }
  double mean() const { return count ? sum / count : 0.0; }
};

/// Common shape of every verifier report. `max_ratio` is the headline
/// statistic compared against the threshold; check-specific data goes into
/// `details`.
struct CheckReport {
  std::string check;
  long n_samples = 0;
  double max_ratio = 0.0;
  bool pass = false;
  long excluded = 0;
  nlohmann::json details = nlohmann::json::object();

  nlohmann::json to_json() const {
    nlohmann::json j = details;
    j["check"] = check;
    j["n_samples"] = n_samples;
    j["max_ratio"] = std::isfinite(max_ratio) ? nlohmann::json(max_ratio) : nlohmann::json(nullptr);
    j["pass"] = pass;
    j["excluded"] = excluded;
    return j;
  }
};

}  // namespace almqr
