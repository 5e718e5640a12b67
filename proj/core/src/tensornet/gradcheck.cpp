// Copyright 2026 The disco Authors
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

#include "disco/tensornet/gradcheck.hpp"

#include <algorithm>
#include <cmath>

namespace disco::tensornet {

double grad_rel_err(double analytic, double numeric) {
  const double denom =
      std::max({std::abs(analytic), std::abs(numeric), 1e-4});
  return std::abs(analytic - numeric) / denom;
}

GradCheckReport grad_check(
    const std::function<double(bool)>& loss,
    const std::vector<std::pair<std::string, Tensor<double>*>>& params,
    int probes_per_tensor, double eps, Rng& rng) {
  // One analytic pass up front; the gradients are copied out so the repeated
  // forward-only evaluations below cannot disturb them.
  loss(true);
  std::vector<std::vector<double>> analytic;
  analytic.reserve(params.size());
  for (const auto& [name, tensor] : params) {
    if (!tensor->has_grad())
      raise(Errc::ShapeError, "grad_check parameter '" + name +
                                  "' has no gradient buffer");
    analytic.push_back(tensor->grad);
  }

  GradCheckReport report;
  for (std::size_t pi = 0; pi < params.size(); ++pi) {
    const auto& name = params[pi].first;
    Tensor<double>& tensor = *params[pi].second;
    GradCheckEntry entry;
    entry.tensor = name;

    const std::int64_t n = tensor.size();
    const int probes = static_cast<int>(
        std::min<std::int64_t>(n, probes_per_tensor));
    for (int k = 0; k < probes; ++k) {
      const std::int64_t idx =
          probes == n ? k : rng.uniform_int(static_cast<int>(n));
      const double saved = tensor.values[idx];
      const double step = eps * std::max(1.0, std::abs(saved));
      tensor.values[idx] = saved + step;
      const double lp = loss(false);
      tensor.values[idx] = saved - step;
      const double lm = loss(false);
      tensor.values[idx] = saved;
      const double numeric = (lp - lm) / (2.0 * step);
      const double a = analytic[pi][idx];
      entry.max_rel_err = std::max(entry.max_rel_err, grad_rel_err(a, numeric));
      entry.max_abs_err = std::max(entry.max_abs_err, std::abs(a - numeric));
      ++entry.probes;
    }
    report.probes += entry.probes;
    if (entry.max_rel_err >= report.max_rel_err) {
      report.max_rel_err = entry.max_rel_err;
      report.worst_tensor = name;
    }
    report.per_tensor.push_back(std::move(entry));
  }
  return report;
}

}  // namespace disco::tensornet
