// Copyright 2026 The dacount Authors
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

/// @file objective.hpp
/// Training objective: log-MSE density loss, binary cross-entropy domain
/// loss, their unweighted sum, and the gradient-reversal coefficient ramp.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "dacount/core.hpp"

namespace dacount {

inline constexpr double kLogMseEpsilon = 1e-12;
inline constexpr double kProbabilityClamp = 1e-7;

/// log(eps + mean squared error). If @p grad is nonempty it receives dLoss/dpred.
template <typename T>
double density_loss(std::span<const T> pred, std::span<const T> target, std::span<T> grad = {}) {
  if (pred.size() != target.size()) {
    throw std::invalid_argument("density_loss: prediction has " + std::to_string(pred.size()) +
                                " values but target has " + std::to_string(target.size()));
  }
  if (pred.empty()) throw std::invalid_argument("density_loss: empty batch");
  const double m = static_cast<double>(pred.size());
  double sse = 0.0;
  for (std::size_t i = 0; i < pred.size(); ++i) {
    const double e = static_cast<double>(pred[i]) - static_cast<double>(target[i]);
    sse += e * e;
  }
  const double denom = kLogMseEpsilon + sse / m;
  if (!grad.empty()) {
    if (grad.size() != pred.size()) throw std::invalid_argument("density_loss: gradient buffer size mismatch");
    const double scale = 2.0 / (m * denom);
    for (std::size_t i = 0; i < pred.size(); ++i) {
      grad[i] = static_cast<T>(scale * (static_cast<double>(pred[i]) - static_cast<double>(target[i])));
    }
  }
  return std::log(denom);
}

/// Batch form over density maps; every pair must match in shape.
inline double density_loss(std::span<const DensityMap> pred, std::span<const DensityMap> target) {
  if (pred.size() != target.size()) throw std::invalid_argument("density_loss: batch sizes differ");
  if (pred.empty()) throw std::invalid_argument("density_loss: empty batch");
  std::vector<double> p, t;
  for (std::size_t i = 0; i < pred.size(); ++i) {
    if (pred[i].height() != target[i].height() || pred[i].width() != target[i].width()) {
      throw std::invalid_argument("density_loss: map " + std::to_string(i) + " shape mismatch");
    }
    p.insert(p.end(), pred[i].values().begin(), pred[i].values().end());
    t.insert(t.end(), target[i].values().begin(), target[i].values().end());
  }
  return density_loss<double>(p, t);
}

/// Label encoding used by the domain classifier: source = 1, target = 0.
inline double domain_label(DomainTag tag) { return tag == DomainTag::kSource ? 1.0 : 0.0; }

/// Mean binary cross-entropy with probabilities clamped to [1e-7, 1 - 1e-7].
template <typename T>
double domain_loss(std::span<const T> prob, std::span<const DomainTag> tags, std::span<T> grad = {}) {
  if (prob.size() != tags.size()) throw std::invalid_argument("domain_loss: probabilities and tags differ in length");
  if (prob.empty()) throw std::invalid_argument("domain_loss: empty batch");
  const double n = static_cast<double>(prob.size());
  double total = 0.0;
  for (std::size_t i = 0; i < prob.size(); ++i) {
    const double raw = static_cast<double>(prob[i]);
    const double p = std::clamp(raw, kProbabilityClamp, 1.0 - kProbabilityClamp);
    const double y = domain_label(tags[i]);
    total -= y * std::log(p) + (1.0 - y) * std::log(1.0 - p);
    if (!grad.empty()) {
      const bool clamped = raw != p;
      grad[i] = clamped ? T{0} : static_cast<T>(-(y / p - (1.0 - y) / (1.0 - p)) / n);
    }
  }
  return total / n;
}

struct LossBreakdown {
  double density_loss = 0.0;
  double domain_loss = 0.0;
  double total = 0.0;
};

/// Unweighted sum; a non-finite term means training diverged.
inline LossBreakdown total_loss(double density, double domain) {
  if (!std::isfinite(density) || !std::isfinite(domain)) {
    throw DivergenceError("non-finite loss (density=" + std::to_string(density) +
                          ", domain=" + std::to_string(domain) + "): training diverged");
  }
  return {density, domain, density + domain};
}

struct LambdaSchedule {
  double gamma = 10.0;
  std::int64_t total_iterations = 1;
};

/// 2 / (1 + exp(-gamma * p)) - 1 with p = iteration / total_iterations.
inline double lambda_at(const LambdaSchedule& s, std::int64_t iteration) {
  if (!(s.gamma > 0.0)) throw std::invalid_argument("lambda schedule gamma must be > 0");
  if (s.total_iterations <= 0) throw std::invalid_argument("lambda schedule needs total_iterations > 0");
  if (iteration < 0 || iteration > s.total_iterations) {
    throw std::out_of_range("lambda_at: iteration " + std::to_string(iteration) + " outside [0, " +
                            std::to_string(s.total_iterations) + "]");
  }
  const double p = static_cast<double>(iteration) / static_cast<double>(s.total_iterations);
  return 2.0 / (1.0 + std::exp(-s.gamma * p)) - 1.0;
}

}  // namespace dacount
