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

#include <cmath>
#include <cstdint>
#include <stdexcept>
#include <string>
#include <vector>

#include "dacount/layers.hpp"

namespace dacount {

/// Adam with per-group learning rates.
template <typename T>
class Adam {
 public:
  struct Group {
    std::string name;
    std::vector<Parameter<T>*> params;
    double lr = 1e-3;
  };

  struct Moments {
    std::vector<T> m;
    std::vector<T> v;
  };

  explicit Adam(std::vector<Group> groups, double beta1 = 0.9, double beta2 = 0.999, double eps = 1e-8)
      : groups_(std::move(groups)), beta1_(beta1), beta2_(beta2), eps_(eps) {
    for (auto& g : groups_) {
      if (!(g.lr > 0.0)) throw std::invalid_argument("learning rate of group '" + g.name + "' must be > 0");
      for (auto* p : g.params) moments_.push_back({std::vector<T>(p->size(), T{0}), std::vector<T>(p->size(), T{0})});
    }
  }

  void step() {
    ++step_;
    const double c1 = 1.0 - std::pow(beta1_, static_cast<double>(step_));
    const double c2 = 1.0 - std::pow(beta2_, static_cast<double>(step_));
    std::size_t k = 0;
    for (auto& g : groups_) {
      const double step_size = g.lr / c1;
      const double sqrt_c2 = std::sqrt(c2);
      for (auto* p : g.params) {
        Moments& mo = moments_[k++];
        for (std::size_t i = 0; i < p->size(); ++i) {
          const double grad = p->grad[i];
          const double m = beta1_ * mo.m[i] + (1.0 - beta1_) * grad;
          const double v = beta2_ * mo.v[i] + (1.0 - beta2_) * grad * grad;
          mo.m[i] = static_cast<T>(m);
          mo.v[i] = static_cast<T>(v);
          p->value[i] -= static_cast<T>(step_size * m / (std::sqrt(v) / sqrt_c2 + eps_));
        }
      }
    }
  }

  void zero_grad() {
    for (auto& g : groups_) {
      for (auto* p : g.params) p->zero_grad();
    }
  }

  std::int64_t step_count() const { return step_; }
  void set_step_count(std::int64_t s) { step_ = s; }
  std::vector<Moments>& moments() { return moments_; }
  const std::vector<Moments>& moments() const { return moments_; }
  const std::vector<Group>& groups() const { return groups_; }

 private:
  std::vector<Group> groups_;
  std::vector<Moments> moments_;
  double beta1_, beta2_, eps_;
  std::int64_t step_ = 0;
};

}  // namespace dacount
