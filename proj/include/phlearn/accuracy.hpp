// Copyright 2026 The phlearn Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//      http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#pragma once

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include <Eigen/Core>

#include "phlearn/circuit.hpp"

namespace phlearn {

/// Squared overlap |w . w*|^2 in [0, 1].
class AccuracyValue {
   public:
    explicit AccuracyValue(double value) : value_(std::clamp(value, 0.0, 1.0)) {
        if (!(value >= -1e-12 && value <= 1.0 + 1e-12)) throw std::out_of_range("accuracy outside [0, 1]");
    }
    double value() const { return value_; }
    operator double() const { return value_; }

   private:
    double value_;
};

inline constexpr double kUnitTolerance = 1e-9;

inline AccuracyValue accuracy(const Eigen::VectorXd& w, const Eigen::VectorXd& w_star) {
    require_same_size(w.size(), w_star.size(), "accuracy");
    if (std::abs(w.norm() - 1.0) > kUnitTolerance || std::abs(w_star.norm() - 1.0) > kUnitTolerance) {
        throw std::invalid_argument("accuracy: inputs must be unit vectors");
    }
    const double overlap = w.dot(w_star);
    return AccuracyValue(overlap * overlap);
}

}  // namespace phlearn
