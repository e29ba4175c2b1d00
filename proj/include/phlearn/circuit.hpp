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

#include <cmath>
#include <optional>
#include <stdexcept>
#include <string>

#include <Eigen/Core>

#include "phlearn/core_model.hpp"

namespace phlearn {

/// Raised when a raw direction collapses under projection (e.g. parallel to
/// the CCA reference); callers resample the direction.
class DegenerateDirection : public std::runtime_error {
   public:
    using std::runtime_error::runtime_error;
};

inline constexpr double kDegenerateNorm = 1e-12;

inline void require_same_size(Eigen::Index a, Eigen::Index b, const char* what) {
    if (a != b) {
        throw std::invalid_argument(std::string(what) + ": dimension mismatch (" + std::to_string(a) + " vs " +
                                    std::to_string(b) + ")");
    }
}

/// The materialized rows of the orthogonal circuit matrix: the trainable
/// direction w and, for cross-correlation tasks, the fixed reference u.
class CircuitConfig {
   public:
    explicit CircuitConfig(Eigen::VectorXd w, std::optional<Eigen::VectorXd> u = std::nullopt)
        : w_(std::move(w)), u_(std::move(u)) {
        if (std::abs(w_.norm() - 1.0) > 1e-12) throw std::invalid_argument("circuit w must be unit norm");
        if (u_) {
            require_same_size(w_.size(), u_->size(), "CircuitConfig");
            if (std::abs(u_->norm() - 1.0) > 1e-12) throw std::invalid_argument("circuit u must be unit norm");
            if (std::abs(w_.dot(*u_)) >= 1e-10) throw std::invalid_argument("circuit w must be orthogonal to u");
        }
    }

    const Eigen::VectorXd& w() const { return w_; }
    const std::optional<Eigen::VectorXd>& u() const { return u_; }
    bool has_reference() const { return u_.has_value(); }
    Eigen::Index mode_count() const { return w_.size(); }

   private:
    Eigen::VectorXd w_;
    std::optional<Eigen::VectorXd> u_;
};

struct CollectiveDisplacement {
    double lambda_w = 0.0;
    std::optional<double> lambda_u;
};

inline CollectiveDisplacement project_modes(const CircuitConfig& circuit, const DisplacementVector& disp) {
    require_same_size(circuit.mode_count(), disp.size(), "project_modes");
    CollectiveDisplacement out;
    out.lambda_w = circuit.w().dot(disp.lambda);
    if (circuit.u()) out.lambda_u = circuit.u()->dot(disp.lambda);
    return out;
}

/// Maps an arbitrary direction onto a valid circuit: removes the component
/// along u (when given), then normalizes. The Gram-Schmidt step is applied
/// twice so the result is orthogonal to u at machine precision.
inline CircuitConfig orthonormalize(const Eigen::VectorXd& raw_w, const std::optional<Eigen::VectorXd>& u = std::nullopt) {
    if (!raw_w.allFinite()) throw std::invalid_argument("orthonormalize: non-finite direction");
    Eigen::VectorXd w = raw_w;
    if (u) {
        require_same_size(raw_w.size(), u->size(), "orthonormalize");
        w -= u->dot(w) * *u;
    }
    const double norm = w.norm();
    if (norm < kDegenerateNorm) throw DegenerateDirection("orthonormalize: direction vanishes after projection");
    w /= norm;
    if (u) {
        w -= u->dot(w) * *u;
        w.normalize();
    }
    return CircuitConfig(std::move(w), u);
}

/// theta_PCA(w) = w^T V w = E[lambda_w^2].
inline double pca_objective(const Eigen::VectorXd& w, const Covariance& cov) {
    require_same_size(w.size(), cov.mode_count(), "pca_objective");
    return w.dot(cov.matrix() * w);
}

/// theta_CCA(w) = u^T V w = E[lambda_w lambda_u].
inline double cca_objective(const Eigen::VectorXd& w, const Eigen::VectorXd& u, const Covariance& cov) {
    require_same_size(w.size(), cov.mode_count(), "cca_objective");
    require_same_size(u.size(), cov.mode_count(), "cca_objective");
    return u.dot(cov.matrix() * w);
}

/// Unit vector at `angle` radians from v = (1,...,1)/sqrt(M), tilted toward
/// the part of e_1 orthogonal to v. Used as the default CCA reference.
inline Eigen::VectorXd reference_at_angle(Eigen::Index mode_count, double angle) {
    if (mode_count < 2) throw std::invalid_argument("reference_at_angle: need at least 2 modes");
    const Eigen::VectorXd v = uniform_direction(mode_count);
    Eigen::VectorXd perp = Eigen::VectorXd::Zero(mode_count);
    perp[0] = 1.0;
    perp -= v.dot(perp) * v;
    perp.normalize();
    Eigen::VectorXd u = std::cos(angle) * v + std::sin(angle) * perp;
    return u.normalized();
}

}  // namespace phlearn
