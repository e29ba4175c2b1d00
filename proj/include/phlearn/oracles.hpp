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
#include <vector>

#include <Eigen/Core>

#include "phlearn/accuracy.hpp"
#include "phlearn/circuit.hpp"
#include "phlearn/core_model.hpp"
#include "phlearn/random.hpp"

namespace phlearn {

/// The optimum has no informative direction (e.g. u is an eigenvector of V).
class DegenerateOptimum : public std::runtime_error {
   public:
    using std::runtime_error::runtime_error;
};

struct OracleResult {
    Eigen::VectorXd w_star;
    double objective_value = 0.0;
    /// Orthonormal basis of the optimal subspace (one column unless degenerate).
    Eigen::MatrixXd optimal_space;
    bool degenerate = false;

    /// Accuracy of w against this optimum. For a degenerate optimum this is the
    /// squared norm of w's projection onto the optimal subspace.
    AccuracyValue score(const Eigen::VectorXd& w) const {
        if (!degenerate) return accuracy(w, w_star);
        require_same_size(w.size(), optimal_space.rows(), "OracleResult::score");
        if (std::abs(w.norm() - 1.0) > kUnitTolerance) throw std::invalid_argument("score: w must be unit norm");
        return AccuracyValue((optimal_space.transpose() * w).squaredNorm());
    }
};

/// Flips v so its first non-negligible component is positive.
inline Eigen::VectorXd canonical_sign(Eigen::VectorXd v) {
    const double cutoff = 1e-12 * v.cwiseAbs().maxCoeff();
    for (Eigen::Index i = 0; i < v.size(); ++i) {
        if (std::abs(v[i]) > cutoff) {
            if (v[i] < 0.0) v = -v;
            break;
        }
    }
    return v;
}

namespace detail {

struct Eigenpair {
    double value = 0.0;
    Eigen::VectorXd vector;
};

inline Eigen::VectorXd default_start(Eigen::Index n, int variant = 0) {
    Eigen::VectorXd x(n);
    for (Eigen::Index i = 0; i < n; ++i) x[i] = 1.0 + 0.1 * std::sin(1.0 + 3.7 * static_cast<double>(i) + 2.3 * variant);
    // later variants lean on one coordinate each, so some escape any given cluster
    if (variant > 0) x[(variant - 1) % n] += 1.0;
    return x.normalized();
}

/// Dominant eigenpair of a symmetric PSD matrix by power iteration. The
/// default start vector is fixed and deliberately non-symmetric so it is not
/// orthogonal to typical top eigenvectors; the run is deterministic.
inline Eigenpair power_iteration(const Eigen::MatrixXd& a, std::optional<Eigen::VectorXd> start = std::nullopt,
                                 int max_iterations = 200000, double tolerance = 1e-13) {
    const Eigen::Index n = a.rows();
    Eigen::VectorXd x = start ? start->normalized() : default_start(n);
    const double scale = a.cwiseAbs().maxCoeff() * static_cast<double>(n);
    Eigenpair out{0.0, x};
    if (scale == 0.0) return out;
    for (int it = 0; it < max_iterations; ++it) {
        Eigen::VectorXd y = a * x;
        const double rho = x.dot(y);
        const double residual = (y - rho * x).norm();
        out = {rho, x};
        if (residual <= tolerance * scale) break;
        const double ny = y.norm();
        if (ny == 0.0) break;
        x = y / ny;
    }
    return out;
}

}  // namespace detail

/// Largest-eigenvalue eigenvector of V with eigenvalue theta* = max w^T V w.
/// Further eigenpairs are peeled off by deflation while they sit within
/// 1e-9 (relative) of the top eigenvalue; such a cluster is flagged degenerate.
inline OracleResult principal_eigvec(const Covariance& cov) {
    const Eigen::MatrixXd& v = cov.matrix();
    const Eigen::Index n = v.rows();
    const double scale = v.cwiseAbs().maxCoeff();

    OracleResult out;
    if (scale == 0.0) {
        out.w_star = Eigen::VectorXd::Unit(n, 0);
        out.objective_value = 0.0;
        out.optimal_space = Eigen::MatrixXd::Identity(n, n);
        out.degenerate = true;
        return out;
    }

    detail::Eigenpair top = detail::power_iteration(v);
    out.w_star = canonical_sign(top.vector);
    out.objective_value = out.w_star.dot(v * out.w_star);

    std::vector<Eigen::VectorXd> cluster{out.w_star};
    Eigen::MatrixXd deflated = v - out.objective_value * out.w_star * out.w_star.transpose();
    const double gap_tolerance = 1e-9 * std::max(out.objective_value, scale);
    while (static_cast<Eigen::Index>(cluster.size()) < n) {
        if (deflated.cwiseAbs().maxCoeff() <= 1e-12 * scale) {
            // Remaining spectrum is numerically zero.
            if (out.objective_value > gap_tolerance) break;
        }
        // The first generic start vector that keeps real weight outside the
        // cluster found so far.
        Eigen::VectorXd start;
        for (int variant = 0; variant <= 2 * static_cast<int>(n); ++variant) {
            start = detail::default_start(n, variant);
            for (const auto& c : cluster) start -= c.dot(start) * c;
            if (start.norm() > 0.05) break;
        }
        detail::Eigenpair next = detail::power_iteration(deflated, start);
        // Reorthogonalize against the cluster before judging the eigenvalue.
        Eigen::VectorXd q = next.vector;
        for (const auto& c : cluster) q -= c.dot(q) * c;
        if (q.norm() < 1e-6) break;
        q.normalize();
        const double value = q.dot(v * q);
        if (out.objective_value - value > gap_tolerance) break;
        cluster.push_back(q);
        deflated -= value * q * q.transpose();
    }
    out.degenerate = cluster.size() > 1;
    out.optimal_space.resize(n, static_cast<Eigen::Index>(cluster.size()));
    for (std::size_t k = 0; k < cluster.size(); ++k) out.optimal_space.col(static_cast<Eigen::Index>(k)) = cluster[k];
    return out;
}

/// argmax over unit w orthogonal to u of |u^T V w|: w* = normalize((I - u u^T) V u),
/// with objective ||(I - u u^T) V u||.
inline OracleResult cca_optimum(const Covariance& cov, const Eigen::VectorXd& u) {
    require_same_size(u.size(), cov.mode_count(), "cca_optimum");
    if (std::abs(u.norm() - 1.0) > kUnitTolerance) throw std::invalid_argument("cca_optimum: u must be unit norm");
    const Eigen::MatrixXd& v = cov.matrix();
    Eigen::VectorXd a = v * u;
    a -= u.dot(a) * u;
    const double norm = a.norm();
    const double scale = v.cwiseAbs().maxCoeff();
    if (norm <= 1e-12 * scale || norm == 0.0) {
        throw DegenerateOptimum("cca_optimum: (I - u u^T) V u vanishes; no informative optimum");
    }
    OracleResult out;
    out.w_star = canonical_sign(a / norm);
    out.objective_value = norm;
    out.optimal_space = out.w_star;
    return out;
}

struct BaselineEstimate {
    double mean = 0.0;
    double standard_error = 0.0;
    long samples = 0;
};

/// Monte-Carlo mean of (w . w*)^2 for Haar-random unit w; converges to 1/M.
inline BaselineEstimate random_guess_baseline(int mode_count, long samples, Rng& rng) {
    if (mode_count < 2) throw std::invalid_argument("random_guess_baseline: M must be >= 2");
    if (samples < 1) throw std::invalid_argument("random_guess_baseline: samples must be >= 1");
    const Eigen::VectorXd target = uniform_direction(mode_count);
    double sum = 0.0;
    double sum_sq = 0.0;
    for (long s = 0; s < samples; ++s) {
        const double a = accuracy(random_unit_vector(mode_count, rng), target);
        sum += a;
        sum_sq += a * a;
    }
    BaselineEstimate out;
    out.samples = samples;
    out.mean = sum / static_cast<double>(samples);
    if (samples > 1) {
        const double var = (sum_sq - static_cast<double>(samples) * out.mean * out.mean) / static_cast<double>(samples - 1);
        out.standard_error = std::sqrt(std::max(var, 0.0) / static_cast<double>(samples));
    }
    return out;
}

}  // namespace phlearn
