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
#include <fstream>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include <Eigen/Core>
#include <Eigen/Eigenvalues>

#include "phlearn/random.hpp"

namespace phlearn {

/// Thrown when a matrix violates the covariance invariants.
class InvalidCovariance : public std::invalid_argument {
   public:
    using std::invalid_argument::invalid_argument;
};

inline constexpr double kSymmetryTolerance = 1e-12;
inline constexpr double kPsdTolerance = 1e-10;

struct CovarianceReport {
    bool accepted = false;
    double symmetry_defect = 0.0;  // max |A_ij - A_ji| / max |A_ij|
    double min_eigenvalue = 0.0;
    double max_eigenvalue = 0.0;
    std::string reason;
};

/// Checks symmetry (relative 1e-12) and positive semidefiniteness
/// (smallest eigenvalue >= -1e-10 * largest magnitude). Throws
/// std::invalid_argument for non-square or non-finite input.
inline CovarianceReport validate_covariance(const Eigen::MatrixXd& matrix) {
    if (matrix.rows() != matrix.cols()) {
        throw std::invalid_argument("covariance must be square, got " + std::to_string(matrix.rows()) + "x" +
                                    std::to_string(matrix.cols()));
    }
    if (matrix.size() == 0) throw std::invalid_argument("covariance must be non-empty");
    if (!matrix.allFinite()) throw std::invalid_argument("covariance has NaN or infinite entries");

    CovarianceReport report;
    const double scale = matrix.cwiseAbs().maxCoeff();
    const double asym = (matrix - matrix.transpose()).cwiseAbs().maxCoeff();
    report.symmetry_defect = scale > 0.0 ? asym / scale : 0.0;

    const Eigen::MatrixXd sym = 0.5 * (matrix + matrix.transpose());
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> solver(sym, Eigen::EigenvaluesOnly);
    report.min_eigenvalue = solver.eigenvalues().minCoeff();
    report.max_eigenvalue = solver.eigenvalues().maxCoeff();
    const double spectral_scale = solver.eigenvalues().cwiseAbs().maxCoeff();

    if (report.symmetry_defect > kSymmetryTolerance) {
        report.reason = "matrix is not symmetric";
    } else if (report.min_eigenvalue < -kPsdTolerance * spectral_scale) {
        report.reason = "matrix has a negative eigenvalue " + std::to_string(report.min_eigenvalue);
    } else {
        report.accepted = true;
    }
    return report;
}

/// Signal covariance V_ij = E[lambda_i lambda_j] of a zero-mean displacement
/// channel. Immutable once constructed.
class Covariance {
   public:
    explicit Covariance(Eigen::MatrixXd matrix) : matrix_(std::move(matrix)) {
        CovarianceReport report = validate_covariance(matrix_);
        if (!report.accepted) throw InvalidCovariance(report.reason);
        if (matrix_.rows() < 2) throw InvalidCovariance("covariance needs at least 2 modes");
    }

    const Eigen::MatrixXd& matrix() const { return matrix_; }
    Eigen::Index mode_count() const { return matrix_.rows(); }
    double operator()(Eigen::Index i, Eigen::Index j) const { return matrix_(i, j); }

   private:
    Eigen::MatrixXd matrix_;
};

struct SignalParams {
    int mode_count = 21;
    double sigma_c = 0.02;

    void validate() const {
        if (mode_count < 2) throw std::invalid_argument("mode_count must be >= 2");
        if (!std::isfinite(sigma_c) || sigma_c < 0.0) {
            throw std::invalid_argument("sigma_c must be finite and non-negative");
        }
    }
};

struct DisplacementVector {
    Eigen::VectorXd lambda;

    Eigen::Index size() const { return lambda.size(); }
};

/// v = (1, ..., 1) / sqrt(M), the direction of maximally correlated noise.
inline Eigen::VectorXd uniform_direction(Eigen::Index mode_count) {
    return Eigen::VectorXd::Constant(mode_count, 1.0 / std::sqrt(static_cast<double>(mode_count)));
}

/// V = M sigma_c^2 v v^T, i.e. every entry equals sigma_c^2.
inline Covariance make_rank1_covariance(const SignalParams& params) {
    params.validate();
    return Covariance(Eigen::MatrixXd::Constant(params.mode_count, params.mode_count, params.sigma_c * params.sigma_c));
}

/// Samples zero-mean Gaussian displacements with a fixed covariance through a
/// spectral factor F (V = F F^T). Eigen-directions whose eigenvalue is below
/// 1e-12 of the largest are dropped, so a rank-r channel consumes r normal
/// draws per sample and rank-1 draws stay on the signal direction.
class DisplacementChannel {
   public:
    explicit DisplacementChannel(Covariance cov) : cov_(std::move(cov)) {
        const Eigen::Index m = cov_.mode_count();
        Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> solver(0.5 * (cov_.matrix() + cov_.matrix().transpose()));
        const Eigen::VectorXd& evals = solver.eigenvalues();
        const double top = std::max(0.0, evals.maxCoeff());
        std::vector<Eigen::Index> kept;
        for (Eigen::Index k = 0; k < m; ++k) {
            if (top > 0.0 && evals[k] > 1e-12 * top) kept.push_back(k);
        }
        factor_.resize(m, static_cast<Eigen::Index>(kept.size()));
        for (std::size_t c = 0; c < kept.size(); ++c) {
            factor_.col(static_cast<Eigen::Index>(c)) = solver.eigenvectors().col(kept[c]) * std::sqrt(evals[kept[c]]);
        }
    }

    const Covariance& covariance() const { return cov_; }
    Eigen::Index mode_count() const { return cov_.mode_count(); }
    Eigen::Index rank() const { return factor_.cols(); }
    const Eigen::MatrixXd& factor() const { return factor_; }

    DisplacementVector sample(Rng& rng) const {
        DisplacementVector out{Eigen::VectorXd::Zero(mode_count())};
        for (Eigen::Index c = 0; c < factor_.cols(); ++c) {
            out.lambda.noalias() += factor_.col(c) * standard_normal(rng);
        }
        return out;
    }

   private:
    Covariance cov_;
    Eigen::MatrixXd factor_;
};

/// One draw from the channel. Builds the spectral factor on every call; hot
/// loops should hold a DisplacementChannel instead.
inline DisplacementVector sample_displacement(const Covariance& cov, Rng& rng) {
    return DisplacementChannel(cov).sample(rng);
}

/// Reads whitespace-separated rows; blank lines and '#' comments are skipped.
/// The result is not validated.
inline Eigen::MatrixXd parse_matrix_text(std::istream& in) {
    std::vector<std::vector<double>> rows;
    std::string line;
    while (std::getline(in, line)) {
        if (auto hash = line.find('#'); hash != std::string::npos) line.erase(hash);
        std::istringstream ls(line);
        std::vector<double> row;
        std::string tok;
        while (ls >> tok) {
            std::size_t used = 0;
            double value = 0.0;
            try {
                value = std::stod(tok, &used);
            } catch (const std::exception&) {
                throw std::invalid_argument("not a number in matrix text: '" + tok + "'");
            }
            if (used != tok.size()) throw std::invalid_argument("not a number in matrix text: '" + tok + "'");
            row.push_back(value);
        }
        if (!row.empty()) rows.push_back(std::move(row));
    }
    if (rows.empty()) throw std::invalid_argument("matrix text is empty");
    const std::size_t cols = rows.front().size();
    Eigen::MatrixXd out(static_cast<Eigen::Index>(rows.size()), static_cast<Eigen::Index>(cols));
    for (std::size_t i = 0; i < rows.size(); ++i) {
        if (rows[i].size() != cols) {
            throw std::invalid_argument("ragged matrix: row " + std::to_string(i + 1) + " has " +
                                        std::to_string(rows[i].size()) + " entries, expected " + std::to_string(cols));
        }
        for (std::size_t j = 0; j < cols; ++j) {
            out(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) = rows[i][j];
        }
    }
    return out;
}

inline Eigen::MatrixXd load_matrix_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot open matrix file: " + path);
    return parse_matrix_text(in);
}

inline Covariance load_covariance_file(const std::string& path) { return Covariance(load_matrix_file(path)); }

}  // namespace phlearn
