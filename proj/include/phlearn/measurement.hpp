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
#include <cstdint>
#include <optional>
#include <ostream>
#include <random>
#include <stdexcept>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include <nlohmann/json.hpp>

#include "phlearn/circuit.hpp"
#include "phlearn/core_model.hpp"
#include "phlearn/random.hpp"

namespace phlearn {

enum class Strategy { PhotonCounting, Homodyne };
enum class Task { PCA, CCA };

inline std::string_view to_string(Strategy s) { return s == Strategy::PhotonCounting ? "counting" : "homodyne"; }
inline std::string_view to_string(Task t) { return t == Task::PCA ? "pca" : "cca"; }

inline Strategy parse_strategy(std::string_view text) {
    if (text == "counting") return Strategy::PhotonCounting;
    if (text == "homodyne") return Strategy::Homodyne;
    throw std::invalid_argument("unknown strategy '" + std::string(text) + "' (expected counting|homodyne)");
}

inline Task parse_task(std::string_view text) {
    if (text == "pca") return Task::PCA;
    if (text == "cca") return Task::CCA;
    throw std::invalid_argument("unknown task '" + std::string(text) + "' (expected pca|cca)");
}

/// Vacuum quadrature variance; the homodyne noise floor.
inline constexpr double kVacuumVariance = 0.5;

struct DetectionSpec {
    Strategy strategy = Strategy::PhotonCounting;
    Task task = Task::PCA;
    int shots_per_eval = 100;
    double gain = 1.0;  // squeezing amplification G

    void validate() const {
        if (shots_per_eval < 1) throw std::invalid_argument("shots_per_eval must be >= 1");
        if (!std::isfinite(gain) || gain < 1.0) throw std::invalid_argument("gain must be >= 1");
    }
};

struct ShotRecord {
    int index = 0;
    double lambda_w = 0.0;
    std::optional<double> lambda_u;
    std::vector<double> outcomes;  // counts (n_w or n_+, n_-) or quadratures (p_w[, p_u])
    double loss = 0.0;
};

struct LossSample {
    double value = 0.0;  // mean of the per-shot losses
    int shots = 0;
    std::optional<std::vector<ShotRecord>> raw_outcomes;
};

/// Balanced beamsplitter on (lambda_w, lambda_u).
inline std::pair<double, double> interfere(double lambda_w, double lambda_u) {
    const double s = 1.0 / std::sqrt(2.0);
    return {s * (lambda_w + lambda_u), s * (lambda_w - lambda_u)};
}

/// Photon count of a vacuum mode displaced by sqrt(G) * lambda: Poisson(G lambda^2).
inline std::int64_t sample_photon_count(double lambda, double gain, Rng& rng) {
    const double mean = gain * lambda * lambda;
    if (mean <= 0.0) return 0;
    std::poisson_distribution<std::int64_t> dist(mean);
    return dist(rng);
}

/// Momentum-quadrature readout: Normal(sqrt(G) lambda, 1/2).
inline double sample_homodyne(double lambda, double gain, Rng& rng) {
    std::normal_distribution<double> dist(std::sqrt(gain) * lambda, std::sqrt(kVacuumVariance));
    return dist(rng);
}

namespace detail {

inline void check_compatible(const DetectionSpec& spec, const CircuitConfig& circuit, Eigen::Index modes) {
    spec.validate();
    if (spec.task == Task::CCA && !circuit.has_reference()) {
        throw std::invalid_argument("CCA loss requires a circuit with a reference direction u");
    }
    require_same_size(circuit.mode_count(), modes, "sample_loss");
}

/// One shot against an already-drawn collective displacement.
inline double shot_loss(const DetectionSpec& spec, const CollectiveDisplacement& cd, Rng& rng,
                        std::vector<double>* outcomes) {
    const double g = spec.gain;
    switch (spec.task) {
        case Task::PCA:
            if (spec.strategy == Strategy::PhotonCounting) {
                const auto n = sample_photon_count(cd.lambda_w, g, rng);
                if (outcomes) outcomes->assign({static_cast<double>(n)});
                return -static_cast<double>(n);
            } else {
                const double p = sample_homodyne(cd.lambda_w, g, rng);
                if (outcomes) outcomes->assign({p});
                // The vacuum offset is a known constant; removing it keeps E[L] = -G theta.
                return -(p * p - kVacuumVariance);
            }
        case Task::CCA: {
            const double lu = *cd.lambda_u;
            if (spec.strategy == Strategy::PhotonCounting) {
                const auto [plus, minus] = interfere(cd.lambda_w, lu);
                const auto n_plus = sample_photon_count(plus, g, rng);
                const auto n_minus = sample_photon_count(minus, g, rng);
                if (outcomes) outcomes->assign({static_cast<double>(n_plus), static_cast<double>(n_minus)});
                return -0.5 * static_cast<double>(n_plus - n_minus);
            } else {
                const double pw = sample_homodyne(cd.lambda_w, g, rng);
                const double pu = sample_homodyne(lu, g, rng);
                if (outcomes) outcomes->assign({pw, pu});
                return -pw * pu;
            }
        }
    }
    throw std::logic_error("unreachable");
}

}  // namespace detail

/// Runs spec.shots_per_eval independent channel uses. Every shot draws a fresh
/// displacement, projects it onto the circuit modes, and samples the detectors.
/// E[value] = -G * theta_task(w).
inline LossSample sample_loss(const DetectionSpec& spec, const CircuitConfig& circuit, const DisplacementChannel& channel,
                              Rng& rng, bool keep_outcomes = false) {
    detail::check_compatible(spec, circuit, channel.mode_count());
    LossSample out;
    out.shots = spec.shots_per_eval;
    if (keep_outcomes) {
        out.raw_outcomes.emplace();
        out.raw_outcomes->reserve(static_cast<std::size_t>(spec.shots_per_eval));
    }
    double total = 0.0;
    for (int k = 0; k < spec.shots_per_eval; ++k) {
        const DisplacementVector disp = channel.sample(rng);
        const CollectiveDisplacement cd = project_modes(circuit, disp);
        if (keep_outcomes) {
            ShotRecord rec;
            rec.index = k;
            rec.lambda_w = cd.lambda_w;
            rec.lambda_u = cd.lambda_u;
            rec.loss = detail::shot_loss(spec, cd, rng, &rec.outcomes);
            total += rec.loss;
            out.raw_outcomes->push_back(std::move(rec));
        } else {
            total += detail::shot_loss(spec, cd, rng, nullptr);
        }
    }
    out.value = total / spec.shots_per_eval;
    return out;
}

inline LossSample sample_loss(const DetectionSpec& spec, const CircuitConfig& circuit, const Covariance& cov, Rng& rng,
                              bool keep_outcomes = false) {
    return sample_loss(spec, circuit, DisplacementChannel(cov), rng, keep_outcomes);
}

struct LossMoments {
    double mean = 0.0;
    double variance = 0.0;
};

/// Closed-form mean and variance of the loss over spec.shots_per_eval shots,
/// given the collective second moments E[lambda_w^2], E[lambda_u^2] and
/// E[lambda_w lambda_u] before gain. Weak-signal forms:
///   PCA counting  (-s, s (s + 1))
///   PCA homodyne  (-s, 2 (s + 1/2)^2)
///   CCA counting  (-c, (s_w + s_u) / 4)
///   CCA homodyne  (-c, (s_w + 1/2)(s_u + 1/2) + c^2)
/// where s, c are the gained moments G E[..].
inline LossMoments loss_moments_analytic(const DetectionSpec& spec, double variance_w,
                                         std::optional<double> variance_u = std::nullopt,
                                         std::optional<double> cross = std::nullopt) {
    spec.validate();
    if (!(variance_w >= 0.0) || !std::isfinite(variance_w)) throw std::invalid_argument("variance_w must be >= 0");
    const double g = spec.gain;
    const double sw = g * variance_w;
    LossMoments m;
    if (spec.task == Task::PCA) {
        m.mean = -sw;
        m.variance = spec.strategy == Strategy::PhotonCounting ? sw * (sw + 1.0)
                                                               : 2.0 * (sw + kVacuumVariance) * (sw + kVacuumVariance);
    } else {
        if (!variance_u || !cross) throw std::invalid_argument("CCA moments need variance_u and cross");
        if (!(*variance_u >= 0.0) || !std::isfinite(*variance_u) || !std::isfinite(*cross)) {
            throw std::invalid_argument("inconsistent CCA moments");
        }
        const double bound = std::sqrt(variance_w * *variance_u);
        if (std::abs(*cross) > bound * (1.0 + 1e-9) + 1e-15) {
            throw std::invalid_argument("inconsistent moments: |cross| exceeds sqrt(variance_w * variance_u)");
        }
        const double su = g * *variance_u;
        const double c = g * *cross;
        m.mean = -c;
        m.variance = spec.strategy == Strategy::PhotonCounting
                         ? 0.25 * (sw + su)
                         : (sw + kVacuumVariance) * (su + kVacuumVariance) + c * c;
    }
    m.variance /= spec.shots_per_eval;
    return m;
}

/// sigma_c -> sqrt(G) sigma_c: the unsqueezed channel statistically equivalent
/// to running with amplification G.
inline SignalParams apply_gain_equivalence(SignalParams params, double gain) {
    if (!std::isfinite(gain) || gain < 1.0) throw std::invalid_argument("gain must be >= 1");
    params.validate();
    params.sigma_c *= std::sqrt(gain);
    return params;
}

/// One JSON object per shot: shot, lambda_w, lambda_u, outcomes, loss.
inline void write_shot_records_jsonl(std::ostream& out, const std::vector<ShotRecord>& records) {
    for (const ShotRecord& r : records) {
        nlohmann::json j;
        j["shot"] = r.index;
        j["lambda_w"] = r.lambda_w;
        j["lambda_u"] = r.lambda_u ? nlohmann::json(*r.lambda_u) : nlohmann::json(nullptr);
        j["outcomes"] = r.outcomes;
        j["loss"] = r.loss;
        out << j.dump() << '\n';
    }
}

}  // namespace phlearn
