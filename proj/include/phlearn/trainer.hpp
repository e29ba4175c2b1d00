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

#include <cstdint>
#include <functional>
#include <limits>
#include <memory>
#include <optional>
#include <random>
#include <stdexcept>
#include <vector>

#include <Eigen/Core>

#include "phlearn/accuracy.hpp"
#include "phlearn/circuit.hpp"
#include "phlearn/core_model.hpp"
#include "phlearn/measurement.hpp"
#include "phlearn/oracles.hpp"
#include "phlearn/random.hpp"

namespace phlearn {

struct PsoParams {
    int particle_count = 50;
    double inertia = 0.9;
    double r_max = 0.5;
    double forgetting = 0.1;
    int epochs = 100;
    int shots_per_eval = 1000;
    std::uint64_t seed = 1;

    void validate() const {
        if (particle_count < 2) throw std::invalid_argument("particle_count must be >= 2");
        if (!(inertia >= 0.0 && inertia < 1.0)) throw std::invalid_argument("inertia must lie in [0, 1)");
        if (!(r_max > 0.0) || !std::isfinite(r_max)) throw std::invalid_argument("r_max must be > 0");
        if (!(forgetting >= 0.0 && forgetting <= 1.0)) throw std::invalid_argument("forgetting must lie in [0, 1]");
        if (epochs < 1) throw std::invalid_argument("epochs must be >= 1");
        if (shots_per_eval < 1) throw std::invalid_argument("shots_per_eval must be >= 1");
    }
};

/// Positions live on the constraint sphere: after every move the raw
/// position + velocity is orthonormalized, and that circuit row is what gets
/// evaluated and stored.
struct Particle {
    Eigen::VectorXd position;
    Eigen::VectorXd velocity;
    double last_loss = std::numeric_limits<double>::infinity();
};

struct ScoredDirection {
    Eigen::VectorXd w;
    double loss = std::numeric_limits<double>::infinity();
};

struct Swarm {
    std::vector<Particle> particles;
    ScoredDirection best;   // lowest sampled loss of the current epoch
    ScoredDirection gbest;  // smoothed global best
    int epoch = 0;
};

/// Keeps trainable directions on the unit sphere, and orthogonal to the CCA
/// reference when one is set.
struct DirectionConstraint {
    std::optional<Eigen::VectorXd> reference;

    CircuitConfig project(const Eigen::VectorXd& raw) const { return orthonormalize(raw, reference); }

    CircuitConfig random(Eigen::Index dim, Rng& rng) const {
        for (;;) {
            try {
                return project(random_unit_vector(dim, rng));
            } catch (const DegenerateDirection&) {
            }
        }
    }
};

using LossEvaluator = std::function<LossSample(const CircuitConfig&, Rng&)>;

/// d(t+1) = m_a d(t) + r1 (w_best - w) + r2 (w_gbest - w).
inline Eigen::VectorXd velocity_update(const Eigen::VectorXd& position, const Eigen::VectorXd& velocity,
                                       const Eigen::VectorXd& best, const Eigen::VectorXd& gbest, double inertia,
                                       double r1, double r2) {
    return inertia * velocity + r1 * (best - position) + r2 * (gbest - position);
}

namespace detail {

/// Independent stream for one particle in one epoch (index == particle_count
/// is the global-best re-evaluation stream).
inline Rng particle_stream(std::uint64_t epoch_seed, std::size_t index) {
    return Rng(derive_seed(epoch_seed, {static_cast<std::uint64_t>(index)}));
}

inline void recompute_best(Swarm& swarm) {
    const Particle* winner = &swarm.particles.front();
    for (const Particle& p : swarm.particles) {
        if (p.last_loss < winner->last_loss) winner = &p;
    }
    swarm.best = {winner->position, winner->last_loss};
}

}  // namespace detail

/// Random unit positions, zero velocities, one loss sample each; gbest(0) = best(0).
inline Swarm init_swarm(Eigen::Index dim, const LossEvaluator& evaluator, const PsoParams& params,
                        const DirectionConstraint& constraint, Rng& rng) {
    params.validate();
    const std::uint64_t epoch_seed = rng();
    Swarm swarm;
    swarm.particles.resize(static_cast<std::size_t>(params.particle_count));
    for (std::size_t j = 0; j < swarm.particles.size(); ++j) {
        Rng stream = detail::particle_stream(epoch_seed, j);
        Particle& p = swarm.particles[j];
        CircuitConfig config = constraint.random(dim, stream);
        p.position = config.w();
        p.velocity = Eigen::VectorXd::Zero(dim);
        p.last_loss = evaluator(config, stream).value;
    }
    detail::recompute_best(swarm);
    swarm.gbest = swarm.best;
    return swarm;
}

/// One swarm move: every particle draws scalar r1, r2 ~ U(0, r_max), updates
/// its velocity, moves to orthonormalize(position + velocity) and gets a fresh
/// loss sample there. A move that collapses under projection is replaced by a
/// random unit direction with zero velocity. Recomputes the epoch best.
inline Swarm pso_step(Swarm swarm, const LossEvaluator& evaluator, const PsoParams& params,
                      const DirectionConstraint& constraint, Rng& rng) {
    const std::uint64_t epoch_seed = rng();
    std::uniform_real_distribution<double> coefficient(0.0, params.r_max);
    const Eigen::VectorXd best = swarm.best.w;
    const Eigen::VectorXd gbest = swarm.gbest.w;
    for (std::size_t j = 0; j < swarm.particles.size(); ++j) {
        Rng stream = detail::particle_stream(epoch_seed, j);
        Particle& p = swarm.particles[j];
        const double r1 = coefficient(stream);
        const double r2 = coefficient(stream);
        p.velocity = velocity_update(p.position, p.velocity, best, gbest, params.inertia, r1, r2);
        std::optional<CircuitConfig> config;
        try {
            config = constraint.project(p.position + p.velocity);
        } catch (const DegenerateDirection&) {
            config = constraint.random(p.position.size(), stream);
            p.velocity.setZero();
        }
        p.position = config->w();
        p.last_loss = evaluator(*config, stream).value;
    }
    detail::recompute_best(swarm);
    ++swarm.epoch;
    return swarm;
}

/// Forgetting-factor rule. An epoch best with lower sampled loss replaces the
/// global best outright. Otherwise the global best moves to
/// normalize((1 - g) w_gbest + g w_best) and its loss is resampled there; with
/// g = 0 it is left untouched.
inline Swarm update_gbest(Swarm swarm, const LossEvaluator& evaluator, const PsoParams& params,
                          const DirectionConstraint& constraint, Rng& rng) {
    const std::uint64_t stream_seed = rng();
    if (swarm.best.loss < swarm.gbest.loss) {
        swarm.gbest = swarm.best;
        return swarm;
    }
    const double g = params.forgetting;
    if (g == 0.0) return swarm;
    Rng stream = detail::particle_stream(stream_seed, swarm.particles.size());
    const Eigen::VectorXd blended = (1.0 - g) * swarm.gbest.w + g * swarm.best.w;
    std::optional<CircuitConfig> config;
    try {
        config = constraint.project(blended);
    } catch (const DegenerateDirection&) {
        // gbest and best are antipodal at g = 1/2; fall back to the epoch best.
        config = constraint.project(swarm.best.w);
    }
    swarm.gbest.w = config->w();
    swarm.gbest.loss = evaluator(*config, stream).value;
    return swarm;
}

/// A learning problem: the channel, the optional CCA reference and the
/// ground-truth optimum used to score accuracy.
struct TrainingProblem {
    Task task = Task::PCA;
    std::shared_ptr<const DisplacementChannel> channel;
    std::optional<Eigen::VectorXd> reference;
    OracleResult target;

    Eigen::Index mode_count() const { return channel->mode_count(); }
};

/// Problem over an arbitrary covariance; the target comes from the oracles.
inline TrainingProblem make_problem(Task task, const Covariance& cov, std::optional<Eigen::VectorXd> reference = std::nullopt) {
    TrainingProblem problem;
    problem.task = task;
    problem.channel = std::make_shared<const DisplacementChannel>(cov);
    if (task == Task::CCA) {
        if (!reference) throw std::invalid_argument("CCA requires a reference direction u");
        problem.reference = std::move(reference);
        problem.target = cca_optimum(cov, *problem.reference);
    } else {
        problem.target = principal_eigvec(cov);
    }
    return problem;
}

/// Problem over the rank-1 correlated-noise channel. The target depends only on
/// the signal direction, so it is computed from the unit-amplitude shape; this
/// keeps the sigma_c = 0 case scored against v instead of a degenerate optimum.
inline TrainingProblem make_problem(Task task, const SignalParams& params,
                                    std::optional<Eigen::VectorXd> reference = std::nullopt) {
    params.validate();
    const Covariance shape = make_rank1_covariance({params.mode_count, 1.0});
    TrainingProblem problem = make_problem(task, shape, std::move(reference));
    problem.channel = std::make_shared<const DisplacementChannel>(make_rank1_covariance(params));
    return problem;
}

inline LossEvaluator make_evaluator(const TrainingProblem& problem, const DetectionSpec& spec) {
    spec.validate();
    if (spec.task != problem.task) throw std::invalid_argument("detection task does not match the problem");
    auto channel = problem.channel;
    return [channel, spec](const CircuitConfig& circuit, Rng& rng) { return sample_loss(spec, circuit, *channel, rng); };
}

struct EpochRecord {
    int epoch = 0;
    double loss_best = 0.0;
    double loss_gbest = 0.0;
    double acc_best = 0.0;
    double acc_gbest = 0.0;
    Eigen::VectorXd w_best;
    Eigen::VectorXd w_gbest;
};

struct TrainingHistory {
    std::vector<EpochRecord> records;

    const EpochRecord& final_record() const {
        if (records.empty()) throw std::logic_error("empty training history");
        return records.back();
    }
};

/// Runs params.epochs rounds of pso_step + update_gbest after the random
/// initialization, scoring best and gbest against the problem's optimum after
/// each round. Deterministic in params.seed.
inline TrainingHistory train(const TrainingProblem& problem, Strategy strategy, double gain, const PsoParams& params) {
    params.validate();
    DetectionSpec spec{strategy, problem.task, params.shots_per_eval, gain};
    const LossEvaluator evaluator = make_evaluator(problem, spec);
    const DirectionConstraint constraint{problem.reference};
    Rng rng(params.seed);

    Swarm swarm = init_swarm(problem.mode_count(), evaluator, params, constraint, rng);
    TrainingHistory history;
    history.records.reserve(static_cast<std::size_t>(params.epochs));
    for (int t = 1; t <= params.epochs; ++t) {
        swarm = pso_step(std::move(swarm), evaluator, params, constraint, rng);
        swarm = update_gbest(std::move(swarm), evaluator, params, constraint, rng);
        EpochRecord rec;
        rec.epoch = t;
        rec.loss_best = swarm.best.loss;
        rec.loss_gbest = swarm.gbest.loss;
        rec.acc_best = problem.target.score(swarm.best.w);
        rec.acc_gbest = problem.target.score(swarm.gbest.w);
        rec.w_best = swarm.best.w;
        rec.w_gbest = swarm.gbest.w;
        history.records.push_back(std::move(rec));
    }
    return history;
}

}  // namespace phlearn
