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

#include "phlearn/trainer.hpp"

#include <gtest/gtest.h>

#include <cmath>

#include "phlearn/stats.hpp"

using namespace phlearn;

namespace {

// Noise-free loss -(w . target)^2, so the swarm's behaviour can be checked exactly.
LossEvaluator overlap_evaluator(Eigen::VectorXd target) {
    return [target](const CircuitConfig& c, Rng&) {
        const double o = c.w().dot(target);
        return LossSample{-o * o, 1, std::nullopt};
    };
}

PsoParams small_params(int epochs = 10) {
    PsoParams p;
    p.particle_count = 8;
    p.epochs = epochs;
    p.shots_per_eval = 20;
    return p;
}

}  // namespace

TEST(PsoParams, validation) {
    EXPECT_NO_THROW(PsoParams{}.validate());
    auto bad = [](auto mutate) {
        PsoParams p;
        mutate(p);
        return p;
    };
    EXPECT_THROW(bad([](PsoParams& p) { p.particle_count = 1; }).validate(), std::invalid_argument);
    EXPECT_THROW(bad([](PsoParams& p) { p.inertia = 1.0; }).validate(), std::invalid_argument);
    EXPECT_THROW(bad([](PsoParams& p) { p.r_max = 0.0; }).validate(), std::invalid_argument);
    EXPECT_THROW(bad([](PsoParams& p) { p.forgetting = 1.5; }).validate(), std::invalid_argument);
    EXPECT_THROW(bad([](PsoParams& p) { p.epochs = 0; }).validate(), std::invalid_argument);
    EXPECT_THROW(bad([](PsoParams& p) { p.shots_per_eval = 0; }).validate(), std::invalid_argument);
}

TEST(velocity_update, examples) {
    const Eigen::Vector2d w(1, 0), b(0, 1), d(0.5, 0.5);
    // No inertia, r1 = r2 = r, best = gbest: w + 2 r (b - w).
    EXPECT_LT((velocity_update(w, d, b, b, 0.0, 0.25, 0.25) - 0.5 * (b - w)).norm(), 1e-15);
    EXPECT_LT((velocity_update(w, d, w, w, 0.7, 0.3, 0.4) - 0.7 * d).norm(), 1e-15);
    EXPECT_LT(velocity_update(w, Eigen::Vector2d::Zero(), w, w, 0.7, 0.3, 0.4).norm(), 1e-15);
}

TEST(pso_step, fixed_point_when_everything_agrees) {
    const Eigen::Vector3d x = Eigen::Vector3d(1, 2, 2) / 3.0;
    Swarm swarm;
    swarm.particles.assign(4, Particle{x, Eigen::Vector3d::Zero(), 0.0});
    swarm.best = {x, -1.0};
    swarm.gbest = {x, -1.0};
    PsoParams params = small_params();
    params.particle_count = 4;
    Rng rng(1);
    Swarm next = pso_step(swarm, overlap_evaluator(x), params, DirectionConstraint{}, rng);
    for (const auto& p : next.particles) {
        EXPECT_LT((p.position - x).norm(), 1e-14);
        EXPECT_LT(p.velocity.norm(), 1e-15);
    }
    EXPECT_EQ(next.epoch, 1);
}

TEST(pso_step, positions_stay_on_constraint_sphere) {
    const Eigen::Index m = 7;
    Rng rng(2);
    const Eigen::VectorXd u = random_unit_vector(m, rng);
    DirectionConstraint constraint{u};
    PsoParams params = small_params();
    auto evaluator = overlap_evaluator(random_unit_vector(m, rng));
    Swarm swarm = init_swarm(m, evaluator, params, constraint, rng);
    for (int t = 0; t < 20; ++t) {
        swarm = pso_step(std::move(swarm), evaluator, params, constraint, rng);
        swarm = update_gbest(std::move(swarm), evaluator, params, constraint, rng);
        for (const auto& p : swarm.particles) {
            EXPECT_NEAR(p.position.norm(), 1.0, 1e-12);
            EXPECT_LT(std::abs(p.position.dot(u)), 1e-10);
        }
        EXPECT_NEAR(swarm.gbest.w.norm(), 1.0, 1e-12);
        EXPECT_LT(std::abs(swarm.gbest.w.dot(u)), 1e-10);
    }
}

TEST(pso_step, degenerate_move_is_resampled) {
    // position + velocity lands exactly on u, which projects to nothing.
    const Eigen::Vector3d u(0, 0, 1), p(1, 0, 0);
    PsoParams params = small_params();
    params.particle_count = 2;
    params.inertia = 0.5;
    Swarm swarm;
    swarm.particles.assign(2, Particle{p, (u - p) / params.inertia, 0.0});
    swarm.best = {p, 0.0};
    swarm.gbest = {p, 0.0};
    Rng rng(3);
    Swarm next = pso_step(swarm, overlap_evaluator(Eigen::Vector3d(0, 1, 0)), params, DirectionConstraint{u}, rng);
    for (const auto& q : next.particles) {
        EXPECT_NEAR(q.position.norm(), 1.0, 1e-12);
        EXPECT_LT(std::abs(q.position.dot(u)), 1e-10);
        EXPECT_EQ(q.velocity.norm(), 0.0);
    }
}

TEST(update_gbest, improvement_replaces) {
    Swarm swarm;
    swarm.particles.resize(2);
    swarm.best = {Eigen::Vector2d(1, 0), -2.0};
    swarm.gbest = {Eigen::Vector2d(0, 1), -1.0};
    Rng rng(4);
    Swarm next = update_gbest(swarm, overlap_evaluator(Eigen::Vector2d(1, 0)), small_params(), {}, rng);
    EXPECT_EQ(next.gbest.w, Eigen::VectorXd(Eigen::Vector2d(1, 0)));
    EXPECT_EQ(next.gbest.loss, -2.0);
}

TEST(update_gbest, zero_forgetting_keeps_gbest) {
    Swarm swarm;
    swarm.particles.resize(2);
    swarm.best = {Eigen::Vector2d(1, 0), -0.5};
    swarm.gbest = {Eigen::Vector2d(0, 1), -1.0};
    PsoParams params = small_params();
    params.forgetting = 0.0;
    Rng rng(5);
    Swarm next = update_gbest(swarm, overlap_evaluator(Eigen::Vector2d(1, 0)), params, {}, rng);
    EXPECT_EQ(next.gbest.w, swarm.gbest.w);
    EXPECT_EQ(next.gbest.loss, -1.0);
}

TEST(update_gbest, forgetting_blends_and_resamples) {
    Swarm swarm;
    swarm.particles.resize(2);
    swarm.best = {Eigen::Vector2d(1, 0), -0.5};
    swarm.gbest = {Eigen::Vector2d(0, 1), -1.0};
    PsoParams params = small_params();
    params.forgetting = 1.0;
    Rng rng(6);
    Swarm full = update_gbest(swarm, overlap_evaluator(Eigen::Vector2d(1, 0)), params, {}, rng);
    EXPECT_LT((full.gbest.w - Eigen::Vector2d(1, 0)).norm(), 1e-15);
    EXPECT_DOUBLE_EQ(full.gbest.loss, -1.0);

    params.forgetting = 0.5;
    Swarm half = update_gbest(swarm, overlap_evaluator(Eigen::Vector2d(1, 0)), params, {}, rng);
    EXPECT_LT((half.gbest.w - Eigen::Vector2d(1, 1).normalized()).norm(), 1e-15);
    EXPECT_NEAR(half.gbest.loss, -0.5, 1e-15);
}

TEST(pso, noiseless_swarm_finds_the_target) {
    const Eigen::Index m = 6;
    Rng rng(7);
    const Eigen::VectorXd target = random_unit_vector(m, rng);
    auto evaluator = overlap_evaluator(target);
    PsoParams params = small_params();
    params.particle_count = 20;
    Swarm swarm = init_swarm(m, evaluator, params, {}, rng);
    for (int t = 0; t < 60; ++t) {
        swarm = pso_step(std::move(swarm), evaluator, params, {}, rng);
        swarm = update_gbest(std::move(swarm), evaluator, params, {}, rng);
    }
    EXPECT_GT(accuracy(swarm.gbest.w, target).value(), 0.99);
}

TEST(make_problem, targets_and_errors) {
    auto pca = make_problem(Task::PCA, SignalParams{5, 0.1});
    EXPECT_LT((pca.target.w_star - uniform_direction(5)).norm(), 1e-10);
    EXPECT_EQ(pca.mode_count(), 5);
    EXPECT_THROW(make_problem(Task::CCA, SignalParams{5, 0.1}), std::invalid_argument);
    const Eigen::VectorXd u = reference_at_angle(5, 0.5);
    auto cca = make_problem(Task::CCA, SignalParams{5, 0.1}, u);
    EXPECT_LT(std::abs(cca.target.w_star.dot(u)), 1e-12);
    // sigma_c = 0 still has a well-defined target.
    auto dark = make_problem(Task::PCA, SignalParams{5, 0.0});
    EXPECT_FALSE(dark.target.degenerate);
    DetectionSpec wrong{Strategy::Homodyne, Task::CCA, 10, 1.0};
    EXPECT_THROW(make_evaluator(pca, wrong), std::invalid_argument);
}

TEST(train, history_shape_and_invariants) {
    const Eigen::VectorXd u = reference_at_angle(6, 0.8);
    auto problem = make_problem(Task::CCA, SignalParams{6, 0.1}, u);
    auto h = train(problem, Strategy::Homodyne, 1.0, small_params(12));
    ASSERT_EQ(h.records.size(), 12u);
    for (std::size_t t = 0; t < h.records.size(); ++t) {
        const auto& r = h.records[t];
        EXPECT_EQ(r.epoch, static_cast<int>(t) + 1);
        EXPECT_GE(r.acc_best, 0.0);
        EXPECT_LE(r.acc_gbest, 1.0);
        EXPECT_NEAR(r.w_gbest.norm(), 1.0, 1e-12);
        EXPECT_LT(std::abs(r.w_gbest.dot(u)), 1e-10);
        EXPECT_LT(std::abs(r.w_best.dot(u)), 1e-10);
    }
    EXPECT_EQ(&h.final_record(), &h.records.back());
    EXPECT_THROW(TrainingHistory{}.final_record(), std::logic_error);
}

TEST(train, deterministic_in_seed) {
    auto problem = make_problem(Task::PCA, SignalParams{5, 0.1});
    auto a = train(problem, Strategy::PhotonCounting, 1.0, small_params());
    auto b = train(problem, Strategy::PhotonCounting, 1.0, small_params());
    PsoParams other = small_params();
    other.seed = 2;
    auto c = train(problem, Strategy::PhotonCounting, 1.0, other);
    ASSERT_EQ(a.records.size(), b.records.size());
    bool differs = false;
    for (std::size_t t = 0; t < a.records.size(); ++t) {
        EXPECT_EQ(a.records[t].loss_gbest, b.records[t].loss_gbest);
        EXPECT_EQ(a.records[t].w_gbest, b.records[t].w_gbest);
        differs = differs || a.records[t].w_gbest != c.records[t].w_gbest;
    }
    EXPECT_TRUE(differs);
}

TEST(train, zero_forgetting_gbest_only_improves) {
    auto problem = make_problem(Task::PCA, SignalParams{5, 0.1});
    PsoParams params = small_params(15);
    params.forgetting = 0.0;
    auto h = train(problem, Strategy::PhotonCounting, 1.0, params);
    for (std::size_t t = 1; t < h.records.size(); ++t) {
        EXPECT_LE(h.records[t].loss_gbest, h.records[t - 1].loss_gbest);
    }
}

TEST(train, no_signal_is_chance_level) {
    auto problem = make_problem(Task::PCA, SignalParams{8, 0.0});
    std::vector<double> acc;
    for (std::uint64_t seed = 1; seed <= 40; ++seed) {
        PsoParams params = small_params(5);
        params.seed = seed;
        acc.push_back(train(problem, Strategy::PhotonCounting, 1.0, params).final_record().acc_gbest);
    }
    const auto m = stats::moments(acc);
    EXPECT_NEAR(m.mean(), 1.0 / 8, 4 * m.standard_error() + 0.02);
}

TEST(train, strong_signal_two_modes_counting_learns) {
    auto problem = make_problem(Task::PCA, SignalParams{2, 0.2});
    int good = 0;
    for (std::uint64_t seed = 1; seed <= 10; ++seed) {
        PsoParams params;
        params.particle_count = 20;
        params.epochs = 30;
        params.seed = seed;
        if (train(problem, Strategy::PhotonCounting, 1.0, params).final_record().acc_gbest >= 0.9) ++good;
    }
    EXPECT_GE(good, 8);
}
