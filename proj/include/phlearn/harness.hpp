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

#include <atomic>
#include <atomic>
#include <chrono>
#include <cmath>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <functional>
#include <mutex>
#include <numbers>
#include <optional>
#include <sstream>
#include <stdexcept>
#include <string>
#include <thread>
#include <vector>

#include <nlohmann/json.hpp>

#include "phlearn/csv.hpp"
#include "phlearn/measurement.hpp"
#include "phlearn/oracles.hpp"
#include "phlearn/stats.hpp"
#include "phlearn/trainer.hpp"

namespace phlearn {

/// Invalid experiment configuration (CLI exit code 2).
class ConfigError : public std::invalid_argument {
   public:
    using std::invalid_argument::invalid_argument;
};

inline std::vector<double> log_spaced(double lo, double hi, int count) {
    std::vector<double> out;
    if (count == 1) return {lo};
    for (int i = 0; i < count; ++i) {
        out.push_back(std::exp(std::log(lo) + (std::log(hi) - std::log(lo)) * i / (count - 1)));
    }
    return out;
}

struct ExperimentConfig {
    Task task = Task::PCA;
    std::vector<Strategy> strategies{Strategy::PhotonCounting, Strategy::Homodyne};
    int modes = 21;
    double sigma_c = 0.02;
    double gain = 1.0;
    PsoParams pso;
    std::uint64_t seed = 1;
    int repeats = 10;
    std::vector<double> sigma_list = log_spaced(1e-3, 0.3, 8);
    std::vector<int> modes_list{6, 11, 21, 41};
    std::vector<double> gain_list{1.0, 4.0, 25.0, 100.0};
    double total_signal = 0.2;  // sqrt(M) sigma_c held fixed in the mode sweep
    double u_angle_deg = 45.0;  // angle between the CCA reference u and v
    std::string cov_file;
    std::string out = "phlearn-run";
    int jobs = 1;
    long ks_samples = 100000;
    std::string dump_shots;

    void validate() const {
        try {
            pso.validate();
            SignalParams{modes, sigma_c}.validate();
        } catch (const std::invalid_argument& e) {
            throw ConfigError(e.what());
        }
        if (strategies.empty()) throw ConfigError("no detection strategy selected");
        if (!std::isfinite(gain) || gain < 1.0) throw ConfigError("gain must be >= 1");
        if (repeats < 1) throw ConfigError("repeats must be >= 1");
        if (sigma_list.empty() || modes_list.empty() || gain_list.empty()) throw ConfigError("sweep lists must be nonempty");
        for (double s : sigma_list) {
            if (!std::isfinite(s) || s < 0.0) throw ConfigError("sigma list entries must be finite and >= 0");
        }
        for (int m : modes_list) {
            if (m < 2) throw ConfigError("mode list entries must be >= 2");
        }
        for (double g : gain_list) {
            if (!std::isfinite(g) || g < 1.0) throw ConfigError("gain list entries must be >= 1");
        }
        if (!(total_signal >= 0.0) || !std::isfinite(total_signal)) throw ConfigError("total_signal must be >= 0");
        if (!std::isfinite(u_angle_deg)) throw ConfigError("u_angle must be finite");
        if (jobs < 1) throw ConfigError("jobs must be >= 1");
        if (ks_samples < 2) throw ConfigError("ks_samples must be >= 2");
        if (out.empty()) throw ConfigError("output path is empty");
    }
};

inline nlohmann::json to_json(const ExperimentConfig& c) {
    nlohmann::json j;
    j["task"] = std::string(to_string(c.task));
    std::vector<std::string> strategies;
    for (Strategy s : c.strategies) strategies.emplace_back(to_string(s));
    j["strategies"] = strategies;
    j["modes"] = c.modes;
    j["sigma_c"] = c.sigma_c;
    j["gain"] = c.gain;
    j["seed"] = c.seed;
    j["repeats"] = c.repeats;
    j["sigma_list"] = c.sigma_list;
    j["modes_list"] = c.modes_list;
    j["gain_list"] = c.gain_list;
    j["total_signal"] = c.total_signal;
    j["u_angle_deg"] = c.u_angle_deg;
    j["cov_file"] = c.cov_file;
    j["ks_samples"] = c.ks_samples;
    j["pso"] = {{"particles", c.pso.particle_count}, {"inertia", c.pso.inertia},   {"r_max", c.pso.r_max},
                {"forgetting", c.pso.forgetting},    {"epochs", c.pso.epochs},     {"shots", c.pso.shots_per_eval}};
    return j;
}

/// seed_point = hash(base seed, task, strategy, M, sigma_c, G, repeat).
inline std::uint64_t point_seed(std::uint64_t base, Task task, Strategy strategy, int modes, double sigma_c, double gain,
                                int repeat) {
    return derive_seed(base, {hash_label(to_string(task)), hash_label(to_string(strategy)),
                              static_cast<std::uint64_t>(modes), hash_real(sigma_c), hash_real(gain),
                              static_cast<std::uint64_t>(repeat)});
}

inline std::optional<Eigen::VectorXd> reference_for(const ExperimentConfig& c, Task task, Eigen::Index modes) {
    if (task != Task::CCA) return std::nullopt;
    return reference_at_angle(modes, c.u_angle_deg * std::numbers::pi / 180.0);
}

/// Rank-1 problem at (M, sigma_c), or the covariance-file problem when one is configured.
inline TrainingProblem problem_for(const ExperimentConfig& c, Task task, int modes, double sigma_c) {
    try {
        if (!c.cov_file.empty()) {
            Covariance cov = load_covariance_file(c.cov_file);
            return make_problem(task, cov, reference_for(c, task, cov.mode_count()));
        }
        return make_problem(task, SignalParams{modes, sigma_c}, reference_for(c, task, modes));
    } catch (const std::invalid_argument& e) {
        throw ConfigError(e.what());
    } catch (const std::runtime_error& e) {
        // unreadable file or degenerate CCA optimum
        throw ConfigError(e.what());
    }
}

struct SweepRecord {
    Task task = Task::PCA;
    Strategy strategy = Strategy::PhotonCounting;
    int modes = 0;
    double sigma_c = 0.0;
    double gain = 1.0;
    std::uint64_t seed = 0;
    double final_acc_best = 0.0;
    double final_acc_gbest = 0.0;
    int epochs = 0;
    double baseline = 0.0;   // random-guess limit 1/M
    double wall_time = 0.0;  // seconds; reported in summary.json, not in the CSV

    bool operator==(const SweepRecord& o) const {
        return task == o.task && strategy == o.strategy && modes == o.modes && sigma_c == o.sigma_c &&
               gain == o.gain && seed == o.seed && final_acc_best == o.final_acc_best &&
               final_acc_gbest == o.final_acc_gbest && epochs == o.epochs && baseline == o.baseline;
    }
};

struct PointResult {
    SweepRecord record;
    TrainingHistory history;
};

inline PointResult run_point(const ExperimentConfig& c, Task task, Strategy strategy, int modes, double sigma_c,
                             double gain, int repeat) {
    const auto start = std::chrono::steady_clock::now();
    const TrainingProblem problem = problem_for(c, task, modes, sigma_c);
    PsoParams pso = c.pso;
    pso.seed = point_seed(c.seed, task, strategy, static_cast<int>(problem.mode_count()), sigma_c, gain, repeat);
    PointResult out;
    out.history = train(problem, strategy, gain, pso);
    SweepRecord& r = out.record;
    r.task = task;
    r.strategy = strategy;
    r.modes = static_cast<int>(problem.mode_count());
    r.sigma_c = c.cov_file.empty() ? sigma_c : std::nan("");
    r.gain = gain;
    r.seed = pso.seed;
    r.final_acc_best = out.history.final_record().acc_best;
    r.final_acc_gbest = out.history.final_record().acc_gbest;
    r.epochs = pso.epochs;
    r.baseline = 1.0 / static_cast<double>(r.modes);
    r.wall_time = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    return out;
}

/// Runs fn(0..count-1) on at most `jobs` threads; results keep index order.
template <typename T>
std::vector<T> parallel_map(std::size_t count, int jobs, const std::function<T(std::size_t)>& fn) {
    std::vector<std::optional<T>> slots(count);
    std::atomic<std::size_t> next{0};
    std::exception_ptr failure;
    std::mutex failure_mutex;
    auto worker = [&] {
        for (;;) {
            const std::size_t i = next.fetch_add(1);
            if (i >= count) return;
            try {
                slots[i].emplace(fn(i));
            } catch (...) {
                std::lock_guard<std::mutex> lock(failure_mutex);
                if (!failure) failure = std::current_exception();
                next.store(count);
                return;
            }
        }
    };
    const std::size_t threads = std::min<std::size_t>(static_cast<std::size_t>(std::max(jobs, 1)), count);
    if (threads <= 1) {
        worker();
    } else {
        std::vector<std::thread> pool;
        for (std::size_t t = 0; t < threads; ++t) pool.emplace_back(worker);
        for (auto& th : pool) th.join();
    }
    if (failure) std::rethrow_exception(failure);
    std::vector<T> out;
    out.reserve(count);
    for (auto& s : slots) out.push_back(std::move(*s));
    return out;
}

// ---- CSV schemas -----------------------------------------------------------

inline const std::vector<std::string>& history_header() {
    static const std::vector<std::string> h{"epoch", "loss_best", "loss_gbest", "acc_best", "acc_gbest"};
    return h;
}

inline const std::vector<std::string>& sweep_header() {
    static const std::vector<std::string> h{"task",           "strategy",        "M",      "sigma_c",
                                            "gain",           "seed",            "final_acc_best",
                                            "final_acc_gbest", "epochs",         "baseline"};
    return h;
}

struct HistoryRow {
    int epoch = 0;
    double loss_best = 0.0;
    double loss_gbest = 0.0;
    double acc_best = 0.0;
    double acc_gbest = 0.0;

    bool operator==(const HistoryRow&) const = default;
};

inline std::vector<HistoryRow> history_rows(const TrainingHistory& h) {
    std::vector<HistoryRow> rows;
    for (const auto& r : h.records) rows.push_back({r.epoch, r.loss_best, r.loss_gbest, r.acc_best, r.acc_gbest});
    return rows;
}

inline std::string join_header(const std::vector<std::string>& header) {
    std::string out;
    for (const auto& h : header) out += (out.empty() ? "" : ",") + h;
    return out + "\n";
}

inline std::string history_csv(const std::vector<HistoryRow>& rows) {
    std::string out = join_header(history_header());
    for (const auto& r : rows) {
        out += std::to_string(r.epoch) + "," + csv::format_real(r.loss_best) + "," + csv::format_real(r.loss_gbest) +
               "," + csv::format_real(r.acc_best) + "," + csv::format_real(r.acc_gbest) + "\n";
    }
    return out;
}

inline std::vector<HistoryRow> parse_history_csv(std::string_view text) {
    const csv::Table table = csv::parse_table(text);
    csv::expect_header(table, history_header());
    std::vector<HistoryRow> rows;
    for (const auto& f : table.rows) {
        rows.push_back({csv::parse_integer<int>(f[0]), csv::parse_real(f[1]), csv::parse_real(f[2]),
                        csv::parse_real(f[3]), csv::parse_real(f[4])});
    }
    return rows;
}

inline std::string sweep_csv(const std::vector<SweepRecord>& records) {
    std::string out = join_header(sweep_header());
    for (const auto& r : records) {
        out += std::string(to_string(r.task)) + "," + std::string(to_string(r.strategy)) + "," +
               std::to_string(r.modes) + "," + csv::format_real(r.sigma_c) + "," + csv::format_real(r.gain) + "," +
               std::to_string(r.seed) + "," + csv::format_real(r.final_acc_best) + "," +
               csv::format_real(r.final_acc_gbest) + "," + std::to_string(r.epochs) + "," +
               csv::format_real(r.baseline) + "\n";
    }
    return out;
}

inline std::vector<SweepRecord> parse_sweep_csv(std::string_view text) {
    const csv::Table table = csv::parse_table(text);
    csv::expect_header(table, sweep_header());
    std::vector<SweepRecord> out;
    for (const auto& f : table.rows) {
        SweepRecord r;
        r.task = parse_task(f[0]);
        r.strategy = parse_strategy(f[1]);
        r.modes = csv::parse_integer<int>(f[2]);
        r.sigma_c = csv::parse_real(f[3]);
        r.gain = csv::parse_real(f[4]);
        r.seed = csv::parse_integer<std::uint64_t>(f[5]);
        r.final_acc_best = csv::parse_real(f[6]);
        r.final_acc_gbest = csv::parse_real(f[7]);
        r.epochs = csv::parse_integer<int>(f[8]);
        r.baseline = csv::parse_real(f[9]);
        out.push_back(r);
    }
    return out;
}

// ---- Output ----------------------------------------------------------------

/// Writes to a sibling temporary file, then renames over the target, so a
/// failed run never leaves a partial file behind.
inline void atomic_write_file(const std::filesystem::path& path, const std::string& content) {
    std::filesystem::path tmp = path;
    tmp += ".tmp";
    {
        std::ofstream f(tmp, std::ios::binary | std::ios::trunc);
        if (!f) throw std::runtime_error("cannot write " + tmp.string());
        f << content;
        f.flush();
        if (!f) {
            std::error_code ignored;
            std::filesystem::remove(tmp, ignored);
            throw std::runtime_error("failed writing " + tmp.string());
        }
    }
    std::filesystem::rename(tmp, path);
}

inline std::filesystem::path prepare_output_dir(const ExperimentConfig& c) {
    std::filesystem::path dir(c.out);
    std::error_code ec;
    std::filesystem::create_directories(dir, ec);
    if (ec || !std::filesystem::is_directory(dir)) throw std::runtime_error("cannot create output directory " + c.out);
    return dir;
}

inline nlohmann::json records_summary(const std::vector<SweepRecord>& records) {
    nlohmann::json points = nlohmann::json::array();
    for (const auto& r : records) {
        points.push_back({{"task", std::string(to_string(r.task))},
                          {"strategy", std::string(to_string(r.strategy))},
                          {"M", r.modes},
                          {"sigma_c", r.sigma_c},
                          {"gain", r.gain},
                          {"seed", r.seed},
                          {"final_acc_gbest", r.final_acc_gbest},
                          {"wall_time", r.wall_time}});
    }
    return points;
}

// ---- Experiments -----------------------------------------------------------

struct TrainingRun {
    Strategy strategy = Strategy::PhotonCounting;
    PointResult point;
    std::string csv;
};

/// Single (M, sigma_c) training run per selected strategy. Files: config.json,
/// history.csv (history_<strategy>.csv when several strategies run),
/// summary.json and, when requested, a JSONL shot dump of the final global best.
inline std::vector<TrainingRun> run_training(const ExperimentConfig& c, bool write_files = true) {
    c.validate();
    std::vector<TrainingRun> runs;
    for (Strategy s : c.strategies) {
        TrainingRun run;
        run.strategy = s;
        run.point = run_point(c, c.task, s, c.modes, c.sigma_c, c.gain, 0);
        run.csv = history_csv(history_rows(run.point.history));
        runs.push_back(std::move(run));
    }
    if (!write_files) return runs;

    // Compute everything before touching the output directory.
    std::vector<std::pair<std::string, std::string>> files;
    nlohmann::json summary;
    summary["command"] = "train";
    for (const auto& run : runs) {
        const std::string name =
            runs.size() == 1 ? "history.csv" : "history_" + std::string(to_string(run.strategy)) + ".csv";
        files.emplace_back(name, run.csv);
        summary["runs"].push_back({{"strategy", std::string(to_string(run.strategy))},
                                   {"history", name},
                                   {"seed", run.point.record.seed},
                                   {"final_acc_best", run.point.record.final_acc_best},
                                   {"final_acc_gbest", run.point.record.final_acc_gbest},
                                   {"baseline", run.point.record.baseline},
                                   {"wall_time", run.point.record.wall_time}});
        if (!c.dump_shots.empty()) {
            const TrainingProblem problem = problem_for(c, c.task, c.modes, c.sigma_c);
            const auto& last = run.point.history.final_record();
            const CircuitConfig circuit = orthonormalize(last.w_gbest, problem.reference);
            DetectionSpec spec{run.strategy, c.task, c.pso.shots_per_eval, c.gain};
            Rng rng(derive_seed(run.point.record.seed, {hash_label("dump")}));
            const LossSample sample = sample_loss(spec, circuit, *problem.channel, rng, true);
            std::ostringstream jsonl;
            write_shot_records_jsonl(jsonl, *sample.raw_outcomes);
            const std::string dump_name =
                runs.size() == 1 ? c.dump_shots : std::string(to_string(run.strategy)) + "_" + c.dump_shots;
            files.emplace_back(dump_name, jsonl.str());
        }
    }
    nlohmann::json meta = to_json(c);
    meta["command"] = "train";
    files.emplace_back("config.json", meta.dump(2) + "\n");
    files.emplace_back("summary.json", summary.dump(2) + "\n");

    const auto dir = prepare_output_dir(c);
    for (const auto& [name, content] : files) atomic_write_file(dir / name, content);
    return runs;
}

namespace detail {

struct PointSpec {
    Task task;
    Strategy strategy;
    int modes;
    double sigma_c;
    double gain;
    int repeat;
};

inline std::vector<SweepRecord> run_points(const ExperimentConfig& c, const std::vector<PointSpec>& points) {
    return parallel_map<SweepRecord>(points.size(), c.jobs, [&](std::size_t i) {
        const PointSpec& p = points[i];
        return run_point(c, p.task, p.strategy, p.modes, p.sigma_c, p.gain, p.repeat).record;
    });
}

inline void write_sweep(const ExperimentConfig& c, const std::string& command, const std::string& csv_name,
                        const std::vector<SweepRecord>& records, nlohmann::json extra = {}) {
    nlohmann::json meta = to_json(c);
    meta["command"] = command;
    nlohmann::json summary;
    summary["command"] = command;
    summary["csv"] = csv_name;
    summary["points"] = records_summary(records);
    if (!extra.is_null()) summary["report"] = std::move(extra);
    const std::string csv_text = sweep_csv(records);
    const auto dir = prepare_output_dir(c);
    atomic_write_file(dir / csv_name, csv_text);
    atomic_write_file(dir / "config.json", meta.dump(2) + "\n");
    atomic_write_file(dir / "summary.json", summary.dump(2) + "\n");
}

inline void require_rank1(const ExperimentConfig& c, const char* command) {
    if (!c.cov_file.empty()) throw ConfigError(std::string(command) + " sweeps the rank-1 channel; drop --cov-file");
}

}  // namespace detail

/// One record per (sigma_c, strategy, repeat) at fixed M.
inline std::vector<SweepRecord> run_sigma_sweep(const ExperimentConfig& c, bool write_files = true) {
    c.validate();
    detail::require_rank1(c, "sweep-sigma");
    std::vector<detail::PointSpec> points;
    for (double s : c.sigma_list) {
        for (Strategy st : c.strategies) {
            for (int r = 0; r < c.repeats; ++r) points.push_back({c.task, st, c.modes, s, c.gain, r});
        }
    }
    auto records = detail::run_points(c, points);
    if (write_files) detail::write_sweep(c, "sweep-sigma", "sweep_sigma.csv", records);
    return records;
}

/// One record per (M, strategy, repeat) with sigma_c = total_signal / sqrt(M).
inline std::vector<SweepRecord> run_mode_sweep(const ExperimentConfig& c, bool write_files = true) {
    c.validate();
    detail::require_rank1(c, "sweep-modes");
    std::vector<detail::PointSpec> points;
    for (int m : c.modes_list) {
        const double s = c.total_signal / std::sqrt(static_cast<double>(m));
        for (Strategy st : c.strategies) {
            for (int r = 0; r < c.repeats; ++r) points.push_back({c.task, st, m, s, c.gain, r});
        }
    }
    auto records = detail::run_points(c, points);
    if (write_files) detail::write_sweep(c, "sweep-modes", "sweep_modes.csv", records);
    return records;
}

/// Single-shot loss samples at the problem optimum; used to compare loss
/// distributions between a gained and a rescaled channel.
inline std::vector<double> loss_samples_at_optimum(const TrainingProblem& problem, Strategy strategy, double gain,
                                                   long count, std::uint64_t seed) {
    const CircuitConfig circuit = orthonormalize(problem.target.w_star, problem.reference);
    DetectionSpec spec{strategy, problem.task, 1, gain};
    Rng rng(seed);
    std::vector<double> out;
    out.reserve(static_cast<std::size_t>(count));
    for (long i = 0; i < count; ++i) out.push_back(sample_loss(spec, circuit, *problem.channel, rng).value);
    return out;
}

struct GainComparison {
    double gain = 1.0;
    Strategy strategy = Strategy::PhotonCounting;
    double sigma_c = 0.0;         // amplified arm: (gain, sigma_c)
    double rescaled_sigma_c = 0.0;  // reference arm: (1, sqrt(gain) sigma_c)
    double median_amplified = 0.0;
    double median_rescaled = 0.0;
    stats::Interval iqr_amplified;
    stats::Interval iqr_rescaled;
    stats::KsResult ks;
};

struct GainStudy {
    std::vector<SweepRecord> records;
    std::vector<GainComparison> comparisons;
};

inline nlohmann::json to_json(const GainComparison& g) {
    return {{"gain", g.gain},
            {"strategy", std::string(to_string(g.strategy))},
            {"sigma_c", g.sigma_c},
            {"rescaled_sigma_c", g.rescaled_sigma_c},
            {"median_acc_amplified", g.median_amplified},
            {"median_acc_rescaled", g.median_rescaled},
            {"iqr_amplified", {g.iqr_amplified.lo, g.iqr_amplified.hi}},
            {"iqr_rescaled", {g.iqr_rescaled.lo, g.iqr_rescaled.hi}},
            {"iqr_overlap", g.iqr_amplified.overlaps(g.iqr_rescaled)},
            {"ks_statistic", g.ks.statistic},
            {"ks_p_value", g.ks.p_value}};
}

/// For each G: trains (G, sigma_c) and (1, sqrt(G) sigma_c) and compares the
/// trained accuracies and the single-shot loss distributions (two-sample KS).
inline GainStudy run_gain_study(const ExperimentConfig& c, bool write_files = true) {
    c.validate();
    detail::require_rank1(c, "gain-study");
    std::vector<detail::PointSpec> points;
    for (double g : c.gain_list) {
        const double rescaled = apply_gain_equivalence({c.modes, c.sigma_c}, g).sigma_c;
        for (Strategy st : c.strategies) {
            for (int r = 0; r < c.repeats; ++r) points.push_back({c.task, st, c.modes, c.sigma_c, g, r});
            for (int r = 0; r < c.repeats; ++r) points.push_back({c.task, st, c.modes, rescaled, 1.0, r});
        }
    }
    GainStudy study;
    study.records = detail::run_points(c, points);

    std::size_t cursor = 0;
    for (double g : c.gain_list) {
        const double rescaled = apply_gain_equivalence({c.modes, c.sigma_c}, g).sigma_c;
        for (Strategy st : c.strategies) {
            std::vector<double> amplified;
            std::vector<double> reference;
            for (int r = 0; r < c.repeats; ++r) amplified.push_back(study.records[cursor++].final_acc_gbest);
            for (int r = 0; r < c.repeats; ++r) reference.push_back(study.records[cursor++].final_acc_gbest);
            GainComparison cmp;
            cmp.gain = g;
            cmp.strategy = st;
            cmp.sigma_c = c.sigma_c;
            cmp.rescaled_sigma_c = rescaled;
            cmp.median_amplified = stats::median(amplified);
            cmp.median_rescaled = stats::median(reference);
            cmp.iqr_amplified = stats::interquartile_range(amplified);
            cmp.iqr_rescaled = stats::interquartile_range(reference);
            const TrainingProblem amp_problem = problem_for(c, c.task, c.modes, c.sigma_c);
            const TrainingProblem ref_problem = problem_for(c, c.task, c.modes, rescaled);
            const std::uint64_t amp_seed =
                derive_seed(point_seed(c.seed, c.task, st, c.modes, c.sigma_c, g, 0), {hash_label("ks")});
            const std::uint64_t ref_seed =
                derive_seed(point_seed(c.seed, c.task, st, c.modes, rescaled, 1.0, 0), {hash_label("ks")});
            cmp.ks = stats::ks_two_sample(loss_samples_at_optimum(amp_problem, st, g, c.ks_samples, amp_seed),
                                          loss_samples_at_optimum(ref_problem, st, 1.0, c.ks_samples, ref_seed));
            study.comparisons.push_back(cmp);
        }
    }
    if (write_files) {
        nlohmann::json report = nlohmann::json::array();
        for (const auto& cmp : study.comparisons) report.push_back(to_json(cmp));
        detail::write_sweep(c, "gain-study", "gain_study.csv", study.records, report);
        atomic_write_file(prepare_output_dir(c) / "equivalence.json", report.dump(2) + "\n");
    }
    return study;
}

}  // namespace phlearn
