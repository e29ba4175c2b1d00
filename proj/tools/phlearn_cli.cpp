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

// Command-line entry point: train, sweep-sigma, sweep-modes, gain-study,
// baseline, validate. A --config file holds flat `key = value` lines using the
// long flag names; flags given on the command line override it.

#include <cstdio>
#include <fstream>
#include <iostream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "phlearn/phlearn.hpp"

namespace {

constexpr int kExitOk = 0;
constexpr int kExitConfig = 2;
constexpr int kExitRuntime = 3;

std::string trim(const std::string& s) {
    const auto b = s.find_first_not_of(" \t\r");
    if (b == std::string::npos) return "";
    const auto e = s.find_last_not_of(" \t\r");
    return s.substr(b, e - b + 1);
}

/// Expands `--config FILE` into `--key value` pairs placed ahead of the
/// remaining flags, so later (command-line) occurrences win.
std::vector<std::string> expand_config(const std::vector<std::string>& args) {
    if (args.size() < 2) return args;
    std::vector<std::string> rest;
    std::vector<std::string> from_file;
    for (std::size_t i = 1; i < args.size(); ++i) {
        std::string path;
        if (args[i] == "--config" && i + 1 < args.size()) {
            path = args[++i];
        } else if (args[i].rfind("--config=", 0) == 0) {
            path = args[i].substr(9);
        } else {
            rest.push_back(args[i]);
            continue;
        }
        std::ifstream in(path);
        if (!in) throw phlearn::ConfigError("cannot open config file " + path);
        std::string line;
        int lineno = 0;
        while (std::getline(in, line)) {
            ++lineno;
            if (auto hash = line.find('#'); hash != std::string::npos) line.erase(hash);
            line = trim(line);
            if (line.empty()) continue;
            const auto eq = line.find('=');
            if (eq == std::string::npos) {
                throw phlearn::ConfigError(path + ":" + std::to_string(lineno) + ": expected key = value");
            }
            std::string key = trim(line.substr(0, eq));
            for (char& c : key) {
                if (c == '_') c = '-';
            }
            from_file.push_back("--" + key);
            from_file.push_back(trim(line.substr(eq + 1)));
        }
    }
    std::vector<std::string> out{args.front()};
    if (rest.empty()) return out;
    out.push_back(rest.front());  // subcommand
    out.insert(out.end(), from_file.begin(), from_file.end());
    out.insert(out.end(), rest.begin() + 1, rest.end());
    return out;
}

template <typename T>
std::vector<T> parse_list(const std::string& text, const char* what) {
    std::vector<T> out;
    for (std::string item : phlearn::csv::split(text, ',')) {
        item = trim(item);
        if (item.empty()) continue;
        try {
            if constexpr (std::is_integral_v<T>) {
                out.push_back(phlearn::csv::parse_integer<T>(item));
            } else {
                out.push_back(phlearn::csv::parse_real(item));
            }
        } catch (const std::invalid_argument&) {
            throw phlearn::ConfigError(std::string("bad entry in ") + what + ": '" + item + "'");
        }
    }
    if (out.empty()) throw phlearn::ConfigError(std::string(what) + " is empty");
    return out;
}

struct Flags {
    std::string task = "pca";
    std::string strategy;
    std::string sigma_list;
    std::string modes_list;
    std::string gain_list;
    long samples = 100000;
};

void add_common(CLI::App* sub, phlearn::ExperimentConfig& c, Flags& f) {
    sub->add_option("--task", f.task, "pca | cca")->check(CLI::IsMember({"pca", "cca"}));
    sub->add_option("--strategy", f.strategy, "counting | homodyne | both")
        ->check(CLI::IsMember({"counting", "homodyne", "both"}));
    sub->add_option("--modes", c.modes, "number of modes M");
    sub->add_option("--sigma-c", c.sigma_c, "per-mode fluctuation amplitude");
    sub->add_option("--gain", c.gain, "squeezing gain G >= 1");
    sub->add_option("--epochs", c.pso.epochs, "PSO epochs");
    sub->add_option("--particles", c.pso.particle_count, "PSO particles");
    sub->add_option("--shots", c.pso.shots_per_eval, "shots per loss evaluation");
    sub->add_option("--inertia", c.pso.inertia, "PSO inertia m_a");
    sub->add_option("--r-max", c.pso.r_max, "upper bound of r1, r2");
    sub->add_option("--forgetting", c.pso.forgetting, "forgetting factor g");
    sub->add_option("--seed", c.seed, "base seed");
    sub->add_option("--repeats", c.repeats, "seeds per sweep point");
    sub->add_option("--out", c.out, "output directory");
    sub->add_option("--cov-file", c.cov_file, "general covariance matrix file");
    sub->add_option("--u-angle", c.u_angle_deg, "CCA reference angle to v, degrees");
    sub->add_option("--jobs", c.jobs, "worker threads");
}

void apply_flags(phlearn::ExperimentConfig& c, const Flags& f, const std::string& default_strategy) {
    c.task = phlearn::parse_task(f.task);
    const std::string s = f.strategy.empty() ? default_strategy : f.strategy;
    if (s == "both") {
        c.strategies = {phlearn::Strategy::PhotonCounting, phlearn::Strategy::Homodyne};
    } else {
        c.strategies = {phlearn::parse_strategy(s)};
    }
    if (!f.sigma_list.empty()) c.sigma_list = parse_list<double>(f.sigma_list, "sigma-list");
    if (!f.modes_list.empty()) c.modes_list = parse_list<int>(f.modes_list, "modes-list");
    if (!f.gain_list.empty()) c.gain_list = parse_list<double>(f.gain_list, "gain-list");
}

void print_records(const std::vector<phlearn::SweepRecord>& records) {
    for (const auto& r : records) {
        std::printf("%s %-8s M=%-3d sigma_c=%-10.4g G=%-6.4g acc_gbest=%.4f (1/M=%.4f)\n",
                    std::string(phlearn::to_string(r.task)).c_str(), std::string(phlearn::to_string(r.strategy)).c_str(),
                    r.modes, r.sigma_c, r.gain, r.final_acc_gbest, r.baseline);
    }
}

int run(int argc, char** argv) {
    std::vector<std::string> raw(argv, argv + argc);
    std::vector<std::string> args = expand_config(raw);

    CLI::App app{"Physical-layer learning of weak stochastic displacements: photon counting vs homodyne"};
    app.require_subcommand(1);
    app.option_defaults()->multi_option_policy(CLI::MultiOptionPolicy::TakeLast);

    phlearn::ExperimentConfig c;
    Flags f;

    auto* train = app.add_subcommand("train", "single training run; writes history.csv + config.json");
    add_common(train, c, f);
    train->add_option("--dump-shots", c.dump_shots, "write per-shot JSONL of the final global best evaluation");

    auto* sigma = app.add_subcommand("sweep-sigma", "accuracy vs sigma_c at fixed M");
    add_common(sigma, c, f);
    sigma->add_option("--sigma-list", f.sigma_list, "comma-separated sigma_c values");

    auto* modes = app.add_subcommand("sweep-modes", "accuracy vs M at fixed sqrt(M) sigma_c");
    add_common(modes, c, f);
    modes->add_option("--modes-list", f.modes_list, "comma-separated M values");
    modes->add_option("--total-signal", c.total_signal, "sqrt(M) sigma_c held fixed");

    auto* gain = app.add_subcommand("gain-study", "(G, sigma_c) vs (1, sqrt(G) sigma_c) equivalence");
    add_common(gain, c, f);
    gain->add_option("--gain-list", f.gain_list, "comma-separated gains");
    gain->add_option("--ks-samples", c.ks_samples, "loss samples per arm for the KS test");

    auto* baseline = app.add_subcommand("baseline", "random-guess accuracy estimate");
    baseline->add_option("--modes", c.modes, "number of modes M");
    baseline->add_option("--samples", f.samples, "Haar-random samples");
    baseline->add_option("--seed", c.seed, "seed");

    auto* validate = app.add_subcommand("validate", "check a covariance matrix file");
    validate->add_option("--cov-file", c.cov_file, "matrix file")->required();

    // The vector overload of CLI::App::parse expects arguments in reverse order.
    std::vector<std::string> reversed(args.rbegin(), args.rend() - 1);
    try {
        app.parse(reversed);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? kExitOk : kExitConfig;
    }

    try {
        if (train->parsed()) {
            apply_flags(c, f, "counting");
            const auto runs = phlearn::run_training(c);
            for (const auto& r : runs) print_records({r.point.record});
            std::printf("wrote %s\n", c.out.c_str());
        } else if (sigma->parsed()) {
            apply_flags(c, f, "both");
            print_records(phlearn::run_sigma_sweep(c));
            std::printf("wrote %s/sweep_sigma.csv\n", c.out.c_str());
        } else if (modes->parsed()) {
            apply_flags(c, f, "both");
            print_records(phlearn::run_mode_sweep(c));
            std::printf("wrote %s/sweep_modes.csv\n", c.out.c_str());
        } else if (gain->parsed()) {
            apply_flags(c, f, "both");
            const auto study = phlearn::run_gain_study(c);
            for (const auto& cmp : study.comparisons) {
                std::printf("G=%-6.4g %-8s median acc %.4f (amplified) vs %.4f (rescaled)  KS D=%.4g p=%.3g\n", cmp.gain,
                            std::string(phlearn::to_string(cmp.strategy)).c_str(), cmp.median_amplified,
                            cmp.median_rescaled, cmp.ks.statistic, cmp.ks.p_value);
            }
            std::printf("wrote %s/gain_study.csv\n", c.out.c_str());
        } else if (baseline->parsed()) {
            if (c.modes < 2) throw phlearn::ConfigError("--modes must be >= 2");
            if (f.samples < 1) throw phlearn::ConfigError("--samples must be >= 1");
            phlearn::Rng rng(c.seed);
            const auto est = phlearn::random_guess_baseline(c.modes, f.samples, rng);
            nlohmann::json j{{"M", c.modes},
                             {"samples", est.samples},
                             {"mean", est.mean},
                             {"standard_error", est.standard_error},
                             {"expected", 1.0 / c.modes}};
            std::cout << j.dump() << "\n";
        } else if (validate->parsed()) {
            phlearn::CovarianceReport report;
            try {
                report = phlearn::validate_covariance(phlearn::load_matrix_file(c.cov_file));
            } catch (const std::exception& e) {
                throw phlearn::ConfigError(e.what());
            }
            nlohmann::json j{{"accepted", report.accepted},
                             {"symmetry_defect", report.symmetry_defect},
                             {"min_eigenvalue", report.min_eigenvalue},
                             {"max_eigenvalue", report.max_eigenvalue},
                             {"reason", report.reason}};
            std::cout << j.dump() << "\n";
            return report.accepted ? kExitOk : kExitConfig;
        }
    } catch (const phlearn::ConfigError& e) {
        std::fprintf(stderr, "invalid configuration: %s\n", e.what());
        return kExitConfig;
    } catch (const std::exception& e) {
        std::fprintf(stderr, "error: %s\n", e.what());
        return kExitRuntime;
    }
    return kExitOk;
}

}  // namespace

int main(int argc, char** argv) {
    try {
        return run(argc, argv);
    } catch (const phlearn::ConfigError& e) {
        std::fprintf(stderr, "invalid configuration: %s\n", e.what());
        return kExitConfig;
    } catch (const std::exception& e) {
        std::fprintf(stderr, "error: %s\n", e.what());
        return kExitRuntime;
    }
}
