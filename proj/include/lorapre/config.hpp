#pragma once

#include <memory>
#include <stdexcept>
#include <string>

#include "lorapre/harness.hpp"
#include "lorapre/optimizers.hpp"
#include "lorapre/problems.hpp"

namespace lorapre {

// Malformed or out-of-range configuration; the message names the field.
struct ConfigError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

struct ProblemConfig {
    std::string kind = "quadratic"; // quadratic | sensing | mlp
    // quadratic / sensing
    int p = 16;
    int q = 16;
    double condition = 10.0; // quadratic
    int true_rank = 2;       // sensing
    double noise_std = 0.0;  // sensing
    // mlp
    int input_dim = 16;
    int hidden_dim = 16;
    int classes = 3;
    int n_samples = 64;
};

struct ExperimentConfig {
    ProblemConfig problem;
    OptimizerSpec optimizer; // kind + adam + muon + seed
    LrSchedule schedule;     // defaults off (constant lr)
    long steps = 1000;
    bool shadow_oracle = false;
    std::string out_dir = "out";

    std::string problem_description() const;
    std::string optimizer_description() const;
};

// Parses and validates a JSON config. Every malformed input throws a
// ConfigError naming the offending field; unknown keys are rejected.
ExperimentConfig parse_config_text(const std::string& text);
ExperimentConfig parse_config_file(const std::string& path);

std::unique_ptr<Problem> make_problem(const ProblemConfig& cfg, std::uint64_t seed);

} // namespace lorapre
