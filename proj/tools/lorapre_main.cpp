// Command-line front end: run experiments from JSON configs, sweep ranks,
// and execute the verification suite.
//
//   lorapre run <config.json> [--out DIR] [--seed N] [--shadow]
//   lorapre sweep-rank <config.json> --ranks 4,16,64 [--out DIR] [--seed N]
//   lorapre verify
//
// Exit codes: 0 success, 1 failed verification, 2 config/parse error,
// 3 numeric abort (partial outputs retained).

#include <cstdio>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "lorapre/config.hpp"
#include "lorapre/diagnostics.hpp"
#include "lorapre/harness.hpp"
#include "lorapre/report.hpp"
#include "lorapre/verify.hpp"

namespace {

using namespace lorapre;

struct CliOverrides {
    std::string out_dir;
    std::optional<long> seed;
    bool shadow = false;
};

ExperimentConfig load_config(const std::string& path, const CliOverrides& ov) {
    ExperimentConfig cfg = parse_config_file(path);
    if (!ov.out_dir.empty()) cfg.out_dir = ov.out_dir;
    if (ov.seed) cfg.optimizer.seed = static_cast<std::uint64_t>(*ov.seed);
    if (ov.shadow) cfg.shadow_oracle = true;
    return cfg;
}

std::vector<long long> shadowed_param_elements(const RunRecord& record,
                                               const Problem& problem) {
    std::vector<long long> elements;
    for (const ShadowSeries& s : record.shadow) {
        for (const ParamSpec& p : problem.param_specs())
            if (p.name == s.param) elements.push_back(p.element_count());
    }
    return elements;
}

int run_and_report(const ExperimentConfig& cfg, const std::string& dir) {
    auto problem = make_problem(cfg.problem, cfg.optimizer.seed);
    RunRecord record = run_training(*problem, cfg.optimizer, cfg.steps,
                                    cfg.shadow_oracle, cfg.schedule);
    record.config_echo = cfg.problem_description() + " | " + cfg.optimizer_description();

    namespace fs = std::filesystem;
    atomic_write_file((fs::path(dir) / "run.csv").string(), run_csv_string(record));
    if (!record.shadow.empty()) {
        atomic_write_file(
            (fs::path(dir) / "bounds.json").string(),
            bounds_json_string(record, cfg.optimizer.adam.beta1,
                               cfg.optimizer.adam.damping,
                               shadowed_param_elements(record, *problem)));
    }
    atomic_write_file((fs::path(dir) / "summary.txt").string(),
                      summary_string(record, cfg.problem_description(),
                                     cfg.optimizer_description()));
    if (record.aborted) {
        std::fprintf(stderr, "numeric abort: %s (partial outputs in %s)\n",
                     record.abort_reason.c_str(), dir.c_str());
        return 3;
    }
    std::printf("run complete: %ld steps, final loss %s, outputs in %s\n",
                record.steps, format_double(record.final_loss).c_str(), dir.c_str());
    return 0;
}

int cmd_run(const std::string& config_path, const CliOverrides& ov) {
    const ExperimentConfig cfg = load_config(config_path, ov);
    return run_and_report(cfg, cfg.out_dir);
}

int cmd_sweep_rank(const std::string& config_path, const std::vector<int>& ranks,
                   const CliOverrides& ov) {
    ExperimentConfig cfg = load_config(config_path, ov);
    if (!opt_kind_is_low_rank(cfg.optimizer.kind))
        throw ConfigError("sweep-rank requires a low-rank optimizer "
                          "(lorapre_adam or lorapre_muon)");
    if (ranks.empty()) throw ConfigError("sweep-rank: --ranks must not be empty");

    std::vector<SweepRow> rows;
    for (int rank : ranks) {
        if (rank < 1) throw ConfigError("sweep-rank: ranks must be >= 1");
        ExperimentConfig run_cfg = cfg;
        run_cfg.optimizer.adam.rank = rank;
        run_cfg.optimizer.muon.rank = rank;
        auto problem = make_problem(run_cfg.problem, run_cfg.optimizer.seed);
        const RunRecord record =
            run_training(*problem, run_cfg.optimizer, run_cfg.steps,
                         run_cfg.shadow_oracle, run_cfg.schedule);
        if (record.aborted) {
            std::fprintf(stderr, "numeric abort at rank %d: %s\n", rank,
                         record.abort_reason.c_str());
            return 3;
        }
        SweepRow row;
        row.rank = rank;
        row.final_loss = record.final_loss;
        row.routed_dense = record.shadow.empty();
        if (!row.routed_dense) {
            const auto& p = problem->param_specs();
            long long d = 0;
            for (const ParamSpec& ps : p)
                if (ps.name == record.shadow.front().param) d = ps.element_count();
            row.steady_e_ss = compute_bounds(record, run_cfg.optimizer.adam.beta1,
                                             run_cfg.optimizer.adam.damping, d)
                                  .E_ss;
        }
        row.state_entries = record.memory.total_entries;
        std::printf("rank %4d: final loss %s%s\n", rank,
                    format_double(row.final_loss).c_str(),
                    row.routed_dense ? " (routed dense)" : "");
        rows.push_back(row);
    }

    namespace fs = std::filesystem;
    atomic_write_file((fs::path(cfg.out_dir) / "sweep.csv").string(),
                      sweep_csv_string(rows));
    std::vector<double> xs, ys;
    for (const SweepRow& r : rows) {
        xs.push_back(static_cast<double>(r.rank));
        ys.push_back(r.final_loss);
    }
    atomic_write_file((fs::path(cfg.out_dir) / "chart.svg").string(),
                      line_chart_svg("final loss vs rank", "rank", "final loss", xs, ys));
    std::printf("sweep complete: outputs in %s\n", cfg.out_dir.c_str());
    return 0;
}

int cmd_verify(bool corrupt_coupling) {
    VerifyOptions options;
    options.corrupt_coupling = corrupt_coupling;
    const std::vector<CheckResult> results = run_verification(options);
    int failures = 0;
    for (const CheckResult& r : results) {
        std::printf("[%s] %-38s %s\n", r.pass ? "PASS" : "FAIL", r.name.c_str(),
                    r.detail.c_str());
        if (!r.pass) ++failures;
    }
    std::printf("%zu checks, %d failed\n", results.size(), failures);
    return failures == 0 ? 0 : 1;
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"low-rank factorized momentum optimizers: experiment runner"};
    app.require_subcommand(1);

    std::string run_config, sweep_config;
    CliOverrides run_ov, sweep_ov;
    std::vector<int> ranks;
    bool corrupt_coupling = false;
    long seed_opt_run = -1, seed_opt_sweep = -1;

    CLI::App* run = app.add_subcommand("run", "execute one training run");
    run->add_option("config", run_config, "JSON config file")->required();
    run->add_option("--out", run_ov.out_dir, "output directory override");
    run->add_option("--seed", seed_opt_run, "seed override");
    run->add_flag("--shadow", run_ov.shadow, "enable the shadow oracle");

    CLI::App* sweep = app.add_subcommand("sweep-rank", "run once per rank");
    sweep->add_option("config", sweep_config, "JSON config file")->required();
    sweep->add_option("--ranks", ranks, "comma-separated ranks")
        ->required()
        ->delimiter(',');
    sweep->add_option("--out", sweep_ov.out_dir, "output directory override");
    sweep->add_option("--seed", seed_opt_sweep, "seed override");
    sweep->add_flag("--shadow", sweep_ov.shadow, "enable the shadow oracle");

    CLI::App* verify = app.add_subcommand("verify", "run the invariant suite");
    verify->add_flag("--corrupt-coupling", corrupt_coupling)->group(""); // test hook

    CLI11_PARSE(app, argc, argv);

    try {
        if (run->parsed()) {
            if (seed_opt_run >= 0) run_ov.seed = seed_opt_run;
            return cmd_run(run_config, run_ov);
        }
        if (sweep->parsed()) {
            if (seed_opt_sweep >= 0) sweep_ov.seed = seed_opt_sweep;
            return cmd_sweep_rank(sweep_config, ranks, sweep_ov);
        }
        return cmd_verify(corrupt_coupling);
    } catch (const ConfigError& e) {
        std::fprintf(stderr, "config error: %s\n", e.what());
        return 2;
    } catch (const NumericError& e) {
        std::fprintf(stderr, "numeric error: %s\n", e.what());
        return 3;
    } catch (const std::exception& e) {
        std::fprintf(stderr, "error: %s\n", e.what());
        return 2;
    }
}
