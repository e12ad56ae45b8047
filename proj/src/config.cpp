#include "lorapre/config.hpp"

#include <fstream>
#include <set>
#include <sstream>

#include <json.hpp>

namespace lorapre {

namespace {

using nlohmann::json;

void reject_unknown_keys(const json& obj, const std::set<std::string>& allowed,
                         const std::string& where) {
    for (const auto& [key, value] : obj.items()) {
        if (!allowed.count(key))
            throw ConfigError("unknown key '" + where + key + "'");
    }
}

double get_number(const json& obj, const std::string& key, double fallback) {
    if (!obj.contains(key)) return fallback;
    const json& v = obj.at(key);
    if (!v.is_number()) throw ConfigError("field '" + key + "' must be a number");
    return v.get<double>();
}

long get_integer(const json& obj, const std::string& key, long fallback) {
    if (!obj.contains(key)) return fallback;
    const json& v = obj.at(key);
    if (!v.is_number_integer())
        throw ConfigError("field '" + key + "' must be an integer");
    return v.get<long>();
}

bool get_bool(const json& obj, const std::string& key, bool fallback) {
    if (!obj.contains(key)) return fallback;
    const json& v = obj.at(key);
    if (!v.is_boolean()) throw ConfigError("field '" + key + "' must be a boolean");
    return v.get<bool>();
}

std::string get_string(const json& obj, const std::string& key,
                       const std::string& fallback) {
    if (!obj.contains(key)) return fallback;
    const json& v = obj.at(key);
    if (!v.is_string()) throw ConfigError("field '" + key + "' must be a string");
    return v.get<std::string>();
}

void check_range(bool ok, const std::string& field, const std::string& constraint) {
    if (!ok) throw ConfigError("field '" + field + "' " + constraint);
}

ProblemConfig parse_problem(const json& obj) {
    ProblemConfig cfg;
    cfg.kind = get_string(obj, "kind", "quadratic");
    if (cfg.kind == "quadratic") {
        reject_unknown_keys(obj, {"kind", "p", "q", "condition"}, "problem.");
        cfg.p = static_cast<int>(get_integer(obj, "p", cfg.p));
        cfg.q = static_cast<int>(get_integer(obj, "q", cfg.q));
        cfg.condition = get_number(obj, "condition", cfg.condition);
        check_range(cfg.p >= 1 && cfg.q >= 1, "problem.p/q", "must be >= 1");
        check_range(cfg.condition >= 1.0, "problem.condition", "must be >= 1");
    } else if (cfg.kind == "sensing") {
        reject_unknown_keys(obj, {"kind", "p", "q", "true_rank", "noise_std"},
                            "problem.");
        cfg.p = static_cast<int>(get_integer(obj, "p", cfg.p));
        cfg.q = static_cast<int>(get_integer(obj, "q", cfg.q));
        cfg.true_rank = static_cast<int>(get_integer(obj, "true_rank", cfg.true_rank));
        cfg.noise_std = get_number(obj, "noise_std", cfg.noise_std);
        check_range(cfg.p >= 1 && cfg.q >= 1, "problem.p/q", "must be >= 1");
        check_range(cfg.true_rank >= 1 && cfg.true_rank <= std::min(cfg.p, cfg.q),
                    "problem.true_rank", "must be in [1, min(p, q)]");
        check_range(cfg.noise_std >= 0.0, "problem.noise_std", "must be >= 0");
    } else if (cfg.kind == "mlp") {
        reject_unknown_keys(
            obj, {"kind", "input_dim", "hidden_dim", "classes", "n_samples"},
            "problem.");
        cfg.input_dim = static_cast<int>(get_integer(obj, "input_dim", cfg.input_dim));
        cfg.hidden_dim =
            static_cast<int>(get_integer(obj, "hidden_dim", cfg.hidden_dim));
        cfg.classes = static_cast<int>(get_integer(obj, "classes", cfg.classes));
        cfg.n_samples = static_cast<int>(get_integer(obj, "n_samples", cfg.n_samples));
        check_range(cfg.input_dim >= 1 && cfg.input_dim <= 256, "problem.input_dim",
                    "must be in [1, 256]");
        check_range(cfg.hidden_dim >= 1 && cfg.hidden_dim <= 256, "problem.hidden_dim",
                    "must be in [1, 256]");
        check_range(cfg.classes >= 2 && cfg.classes <= 256, "problem.classes",
                    "must be in [2, 256]");
        check_range(cfg.n_samples >= 1, "problem.n_samples", "must be >= 1");
    } else {
        throw ConfigError("field 'problem.kind' must be quadratic, sensing or mlp");
    }
    return cfg;
}

OptKind parse_opt_kind(const std::string& name) {
    if (name == "adam") return OptKind::adam;
    if (name == "muon") return OptKind::muon;
    if (name == "lorapre_adam") return OptKind::lorapre_adam;
    if (name == "lorapre_muon") return OptKind::lorapre_muon;
    throw ConfigError(
        "field 'optimizer' must be adam, muon, lorapre_adam or lorapre_muon");
}

} // namespace

ExperimentConfig parse_config_text(const std::string& text) {
    json root;
    try {
        root = json::parse(text);
    } catch (const json::exception& e) {
        throw ConfigError(std::string("config is not valid JSON: ") + e.what());
    }
    if (!root.is_object()) throw ConfigError("config root must be an object");

    static const std::set<std::string> allowed = {
        "problem",  "optimizer",    "lr",         "beta1",
        "beta2",    "eps",          "weight_decay", "gamma1",
        "gamma2",   "rank",         "damping",    "scale",
        "eps_outside_sqrt", "momentum", "ns_iterations", "steps",
        "seed",     "shadow_oracle", "out_dir",   "warmup_steps",
        "cosine_decay"};
    reject_unknown_keys(root, allowed, "");

    ExperimentConfig cfg;
    if (!root.contains("problem") || !root.at("problem").is_object())
        throw ConfigError("field 'problem' must be an object");
    cfg.problem = parse_problem(root.at("problem"));
    cfg.optimizer.kind = parse_opt_kind(get_string(root, "optimizer", "adam"));

    AdamConfig& adam = cfg.optimizer.adam;
    MuonConfig& muon = cfg.optimizer.muon;

    const double lr = get_number(root, "lr", adam.lr);
    check_range(lr > 0.0, "lr", "must be > 0");
    adam.lr = lr;
    muon.lr = lr;

    adam.beta1 = get_number(root, "beta1", adam.beta1);
    check_range(adam.beta1 >= 0.0 && adam.beta1 < 1.0, "beta1", "must be in [0, 1)");
    adam.beta2 = get_number(root, "beta2", adam.beta2);
    check_range(adam.beta2 >= 0.0 && adam.beta2 < 1.0, "beta2", "must be in [0, 1)");
    adam.eps = get_number(root, "eps", adam.eps);
    check_range(adam.eps > 0.0, "eps", "must be > 0");

    const double wd = get_number(root, "weight_decay", adam.weight_decay);
    check_range(wd >= 0.0, "weight_decay", "must be >= 0");
    adam.weight_decay = wd;
    muon.weight_decay = wd;

    if (root.contains("gamma1")) {
        const double g1 = get_number(root, "gamma1", 0.0);
        check_range(g1 > 0.0 && g1 <= 1.0, "gamma1", "must be in (0, 1]");
        adam.gamma1 = g1;
        muon.gamma1 = g1;
    }
    if (root.contains("gamma2")) {
        const double g2 = get_number(root, "gamma2", 0.0);
        check_range(g2 > 0.0 && g2 <= 1.0, "gamma2", "must be in (0, 1]");
        adam.gamma2 = g2;
    }

    const int rank = static_cast<int>(get_integer(root, "rank", adam.rank));
    check_range(rank >= 1, "rank", "must be >= 1");
    adam.rank = rank;
    muon.rank = rank;

    const double damping = get_number(root, "damping", adam.damping);
    check_range(damping > 0.0, "damping", "must be > 0");
    adam.damping = damping;
    muon.damping = damping;

    adam.scale = get_number(root, "scale", adam.scale);
    check_range(adam.scale > 0.0, "scale", "must be > 0");
    adam.eps_outside_sqrt = get_bool(root, "eps_outside_sqrt", false);

    muon.momentum = get_number(root, "momentum", muon.momentum);
    check_range(muon.momentum >= 0.0 && muon.momentum < 1.0, "momentum",
                "must be in [0, 1)");
    muon.ns_iterations =
        static_cast<int>(get_integer(root, "ns_iterations", muon.ns_iterations));
    check_range(muon.ns_iterations >= 1, "ns_iterations", "must be >= 1");

    cfg.steps = get_integer(root, "steps", cfg.steps);
    check_range(cfg.steps >= 1, "steps", "must be >= 1");
    cfg.schedule.warmup_steps = get_integer(root, "warmup_steps", 0);
    check_range(cfg.schedule.warmup_steps >= 0, "warmup_steps", "must be >= 0");
    cfg.schedule.cosine_decay = get_bool(root, "cosine_decay", false);
    const long seed = get_integer(root, "seed", 0);
    check_range(seed >= 0, "seed", "must be >= 0");
    cfg.optimizer.seed = static_cast<std::uint64_t>(seed);
    cfg.shadow_oracle = get_bool(root, "shadow_oracle", false);
    cfg.out_dir = get_string(root, "out_dir", cfg.out_dir);
    return cfg;
}

ExperimentConfig parse_config_file(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw ConfigError("cannot open config file: " + path);
    std::ostringstream buf;
    buf << in.rdbuf();
    return parse_config_text(buf.str());
}

std::unique_ptr<Problem> make_problem(const ProblemConfig& cfg, std::uint64_t seed) {
    if (cfg.kind == "quadratic")
        return quadratic_problem(cfg.p, cfg.q, cfg.condition, seed);
    if (cfg.kind == "sensing")
        return low_rank_sensing_problem(cfg.p, cfg.q, cfg.true_rank, cfg.noise_std, seed);
    if (cfg.kind == "mlp")
        return tiny_mlp_problem(cfg.input_dim, cfg.hidden_dim, cfg.classes,
                                cfg.n_samples, seed);
    throw ConfigError("field 'problem.kind' must be quadratic, sensing or mlp");
}

std::string ExperimentConfig::problem_description() const {
    std::ostringstream out;
    out << problem.kind;
    if (problem.kind == "quadratic")
        out << " " << problem.p << "x" << problem.q << " condition=" << problem.condition;
    else if (problem.kind == "sensing")
        out << " " << problem.p << "x" << problem.q << " true_rank=" << problem.true_rank
            << " noise_std=" << problem.noise_std;
    else
        out << " d=" << problem.input_dim << " h=" << problem.hidden_dim
            << " c=" << problem.classes << " n=" << problem.n_samples;
    return out.str();
}

std::string ExperimentConfig::optimizer_description() const {
    std::ostringstream out;
    out << opt_kind_name(optimizer.kind);
    if (opt_kind_is_adam_family(optimizer.kind)) {
        out << " lr=" << optimizer.adam.lr << " beta1=" << optimizer.adam.beta1
            << " beta2=" << optimizer.adam.beta2;
        if (opt_kind_is_low_rank(optimizer.kind))
            out << " rank=" << optimizer.adam.rank << " damping=" << optimizer.adam.damping
                << " scale=" << optimizer.adam.scale;
    } else {
        out << " lr=" << optimizer.muon.lr << " mu=" << optimizer.muon.momentum
            << " ns_iterations=" << optimizer.muon.ns_iterations;
        if (opt_kind_is_low_rank(optimizer.kind))
            out << " rank=" << optimizer.muon.rank
                << " damping=" << optimizer.muon.damping;
    }
    return out.str();
}

} // namespace lorapre
