// netid: network topology identification from input/output data.

#include "netid/error.hpp"
#include "netid/experiment.hpp"

#include <CLI11.hpp>

#include <iomanip>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

namespace {

struct Flags {
    std::string config;
    std::optional<std::uint64_t> seed;
    std::string out;
    std::string order;
    std::string mu;
    bool assume_t_identity = false;
    std::vector<std::string> trajectories;
    std::string system, truth;
};

void add_flags(CLI::App* cmd, Flags& f) {
    cmd->add_option("--config", f.config, "JSON run configuration")->check(CLI::ExistingFile);
    cmd->add_option("--seed", f.seed, "seed of the single random generator");
    cmd->add_option("--out", f.out, "output directory");
    cmd->add_option("--order", f.order, "model order: p or auto");
    cmd->add_option("--mu", f.mu, "one-shot sparsity weight: value or sweep");
    cmd->add_flag("--assume-T-identity", f.assume_t_identity, "work in transformed coordinates (T = I)");
    cmd->add_option("--trajectory", f.trajectories, "trajectory CSV (identify); repeat for several experiments");
    cmd->add_option("--system", f.system, "identified system JSON (recover, oneshot)");
    cmd->add_option("--truth", f.truth, "ground truth JSON written by simulate");
}

netid::RunConfig build_config(const std::string& command, const Flags& f) {
    using netid::ConfigError;
    netid::json j = f.config.empty() ? netid::json::object() : netid::read_json_file(f.config);
    if (!j.is_object()) throw ConfigError("config: top level must be an object");
    if (j.contains("command") && j["command"] != command) {
        throw ConfigError("config: file is for '" + j["command"].dump() + "', not '" + command + "'");
    }
    j["command"] = command;
    netid::RunConfig cfg = netid::parse_run_config(j);

    if (f.seed) cfg.seed = *f.seed;
    if (!f.out.empty()) cfg.out = f.out;
    if (!f.trajectories.empty()) cfg.trajectory_paths = f.trajectories;
    if (!f.system.empty()) cfg.system_path = f.system;
    if (!f.truth.empty()) cfg.truth_path = f.truth;
    if (f.assume_t_identity) cfg.assume_T_identity = true;
    if (!f.order.empty()) {
        if (f.order == "auto") {
            cfg.identify.order_policy = netid::OrderPolicy::largest_gap();
        } else {
            std::size_t used = 0;
            long p = 0;
            try {
                p = std::stol(f.order, &used);
            } catch (const std::exception&) {
                used = 0;
            }
            if (used != f.order.size() || p < 1) throw ConfigError("--order must be a positive integer or 'auto'");
            cfg.identify.order_policy = netid::OrderPolicy::fixed(p);
        }
    }
    if (!f.mu.empty()) {
        std::optional<double> mu;
        if (f.mu != "sweep") {
            std::size_t used = 0;
            double v = -1.0;
            try {
                v = std::stod(f.mu, &used);
            } catch (const std::exception&) {
                used = 0;
            }
            if (used != f.mu.size() || !(v >= 0.0)) throw ConfigError("--mu must be a number >= 0 or 'sweep'");
            mu = v;
        }
        cfg.default_mu = mu;
        for (auto& r : cfg.recovery)
            if (r.path == netid::RecoveryPath::OneShot) r.mu = mu;
    }
    return cfg;
}

void print_summary(const netid::RunConfig& cfg, const netid::ExperimentReport& r) {
    std::cout << r.command << ": wrote " << r.artifacts.size() << " files to " << cfg.out << "\n";
    if (r.singular_values.size() > 0) {
        std::cout << "  order " << r.order << (r.order_low_confidence ? " (low confidence)" : "") << "\n";
    }
    std::cout << std::setprecision(3);
    for (const auto& [k, v] : r.residuals) std::cout << "  " << k << " = " << v << "\n";
    for (const auto& s : r.scores) {
        std::cout << "  " << s.name << " support: precision " << s.score.precision << ", recall " << s.score.recall
                  << ", F " << s.score.f_score << "\n";
    }
    for (const auto& w : r.warnings) std::cerr << "warning: " << w << "\n";
}

std::string stage_of(const netid::Error& e) { return e.stage().empty() ? "config" : e.stage(); }

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Network topology identification from input/output trajectories"};
    app.require_subcommand(1);
    Flags flags;
    const char* commands[][2] = {
        {"simulate", "generate a synthetic network system and simulate it"},
        {"identify", "subspace identification from a trajectory CSV"},
        {"recover", "graph recovery from an identified system"},
        {"oneshot", "one-shot state-graph estimate from the observability basis"},
        {"reproduce-synthetic", "full synthetic pipeline with ground-truth comparison"},
    };
    for (const auto& c : commands) add_flags(app.add_subcommand(c[0], c[1]), flags);

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? 0 : 2;
    }
    const std::string command = app.get_subcommands().front()->get_name();

    netid::RunConfig cfg;
    try {
        cfg = build_config(command, flags);
        const netid::ExperimentReport report = netid::run(cfg);
        print_summary(cfg, report);
        return 0;
    } catch (const netid::NumericError& e) {
        std::cerr << "numeric failure in stage " << stage_of(e) << ": " << e.what() << "\n";
        return 3;
    } catch (const netid::Error& e) {
        std::cerr << "error in stage " << stage_of(e) << ": " << e.what() << "\n";
        return 2;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 2;
    }
}
