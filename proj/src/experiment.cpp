#include "netid/experiment.hpp"

#include "netid/error.hpp"
#include "netid/spectral.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <fstream>
#include <iomanip>
#include <random>
#include <set>
#include <sstream>
#include <type_traits>

namespace netid {
namespace fs = std::filesystem;

std::string to_string(Command c) {
    switch (c) {
        case Command::Simulate: return "simulate";
        case Command::Identify: return "identify";
        case Command::Recover: return "recover";
        case Command::OneShot: return "oneshot";
        case Command::ReproduceSynthetic: return "reproduce-synthetic";
    }
    return "?";
}

Command command_from_string(const std::string& s) {
    if (s == "simulate") return Command::Simulate;
    if (s == "identify") return Command::Identify;
    if (s == "recover") return Command::Recover;
    if (s == "oneshot") return Command::OneShot;
    if (s == "reproduce-synthetic") return Command::ReproduceSynthetic;
    throw ConfigError("unknown command '" + s + "'");
}

std::string to_string(RecoveryPath p) {
    switch (p) {
        case RecoveryPath::KnownMapping: return "known_mapping";
        case RecoveryPath::Sparsest: return "sparsest";
        case RecoveryPath::OneShot: return "one_shot";
    }
    return "?";
}

RecoveryPath recovery_path_from_string(const std::string& s) {
    if (s == "known_mapping") return RecoveryPath::KnownMapping;
    if (s == "sparsest") return RecoveryPath::Sparsest;
    if (s == "one_shot") return RecoveryPath::OneShot;
    throw ConfigError("unknown recovery path '" + s + "'");
}

// ---------------------------------------------------------------------------
// Config parsing

namespace {

void check_keys(const json& j, std::initializer_list<const char*> allowed, const std::string& where) {
    if (!j.is_object()) throw ConfigError(where + ": expected an object");
    for (const auto& [key, _] : j.items()) {
        if (std::none_of(allowed.begin(), allowed.end(), [&](const char* a) { return key == a; })) {
            throw ConfigError(where + ": unknown key '" + key + "'");
        }
    }
}

double get_number(const json& j, const char* key, const std::string& where) {
    if (!j[key].is_number()) throw ConfigError(where + ": '" + key + "' must be a number");
    return j[key].get<double>();
}

std::int64_t get_integer(const json& j, const char* key, const std::string& where) {
    if (!j[key].is_number_integer()) throw ConfigError(where + ": '" + key + "' must be an integer");
    return j[key].get<std::int64_t>();
}

std::string get_string(const json& j, const char* key, const std::string& where) {
    if (!j[key].is_string()) throw ConfigError(where + ": '" + key + "' must be a string");
    return j[key].get<std::string>();
}

bool get_bool(const json& j, const char* key, const std::string& where) {
    if (!j[key].is_boolean()) throw ConfigError(where + ": '" + key + "' must be a boolean");
    return j[key].get<bool>();
}

std::string family_name(const GraphFamily& f) {
    switch (f.kind) {
        case GraphFamily::Kind::ErdosRenyi: return "erdos_renyi";
        case GraphFamily::Kind::Ring: return "ring";
        case GraphFamily::Kind::Path: return "path";
        case GraphFamily::Kind::Grid: return "grid";
    }
    return "?";
}

GraphFamily parse_family(const json& j, const std::string& where) {
    check_keys(j, {"family", "p"}, where);
    const std::string name = j.contains("family") ? get_string(j, "family", where) : "erdos_renyi";
    const double p = j.contains("p") ? get_number(j, "p", where) : 0.3;
    return graph_family_from_string(name, p);
}

json family_json(const GraphFamily& f) {
    json j{{"family", family_name(f)}};
    if (f.kind == GraphFamily::Kind::ErdosRenyi) j["p"] = f.p;
    return j;
}

OrderPolicy parse_order(const json& j) {
    if (j.is_string()) {
        if (j.get<std::string>() == "auto") return OrderPolicy::largest_gap();
        throw ConfigError("identify: 'order' must be \"auto\", an integer or {\"threshold\": rho}");
    }
    if (j.is_number_integer()) {
        const auto p = j.get<std::int64_t>();
        if (p < 1) throw ConfigError("identify: fixed order must be >= 1");
        return OrderPolicy::fixed(p);
    }
    if (j.is_object()) {
        check_keys(j, {"threshold"}, "identify.order");
        const double rho = get_number(j, "threshold", "identify.order");
        if (!(rho > 0.0 && rho < 1.0)) throw ConfigError("identify.order: threshold must lie in (0, 1)");
        return OrderPolicy::threshold(rho);
    }
    throw ConfigError("identify: 'order' must be \"auto\", an integer or {\"threshold\": rho}");
}

json order_json(const OrderPolicy& p) {
    switch (p.kind) {
        case OrderPolicy::Kind::LargestGap: return "auto";
        case OrderPolicy::Kind::Fixed: return p.order;
        case OrderPolicy::Kind::Threshold: return json{{"threshold", p.rho}};
    }
    return "auto";
}

SolverOptions parse_solver(const json& j) {
    check_keys(j, {"iterations", "step", "tol"}, "solver");
    SolverOptions s;
    if (j.contains("iterations")) s.iterations = static_cast<int>(get_integer(j, "iterations", "solver"));
    if (j.contains("step")) s.step = get_number(j, "step", "solver");
    if (j.contains("tol")) s.tol = get_number(j, "tol", "solver");
    if (s.iterations < 1) throw ConfigError("solver: iterations must be >= 1");
    if (!(s.tol > 0.0)) throw ConfigError("solver: tol must be > 0");
    if (!(s.step >= 0.0)) throw ConfigError("solver: step must be >= 0");
    return s;
}

RecoveryConfig parse_recovery(const json& j) {
    check_keys(j, {"path", "target", "name", "class", "mapping", "mu", "solver"}, "recovery");
    RecoveryConfig r;
    if (j.contains("path")) r.path = recovery_path_from_string(get_string(j, "path", "recovery"));
    if (j.contains("target")) r.target = get_string(j, "target", "recovery");
    if (r.target != "A" && r.target != "B") throw ConfigError("recovery: target must be \"A\" or \"B\"");
    if (j.contains("name")) r.name = get_string(j, "name", "recovery");
    r.cls.cls = r.target == "A" ? ShiftClass::CombinatorialLaplacian : ShiftClass::Adjacency;
    if (j.contains("class")) r.cls = class_from_json(j["class"]);
    if (j.contains("mapping")) r.mapping = mapping_from_json(j["mapping"]);
    if (j.contains("mu")) {
        const json& mu = j["mu"];
        if (mu.is_string() && mu.get<std::string>() == "sweep") {
            r.mu.reset();
        } else if (mu.is_number()) {
            r.mu = mu.get<double>();
            if (!(*r.mu >= 0.0)) throw ConfigError("recovery: mu must be >= 0");
        } else {
            throw ConfigError("recovery: 'mu' must be a number or \"sweep\"");
        }
    }
    if (j.contains("solver")) r.solver = parse_solver(j["solver"]);
    if (r.path == RecoveryPath::OneShot && r.target != "A") {
        throw ConfigError("recovery: one_shot recovers the state graph (target \"A\") only");
    }
    return r;
}

json recovery_json(const RecoveryConfig& r) {
    json j{{"path", to_string(r.path)}, {"target", r.target}, {"name", r.stem()}, {"class", to_json(r.cls)}};
    if (r.mapping) j["mapping"] = to_json(*r.mapping);
    if (r.mu) {
        j["mu"] = *r.mu;
    } else {
        j["mu"] = "sweep";
    }
    j["solver"] = {{"iterations", r.solver.iterations}, {"step", r.solver.step}, {"tol", r.solver.tol}};
    return j;
}

void parse_system(const json& j, SystemConfig& sc) {
    const std::string w = "system";
    check_keys(j, {"n", "graph1", "graph2", "class1", "class2", "mapping1", "mapping2", "spectral_radius",
                   "autonomous", "x0"},
               w);
    if (j.contains("n")) {
        sc.n = static_cast<int>(get_integer(j, "n", w));
        if (sc.n < 2) throw ConfigError("system: n must be >= 2");
    }
    if (j.contains("graph1")) sc.graph1 = parse_family(j["graph1"], "system.graph1");
    if (j.contains("graph2")) sc.graph2 = parse_family(j["graph2"], "system.graph2");
    if (j.contains("class1")) sc.class1 = class_from_json(j["class1"]);
    if (j.contains("class2")) sc.class2 = class_from_json(j["class2"]);
    if (j.contains("mapping1")) {
        json m = j["mapping1"];
        sc.tau_auto = false;
        if (m.is_object() && m.contains("tau") && m["tau"].is_string()) {
            if (m["tau"].get<std::string>() != "auto") throw ConfigError("system.mapping1: tau must be a number or \"auto\"");
            sc.tau_auto = true;
            m["tau"] = 1.0;
        }
        sc.mapping1 = mapping_from_json(m);
    }
    if (j.contains("mapping2")) sc.mapping2 = mapping_from_json(j["mapping2"]);
    if (j.contains("spectral_radius")) {
        sc.spectral_radius = get_number(j, "spectral_radius", w);
        if (!(sc.spectral_radius > 0.0)) throw ConfigError("system: spectral_radius must be > 0");
    }
    if (j.contains("autonomous")) sc.autonomous = get_bool(j, "autonomous", w);
    if (j.contains("x0")) {
        const std::string x0 = get_string(j, "x0", w);
        if (x0 != "random" && x0 != "zero") throw ConfigError("system: x0 must be \"random\" or \"zero\"");
        sc.random_x0 = x0 == "random";
    }
}

}  // namespace

RunConfig parse_run_config(const json& j) {
    check_keys(j, {"command", "seed", "out", "system", "input", "identify", "recovery", "mu", "assume_T_identity", "paths"},
               "config");
    RunConfig cfg;
    if (j.contains("command")) cfg.command = command_from_string(get_string(j, "command", "config"));
    if (j.contains("seed")) {
        if (!j["seed"].is_number_unsigned() && !(j["seed"].is_number_integer() && j["seed"].get<std::int64_t>() >= 0)) {
            throw ConfigError("config: 'seed' must be a non-negative integer");
        }
        cfg.seed = j["seed"].get<std::uint64_t>();
    }
    if (j.contains("out")) cfg.out = get_string(j, "out", "config");
    if (j.contains("system")) parse_system(j["system"], cfg.system);
    if (j.contains("input")) {
        const json& in = j["input"];
        check_keys(in, {"kind", "hold", "length", "experiments"}, "input");
        if (in.contains("kind")) cfg.input.kind = input_kind_from_string(get_string(in, "kind", "input"));
        if (in.contains("hold")) cfg.input.hold = get_integer(in, "hold", "input");
        if (in.contains("length")) cfg.input.length = get_integer(in, "length", "input");
        if (cfg.input.hold < 1) throw ConfigError("input: hold must be >= 1");
        if (cfg.input.length < 1) throw ConfigError("input: length must be >= 1");
        if (in.contains("experiments")) {
            const auto e = get_integer(in, "experiments", "input");
            if (e < 1 || e > 10000) throw ConfigError("input: experiments must lie in [1, 10000]");
            cfg.experiments = static_cast<int>(e);
        }
    }
    if (j.contains("identify")) {
        const json& id = j["identify"];
        check_keys(id, {"s", "order", "C"}, "identify");
        if (id.contains("s")) {
            cfg.identify.s = get_integer(id, "s", "identify");
            if (cfg.identify.s < 0 || cfg.identify.s == 1) throw ConfigError("identify: s must be 0 (auto) or >= 2");
        }
        if (id.contains("order")) cfg.identify.order_policy = parse_order(id["order"]);
        if (id.contains("C")) cfg.identify.c_matrix = get_string(id, "C", "identify");
    }
    if (j.contains("recovery")) {
        const json& rec = j["recovery"];
        if (rec.is_object()) {
            cfg.recovery.push_back(parse_recovery(rec));
        } else if (rec.is_array()) {
            for (const auto& r : rec) cfg.recovery.push_back(parse_recovery(r));
        } else {
            throw ConfigError("config: 'recovery' must be an object or an array");
        }
        std::set<std::string> stems;
        for (const auto& r : cfg.recovery) {
            if (!stems.insert(r.stem()).second) throw ConfigError("recovery: duplicate name '" + r.stem() + "'");
        }
    }
    if (j.contains("mu")) {
        const json& mu = j["mu"];
        if (mu.is_number() && mu.get<double>() >= 0.0) {
            cfg.default_mu = mu.get<double>();
        } else if (!(mu.is_string() && mu.get<std::string>() == "sweep")) {
            throw ConfigError("config: 'mu' must be a number >= 0 or \"sweep\"");
        }
    }
    if (j.contains("assume_T_identity")) cfg.assume_T_identity = get_bool(j, "assume_T_identity", "config");
    if (j.contains("paths")) {
        const json& p = j["paths"];
        check_keys(p, {"trajectory", "system", "truth"}, "paths");
        if (p.contains("trajectory")) {
            const json& t = p["trajectory"];
            if (t.is_string()) {
                if (!t.get<std::string>().empty()) cfg.trajectory_paths = {t.get<std::string>()};
            } else if (t.is_array() && std::all_of(t.begin(), t.end(), [](const json& x) { return x.is_string(); })) {
                cfg.trajectory_paths = t.get<std::vector<std::string>>();
            } else {
                throw ConfigError("paths: 'trajectory' must be a string or an array of strings");
            }
        }
        if (p.contains("system")) cfg.system_path = get_string(p, "system", "paths");
        if (p.contains("truth")) cfg.truth_path = get_string(p, "truth", "paths");
    }
    return cfg;
}

json to_json(const RunConfig& cfg) {
    json sys{{"n", cfg.system.n},
             {"graph1", family_json(cfg.system.graph1)},
             {"graph2", family_json(cfg.system.graph2)},
             {"class1", to_json(cfg.system.class1)},
             {"class2", to_json(cfg.system.class2)},
             {"mapping1", to_json(cfg.system.mapping1)},
             {"mapping2", to_json(cfg.system.mapping2)},
             {"spectral_radius", cfg.system.spectral_radius},
             {"autonomous", cfg.system.autonomous},
             {"x0", cfg.system.random_x0 ? "random" : "zero"}};
    if (cfg.system.tau_auto && cfg.system.mapping1.kind == ScalarMapping::Kind::HeatKernel) {
        sys["mapping1"]["tau"] = "auto";
    }
    json rec = json::array();
    for (const auto& r : cfg.recovery) rec.push_back(recovery_json(r));
    return json{{"command", to_string(cfg.command)},
                {"seed", cfg.seed},
                {"out", cfg.out},
                {"system", sys},
                {"input",
                 {{"kind", to_string(cfg.input.kind)},
                  {"hold", cfg.input.hold},
                  {"length", cfg.input.length},
                  {"experiments", cfg.experiments}}},
                {"identify", {{"s", cfg.identify.s}, {"order", order_json(cfg.identify.order_policy)}, {"C", cfg.identify.c_matrix}}},
                {"recovery", rec},
                {"mu", cfg.default_mu ? json(*cfg.default_mu) : json("sweep")},
                {"assume_T_identity", cfg.assume_T_identity},
                {"paths", {{"trajectory", cfg.trajectory_paths}, {"system", cfg.system_path}, {"truth", cfg.truth_path}}}};
}

// ---------------------------------------------------------------------------
// Report serialization

namespace {

double finite(double x, const std::string& what) {
    if (!std::isfinite(x)) throw NumericError("report: non-finite value in " + what, x);
    return x;
}

json finite_json(const Eigen::MatrixXd& m, const std::string& what) {
    if (!m.allFinite()) throw NumericError("report: non-finite value in " + what);
    return to_json(m);
}

json finite_json(const Eigen::VectorXd& v, const std::string& what) {
    if (!v.allFinite()) throw NumericError("report: non-finite value in " + what);
    return to_json(v);
}

}  // namespace

json to_json(const ExperimentReport& r) {
    json j;
    j["command"] = r.command;
    j["seed"] = r.seed;
    json timings = json::array();
    for (const auto& t : r.timings) timings.push_back({{"stage", t.stage}, {"seconds", finite(t.seconds, "timings")}});
    j["timings"] = timings;
    j["singular_values"] = finite_json(r.singular_values, "singular_values");
    j["order"] = r.order;
    j["order_low_confidence"] = r.order_low_confidence;
    j["transformed_coordinates"] = r.transformed_coordinates;
    json eig = json::array();
    for (const auto& e : r.eigenvalues) {
        eig.push_back({{"name", e.name},
                       {"true", finite_json(e.truth, "eigenvalues")},
                       {"estimated", finite_json(e.estimate, "eigenvalues")}});
    }
    j["eigenvalues"] = eig;
    json mats = json::array();
    for (const auto& m : r.matrices) {
        mats.push_back({{"name", m.name},
                        {"true", finite_json(m.truth, "matrices")},
                        {"estimated", finite_json(m.estimate, "matrices")}});
    }
    j["matrices"] = mats;
    json scores = json::array();
    for (const auto& s : r.scores) {
        scores.push_back({{"name", s.name},
                          {"true_positive", s.score.true_positive},
                          {"false_positive", s.score.false_positive},
                          {"false_negative", s.score.false_negative},
                          {"precision", finite(s.score.precision, "scores")},
                          {"recall", finite(s.score.recall, "scores")},
                          {"f_score", finite(s.score.f_score, "scores")}});
    }
    j["scores"] = scores;
    json res = json::object();
    for (const auto& [k, v] : r.residuals) res[k] = finite(v, "residual " + k);
    j["residuals"] = res;
    j["warnings"] = r.warnings;
    j["artifacts"] = r.artifacts;
    return j;
}

ExperimentReport report_from_json(const json& j) {
    check_keys(j, {"command", "seed", "timings", "singular_values", "order", "order_low_confidence",
                   "transformed_coordinates", "eigenvalues", "matrices", "scores", "residuals", "warnings",
                   "artifacts"},
               "report");
    ExperimentReport r;
    try {
        r.command = j.at("command").get<std::string>();
        r.seed = j.at("seed").get<std::uint64_t>();
        for (const auto& t : j.at("timings")) r.timings.push_back({t.at("stage").get<std::string>(), t.at("seconds").get<double>()});
        r.singular_values = vector_from_json(j.at("singular_values"), "singular_values");
        r.order = j.at("order").get<Eigen::Index>();
        r.order_low_confidence = j.at("order_low_confidence").get<bool>();
        r.transformed_coordinates = j.at("transformed_coordinates").get<bool>();
        for (const auto& e : j.at("eigenvalues")) {
            r.eigenvalues.push_back({e.at("name").get<std::string>(), vector_from_json(e.at("true"), "eigenvalues"),
                                     vector_from_json(e.at("estimated"), "eigenvalues")});
        }
        for (const auto& m : j.at("matrices")) {
            r.matrices.push_back({m.at("name").get<std::string>(), matrix_from_json(m.at("true"), "matrices"),
                                  matrix_from_json(m.at("estimated"), "matrices")});
        }
        for (const auto& s : j.at("scores")) {
            NamedScore ns;
            ns.name = s.at("name").get<std::string>();
            ns.score.true_positive = s.at("true_positive").get<int>();
            ns.score.false_positive = s.at("false_positive").get<int>();
            ns.score.false_negative = s.at("false_negative").get<int>();
            ns.score.precision = s.at("precision").get<double>();
            ns.score.recall = s.at("recall").get<double>();
            ns.score.f_score = s.at("f_score").get<double>();
            r.scores.push_back(ns);
        }
        for (const auto& [k, v] : j.at("residuals").items()) r.residuals[k] = v.get<double>();
        r.warnings = j.at("warnings").get<std::vector<std::string>>();
        r.artifacts = j.at("artifacts").get<std::vector<std::string>>();
    } catch (const json::exception& e) {
        throw ConfigError(std::string("report: ") + e.what());
    }
    return r;
}

// ---------------------------------------------------------------------------
// Synthetic system

namespace {

double spectral_radius_of(const Eigen::MatrixXd& a) {
    if (a.size() == 0) return 0.0;
    Eigen::EigenSolver<Eigen::MatrixXd> es(a, false);
    return es.eigenvalues().cwiseAbs().maxCoeff();
}

ScalarMapping scaled(const ScalarMapping& f, double c, const Eigen::VectorXd& spectrum) {
    switch (f.kind) {
        case ScalarMapping::Kind::HeatKernel: return ScalarMapping::heat_kernel(f.alpha * c, f.tau, f.domain);
        case ScalarMapping::Kind::Polynomial: {
            std::vector<double> coeffs = f.coeffs;
            for (double& x : coeffs) x *= c;
            return ScalarMapping::polynomial(std::move(coeffs), f.domain);
        }
        case ScalarMapping::Kind::Identity: {
            Interval dom = f.domain.value_or(Interval{spectrum.minCoeff() - 1.0, spectrum.maxCoeff() + 1.0});
            return ScalarMapping::polynomial({0.0, c}, dom);
        }
    }
    return f;
}

}  // namespace

SyntheticSystem make_synthetic_system(const SystemConfig& cfg, std::uint64_t seed, InputSpec* input) {
    std::mt19937_64 gen(seed);
    const std::uint64_t seed_g1 = gen(), seed_g2 = gen(), seed_input = gen(), seed_x0 = gen();

    SyntheticSystem out;
    out.graph1 = random_graph(cfg.graph1, cfg.n, seed_g1);
    out.graph2 = random_graph(cfg.graph2, cfg.n, seed_g2);
    // The two graphs must differ; redraw the second from the same stream.
    std::mt19937_64 redraw(seed_g2);
    for (int k = 0; k < 100 && adjacency_matrix(out.graph1) == adjacency_matrix(out.graph2); ++k) {
        if (cfg.graph2.kind != GraphFamily::Kind::ErdosRenyi) break;
        out.graph2 = random_graph(cfg.graph2, cfg.n, redraw());
    }
    out.S1 = build_shift(out.graph1, cfg.class1);
    out.S2 = build_shift(out.graph2, cfg.class2);

    out.mapping1 = cfg.mapping1;
    const SpectralDecomposition sd1 = spectral_decompose(out.S1.matrix);
    if (cfg.tau_auto && out.mapping1.kind == ScalarMapping::Kind::HeatKernel) {
        const double top = sd1.eigvals.cwiseAbs().maxCoeff();
        if (top > 0.0) out.mapping1.tau = 1.0 / top;
    }
    Eigen::MatrixXd a = apply_matrix_function(out.mapping1, out.S1.matrix);
    const double rho = spectral_radius_of(a);
    if (rho > cfg.spectral_radius) {
        const double c = cfg.spectral_radius / rho;
        out.mapping1 = scaled(out.mapping1, c, sd1.eigvals);
        a = apply_matrix_function(out.mapping1, out.S1.matrix);
    }
    out.mapping2 = cfg.mapping2;

    const Eigen::Index n = cfg.n;
    out.sys.A = a;
    out.sys.C = Eigen::MatrixXd::Identity(n, n);
    if (cfg.autonomous) {
        out.sys.B = Eigen::MatrixXd::Zero(n, n);
        out.sys.D = Eigen::MatrixXd::Zero(n, n);
    } else {
        out.sys.B = apply_matrix_function(out.mapping2, out.S2.matrix);
        out.sys.D = Eigen::MatrixXd::Identity(n, n);
    }

    out.x0 = Eigen::VectorXd::Zero(n);
    if (cfg.random_x0) {
        std::mt19937_64 rng(seed_x0);
        std::normal_distribution<double> normal(0.0, 1.0);
        for (Eigen::Index i = 0; i < n; ++i) out.x0(i) = normal(rng);
    }
    if (input) input->seed = seed_input;
    return out;
}

std::vector<Trajectory> simulate_experiments(const SyntheticSystem& syn, const InputSpec& input, int count,
                                             bool random_x0) {
    if (count < 1) throw ConfigError("simulate_experiments: count must be >= 1");
    const Eigen::Index n = syn.sys.states();
    std::vector<Trajectory> runs;
    runs.push_back(simulate(syn.sys, generate_input(input, syn.sys.inputs()), syn.x0));
    std::mt19937_64 gen(input.seed);
    for (int k = 1; k < count; ++k) {
        InputSpec spec = input;
        spec.seed = gen();
        std::mt19937_64 rng(gen());
        std::normal_distribution<double> normal(0.0, 1.0);
        Eigen::VectorXd x0 = Eigen::VectorXd::Zero(n);
        if (random_x0)
            for (Eigen::Index i = 0; i < n; ++i) x0(i) = normal(rng);
        runs.push_back(simulate(syn.sys, generate_input(spec, syn.sys.inputs()), x0));
    }
    return runs;
}

// ---------------------------------------------------------------------------
// Runner

namespace {

/// Tracks files written by a run so a failure can remove them.
class ArtifactSet {
public:
    explicit ArtifactSet(fs::path dir) : dir_(std::move(dir)) {}

    void write(const std::string& rel, const std::string& text) {
        const fs::path p = dir_ / rel;
        const bool existed = fs::exists(p);
        write_text_file(p, text);
        if (!existed) created_.push_back(p);
        if (std::find(names_.begin(), names_.end(), rel) == names_.end()) names_.push_back(rel);
    }

    void adopt(const std::vector<fs::path>& paths) {
        for (const auto& p : paths) {
            created_.push_back(p);
            names_.push_back(fs::relative(p, dir_).generic_string());
        }
    }

    void remove_all() noexcept {
        std::error_code ec;
        for (const auto& p : created_) fs::remove(p, ec);
        created_.clear();
    }

    const std::vector<std::string>& names() const { return names_; }
    const fs::path& dir() const { return dir_; }

private:
    fs::path dir_;
    std::vector<fs::path> created_;
    std::vector<std::string> names_;
};

class StageRunner {
public:
    explicit StageRunner(ExperimentReport& report) : report_(report) {}

    template <typename F>
    auto operator()(const std::string& name, F&& f) -> decltype(f()) {
        const auto start = std::chrono::steady_clock::now();
        auto record = [&] {
            const std::chrono::duration<double> dt = std::chrono::steady_clock::now() - start;
            report_.timings.push_back({name, dt.count()});
        };
        try {
            if constexpr (std::is_void_v<decltype(f())>) {
                f();
                record();
            } else {
                auto result = f();
                record();
                return result;
            }
        } catch (Error& e) {
            if (e.stage().empty()) e.set_stage(name);
            throw;
        }
    }

private:
    ExperimentReport& report_;
};

template <typename Writer>
std::string to_text(Writer&& w) {
    std::ostringstream os;
    w(os);
    return os.str();
}

Eigen::VectorXd sorted_real_eigenvalues(const Eigen::MatrixXd& m, std::vector<std::string>& warnings,
                                        const std::string& what) {
    if (m.size() == 0) return {};
    if ((m - m.transpose()).cwiseAbs().maxCoeff() <= 1e-12 * std::max(1.0, m.cwiseAbs().maxCoeff())) {
        Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(0.5 * (m + m.transpose()), Eigen::EigenvaluesOnly);
        return es.eigenvalues();
    }
    Eigen::EigenSolver<Eigen::MatrixXd> es(m, false);
    const Eigen::VectorXcd ev = es.eigenvalues();
    if (ev.imag().cwiseAbs().maxCoeff() > 1e-9 * std::max(1.0, ev.cwiseAbs().maxCoeff())) {
        warnings.push_back(what + " has complex eigenvalues; real parts reported");
    }
    Eigen::VectorXd re = ev.real();
    std::sort(re.data(), re.data() + re.size());
    return re;
}

struct Truth {
    bool available = false;
    ShiftOperator S1, S2;
    GraphClassConstraint class1, class2;
    ScalarMapping mapping1, mapping2;
    Eigen::MatrixXd A;
};

json truth_json(const SyntheticSystem& syn, const SystemConfig& sc, std::uint64_t seed,
                const std::vector<Trajectory>& runs) {
    Eigen::MatrixXd x0s(syn.sys.states(), static_cast<Eigen::Index>(runs.size()));
    for (std::size_t k = 0; k < runs.size(); ++k) x0s.col(static_cast<Eigen::Index>(k)) = runs[k].x0;
    return json{{"n", sc.n},
                {"seed", seed},
                {"class1", to_json(sc.class1)},
                {"class2", to_json(sc.class2)},
                {"mapping1", to_json(syn.mapping1)},
                {"mapping2", to_json(syn.mapping2)},
                {"S1", to_json(syn.S1.matrix)},
                {"S2", to_json(syn.S2.matrix)},
                {"A", to_json(syn.sys.A)},
                {"B", to_json(syn.sys.B)},
                {"C", to_json(syn.sys.C)},
                {"D", to_json(syn.sys.D)},
                {"x0", to_json(syn.x0)},
                {"initial_states", to_json(x0s)}};
}

Truth truth_from_synthetic(const SyntheticSystem& syn, const SystemConfig& sc) {
    Truth t;
    t.available = true;
    t.S1 = syn.S1;
    t.S2 = syn.S2;
    t.class1 = sc.class1;
    t.class2 = sc.class2;
    t.mapping1 = syn.mapping1;
    t.mapping2 = syn.mapping2;
    t.A = syn.sys.A;
    return t;
}

Truth load_truth(const std::string& path) {
    Truth t;
    if (path.empty()) return t;
    const json j = read_json_file(path);
    try {
        t.class1 = class_from_json(j.at("class1"));
        t.class2 = class_from_json(j.at("class2"));
        t.mapping1 = mapping_from_json(j.at("mapping1"));
        t.mapping2 = mapping_from_json(j.at("mapping2"));
        t.S1 = {matrix_from_json(j.at("S1"), "S1"), t.class1.cls};
        t.S2 = {matrix_from_json(j.at("S2"), "S2"), t.class2.cls};
        t.A = matrix_from_json(j.at("A"), "A");
    } catch (const json::exception& e) {
        throw ConfigError("truth file '" + path + "': " + e.what());
    }
    t.available = true;
    return t;
}

struct Estimates {
    Eigen::MatrixXd A_hat, B_hat, T;
    bool transformed = false;
};

Estimates estimates_for(const IdentifiedSystem& id, bool assume_identity) {
    Estimates e;
    if (id.T_hat.size() > 0) {
        e.T = id.T_hat;
        Eigen::PartialPivLU<Eigen::MatrixXd> lu(id.T_hat);
        e.A_hat = id.T_hat * id.A_T * lu.inverse();
        e.B_hat = id.T_hat * id.B_T;
    } else if (assume_identity) {
        e.T = Eigen::MatrixXd::Identity(id.order, id.order);
        e.A_hat = id.A_T;
        e.B_hat = id.B_T;
        e.transformed = true;
    } else {
        throw ConfigError(
            "no similarity transform in the identified system (C unknown or detransform failed); "
            "pass --assume-T-identity to work in transformed coordinates");
    }
    return e;
}

void record_recovery(ExperimentReport& report, ArtifactSet& files, const std::string& stem, const ShiftOperator& est,
                     const Truth& truth, const std::string& target, double threshold, bool compare_spectrum) {
    const Graph g = graph_from_matrix(est.matrix, est.cls, threshold);
    files.write(stem + ".csv", to_text([&](std::ostream& os) { write_dense_csv(os, est.matrix); }));
    files.write(stem + ".edges", to_text([&](std::ostream& os) { write_edge_list(os, g); }));
    files.write(stem + ".dot", to_text([&](std::ostream& os) { write_dot(os, g, stem); }));

    MatrixComparison mc{stem, {}, est.matrix};
    if (truth.available) {
        const ShiftOperator& ref = target == "A" ? truth.S1 : truth.S2;
        if (ref.matrix.rows() == est.matrix.rows()) {
            mc.truth = ref.matrix;
            const Graph tg = graph_from_matrix(ref.matrix, ref.cls, threshold);
            report.scores.push_back({stem, compare_support(tg, g)});
            report.residuals[stem + ".max_abs_error"] = (est.matrix - ref.matrix).cwiseAbs().maxCoeff();
            if (compare_spectrum) {
                EigenComparison ec{stem, sorted_real_eigenvalues(ref.matrix, report.warnings, stem + " (true)"),
                                   sorted_real_eigenvalues(est.matrix, report.warnings, stem)};
                report.residuals[stem + ".eigenvalue_error"] = (ec.truth - ec.estimate).cwiseAbs().maxCoeff();
                report.eigenvalues.push_back(std::move(ec));
            }
        } else {
            report.warnings.push_back(stem + ": ground truth has a different size; not compared");
        }
    }
    report.matrices.push_back(std::move(mc));
}

json trace_json(const std::vector<std::vector<double>>& traces) {
    json out = json::array();
    for (const auto& t : traces) {
        json run = json::array();
        for (double x : t) run.push_back(finite(x, "objective trace"));
        out.push_back(std::move(run));
    }
    return out;
}

void run_recoveries(const RunConfig& cfg, const std::vector<RecoveryConfig>& specs, const IdentifiedSystem& id,
                    const Truth& truth, ExperimentReport& report, ArtifactSet& files, StageRunner& stage) {
    const Estimates est = stage("transform", [&] { return estimates_for(id, cfg.assume_T_identity); });
    report.transformed_coordinates = report.transformed_coordinates || est.transformed;
    if (est.transformed) report.warnings.push_back("results are in transformed coordinates (T assumed identity)");

    for (const RecoveryConfig& rc : specs) {
        const std::string stem = rc.stem();
        const Eigen::MatrixXd& m_hat = rc.target == "A" ? est.A_hat : est.B_hat;
        json diag{{"path", to_string(rc.path)}, {"target", rc.target}, {"class", to_json(rc.cls)},
                  {"transformed_coordinates", est.transformed}};

        switch (rc.path) {
            case RecoveryPath::KnownMapping: {
                ScalarMapping f;
                if (rc.mapping) {
                    f = *rc.mapping;
                } else if (truth.available) {
                    f = rc.target == "A" ? truth.mapping1 : truth.mapping2;
                } else {
                    throw ConfigError("recovery '" + stem + "': known_mapping needs a 'mapping' or a truth file");
                }
                const ShiftOperator s = stage("recover_known_mapping:" + stem, [&] {
                    return recover_known_mapping(m_hat, f, rc.cls);
                });
                diag["mapping"] = to_json(f);
                diag["class_violations"] = class_violations(s.matrix, rc.cls, 1e-8);
                record_recovery(report, files, stem, s, truth, rc.target, 1e-3, true);
                break;
            }
            case RecoveryPath::Sparsest: {
                const SparsestResult res = stage("recover_sparsest:" + stem, [&] {
                    const Eigen::MatrixXd sym = rc.cls.demands_symmetry() ? Eigen::MatrixXd(0.5 * (m_hat + m_hat.transpose())) : m_hat;
                    const SpectralDecomposition sd = spectral_decompose(sym);
                    SparsestOptions opts;
                    opts.weight_hint = m_hat.cwiseAbs();
                    return recover_sparsest(sd.eigvecs, rc.cls, rc.solver, opts);
                });
                diag["l1"] = finite(res.l1, "l1");
                diag["class_residual"] = finite(res.class_residual, "class residual");
                diag["spectral_residual"] = finite(res.spectral_residual, "spectral residual");
                diag["iterations"] = res.iterations;
                report.residuals[stem + ".class_residual"] = res.class_residual;
                record_recovery(report, files, stem, res.shift, truth, rc.target, 1e-3, true);
                break;
            }
            case RecoveryPath::OneShot: {
                GraphClassConstraint cls = rc.cls;
                if (!cls.trace) cls.trace = static_cast<double>(id.order);
                OneShotOptions opts;
                opts.a_hat = est.A_hat;
                const OneShotResult res = stage("one_shot:" + stem, [&] {
                    if (rc.mu) return one_shot_state_graph(id.U_R, id.outputs, est.T, cls, *rc.mu, rc.solver, opts);
                    const MuSweep sweep = one_shot_sweep(id.U_R, id.outputs, est.T, cls, rc.solver, opts);
                    json runs = json::array();
                    for (const auto& r : sweep.runs) {
                        runs.push_back({{"mu", r.mu}, {"edges", r.edges}, {"relative_fit", finite(r.relative_fit, "relative fit")},
                                        {"traces", trace_json(r.traces)}});
                    }
                    diag["sweep"] = runs;
                    diag["chosen_run"] = sweep.chosen;
                    return sweep.best;
                });
                diag["class"] = to_json(cls);
                diag["mu"] = res.mu;
                diag["objective"] = finite(res.objective, "objective");
                diag["data_fit"] = finite(res.data_fit, "data fit");
                diag["relative_fit"] = finite(res.relative_fit, "relative fit");
                diag["edges"] = res.edges;
                diag["iterations"] = res.iterations;
                diag["traces"] = trace_json(res.traces);
                if (res.commutation) {
                    diag["commutation_residual"] = finite(*res.commutation, "commutation residual");
                    report.residuals[stem + ".commutation_residual"] = *res.commutation;
                }
                const double m_residual = (res.S_hat.matrix * est.A_hat - res.M_hat).norm();
                diag["auxiliary_residual"] = finite(m_residual, "auxiliary residual");
                report.residuals[stem + ".relative_fit"] = res.relative_fit;
                report.residuals[stem + ".mu"] = res.mu;
                files.write(stem + "_M.csv", to_text([&](std::ostream& os) { write_dense_csv(os, res.M_hat); }));
                record_recovery(report, files, stem, res.S_hat, truth, rc.target, 1e-3, false);
                break;
            }
        }
        files.write(stem + "_diagnostics.json", diag.dump(2) + "\n");
    }
}

std::vector<RecoveryConfig> default_recoveries(const RunConfig& cfg, const Truth& truth) {
    if (!cfg.recovery.empty()) return cfg.recovery;
    std::vector<RecoveryConfig> out;
    if (cfg.command == Command::OneShot) {
        RecoveryConfig r;
        r.path = RecoveryPath::OneShot;
        r.mu = cfg.default_mu;
        r.cls = truth.available ? truth.class1 : GraphClassConstraint::of(ShiftClass::CombinatorialLaplacian);
        out.push_back(r);
        return out;
    }
    RecoveryConfig a, b;
    a.target = "A";
    b.target = "B";
    a.cls = truth.available ? truth.class1 : cfg.system.class1;
    b.cls = truth.available ? truth.class2 : cfg.system.class2;
    out.push_back(a);
    out.push_back(b);
    return out;
}

Eigen::MatrixXd output_matrix(const IdentifyConfig& ic, Eigen::Index l) {
    if (ic.c_matrix == "identity") return Eigen::MatrixXd::Identity(l, l);
    if (ic.c_matrix == "none") return {};
    return read_dense_csv_file(ic.c_matrix);
}

IdentifiedSystem identify_stage(const RunConfig& cfg, const std::vector<Trajectory>& runs, ExperimentReport& report,
                                StageRunner& stage) {
    const Eigen::Index l = runs.front().outputs.rows();
    IdentifyOptions opts;
    opts.s = cfg.identify.s > 0 ? cfg.identify.s : l + 1;
    opts.order_policy = cfg.identify.order_policy;
    IdentifiedSystem id = stage("identify", [&] { return runs.size() == 1 ? identify(runs.front(), opts) : identify(runs, opts); });
    report.singular_values = id.singular_values;
    report.order = id.order;
    report.order_low_confidence = id.order_low_confidence;
    report.residuals["identify.fit_residual"] = id.fit_residual;
    report.warnings.insert(report.warnings.end(), id.warnings.begin(), id.warnings.end());

    const Eigen::MatrixXd c = stage("output_matrix", [&] { return output_matrix(cfg.identify, l); });
    if (c.size() > 0) {
        try {
            const Detransformed d = stage("detransform", [&] { return detransform(c, id); });
            id.T_hat = d.T_hat;
        } catch (const Error& e) {
            // The transformed system is still reported.
            report.warnings.push_back(std::string(e.what()));
            report.transformed_coordinates = true;
        }
    } else {
        report.transformed_coordinates = true;
    }
    return id;
}

void compare_identified_spectrum(const IdentifiedSystem& id, const Eigen::MatrixXd& a_true, ExperimentReport& report) {
    if (a_true.rows() != id.A_T.rows()) {
        report.warnings.push_back("identified order differs from the true state dimension; spectra not compared");
        return;
    }
    EigenComparison ec{"A", sorted_real_eigenvalues(a_true, report.warnings, "A (true)"),
                       sorted_real_eigenvalues(id.A_T, report.warnings, "A_T")};
    report.residuals["A.eigenvalue_error"] = (ec.truth - ec.estimate).cwiseAbs().maxCoeff();
    report.eigenvalues.push_back(std::move(ec));
}

void write_graph_truth(ArtifactSet& files, const SyntheticSystem& syn) {
    const std::pair<const char*, const Graph*> graphs[] = {{"S1_true", &syn.graph1}, {"S2_true", &syn.graph2}};
    for (const auto& [stem, g] : graphs) {
        files.write(std::string(stem) + ".edges", to_text([&](std::ostream& os) { write_edge_list(os, *g); }));
        files.write(std::string(stem) + ".dot", to_text([&](std::ostream& os) { write_dot(os, *g, stem); }));
    }
}

void run_command(const RunConfig& cfg, ExperimentReport& report, ArtifactSet& files, StageRunner& stage) {
    switch (cfg.command) {
        case Command::Simulate: {
            InputSpec input = cfg.input;
            const SyntheticSystem syn = stage("system", [&] { return make_synthetic_system(cfg.system, cfg.seed, &input); });
            const auto runs = stage("simulate", [&] {
                return simulate_experiments(syn, input, cfg.experiments, cfg.system.random_x0);
            });
            stage("write", [&] {
                for (std::size_t k = 0; k < runs.size(); ++k) {
                    const std::string name = runs.size() == 1 ? "trajectory.csv" : "trajectory_" + std::to_string(k) + ".csv";
                    files.write(name, to_text([&](std::ostream& os) { write_trajectory_csv(os, runs[k]); }));
                }
                files.write("truth.json", truth_json(syn, cfg.system, cfg.seed, runs).dump(2) + "\n");
                write_graph_truth(files, syn);
            });
            const auto mr = is_minimal(syn.sys);
            if (mr.verdict != Minimality::Minimal) report.warnings.push_back("system is not minimal: " + to_string(mr.verdict));
            break;
        }
        case Command::Identify: {
            if (cfg.trajectory_paths.empty()) throw ConfigError("identify needs paths.trajectory");
            const auto runs = stage("read", [&] {
                std::vector<Trajectory> out;
                for (const auto& path : cfg.trajectory_paths) {
                    std::istringstream ss(read_text_file(path));
                    out.push_back(read_trajectory_csv(ss));
                }
                return out;
            });
            const IdentifiedSystem id = identify_stage(cfg, runs, report, stage);
            const Truth truth = stage("truth", [&] { return load_truth(cfg.truth_path); });
            if (truth.available) compare_identified_spectrum(id, truth.A, report);
            stage("write", [&] { files.write("identified.json", to_json(id).dump(2) + "\n"); });
            break;
        }
        case Command::Recover:
        case Command::OneShot: {
            if (cfg.system_path.empty()) throw ConfigError(to_string(cfg.command) + " needs paths.system");
            const IdentifiedSystem id = stage("read", [&] { return identified_from_json(read_json_file(cfg.system_path)); });
            const Truth truth = stage("truth", [&] { return load_truth(cfg.truth_path); });
            report.singular_values = id.singular_values;
            report.order = id.order;
            report.order_low_confidence = id.order_low_confidence;
            std::vector<RecoveryConfig> specs = default_recoveries(cfg, truth);
            if (cfg.command == Command::OneShot) {
                for (const auto& r : specs) {
                    if (r.path != RecoveryPath::OneShot) throw ConfigError("oneshot: every recovery entry must use path one_shot");
                }
            }
            run_recoveries(cfg, specs, id, truth, report, files, stage);
            break;
        }
        case Command::ReproduceSynthetic: {
            InputSpec input = cfg.input;
            const SyntheticSystem syn = stage("system", [&] { return make_synthetic_system(cfg.system, cfg.seed, &input); });
            const auto runs = stage("simulate", [&] {
                return simulate_experiments(syn, input, cfg.experiments, cfg.system.random_x0);
            });
            const IdentifiedSystem id = identify_stage(cfg, runs, report, stage);
            const Truth truth = truth_from_synthetic(syn, cfg.system);
            compare_identified_spectrum(id, syn.sys.A, report);
            stage("write", [&] {
                files.write("truth.json", truth_json(syn, cfg.system, cfg.seed, runs).dump(2) + "\n");
                files.write("identified.json", to_json(id).dump(2) + "\n");
                write_graph_truth(files, syn);
            });
            run_recoveries(cfg, default_recoveries(cfg, truth), id, truth, report, files, stage);
            break;
        }
    }
}

}  // namespace

ExperimentReport run(const RunConfig& cfg) {
    ExperimentReport report;
    report.command = to_string(cfg.command);
    report.seed = cfg.seed;
    ArtifactSet files(cfg.out);
    StageRunner stage(report);
    try {
        run_command(cfg, report, files, stage);
        stage("export", [&] { files.adopt(export_plotdata(report, files.dir())); });
        report.artifacts = files.names();
        report.artifacts.emplace_back("report.json");
        try {
            files.write("report.json", to_json(report).dump(2) + "\n");
        } catch (Error& e) {
            if (e.stage().empty()) e.set_stage("report");
            throw;
        }
    } catch (...) {
        files.remove_all();
        throw;
    }
    return report;
}

std::vector<fs::path> export_plotdata(const ExperimentReport& r, const fs::path& dir) {
    std::vector<fs::path> written;
    json files = json::array();
    json omitted = json::array();
    auto emit = [&](const std::string& name, const std::string& text, json columns) {
        const fs::path p = dir / name;
        write_text_file(p, text);
        written.push_back(p);
        files.push_back({{"path", name}, {"columns", std::move(columns)}});
    };

    if (r.singular_values.size() > 0) {
        emit("singular_values.csv", to_text([&](std::ostream& os) { write_singular_values_csv(os, r.singular_values); }),
             json::array({{{"name", "index"}, {"description", "1-based position in descending order"}},
                          {{"name", "sigma"}, {"description", "singular value of R22"}}}));
    } else {
        omitted.push_back({{"path", "singular_values.csv"}, {"reason", "no identification stage in this run"}});
    }

    if (!r.eigenvalues.empty()) {
        std::ostringstream os;
        os << std::setprecision(17) << "graph,index,true,estimated\n";
        for (const auto& e : r.eigenvalues)
            for (Eigen::Index k = 0; k < e.truth.size() && k < e.estimate.size(); ++k)
                os << e.name << ',' << k << ',' << e.truth(k) << ',' << e.estimate(k) << '\n';
        emit("eigenvalues.csv", os.str(),
             json::array({{{"name", "graph"}, {"description", "matrix the spectra belong to"}},
                          {{"name", "index"}, {"description", "0-based position in ascending order"}},
                          {{"name", "true"}, {"description", "ground-truth eigenvalue"}},
                          {{"name", "estimated"}, {"description", "eigenvalue of the recovered matrix"}}}));
    } else {
        omitted.push_back({{"path", "eigenvalues.csv"}, {"reason", "no recovery stage with ground truth in this run"}});
    }

    for (const auto& m : r.matrices) {
        const bool with_truth = m.truth.size() > 0;
        std::ostringstream os;
        os << std::setprecision(17) << (with_truth ? "row,col,true,estimated\n" : "row,col,estimated\n");
        for (Eigen::Index i = 0; i < m.estimate.rows(); ++i) {
            for (Eigen::Index j = 0; j < m.estimate.cols(); ++j) {
                os << i << ',' << j << ',';
                if (with_truth) os << m.truth(i, j) << ',';
                os << m.estimate(i, j) << '\n';
            }
        }
        json cols = json::array({{{"name", "row"}, {"description", "0-based row index"}},
                                 {{"name", "col"}, {"description", "0-based column index"}}});
        if (with_truth) cols.push_back({{"name", "true"}, {"description", "ground-truth entry"}});
        cols.push_back({{"name", "estimated"}, {"description", "recovered entry"}});
        emit("heatmap_" + m.name + ".csv", os.str(), std::move(cols));
    }

    const json schema{{"files", files}, {"omitted", omitted}};
    const fs::path sp = dir / "plotdata_schema.json";
    write_text_file(sp, schema.dump(2) + "\n");
    written.push_back(sp);
    return written;
}

}  // namespace netid
