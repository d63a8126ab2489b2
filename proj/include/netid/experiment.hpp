#pragma once

#include "netid/graph.hpp"
#include "netid/io.hpp"
#include "netid/lti.hpp"
#include "netid/matrix_function.hpp"
#include "netid/subspace_id.hpp"
#include "netid/topology.hpp"

#include <Eigen/Dense>

#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <vector>

namespace netid {

enum class Command { Simulate, Identify, Recover, OneShot, ReproduceSynthetic };

std::string to_string(Command c);
Command command_from_string(const std::string& s);

enum class RecoveryPath { KnownMapping, Sparsest, OneShot };

std::string to_string(RecoveryPath p);
RecoveryPath recovery_path_from_string(const std::string& s);

struct RecoveryConfig {
    RecoveryPath path = RecoveryPath::KnownMapping;
    std::string target = "A";        ///< "A" (state graph) or "B" (input graph)
    std::string name;                ///< artifact stem; "S1" for A and "S2" for B when empty
    GraphClassConstraint cls;
    std::optional<ScalarMapping> mapping;  ///< known_mapping; defaults to the generating mapping
    std::optional<double> mu;        ///< one_shot; empty means the sweep rule
    SolverOptions solver;

    std::string stem() const { return name.empty() ? (target == "B" ? "S2" : "S1") : name; }
};

/// Synthetic network system: A = f1(S1) scaled to `spectral_radius`, B = f2(S2).
struct SystemConfig {
    int n = 15;
    GraphFamily graph1 = GraphFamily::erdos_renyi(0.3);
    GraphFamily graph2 = GraphFamily::erdos_renyi(0.3);
    GraphClassConstraint class1 = GraphClassConstraint::of(ShiftClass::CombinatorialLaplacian);
    GraphClassConstraint class2 = GraphClassConstraint::of(ShiftClass::Adjacency);
    ScalarMapping mapping1 = ScalarMapping::heat_kernel(1.0, 1.0);
    bool tau_auto = true;            ///< tau of a heat-kernel mapping1 = 1 / lambda_max(S1)
    ScalarMapping mapping2 = ScalarMapping::identity();
    double spectral_radius = 0.95;
    bool autonomous = false;         ///< B = D = 0
    bool random_x0 = true;
};

struct IdentifyConfig {
    Eigen::Index s = 0;              ///< 0: l + 1
    OrderPolicy order_policy;
    std::string c_matrix = "identity";  ///< "identity", "none" or a dense CSV path
};

/// Parsed and validated configuration of one CLI command.
struct RunConfig {
    Command command = Command::ReproduceSynthetic;
    std::uint64_t seed = 1;
    std::string out = "out";
    SystemConfig system;
    InputSpec input{InputSpec::Kind::PiecewiseConstantBipolar, 1, 300, 0};
    int experiments = 1;             ///< independent runs simulated by simulate / reproduce-synthetic
    IdentifyConfig identify;
    std::vector<RecoveryConfig> recovery;  ///< empty: command defaults
    std::optional<double> default_mu;  ///< mu of default one_shot entries; empty means the sweep rule
    bool assume_T_identity = false;
    std::vector<std::string> trajectory_paths;  ///< identify input, one file per experiment
    std::string system_path;         ///< recover / oneshot input (IdentifiedSystem bundle)
    std::string truth_path;          ///< optional ground truth written by simulate
};

/// Rejects unknown keys and invalid values with ConfigError.
RunConfig parse_run_config(const json& j);
/// Canonical form: every field present, defaults spelled out.
json to_json(const RunConfig& cfg);

struct StageTiming {
    std::string stage;
    double seconds = 0.0;
};

struct EigenComparison {
    std::string name;
    Eigen::VectorXd truth;      ///< sorted ascending
    Eigen::VectorXd estimate;   ///< sorted ascending
};

struct MatrixComparison {
    std::string name;
    Eigen::MatrixXd truth;      ///< empty when no ground truth
    Eigen::MatrixXd estimate;
};

struct NamedScore {
    std::string name;
    SupportScore score;
};

struct ExperimentReport {
    std::string command;
    std::uint64_t seed = 0;
    std::vector<StageTiming> timings;
    Eigen::VectorXd singular_values;
    Eigen::Index order = 0;
    bool order_low_confidence = false;
    bool transformed_coordinates = false;
    std::vector<EigenComparison> eigenvalues;
    std::vector<MatrixComparison> matrices;
    std::vector<NamedScore> scores;
    std::map<std::string, double> residuals;
    std::vector<std::string> warnings;
    std::vector<std::string> artifacts;  ///< paths relative to the output directory
};

/// Throws NumericError when a numeric field is not finite.
json to_json(const ExperimentReport& r);
ExperimentReport report_from_json(const json& j);

/// Ground truth of a synthetic network system.
struct SyntheticSystem {
    Graph graph1, graph2;
    ShiftOperator S1, S2;
    ScalarMapping mapping1, mapping2;  ///< after stability scaling
    StateSpaceSystem sys;
    Eigen::VectorXd x0;
};

/// random_graph x2 -> build_shift x2 -> f1, f2 -> stability scaling. Sub-seeds
/// for both graphs, the input and x0 are drawn in that order from one
/// generator seeded with `seed`.
SyntheticSystem make_synthetic_system(const SystemConfig& cfg, std::uint64_t seed, InputSpec* input = nullptr);

/// `count` independent runs of `syn`. Run 0 uses `syn.x0` and `input`; later
/// runs draw their input seed and initial state from a generator seeded with
/// `input.seed`.
std::vector<Trajectory> simulate_experiments(const SyntheticSystem& syn, const InputSpec& input, int count,
                                             bool random_x0 = true);

/// Executes `cfg.command`, writing artifacts under `cfg.out`. Errors carry the
/// failing stage name; files written by the failed run are removed.
ExperimentReport run(const RunConfig& cfg);

/// Singular values (index, sigma), eigenvalue pairs (graph, index, true,
/// estimated) and one heat-map grid per compared matrix (row, col, true,
/// estimated), plus a schema sidecar. Files without data are omitted and
/// listed as such in the sidecar. Returns the written paths.
std::vector<std::filesystem::path> export_plotdata(const ExperimentReport& r, const std::filesystem::path& dir);

}  // namespace netid
