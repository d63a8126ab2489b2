#include "netid/error.hpp"
#include "netid/experiment.hpp"
#include "netid/io.hpp"

#include "oracles.hpp"

#include <doctest.h>

#include <filesystem>
#include <sstream>

using namespace netid;
using Eigen::MatrixXd;
using Eigen::VectorXd;
namespace fs = std::filesystem;

namespace {

fs::path scratch(const std::string& name) {
    const fs::path p = fs::temp_directory_path() / ("netid_test_" + name);
    fs::remove_all(p);
    return p;
}

std::size_t count_lines(const fs::path& p) {
    std::istringstream ss(read_text_file(p));
    std::size_t n = 0;
    for (std::string line; std::getline(ss, line);) n += !line.empty();
    return n;
}

RunConfig small_config(Command c, const fs::path& out) {
    RunConfig cfg;
    cfg.command = c;
    cfg.seed = 7;
    cfg.out = out.string();
    cfg.system.n = 6;
    cfg.input.length = 120;
    return cfg;
}

}  // namespace

TEST_CASE("dense CSV round trip is exact") {
    std::mt19937_64 rng(41);
    const MatrixXd m = oracle::random_matrix(rng, 4, 7) * 1e3;
    std::stringstream ss;
    write_dense_csv(ss, m);
    CHECK(read_dense_csv(ss) == m);

    std::istringstream ragged("1,2\n3\n");
    CHECK_THROWS_AS(read_dense_csv(ragged), ConfigError);
    std::istringstream junk("1,x\n");
    CHECK_THROWS_AS(read_dense_csv(junk), ConfigError);
}

TEST_CASE("trajectory CSV round trip") {
    std::mt19937_64 rng(42);
    Trajectory t;
    t.inputs = oracle::random_matrix(rng, 2, 15);
    t.outputs = oracle::random_matrix(rng, 3, 15);
    std::stringstream ss;
    write_trajectory_csv(ss, t);
    const std::string text = ss.str();
    CHECK(text.rfind("t,u_0,u_1,y_0,y_1,y_2\n", 0) == 0);
    const Trajectory back = read_trajectory_csv(ss);
    CHECK(back.inputs == t.inputs);
    CHECK(back.outputs == t.outputs);
}

TEST_CASE("JSON round trips: matrices, mappings, classes") {
    std::mt19937_64 rng(43);
    const MatrixXd m = oracle::random_matrix(rng, 3, 2);
    CHECK(matrix_from_json(to_json(m), "m") == m);
    const VectorXd v = oracle::random_matrix(rng, 5, 1);
    CHECK(vector_from_json(to_json(v), "v") == v);

    const ScalarMapping maps[] = {ScalarMapping::identity(), ScalarMapping::heat_kernel(0.7, 0.3, Interval{0, 4}),
                                  ScalarMapping::polynomial({0.1, 2.0, -0.5})};
    for (const auto& f : maps) {
        const ScalarMapping g = mapping_from_json(to_json(f));
        for (double x : {0.0, 0.5, 1.7}) CHECK(g(x) == f(x));
        CHECK(g.domain.has_value() == f.domain.has_value());
    }
    CHECK_THROWS_AS(mapping_from_json(json{{"kind", "heat"}, {"alpha", 1}, {"tau", 1}, {"beta", 2}}), ConfigError);
    CHECK_THROWS_AS(mapping_from_json(json{{"kind", "cosine"}}), ConfigError);

    GraphClassConstraint c = GraphClassConstraint::of(ShiftClass::CombinatorialLaplacian);
    c.trace = 4.0;
    const GraphClassConstraint back = class_from_json(to_json(c));
    CHECK(back.cls == c.cls);
    CHECK(back.trace == c.trace);
    CHECK(class_from_json(json("adjacency")).cls == ShiftClass::Adjacency);
}

TEST_CASE("IdentifiedSystem JSON round trip") {
    std::mt19937_64 rng(44);
    const auto sys = oracle::random_minimal_system(rng, 3, 2, 3, true);
    const Trajectory t = simulate(sys, oracle::random_matrix(rng, 2, 60), VectorXd(oracle::random_matrix(rng, 3, 1)));
    IdentifyOptions opts;
    opts.s = 5;
    IdentifiedSystem id = identify(t, opts);
    id.T_hat = detransform(sys.C, id).T_hat;
    const IdentifiedSystem back = identified_from_json(json::parse(to_json(id).dump()));
    CHECK(back.order == id.order);
    CHECK(back.A_T == id.A_T);
    CHECK(back.B_T == id.B_T);
    CHECK(back.C_T == id.C_T);
    CHECK(back.D == id.D);
    CHECK(back.x_T0 == id.x_T0);
    CHECK(back.U_R == id.U_R);
    CHECK(back.T_hat == id.T_hat);
    CHECK(back.singular_values == id.singular_values);
}

TEST_CASE("run config: canonical form round trips and unknown keys fail") {
    json j = json::parse(R"({"command":"reproduce-synthetic","seed":3,
        "system":{"n":8,"graph1":{"family":"erdos_renyi","p":0.4}},
        "identify":{"order":"auto"},
        "recovery":[{"path":"one_shot","target":"A","class":"laplacian","mu":0.5}]})");
    const RunConfig cfg = parse_run_config(j);
    CHECK(cfg.system.n == 8);
    CHECK(cfg.recovery.size() == 1);
    const json canon = to_json(cfg);
    CHECK(to_json(parse_run_config(canon)) == canon);

    CHECK_THROWS_AS(parse_run_config(json{{"sede", 1}}), ConfigError);
    CHECK_THROWS_AS(parse_run_config(json{{"system", {{"n", 5}, {"nodes", 3}}}}), ConfigError);
    CHECK_THROWS_AS(parse_run_config(json{{"recovery", {{"path", "one_shot"}, {"lambda", 1}}}}), ConfigError);
    CHECK_THROWS_AS(parse_run_config(json{{"mu", -1}}), ConfigError);
    CHECK_THROWS_AS(parse_run_config(json{{"identify", {{"s", 1}}}}), ConfigError);
}

TEST_CASE("report JSON round trip") {
    const fs::path out = scratch("report");
    const ExperimentReport r = run(small_config(Command::ReproduceSynthetic, out));
    const json j = to_json(r);
    const ExperimentReport back = report_from_json(j);
    CHECK(to_json(back) == j);
    CHECK(json::parse(read_text_file(out / "report.json")) == j);

    ExperimentReport bad;
    bad.residuals["x"] = std::nan("");
    CHECK_THROWS_AS(to_json(bad), NumericError);
    fs::remove_all(out);
}

TEST_CASE("export_plotdata: row counts and omitted files") {
    const fs::path dir = scratch("plot");
    ExperimentReport r;
    r.singular_values = VectorXd::LinSpaced(5, 5, 1);
    export_plotdata(r, dir);
    CHECK(count_lines(dir / "singular_values.csv") == 6);
    CHECK_FALSE(fs::exists(dir / "eigenvalues.csv"));
    const json schema = read_json_file(dir / "plotdata_schema.json");
    bool listed = false;
    for (const auto& o : schema["omitted"]) listed = listed || o["path"] == "eigenvalues.csv";
    CHECK(listed);
    fs::remove_all(dir);
}

TEST_CASE("simulate: zero input and zero initial state give an all-zero trajectory") {
    const fs::path out = scratch("zero");
    RunConfig cfg = small_config(Command::Simulate, out);
    cfg.input.kind = InputSpec::Kind::Zero;
    cfg.system.random_x0 = false;
    run(cfg);
    std::istringstream ss(read_text_file(out / "trajectory.csv"));
    const Trajectory t = read_trajectory_csv(ss);
    CHECK(t.inputs.isZero(0.0));
    CHECK(t.outputs.isZero(0.0));
    fs::remove_all(out);
}

TEST_CASE("file chain matches the in-process pipeline bit for bit") {
    const fs::path sim = scratch("chain_sim"), idf = scratch("chain_id"), one = scratch("chain_all");
    run(small_config(Command::Simulate, sim));

    RunConfig ic = small_config(Command::Identify, idf);
    ic.trajectory_paths = {(sim / "trajectory.csv").string()};
    ic.truth_path = (sim / "truth.json").string();
    const ExperimentReport ir = run(ic);

    run(small_config(Command::ReproduceSynthetic, one));
    CHECK(read_text_file(idf / "identified.json") == read_text_file(one / "identified.json"));

    // Identified eigenvalues against the generating system.
    REQUIRE(ir.eigenvalues.size() == 1);
    CHECK((ir.eigenvalues[0].truth - ir.eigenvalues[0].estimate).cwiseAbs().maxCoeff() < 1e-7);

    RunConfig rc = small_config(Command::Recover, scratch("chain_rec"));
    rc.system_path = (idf / "identified.json").string();
    rc.truth_path = (sim / "truth.json").string();
    const ExperimentReport rr = run(rc);
    REQUIRE_FALSE(rr.scores.empty());
    for (const auto& s : rr.scores) CHECK(s.score.f_score == 1.0);
    for (const auto& p : {sim, idf, one, fs::path(rc.out)}) fs::remove_all(p);
}

TEST_CASE("failed runs leave no artifacts behind") {
    const fs::path out = scratch("fail");
    RunConfig cfg = small_config(Command::Simulate, out);
    cfg.system.graph1 = GraphFamily::erdos_renyi(0.0);
    try {
        run(cfg);
        FAIL("expected an error");
    } catch (const Error& e) {
        CHECK(e.stage() == "system");
    }
    CHECK((!fs::exists(out) || fs::is_empty(out)));
}
