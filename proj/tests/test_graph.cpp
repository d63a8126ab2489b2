#include "netid/error.hpp"
#include "netid/graph.hpp"
#include "netid/spectral.hpp"

#include <doctest.h>

#include <random>
#include <sstream>

using namespace netid;
using Eigen::MatrixXd;
using Eigen::VectorXd;

namespace {

Graph path3() { return random_graph(GraphFamily::path(), 3, 0); }

MatrixXd path3_laplacian() {
    MatrixXd l(3, 3);
    l << 1, -1, 0, -1, 2, -1, 0, -1, 1;
    return l;
}

}  // namespace

TEST_CASE("build_shift: path-3 adjacency and Laplacian") {
    MatrixXd a(3, 3);
    a << 0, 1, 0, 1, 0, 1, 0, 1, 0;
    CHECK(build_shift(path3(), GraphClassConstraint::of(ShiftClass::Adjacency)).matrix == a);
    CHECK(build_shift(path3(), GraphClassConstraint::of(ShiftClass::CombinatorialLaplacian)).matrix == path3_laplacian());
}

TEST_CASE("build_shift: edgeless graph gives the zero Laplacian") {
    Graph g;
    g.n = 2;
    CHECK(build_shift(g, GraphClassConstraint::of(ShiftClass::CombinatorialLaplacian)).matrix == MatrixXd::Zero(2, 2));
}

TEST_CASE("build_shift: directed graph cannot be a Laplacian") {
    Graph g = path3();
    g.directed = true;
    CHECK_THROWS_AS(build_shift(g, GraphClassConstraint::of(ShiftClass::CombinatorialLaplacian)), ConfigError);
}

TEST_CASE("validate rejects bad indices, self-loops and duplicates") {
    Graph g;
    g.n = 3;
    g.edges = {{0, 3, 1.0}};
    CHECK_THROWS_AS(validate(g), ConfigError);
    g.edges = {{1, 1, 1.0}};
    CHECK_THROWS_AS(validate(g), ConfigError);
    g.edges = {{0, 1, 1.0}, {1, 0, 1.0}};
    CHECK_THROWS_AS(validate(g), ConfigError);
}

TEST_CASE("Laplacian annihilates the ones vector") {
    for (std::uint64_t seed = 0; seed < 20; ++seed) {
        Graph g = random_graph(GraphFamily::erdos_renyi(0.4), 12, seed);
        std::mt19937_64 rng(seed);
        std::uniform_real_distribution<double> w(0.1, 3.0);
        for (auto& e : g.edges) e.weight = w(rng);
        const MatrixXd l = build_shift(g, GraphClassConstraint::of(ShiftClass::CombinatorialLaplacian)).matrix;
        CHECK((l * VectorXd::Ones(12)).cwiseAbs().maxCoeff() <= 1e-13);
        const MatrixXd unit = build_shift(random_graph(GraphFamily::erdos_renyi(0.4), 12, seed),
                                          GraphClassConstraint::of(ShiftClass::CombinatorialLaplacian))
                                  .matrix;
        CHECK((unit * VectorXd::Ones(12)).isZero(0.0));
        CHECK(class_violations(l, GraphClassConstraint::of(ShiftClass::CombinatorialLaplacian)).empty());
    }
}

TEST_CASE("normalized Laplacian spectrum lies in [0, 2]") {
    for (std::uint64_t seed = 0; seed < 20; ++seed) {
        Graph g = random_graph(GraphFamily::erdos_renyi(0.3), 10, seed);
        const MatrixXd l = build_shift(g, GraphClassConstraint::of(ShiftClass::NormalizedLaplacian)).matrix;
        Eigen::SelfAdjointEigenSolver<MatrixXd> es(l);
        CHECK(es.eigenvalues().minCoeff() >= -1e-10);
        CHECK(es.eigenvalues().maxCoeff() <= 2.0 + 1e-10);
    }
}

TEST_CASE("spectral_decompose: identity, path-3 Laplacian, zero") {
    const SpectralDecomposition id = spectral_decompose(MatrixXd::Identity(3, 3));
    CHECK(id.eigvals.isApprox(VectorXd::Ones(3)));
    CHECK((id.eigvecs.transpose() * id.eigvecs - MatrixXd::Identity(3, 3)).norm() < 1e-10);

    const SpectralDecomposition p = spectral_decompose(path3_laplacian());
    CHECK(p.eigvals(0) == doctest::Approx(0.0).epsilon(1e-12));
    CHECK(std::abs(p.eigvals(0)) < 1e-12);
    CHECK(p.eigvals(1) == doctest::Approx(1.0).epsilon(1e-12));
    CHECK(p.eigvals(2) == doctest::Approx(3.0).epsilon(1e-12));

    const SpectralDecomposition z = spectral_decompose(MatrixXd::Zero(4, 4));
    CHECK(z.eigvals.cwiseAbs().maxCoeff() == 0.0);
}

TEST_CASE("spectral_decompose: sign convention, orthonormality, determinism") {
    std::mt19937_64 rng(11);
    std::normal_distribution<double> nd;
    for (int trial = 0; trial < 10; ++trial) {
        MatrixXd m(6, 6);
        for (int i = 0; i < 36; ++i) m.data()[i] = nd(rng);
        m = (m + m.transpose()).eval();
        const SpectralDecomposition a = spectral_decompose(m), b = spectral_decompose(m);
        CHECK(a.eigvals == b.eigvals);
        CHECK(a.eigvecs == b.eigvecs);
        CHECK((a.eigvecs.transpose() * a.eigvecs - MatrixXd::Identity(6, 6)).norm() < 1e-10);
        for (int k = 1; k < 6; ++k) CHECK(a.eigvals(k) >= a.eigvals(k - 1));
        for (int k = 0; k < 6; ++k) {
            int first = 0;
            while (std::abs(a.eigvecs(first, k)) <= 1e-12) ++first;
            CHECK(a.eigvecs(first, k) > 0.0);
        }
        const MatrixXd rec = a.eigvecs * a.eigvals.asDiagonal() * a.eigvecs.transpose();
        CHECK((rec - m).norm() <= 1e-8 * m.norm());
    }
}

TEST_CASE("spectral_decompose: non-symmetric diagonalizable matrix") {
    MatrixXd t(3, 3);
    t << 1, 2, 0, 0, 1, 1, 1, 0, 3;
    VectorXd d(3);
    d << 0.2, -0.5, 1.5;
    const MatrixXd m = t * d.asDiagonal() * t.inverse();
    const SpectralDecomposition sd = spectral_decompose(m);
    CHECK(sd.eigvals(0) == doctest::Approx(-0.5));
    CHECK(sd.eigvals(2) == doctest::Approx(1.5));
    CHECK((sd.eigvecs * sd.eigvals.asDiagonal() * sd.eigvecs.inverse() - m).norm() < 1e-8 * m.norm());
}

TEST_CASE("spectral_decompose: defective matrix is rejected with its residual") {
    MatrixXd j(2, 2);
    j << 1, 1, 0, 1;
    try {
        spectral_decompose(j);
        FAIL("expected NumericError");
    } catch (const NumericError& e) {
        CHECK(e.residual() > 1e-6);
    }
}

TEST_CASE("reconstruct_from_spectrum: examples") {
    VectorXd lam(3);
    lam << 0, 1, 3;
    CHECK(reconstruct_from_spectrum(MatrixXd::Identity(3, 3), lam, GraphClassConstraint{}).matrix ==
          MatrixXd(lam.asDiagonal()));

    const SpectralDecomposition sd = spectral_decompose(path3_laplacian());
    const ShiftOperator back =
        reconstruct_from_spectrum(sd.eigvecs, sd.eigvals, GraphClassConstraint::of(ShiftClass::CombinatorialLaplacian));
    CHECK((back.matrix - path3_laplacian()).norm() < 1e-8);
}

TEST_CASE("reconstruct_from_spectrum: row-sum violation is reported") {
    std::mt19937_64 rng(5);
    Graph g = random_graph(GraphFamily::ring(), 4, 0);
    const MatrixXd l = build_shift(g, GraphClassConstraint::of(ShiftClass::CombinatorialLaplacian)).matrix;
    SpectralDecomposition sd = spectral_decompose(l);
    sd.eigvals(0) += 0.5;  // the constant vector no longer maps to zero
    CHECK_THROWS_AS(reconstruct_from_spectrum(sd.eigvecs, sd.eigvals,
                                              GraphClassConstraint::of(ShiftClass::CombinatorialLaplacian)),
                    NumericError);
}

TEST_CASE("spectral round trip for every symmetric class") {
    for (ShiftClass cls : {ShiftClass::Adjacency, ShiftClass::CombinatorialLaplacian, ShiftClass::NormalizedLaplacian}) {
        for (std::uint64_t seed = 0; seed < 5; ++seed) {
            const auto c = GraphClassConstraint::of(cls);
            const MatrixXd s = build_shift(random_graph(GraphFamily::erdos_renyi(0.35), 9, seed), c).matrix;
            const SpectralDecomposition sd = spectral_decompose(s);
            CHECK((reconstruct_from_spectrum(sd.eigvecs, sd.eigvals, c).matrix - s).norm() <= 1e-8 * s.norm());
        }
    }
}

TEST_CASE("hard_zero clears round-off residue only") {
    MatrixXd x(2, 2);
    x << 1.0, 1e-14, -1e-3, 2.0;
    const MatrixXd z = hard_zero(x);
    CHECK(z(0, 1) == 0.0);
    CHECK(z(1, 0) == -1e-3);
}

TEST_CASE("random_graph: ring, path and seeded Erdos-Renyi") {
    const Graph ring = random_graph(GraphFamily::ring(), 4, 0);
    REQUIRE(ring.edges.size() == 4);
    MatrixXd expect = MatrixXd::Zero(4, 4);
    for (auto [i, j] : {std::pair{0, 1}, {1, 2}, {2, 3}, {3, 0}}) expect(i, j) = expect(j, i) = 1.0;
    CHECK(adjacency_matrix(ring) == expect);

    const Graph p2 = random_graph(GraphFamily::path(), 2, 0);
    REQUIRE(p2.edges.size() == 1);
    CHECK(p2.edges[0].i == 0);
    CHECK(p2.edges[0].j == 1);

    const Graph a = random_graph(GraphFamily::erdos_renyi(0.3), 15, 7);
    const Graph b = random_graph(GraphFamily::erdos_renyi(0.3), 15, 7);
    CHECK(a.n == 15);
    CHECK(is_connected(a));
    CHECK(adjacency_matrix(a) == adjacency_matrix(b));
    CHECK_NOTHROW(validate(a));
}

TEST_CASE("random_graph: errors") {
    CHECK_THROWS_AS(random_graph(GraphFamily::erdos_renyi(0.3), 1, 0), ConfigError);
    CHECK_THROWS_AS(random_graph(GraphFamily::erdos_renyi(1.5), 5, 0), ConfigError);
    CHECK_THROWS_AS(random_graph(GraphFamily::erdos_renyi(0.01), 30, 0, 20), NumericError);
}

TEST_CASE("graph_from_matrix and compare_support") {
    const Graph g = random_graph(GraphFamily::erdos_renyi(0.4), 8, 3);
    const MatrixXd l = build_shift(g, GraphClassConstraint::of(ShiftClass::CombinatorialLaplacian)).matrix;
    const Graph back = graph_from_matrix(l, ShiftClass::CombinatorialLaplacian);
    CHECK(adjacency_matrix(back) == adjacency_matrix(g));
    const SupportScore same = compare_support(g, back);
    CHECK(same.f_score == 1.0);

    Graph extra = back;
    const MatrixXd w = adjacency_matrix(g);
    bool added = false;
    for (int i = 0; i < 8 && !added; ++i)
        for (int j = i + 1; j < 8 && !added; ++j)
            if (w(i, j) == 0.0) extra.edges.push_back({i, j, 1.0}), added = true;
    REQUIRE(added);
    const SupportScore s = compare_support(g, extra);
    CHECK(s.false_positive == 1);
    CHECK(s.recall == 1.0);
    CHECK(s.precision < 1.0);
}

TEST_CASE("edge list round trip and DOT export") {
    Graph g = random_graph(GraphFamily::erdos_renyi(0.5), 6, 2);
    g.edges.front().weight = 0.1234567890123456789;
    std::stringstream ss;
    write_edge_list(ss, g);
    CHECK(ss.str().rfind("n 6 directed 0\n", 0) == 0);
    const Graph back = read_edge_list(ss);
    CHECK(adjacency_matrix(back) == adjacency_matrix(g));

    std::ostringstream dot;
    write_dot(dot, g, "G");
    CHECK(dot.str().find("graph G") != std::string::npos);
    CHECK(dot.str().find("--") != std::string::npos);

    std::istringstream bad("n 2 directed 0\n0 5 1\n");
    CHECK_THROWS_AS(read_edge_list(bad), ConfigError);
}
