#include "netid/error.hpp"
#include "netid/lti.hpp"

#include "oracles.hpp"

#include <doctest.h>

using namespace netid;
using Eigen::MatrixXd;
using Eigen::VectorXd;

namespace {

StateSpaceSystem make(MatrixXd a, MatrixXd b, MatrixXd c, MatrixXd d) { return {std::move(a), std::move(b), std::move(c), std::move(d)}; }

}  // namespace

TEST_CASE("simulate: one-step delay") {
    const auto sys = make(MatrixXd::Zero(2, 2), MatrixXd::Identity(2, 2), MatrixXd::Identity(2, 2), MatrixXd::Zero(2, 2));
    MatrixXd u(2, 2);
    u << 1, 2, 3, 4;
    const Trajectory t = simulate(sys, u, VectorXd::Zero(2).eval());
    CHECK(t.outputs.col(0).isZero());
    CHECK(t.outputs.col(1) == u.col(0));
}

TEST_CASE("simulate: frozen state") {
    const auto sys = make(MatrixXd::Identity(3, 3), MatrixXd::Zero(3, 3), MatrixXd::Identity(3, 3), MatrixXd::Zero(3, 3));
    const VectorXd v = VectorXd::LinSpaced(3, -1, 2);
    const Trajectory t = simulate(sys, MatrixXd::Zero(3, 5), v);
    for (int k = 0; k < 5; ++k) CHECK(t.outputs.col(k) == v);
}

TEST_CASE("simulate: two steps by hand") {
    MatrixXd a = MatrixXd::Zero(2, 2);
    a.diagonal() << 0.5, 0.2;
    const auto sys = make(a, MatrixXd::Identity(2, 2), MatrixXd::Identity(2, 2), MatrixXd::Zero(2, 2));
    const Trajectory t = simulate(sys, MatrixXd::Ones(2, 3), VectorXd::Zero(2).eval());
    CHECK(t.states(0, 2) == doctest::Approx(1.5));
    CHECK(t.states(1, 2) == doctest::Approx(1.2));
}

TEST_CASE("simulate: dimension mismatch names the operand") {
    const auto sys = make(MatrixXd::Identity(2, 2), MatrixXd::Identity(2, 2), MatrixXd::Identity(2, 2), MatrixXd::Zero(2, 2));
    try {
        simulate(sys, MatrixXd::Zero(3, 4), VectorXd::Zero(2).eval());
        FAIL("expected ConfigError");
    } catch (const ConfigError& e) {
        CHECK(std::string(e.what()).find("input") != std::string::npos);
    }
    try {
        simulate(sys, MatrixXd::Zero(2, 4), VectorXd::Zero(5).eval());
        FAIL("expected ConfigError");
    } catch (const ConfigError& e) {
        CHECK(std::string(e.what()).find("x0") != std::string::npos);
    }
    auto bad = sys;
    bad.C = MatrixXd::Identity(2, 3);
    CHECK_THROWS_AS(simulate(bad, MatrixXd::Zero(2, 4), VectorXd::Zero(2).eval()), ConfigError);
}

TEST_CASE("simulate matches the closed-form sum") {
    std::mt19937_64 rng(3);
    for (int trial = 0; trial < 20; ++trial) {
        const Eigen::Index n = 1 + trial % 5;
        const auto sys = oracle::random_minimal_system(rng, n, 2, 3, false);
        const MatrixXd u = oracle::random_matrix(rng, 2, 40);
        const VectorXd x0 = oracle::random_matrix(rng, n, 1);
        const Trajectory t = simulate(sys, u, x0);
        const MatrixXd y = oracle::closed_form_outputs(sys, u, x0);
        CHECK((t.outputs - y).norm() <= 1e-10 * y.norm());
        CHECK((t.outputs - sys.C * t.states - sys.D * u).norm() <= 1e-12 * std::max(1.0, y.norm()));
    }
}

TEST_CASE("simulate is linear in the input") {
    std::mt19937_64 rng(4);
    for (int trial = 0; trial < 10; ++trial) {
        const auto sys = oracle::random_minimal_system(rng, 4, 3, 2, false);
        const MatrixXd u1 = oracle::random_matrix(rng, 3, 50), u2 = oracle::random_matrix(rng, 3, 50);
        const VectorXd z = VectorXd::Zero(4);
        const MatrixXd y12 = simulate(sys, (u1 + u2).eval(), z).outputs;
        const MatrixXd y1 = simulate(sys, u1, z).outputs, y2 = simulate(sys, u2, z).outputs;
        CHECK((y12 - y1 - y2).norm() <= 1e-10 * y12.norm());
    }
}

TEST_CASE("controllability and observability matrices") {
    MatrixXd a = MatrixXd::Zero(2, 2);
    a.diagonal() << 2, 3;
    auto sys = make(a, MatrixXd::Identity(2, 2), MatrixXd::Identity(2, 2), MatrixXd::Zero(2, 2));
    CHECK(controllability_matrix(sys, 1) == sys.B);
    MatrixXd expect(2, 4);
    expect << MatrixXd::Identity(2, 2), a;
    CHECK(controllability_matrix(sys, 2) == expect);

    auto frozen = make(MatrixXd::Identity(2, 2), (MatrixXd(2, 1) << 1, 2).finished(), MatrixXd::Identity(2, 2),
                       MatrixXd::Zero(2, 1));
    const MatrixXd cc = controllability_matrix(frozen, 3);
    for (int k = 0; k < 3; ++k) CHECK(cc.col(k) == frozen.B);

    CHECK(observability_matrix(sys, 1) == sys.C);
    auto id = make(MatrixXd::Identity(2, 2), MatrixXd::Identity(2, 2), MatrixXd::Identity(2, 2), MatrixXd::Zero(2, 2));
    const MatrixXd o3 = observability_matrix(id, 3);
    for (int k = 0; k < 3; ++k) CHECK(o3.middleRows(2 * k, 2) == MatrixXd::Identity(2, 2));
    a.diagonal() << 0.5, 0.2;
    sys.A = a;
    MatrixXd o2(4, 2);
    o2 << MatrixXd::Identity(2, 2), a;
    CHECK(observability_matrix(sys, 2) == o2);
}

TEST_CASE("is_minimal: examples") {
    MatrixXd a = MatrixXd::Zero(2, 2);
    a.diagonal() << 0.5, 0.2;
    CHECK(is_minimal(make(a, MatrixXd::Identity(2, 2), MatrixXd::Identity(2, 2), MatrixXd::Zero(2, 2))).verdict ==
          Minimality::Minimal);

    const MatrixXd e1 = (MatrixXd(2, 1) << 1, 0).finished();
    const MinimalityReport r = is_minimal(make(MatrixXd::Identity(2, 2), e1, MatrixXd::Identity(2, 2), MatrixXd::Zero(2, 1)));
    CHECK(r.verdict == Minimality::Unreachable);
    CHECK(r.reachability_rank == 1);

    CHECK(is_minimal(make(a, MatrixXd::Identity(2, 2), MatrixXd::Zero(2, 2), MatrixXd::Zero(2, 2))).verdict ==
          Minimality::Unobservable);
    CHECK(is_minimal(make(MatrixXd::Identity(2, 2), e1, MatrixXd::Zero(1, 2), MatrixXd::Zero(1, 1))).verdict ==
          Minimality::Both);
}

TEST_CASE("markov_toeplitz: examples and oracle") {
    auto scalar = make(MatrixXd::Constant(1, 1, 2.0), MatrixXd::Constant(1, 1, 3.0), MatrixXd::Constant(1, 1, 5.0),
                       MatrixXd::Constant(1, 1, 7.0));
    CHECK(markov_toeplitz(scalar, 1) == scalar.D);
    MatrixXd t3(3, 3);
    t3 << 7, 0, 0, 15, 7, 0, 30, 15, 7;  // d, cb, cab
    CHECK(markov_toeplitz(scalar, 3) == t3);

    std::mt19937_64 rng(6);
    auto sys = oracle::random_minimal_system(rng, 3, 2, 2, false);
    sys.D.setZero();
    const MatrixXd t2 = markov_toeplitz(sys, 2);
    CHECK(t2.topRows(2).isZero());
    CHECK((t2.block(2, 0, 2, 2) - sys.C * sys.B).norm() < 1e-14);
    CHECK(t2.block(2, 2, 2, 2).isZero());
    for (int s = 1; s < 6; ++s) CHECK((markov_toeplitz(sys, s) - oracle::toeplitz(sys, s)).norm() < 1e-12);
}

TEST_CASE("generate_input: kinds and reproducibility") {
    InputSpec zero{InputSpec::Kind::Zero, 1, 20, 1};
    CHECK(generate_input(zero, 3).isZero());

    InputSpec hold_all{InputSpec::Kind::PiecewiseConstantBipolar, 25, 25, 9};
    const MatrixXd u = generate_input(hold_all, 4);
    for (int r = 0; r < 4; ++r) {
        CHECK(std::abs(u(r, 0)) == 1.0);
        CHECK((u.row(r).array() == u(r, 0)).all());
    }

    InputSpec paper_size{InputSpec::Kind::PiecewiseConstantBipolar, 1, 300, 42};
    const MatrixXd v = generate_input(paper_size, 15);
    CHECK(v.rows() == 15);
    CHECK(v.cols() == 300);
    CHECK((v.array().abs() == 1.0).all());
    CHECK(v == generate_input(paper_size, 15));

    InputSpec hold3{InputSpec::Kind::PiecewiseConstantBipolar, 3, 30, 5};
    const MatrixXd w = generate_input(hold3, 2);
    for (int k = 0; k < 30; ++k) CHECK(w.col(k) == w.col(k - k % 3));
}

TEST_CASE("is_minimal agrees with PBH on random structured systems") {
    std::mt19937_64 rng(8);
    for (int trial = 0; trial < 40; ++trial) {
        const auto sys = oracle::random_minimal_system(rng, 1 + trial % 4, 1, 1, false);
        const auto v = is_minimal(sys).verdict;
        CHECK(static_cast<int>(v) == static_cast<int>(oracle::pbh(sys)));
    }
}
