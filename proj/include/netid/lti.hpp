#pragma once

#include "netid/error.hpp"

#include <Eigen/Dense>

#include <algorithm>
#include <cstdint>
#include <limits>
#include <string>

namespace netid {

template <typename Scalar>
using MatX = Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic>;
template <typename Scalar>
using VecX = Eigen::Matrix<Scalar, Eigen::Dynamic, 1>;

/// x(k+1) = A x(k) + B u(k),  y(k) = C x(k) + D u(k).
///
/// Network systems have as many inputs as states (B = f2(S2) is n x n), but
/// the input width is kept general.
template <typename Scalar>
struct StateSpace {
    MatX<Scalar> A, B, C, D;

    Eigen::Index states() const { return A.rows(); }
    Eigen::Index inputs() const { return B.cols(); }
    Eigen::Index outputs() const { return C.rows(); }

    void check() const {
        const auto n = A.rows();
        if (A.cols() != n) throw ConfigError("state-space: A must be square");
        if (B.rows() != n) throw ConfigError("state-space: B must have as many rows as A");
        if (C.cols() != n) throw ConfigError("state-space: C must have as many columns as A");
        if (D.rows() != C.rows()) throw ConfigError("state-space: D must have as many rows as C");
        if (D.cols() != B.cols()) throw ConfigError("state-space: D must have as many columns as B");
    }
};

using StateSpaceSystem = StateSpace<double>;

/// Sampled signals, one column per time step. `states` is empty unless the
/// trajectory comes from simulation.
template <typename Scalar>
struct TrajectoryT {
    MatX<Scalar> inputs;
    MatX<Scalar> outputs;
    MatX<Scalar> states;
    VecX<Scalar> x0;

    Eigen::Index length() const { return outputs.cols(); }
};

using Trajectory = TrajectoryT<double>;

template <typename Scalar, typename Derived>
TrajectoryT<Scalar> simulate(const StateSpace<Scalar>& sys, const Eigen::MatrixBase<Derived>& u,
                             const VecX<Scalar>& x0) {
    sys.check();
    if (u.rows() != sys.inputs()) {
        throw ConfigError("simulate: input has " + std::to_string(u.rows()) + " rows, B expects " +
                          std::to_string(sys.inputs()));
    }
    if (x0.size() != sys.states()) {
        throw ConfigError("simulate: x0 has length " + std::to_string(x0.size()) + ", A expects " +
                          std::to_string(sys.states()));
    }
    const Eigen::Index k_len = u.cols();
    TrajectoryT<Scalar> tr;
    tr.inputs = u;
    tr.x0 = x0;
    tr.states.resize(sys.states(), k_len);
    tr.outputs.resize(sys.outputs(), k_len);
    VecX<Scalar> x = x0;
    for (Eigen::Index k = 0; k < k_len; ++k) {
        tr.states.col(k) = x;
        tr.outputs.col(k).noalias() = sys.C * x + sys.D * u.col(k);
        VecX<Scalar> next = sys.A * x + sys.B * u.col(k);
        x.swap(next);
    }
    return tr;
}

/// [B, AB, ..., A^{s-1}B], built by repeated multiplication.
template <typename Scalar>
MatX<Scalar> controllability_matrix(const StateSpace<Scalar>& sys, Eigen::Index s) {
    sys.check();
    if (s < 1) throw ConfigError("controllability_matrix: s must be >= 1");
    const auto n = sys.states(), q = sys.inputs();
    MatX<Scalar> out(n, s * q);
    MatX<Scalar> block = sys.B;
    for (Eigen::Index k = 0; k < s; ++k) {
        out.middleCols(k * q, q) = block;
        if (k + 1 < s) block = (sys.A * block).eval();
    }
    return out;
}

/// [C; CA; ...; CA^{s-1}].
template <typename Scalar>
MatX<Scalar> observability_matrix(const StateSpace<Scalar>& sys, Eigen::Index s) {
    sys.check();
    if (s < 1) throw ConfigError("observability_matrix: s must be >= 1");
    const auto n = sys.states(), l = sys.outputs();
    MatX<Scalar> out(s * l, n);
    MatX<Scalar> block = sys.C;
    for (Eigen::Index k = 0; k < s; ++k) {
        out.middleRows(k * l, l) = block;
        if (k + 1 < s) block = (block * sys.A).eval();
    }
    return out;
}

/// Block lower-triangular impulse-response matrix: D on the diagonal,
/// C A^{i-j-1} B below it.
template <typename Scalar>
MatX<Scalar> markov_toeplitz(const StateSpace<Scalar>& sys, Eigen::Index s) {
    sys.check();
    if (s < 1) throw ConfigError("markov_toeplitz: s must be >= 1");
    const auto l = sys.outputs(), q = sys.inputs();
    MatX<Scalar> out = MatX<Scalar>::Zero(s * l, s * q);
    MatX<Scalar> akb = sys.B;  // A^{d-1} B for lag d
    for (Eigen::Index d = 0; d < s; ++d) {
        MatX<Scalar> blk = sys.D;
        if (d >= 1) {
            blk = sys.C * akb;
            akb = (sys.A * akb).eval();
        }
        for (Eigen::Index j = 0; j + d < s; ++j) out.block((j + d) * l, j * q, l, q) = blk;
    }
    return out;
}

/// Rank with cutoff max(rows, cols) * sigma_max * eps * 64.
template <typename Derived>
Eigen::Index numerical_rank(const Eigen::MatrixBase<Derived>& m) {
    using Scalar = typename Derived::Scalar;
    using Real = typename Eigen::NumTraits<Scalar>::Real;
    if (m.size() == 0) return 0;
    Eigen::JacobiSVD<Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic>> svd(m);
    const auto& sv = svd.singularValues();
    const Real cut = static_cast<Real>(std::max(m.rows(), m.cols())) * sv(0) *
                     std::numeric_limits<Real>::epsilon() * Real(64);
    return (sv.array() > cut).count();
}

enum class Minimality { Minimal, Unreachable, Unobservable, Both };

std::string to_string(Minimality m);

struct MinimalityReport {
    Minimality verdict = Minimality::Minimal;
    Eigen::Index reachability_rank = 0;
    Eigen::Index observability_rank = 0;
};

template <typename Scalar>
MinimalityReport is_minimal(const StateSpace<Scalar>& sys) {
    const auto n = sys.states();
    MinimalityReport rep;
    rep.reachability_rank = numerical_rank(controllability_matrix(sys, std::max<Eigen::Index>(n, 1)));
    rep.observability_rank = numerical_rank(observability_matrix(sys, std::max<Eigen::Index>(n, 1)));
    const bool reach = rep.reachability_rank == n;
    const bool obs = rep.observability_rank == n;
    rep.verdict = reach ? (obs ? Minimality::Minimal : Minimality::Unobservable)
                        : (obs ? Minimality::Unreachable : Minimality::Both);
    return rep;
}

struct InputSpec {
    enum class Kind { PiecewiseConstantBipolar, Gaussian, Zero };
    Kind kind = Kind::PiecewiseConstantBipolar;
    Eigen::Index hold = 1;
    Eigen::Index length = 1;
    std::uint64_t seed = 0;
};

InputSpec::Kind input_kind_from_string(const std::string& s);
std::string to_string(InputSpec::Kind k);

/// `width` x `spec.length` excitation. Bipolar rows hold each +-1 draw for
/// `spec.hold` steps.
Eigen::MatrixXd generate_input(const InputSpec& spec, Eigen::Index width);

}  // namespace netid
