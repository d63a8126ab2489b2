#pragma once

#include "netid/lti.hpp"

#include <Eigen/Dense>

#include <optional>
#include <string>
#include <vector>

namespace netid {

/// Sliding-window data matrices: column j of `U` stacks u(j), ..., u(j+s-1),
/// likewise `Y`.
struct HankelBatch {
    Eigen::MatrixXd U;
    Eigen::MatrixXd Y;
    Eigen::Index s = 0;
    Eigen::Index m = 0;
    Eigen::Index input_width = 0;
    Eigen::Index output_width = 0;
};

/// Uses every window, m = K - s + 1. Requires m > s (K >= 2s) and, when
/// `n_expected` is given, s > n_expected.
HankelBatch build_hankel(const Trajectory& traj, Eigen::Index s,
                         std::optional<Eigen::Index> n_expected = std::nullopt);

/// Several experiments on the same system: the windows of every trajectory
/// side by side. Each trajectory needs K >= s; the total window count must
/// exceed s.
HankelBatch build_hankel(const std::vector<Trajectory>& experiments, Eigen::Index s,
                         std::optional<Eigen::Index> n_expected = std::nullopt);

/// [U; Y] = [R11 0; R21 R22] [Q1; Q2] with orthonormal rows in Q1, Q2.
///
/// R22 has s*l rows and min(m, s*(q+l)) - s*q columns. Identically zero
/// input (autonomous data) drops the input rows: R11/R21 have zero columns
/// and Q1 has zero rows.
struct RQFactors {
    Eigen::MatrixXd R11, R21, R22;
    Eigen::MatrixXd Q1, Q2;
    bool autonomous = false;
    std::vector<std::string> warnings;
};

/// Computed as the transpose of a Householder QR of [U; Y]^T. Diagonal of
/// the triangular factor made nonnegative.
RQFactors rq_factorize(const HankelBatch& batch);

struct OrderPolicy {
    enum class Kind { LargestGap, Threshold, Fixed };
    Kind kind = Kind::LargestGap;
    double rho = 1e-8;
    Eigen::Index order = 0;

    static OrderPolicy largest_gap() { return {}; }
    static OrderPolicy threshold(double rho) { return {Kind::Threshold, rho, 0}; }
    static OrderPolicy fixed(Eigen::Index p) { return {Kind::Fixed, 0.0, p}; }
};

struct OrderEstimate {
    Eigen::Index order = 0;
    bool low_confidence = false;
    double gap_ratio = 0.0;  ///< sigma_p / sigma_{p+1} for largest_gap
};

/// Model order from descending singular values.
///
/// largest_gap picks argmax_k sigma_k / sigma_{k+1} (1-based, smallest k on
/// ties). Values under the noise floor sigma_1 * len * eps are lifted to the
/// floor first, so round-off in the tail cannot produce a spurious gap. The
/// estimate is flagged low-confidence when the best ratio is tied or below 10.
OrderEstimate estimate_order(const Eigen::VectorXd& singular_values, const OrderPolicy& policy);

/// Singular values of R22 (equivalently of Y_m projected off the input rows).
Eigen::VectorXd r22_singular_values(const RQFactors& factors);

/// First p left singular vectors of R22, spanning range(O_s) on noiseless
/// minimal data.
Eigen::MatrixXd extract_observability_basis(const RQFactors& factors, Eigen::Index p);

/// Least-squares A_T from U_R(0 : (s-1)l, :) A_T = U_R(l : sl, :).
Eigen::MatrixXd solve_shift_invariance(const Eigen::MatrixXd& u_r, Eigen::Index l);

/// First l rows of U_R.
Eigen::MatrixXd extract_CT(const Eigen::MatrixXd& u_r, Eigen::Index l);

struct InputFit {
    Eigen::VectorXd x_T0;            ///< first experiment
    Eigen::MatrixXd initial_states;  ///< one column per experiment
    Eigen::MatrixXd B_T;
    Eigen::MatrixXd D;
    double residual = 0.0;  ///< (1/K) sum_k ||y(k) - Psi_k theta||^2, K summed over experiments
    std::vector<std::string> warnings;
};

/// Linear least squares for theta = [x_T(0); vec(B_T); vec(D)] (vec is
/// column-major) over every sample of `traj`. Autonomous data (all-zero
/// input) fits x_T(0) only and returns zero B_T, D.
InputFit solve_bd_x0(const Trajectory& traj, const Eigen::MatrixXd& a_t, const Eigen::MatrixXd& c_t);

/// Shared B_T, D with one initial state per experiment.
InputFit solve_bd_x0(const std::vector<Trajectory>& experiments, const Eigen::MatrixXd& a_t,
                     const Eigen::MatrixXd& c_t);

/// Output of the identification pipeline, in the coordinates of U_R.
struct IdentifiedSystem {
    Eigen::Index order = 0;
    Eigen::Index s = 0;
    Eigen::Index outputs = 0;
    Eigen::Index inputs = 0;
    Eigen::MatrixXd A_T, C_T, B_T, D;
    Eigen::VectorXd x_T0;
    Eigen::MatrixXd initial_states;  ///< one column per experiment (first equals x_T0)
    Eigen::MatrixXd T_hat;  ///< filled by detransform; empty otherwise
    Eigen::VectorXd singular_values;
    Eigen::MatrixXd U_R;
    double fit_residual = 0.0;
    bool order_low_confidence = false;
    std::vector<std::string> warnings;
};

struct IdentifyOptions {
    Eigen::Index s = 0;
    OrderPolicy order_policy;
    std::optional<Eigen::Index> n_expected;
};

/// build_hankel -> rq_factorize -> estimate_order -> U_R -> A_T, C_T ->
/// (x_T0, B_T, D).
IdentifiedSystem identify(const Trajectory& traj, const IdentifyOptions& opts);
IdentifiedSystem identify(const std::vector<Trajectory>& experiments, const IdentifyOptions& opts);

struct Detransformed {
    Eigen::MatrixXd T_hat;
    Eigen::MatrixXd A_hat, B_hat, D_hat;
    Eigen::VectorXd x0_hat;
};

/// Undo the similarity transform using the known output matrix:
/// T_hat = C^+ C_T, A_hat = T_hat A_T T_hat^{-1}, B_hat = T_hat B_T,
/// x0_hat = T_hat x_T0. Requires rank(C) = n, order p = n and
/// cond(C_T) <= 1e10.
Detransformed detransform(const Eigen::MatrixXd& c_known, const IdentifiedSystem& est);

/// Largest principal angle (radians) between range(a) and range(b).
double largest_principal_angle(const Eigen::MatrixXd& a, const Eigen::MatrixXd& b);

}  // namespace netid
