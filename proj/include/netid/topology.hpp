#pragma once

#include "netid/graph.hpp"
#include "netid/matrix_function.hpp"

#include <Eigen/Dense>

#include <optional>
#include <string>
#include <vector>

namespace netid {

struct SolverOptions {
    int iterations = 50000;
    double step = 0.0;  ///< initial step; 0 means 1 / (power-iteration Lipschitz estimate)
    double tol = 1e-9;
};

/// Graph matrix from an identified system matrix whose scalar mapping is
/// known: S = U diag(f^{-1}(omega)) U^{-1} with (U, omega) the spectrum of
/// `m_hat`. Symmetric classes symmetrize `m_hat` first. Class violations
/// beyond 1e-5 raise NumericError.
ShiftOperator recover_known_mapping(const Eigen::MatrixXd& m_hat, const ScalarMapping& f,
                                    const GraphClassConstraint& cls);

struct SparsestOptions {
    /// Initial reweighting magnitudes (e.g. |M_hat|); uniform when absent.
    std::optional<Eigen::MatrixXd> weight_hint;
    int reweight_rounds = 4;
};

struct SparsestResult {
    ShiftOperator shift;
    Eigen::VectorXd omega;
    double l1 = 0.0;               ///< sum of |off-diagonal| entries
    double class_residual = 0.0;   ///< largest class-invariant violation
    double spectral_residual = 0.0;
    int iterations = 0;
};

/// Sparsest matrix in the class that is diagonalized by `u_hat`:
/// min sum_{i!=j} c_ij |S_ij|  s.t.  S = U diag(omega) U^{-1}, S in class.
/// Solved over omega by ADMM (equalities eliminated, sign cone on the
/// off-diagonal) with iteratively reweighted costs c_ij. Supports the
/// adjacency and combinatorial Laplacian classes.
SparsestResult recover_sparsest(const Eigen::MatrixXd& u_hat, const GraphClassConstraint& cls,
                                const SolverOptions& solver, const SparsestOptions& opts = {});

struct OneShotOptions {
    /// Transition-matrix estimate used for the commutation diagnostic.
    std::optional<Eigen::MatrixXd> a_hat;
    /// Initial reweighting magnitudes; defaults to |P^+ Q| (the shift-invariance estimate of A).
    std::optional<Eigen::MatrixXd> weight_hint;
    int reweight_rounds = 4;
    double support_threshold = 1e-3;
};

struct OneShotResult {
    ShiftOperator S_hat;
    Eigen::MatrixXd M_hat;
    double mu = 0.0;
    double objective = 0.0;
    double data_fit = 0.0;       ///< ||P M - Q S||_F^2
    double relative_fit = 0.0;   ///< data_fit / ||Q S||_F^2
    int edges = 0;
    int iterations = 0;
    std::optional<double> commutation;
    /// One objective trace per proximal-gradient run (one run per reweighting round).
    std::vector<std::vector<double>> traces;
};

/// Graph of the state process straight from the observability basis:
/// min ||P M - Q S||_F^2 + mu * sum c_ij |S_ij| over S in the class and M in
/// the matching commutant set, with P = U_R,up T^{-1} and Q = U_R,down T^{-1}.
/// M is eliminated exactly at each iterate; S is updated by monotone
/// accelerated projected gradient with backtracking.
OneShotResult one_shot_state_graph(const Eigen::MatrixXd& u_r, Eigen::Index l, const Eigen::MatrixXd& t_hat,
                                   const GraphClassConstraint& cls, double mu, const SolverOptions& solver,
                                   const OneShotOptions& opts = {});

struct MuSweep {
    OneShotResult best;
    std::vector<OneShotResult> runs;  ///< runs[0] is mu = 0
    int chosen = 0;
};

/// Runs mu = 0 and ten log-spaced values in [1e-4, 1e2] * ||U_R,down||_F and
/// keeps the sparsest run with relative_fit <= 1.05 * relative_fit(0) + 1e-4.
MuSweep one_shot_sweep(const Eigen::MatrixXd& u_r, Eigen::Index l, const Eigen::MatrixXd& t_hat,
                       const GraphClassConstraint& cls, const SolverOptions& solver,
                       const OneShotOptions& opts = {});

/// ||S A - A S||_F / (||S||_F ||A||_F + eps).
double verify_commutation(const Eigen::MatrixXd& s, const Eigen::MatrixXd& a);

/// ||U_R,up T^{-1} S A - U_R,down T^{-1} S||_F: zero when S commutes with
/// A and U_R = O_s T.
double shift_commutation_residual(const Eigen::MatrixXd& u_r, Eigen::Index l, const Eigen::MatrixXd& t_hat,
                                  const Eigen::MatrixXd& s, const Eigen::MatrixXd& a);

}  // namespace netid
