#pragma once

#include "netid/graph.hpp"

#include <Eigen/Dense>

namespace netid {

/// Real eigendecomposition with ascending eigenvalues; column k of `eigvecs`
/// pairs with `eigvals(k)`. Columns have unit norm and their first nonzero
/// entry is positive.
struct SpectralDecomposition {
    Eigen::VectorXd eigvals;
    Eigen::MatrixXd eigvecs;
    bool orthonormal = false;  ///< true when computed by the symmetric solver
};

/// Decomposes a square matrix. Symmetric input (to 1e-12 relative) goes
/// through the self-adjoint solver. General input must have a real spectrum
/// and must be diagonalizable: a reconstruction residual above 1e-6 raises
/// NumericError carrying that residual.
SpectralDecomposition spectral_decompose(const Eigen::MatrixXd& s);

/// U * diag(lambda) * U^{-1}, symmetrized when the class demands it, with
/// entries below 1e-8 * ||X||_F / n set to zero. Throws NumericError listing
/// the violated invariants when the result is outside the class by more than
/// `tol` (relative to max(1, max |x_ij|)).
ShiftOperator reconstruct_from_spectrum(const Eigen::MatrixXd& u, const Eigen::VectorXd& lambda,
                                        const GraphClassConstraint& cls, double tol = 1e-8);

/// Zero out entries below 1e-8 * ||X||_F / n.
Eigen::MatrixXd hard_zero(Eigen::MatrixXd x);

/// Frobenius norm of (S A - A S) / (||S||_F ||A||_F + eps).
double commutation_residual(const Eigen::MatrixXd& s, const Eigen::MatrixXd& a);

}  // namespace netid
