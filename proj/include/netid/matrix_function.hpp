#pragma once

#include <Eigen/Dense>

#include <optional>
#include <string>
#include <utility>
#include <vector>

namespace netid {

/// Closed interval [lo, hi].
struct Interval {
    double lo = 0.0;
    double hi = 0.0;

    bool contains(double x, double tol = 0.0) const { return x >= lo - tol && x <= hi + tol; }
};

/// Scalar map f^s lifted to matrices through the spectrum.
struct ScalarMapping {
    enum class Kind { Identity, HeatKernel, Polynomial };

    Kind kind = Kind::Identity;
    double alpha = 1.0;           ///< heat kernel: f(x) = alpha * exp(-x * tau)
    double tau = 1.0;
    std::vector<double> coeffs;   ///< polynomial: sum_k coeffs[k] * x^k
    std::optional<Interval> domain;

    static ScalarMapping identity(std::optional<Interval> dom = std::nullopt);
    static ScalarMapping heat_kernel(double alpha, double tau, std::optional<Interval> dom = std::nullopt);
    static ScalarMapping polynomial(std::vector<double> coeffs, std::optional<Interval> dom = std::nullopt);

    double operator()(double x) const;
    double derivative(double x) const;
    std::string name() const;
};

/// f(S) = U f(Lambda) U^{-1} for diagonalizable S. When `f.domain` is set,
/// every eigenvalue must fall inside it (ConfigError names the first one
/// that does not). Symmetric S gives a symmetrized result.
Eigen::MatrixXd apply_matrix_function(const ScalarMapping& f, const Eigen::MatrixXd& s);

struct BijectivityCheck {
    bool bijective = false;
    /// On failure: the grid point where the direction of f first changes and
    /// its right neighbour.
    std::optional<std::pair<double, double>> witness;
};

/// Strict monotonicity of f on a 1000-point uniform grid over `interval`.
BijectivityCheck check_bijective(const ScalarMapping& f, const Interval& interval);

enum class InversionMethod { Auto, Analytic, RootFinding };

struct InversionResult {
    Eigen::VectorXd lambda_hat;
    Eigen::VectorXd residuals;  ///< (f(lambda_hat_k) - omega_k)^2
};

/// Per-eigenvalue inverse of f over its declared domain. Auto uses the
/// closed form for Identity and HeatKernel and root finding otherwise.
/// Values of omega outside f(domain) by more than 1e-9 are rejected with
/// the offending index; a non-bijective f is rejected before any solve.
InversionResult invert_spectrum(const ScalarMapping& f, const Eigen::VectorXd& omega,
                                InversionMethod method = InversionMethod::Auto);

/// Minimizer of (f(x) - target)^2 over [lo, hi] for monotone f: bisection on the
/// sign of f - target while a bracket exists, golden-section search otherwise.
double solve_scalar_root(const ScalarMapping& f, double target, Interval bracket,
                         double x_tol = 1e-12);

}  // namespace netid
