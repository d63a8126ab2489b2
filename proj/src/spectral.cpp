#include "netid/spectral.hpp"

#include "netid/error.hpp"

#include <Eigen/Eigenvalues>

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <sstream>
#include <vector>

namespace netid {
namespace {

void fix_signs(Eigen::MatrixXd& v) {
    for (Eigen::Index k = 0; k < v.cols(); ++k) {
        const double cut = 1e-12 * v.col(k).cwiseAbs().maxCoeff();
        for (Eigen::Index i = 0; i < v.rows(); ++i) {
            if (std::abs(v(i, k)) > cut) {
                if (v(i, k) < 0) v.col(k) = -v.col(k);
                break;
            }
        }
    }
}

bool is_symmetric(const Eigen::MatrixXd& s) {
    const double scale = std::max(1.0, s.cwiseAbs().maxCoeff());
    return (s - s.transpose()).cwiseAbs().maxCoeff() <= 1e-12 * scale;
}

}  // namespace

SpectralDecomposition spectral_decompose(const Eigen::MatrixXd& s) {
    if (s.rows() != s.cols()) throw ConfigError("spectral_decompose: matrix is not square");
    const Eigen::Index n = s.rows();
    SpectralDecomposition out;
    if (n == 0) return out;

    if (is_symmetric(s)) {
        Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(0.5 * (s + s.transpose()));
        if (es.info() != Eigen::Success) throw NumericError("spectral_decompose: symmetric solver failed");
        out.eigvals = es.eigenvalues();
        out.eigvecs = es.eigenvectors();
        out.orthonormal = true;
        fix_signs(out.eigvecs);
        return out;
    }

    Eigen::EigenSolver<Eigen::MatrixXd> es(s);
    if (es.info() != Eigen::Success) throw NumericError("spectral_decompose: eigen solver failed");
    const Eigen::VectorXcd ev = es.eigenvalues();
    const Eigen::MatrixXcd vec = es.eigenvectors();
    const double scale = std::max(1.0, ev.cwiseAbs().maxCoeff());
    double worst_imag = 0.0;
    for (Eigen::Index k = 0; k < n; ++k) worst_imag = std::max(worst_imag, std::abs(ev(k).imag()));
    if (worst_imag > 1e-10 * scale) {
        std::ostringstream msg;
        msg << "spectral_decompose: complex spectrum (max |imag| = " << worst_imag << ")";
        throw NumericError(msg.str(), worst_imag);
    }

    std::vector<Eigen::Index> order(n);
    std::iota(order.begin(), order.end(), 0);
    std::stable_sort(order.begin(), order.end(),
                     [&](Eigen::Index a, Eigen::Index b) { return ev(a).real() < ev(b).real(); });
    out.eigvals.resize(n);
    out.eigvecs.resize(n, n);
    for (Eigen::Index k = 0; k < n; ++k) {
        out.eigvals(k) = ev(order[k]).real();
        // Rotate the complex phase away before dropping the imaginary part.
        Eigen::VectorXcd c = vec.col(order[k]);
        Eigen::Index big = 0;
        c.cwiseAbs().maxCoeff(&big);
        c *= std::conj(c(big)) / std::abs(c(big));
        out.eigvecs.col(k) = c.real().normalized();
    }
    fix_signs(out.eigvecs);

    Eigen::FullPivLU<Eigen::MatrixXd> lu(out.eigvecs);
    double residual = std::numeric_limits<double>::infinity();
    if (lu.isInvertible()) {
        Eigen::MatrixXd rec = out.eigvecs * out.eigvals.asDiagonal() * lu.inverse();
        residual = (rec - s).norm() / std::max(s.norm(), std::numeric_limits<double>::min());
    }
    if (!(residual <= 1e-6)) {
        std::ostringstream msg;
        msg << "spectral_decompose: matrix appears defective (reconstruction residual " << residual
            << ")";
        throw NumericError(msg.str(), residual);
    }
    return out;
}

Eigen::MatrixXd hard_zero(Eigen::MatrixXd x) {
    if (x.size() == 0) return x;
    const double cut = 1e-8 * x.norm() / static_cast<double>(x.rows());
    x = x.unaryExpr([cut](double v) { return std::abs(v) < cut ? 0.0 : v; });
    return x;
}

ShiftOperator reconstruct_from_spectrum(const Eigen::MatrixXd& u, const Eigen::VectorXd& lambda,
                                        const GraphClassConstraint& cls, double tol) {
    if (u.rows() != u.cols() || u.rows() != lambda.size()) {
        throw ConfigError("reconstruct_from_spectrum: dimension mismatch");
    }
    Eigen::PartialPivLU<Eigen::MatrixXd> lu(u);
    if (u.size() > 0 && std::abs(lu.determinant()) == 0.0) {
        throw ConfigError("reconstruct_from_spectrum: eigenbasis is singular");
    }
    Eigen::MatrixXd x = u * lambda.asDiagonal() * lu.inverse();
    if (cls.demands_symmetry()) x = 0.5 * (x + x.transpose()).eval();
    x = hard_zero(std::move(x));

    const auto bad = class_violations(x, cls, tol);
    if (!bad.empty()) {
        std::ostringstream msg;
        msg << "reconstructed matrix violates " << to_string(cls.cls) << " invariants:";
        for (const auto& b : bad) msg << ' ' << b << ';';
        throw NumericError(msg.str());
    }
    return {x, cls.cls};
}

double commutation_residual(const Eigen::MatrixXd& s, const Eigen::MatrixXd& a) {
    if (s.rows() != a.rows() || s.cols() != a.cols()) {
        throw ConfigError("commutation_residual: shape mismatch");
    }
    const double denom = s.norm() * a.norm() + std::numeric_limits<double>::epsilon();
    return (s * a - a * s).norm() / denom;
}

}  // namespace netid
