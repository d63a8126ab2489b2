#pragma once
// Independent reference computations used by the tests. Everything here is
// written from the defining formulas with plain loops, and never calls the
// library routine it is used to check.

#include "netid/lti.hpp"

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <complex>
#include <random>
#include <vector>

namespace oracle {

using Eigen::Index;
using Eigen::MatrixXd;
using Eigen::VectorXd;

inline MatrixXd power(const MatrixXd& a, int k) {
    MatrixXd p = MatrixXd::Identity(a.rows(), a.cols());
    for (int i = 0; i < k; ++i) p = p * a;
    return p;
}

/// y(k) = C A^k x0 + sum_{j<k} C A^{k-j-1} B u(j) + D u(k).
inline MatrixXd closed_form_outputs(const netid::StateSpaceSystem& sys, const MatrixXd& u, const VectorXd& x0) {
    const Index len = u.cols();
    MatrixXd y(sys.C.rows(), len);
    for (Index k = 0; k < len; ++k) {
        VectorXd yk = sys.C * power(sys.A, static_cast<int>(k)) * x0 + sys.D * u.col(k);
        for (Index j = 0; j < k; ++j) yk += sys.C * power(sys.A, static_cast<int>(k - j - 1)) * sys.B * u.col(j);
        y.col(k) = yk;
    }
    return y;
}

/// Column j stacks w(j), ..., w(j+s-1).
inline MatrixXd hankel(const MatrixXd& w, Index s) {
    const Index rows = w.rows(), m = w.cols() - s + 1;
    MatrixXd h(s * rows, m);
    for (Index j = 0; j < m; ++j)
        for (Index i = 0; i < s; ++i)
            for (Index r = 0; r < rows; ++r) h(i * rows + r, j) = w(r, j + i);
    return h;
}

/// Block (i, j) = D if i == j, C A^{i-j-1} B if i > j.
inline MatrixXd toeplitz(const netid::StateSpaceSystem& sys, Index s) {
    const Index l = sys.C.rows(), q = sys.B.cols();
    MatrixXd t = MatrixXd::Zero(s * l, s * q);
    for (Index i = 0; i < s; ++i) {
        for (Index j = 0; j <= i; ++j) {
            t.block(i * l, j * q, l, q) =
                i == j ? sys.D : MatrixXd(sys.C * power(sys.A, static_cast<int>(i - j - 1)) * sys.B);
        }
    }
    return t;
}

inline MatrixXd observability(const netid::StateSpaceSystem& sys, Index s) {
    const Index l = sys.C.rows();
    MatrixXd o(s * l, sys.A.rows());
    for (Index i = 0; i < s; ++i) o.middleRows(i * l, l) = sys.C * power(sys.A, static_cast<int>(i));
    return o;
}

inline MatrixXd pinv(const MatrixXd& m) {
    Eigen::JacobiSVD<MatrixXd> svd(m, Eigen::ComputeFullU | Eigen::ComputeFullV);
    const VectorXd& sv = svd.singularValues();
    const double cut = sv.size() ? 1e-12 * sv(0) * static_cast<double>(std::max(m.rows(), m.cols())) : 0.0;
    MatrixXd sinv = MatrixXd::Zero(m.cols(), m.rows());
    for (Index k = 0; k < sv.size(); ++k)
        if (sv(k) > cut) sinv(k, k) = 1.0 / sv(k);
    return svd.matrixV() * sinv * svd.matrixU().transpose();
}

/// I - U^T (U U^T)^+ U: projector onto the null space of U.
inline MatrixXd null_projector(const MatrixXd& u) {
    const Index m = u.cols();
    if (u.rows() == 0) return MatrixXd::Identity(m, m);
    return MatrixXd::Identity(m, m) - u.transpose() * pinv(u * u.transpose()) * u;
}

inline MatrixXd orth(const MatrixXd& a, double rel = 1e-10) {
    Eigen::JacobiSVD<MatrixXd> svd(a, Eigen::ComputeThinU);
    const Index r = (svd.singularValues().array() > rel * svd.singularValues()(0)).count();
    return svd.matrixU().leftCols(r);
}

/// Largest principal angle from the cosines sigma(Qa^T Qb).
inline double largest_angle(const MatrixXd& a, const MatrixXd& b) {
    const MatrixXd qa = orth(a), qb = orth(b);
    Eigen::JacobiSVD<MatrixXd> svd(qa.transpose() * qb);
    const double c = std::clamp(svd.singularValues().minCoeff(), -1.0, 1.0);
    const double acos_angle = std::acos(c);
    // acos loses precision near 0; fall back to the sine of the residual.
    const MatrixXd resid = qb - qa * (qa.transpose() * qb);
    Eigen::JacobiSVD<MatrixXd> rs(resid);
    const double asin_angle = std::asin(std::min(1.0, rs.singularValues()(0)));
    return acos_angle < 1e-4 ? asin_angle : acos_angle;
}

enum class Verdict { Minimal, Unreachable, Unobservable, Both };

/// PBH test: rank [A - lambda I, B] and rank [A - lambda I; C] at every
/// eigenvalue, using complex arithmetic.
inline Verdict pbh(const netid::StateSpaceSystem& sys, double tol = 1e-8) {
    using CMat = Eigen::MatrixXcd;
    const Index n = sys.A.rows();
    Eigen::ComplexEigenSolver<CMat> es(sys.A.cast<std::complex<double>>());
    const double scale = std::max({1.0, sys.A.norm(), sys.B.norm(), sys.C.norm()});
    bool reach = true, obs = true;
    for (Index k = 0; k < n; ++k) {
        const std::complex<double> lam = es.eigenvalues()(k);
        CMat shifted = sys.A.cast<std::complex<double>>() - lam * CMat::Identity(n, n);
        CMat wide(n, n + sys.B.cols());
        wide << shifted, sys.B.cast<std::complex<double>>();
        CMat tall(n + sys.C.rows(), n);
        tall << shifted, sys.C.cast<std::complex<double>>();
        Eigen::JacobiSVD<CMat> sw(wide), st(tall);
        if (sw.singularValues()(n - 1) < tol * scale) reach = false;
        if (st.singularValues()(n - 1) < tol * scale) obs = false;
    }
    if (reach && obs) return Verdict::Minimal;
    if (!reach && !obs) return Verdict::Both;
    return reach ? Verdict::Unobservable : Verdict::Unreachable;
}

/// Greedy multiset match of two complex spectra; returns the largest pair distance.
inline double spectrum_distance(Eigen::VectorXcd a, Eigen::VectorXcd b) {
    if (a.size() != b.size()) return INFINITY;
    std::vector<bool> used(static_cast<std::size_t>(b.size()), false);
    double worst = 0.0;
    for (Index i = 0; i < a.size(); ++i) {
        double best = INFINITY;
        Index arg = -1;
        for (Index j = 0; j < b.size(); ++j) {
            if (used[static_cast<std::size_t>(j)]) continue;
            const double d = std::abs(a(i) - b(j));
            if (d < best) best = d, arg = j;
        }
        used[static_cast<std::size_t>(arg)] = true;
        worst = std::max(worst, best);
    }
    return worst;
}

inline Eigen::VectorXcd eigenvalues(const MatrixXd& a) {
    Eigen::EigenSolver<MatrixXd> es(a, false);
    return es.eigenvalues();
}

inline MatrixXd random_matrix(std::mt19937_64& rng, Index r, Index c) {
    std::normal_distribution<double> nd(0.0, 1.0);
    MatrixXd m(r, c);
    for (Index i = 0; i < r; ++i)
        for (Index j = 0; j < c; ++j) m(i, j) = nd(rng);
    return m;
}

/// Well-conditioned random basis change: orthogonal factor times a diagonal in [0.5, 2].
inline MatrixXd random_transform(std::mt19937_64& rng, Index n) {
    Eigen::HouseholderQR<MatrixXd> qr(random_matrix(rng, n, n));
    MatrixXd q = qr.householderQ();
    std::uniform_real_distribution<double> ud(0.5, 2.0);
    VectorXd d(n);
    for (Index i = 0; i < n; ++i) d(i) = ud(rng);
    return q * d.asDiagonal();
}

/// Real block-diagonal modal matrix with well-separated eigenvalues inside
/// the disc of radius 0.9: 1x1 blocks and, when `complex_pairs`, 2x2 rotations.
inline MatrixXd random_modal(std::mt19937_64& rng, Index n, bool complex_pairs, std::vector<Index>* block_starts = nullptr) {
    std::uniform_real_distribution<double> ud(0.0, 1.0);
    MatrixXd a = MatrixXd::Zero(n, n);
    std::vector<double> used;
    auto fresh = [&](double lo, double hi) {
        for (;;) {
            const double x = lo + (hi - lo) * ud(rng);
            if (std::all_of(used.begin(), used.end(), [&](double y) { return std::abs(x - y) > 0.1; })) {
                used.push_back(x);
                return x;
            }
        }
    };
    Index i = 0;
    while (i < n) {
        if (block_starts) block_starts->push_back(i);
        if (complex_pairs && i + 1 < n && ud(rng) < 0.4) {
            const double re = fresh(-0.6, 0.6), im = 0.15 + 0.3 * ud(rng);
            a(i, i) = re;
            a(i + 1, i + 1) = re;
            a(i, i + 1) = im;
            a(i + 1, i) = -im;
            i += 2;
        } else {
            a(i, i) = fresh(-0.9, 0.9);
            i += 1;
        }
    }
    return a;
}

/// Random minimal system in a random basis; C = I when `identity_output`.
inline netid::StateSpaceSystem random_minimal_system(std::mt19937_64& rng, Index n, Index q, Index l,
                                                     bool identity_output, bool complex_pairs = true) {
    const MatrixXd t = random_transform(rng, n);
    const MatrixXd tinv = t.inverse();
    netid::StateSpaceSystem sys;
    sys.A = t * random_modal(rng, n, complex_pairs) * tinv;
    sys.B = random_matrix(rng, n, q);
    sys.C = identity_output ? MatrixXd::Identity(n, n) : random_matrix(rng, l, n);
    sys.D = random_matrix(rng, identity_output ? n : l, q);
    return sys;
}

}  // namespace oracle
