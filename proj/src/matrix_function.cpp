#include "netid/matrix_function.hpp"

#include "netid/error.hpp"
#include "netid/spectral.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>

namespace netid {

ScalarMapping ScalarMapping::identity(std::optional<Interval> dom) {
    ScalarMapping f;
    f.kind = Kind::Identity;
    f.domain = dom;
    return f;
}

ScalarMapping ScalarMapping::heat_kernel(double alpha, double tau, std::optional<Interval> dom) {
    if (!(alpha > 0.0) || !(tau > 0.0)) {
        throw ConfigError("heat kernel requires alpha > 0 and tau > 0");
    }
    ScalarMapping f;
    f.kind = Kind::HeatKernel;
    f.alpha = alpha;
    f.tau = tau;
    f.domain = dom;
    return f;
}

ScalarMapping ScalarMapping::polynomial(std::vector<double> coeffs, std::optional<Interval> dom) {
    if (coeffs.empty()) throw ConfigError("polynomial mapping needs at least one coefficient");
    ScalarMapping f;
    f.kind = Kind::Polynomial;
    f.coeffs = std::move(coeffs);
    f.domain = dom;
    return f;
}

double ScalarMapping::operator()(double x) const {
    switch (kind) {
        case Kind::Identity: return x;
        case Kind::HeatKernel: return alpha * std::exp(-x * tau);
        case Kind::Polynomial: {
            double acc = 0.0;
            for (auto it = coeffs.rbegin(); it != coeffs.rend(); ++it) acc = acc * x + *it;
            return acc;
        }
    }
    return x;
}

double ScalarMapping::derivative(double x) const {
    switch (kind) {
        case Kind::Identity: return 1.0;
        case Kind::HeatKernel: return -tau * alpha * std::exp(-x * tau);
        case Kind::Polynomial: {
            double acc = 0.0;
            for (std::size_t k = coeffs.size(); k-- > 1;) acc = acc * x + static_cast<double>(k) * coeffs[k];
            return acc;
        }
    }
    return 1.0;
}

std::string ScalarMapping::name() const {
    std::ostringstream os;
    switch (kind) {
        case Kind::Identity: os << "identity"; break;
        case Kind::HeatKernel: os << "heat(alpha=" << alpha << ", tau=" << tau << ")"; break;
        case Kind::Polynomial: os << "polynomial(degree " << coeffs.size() - 1 << ")"; break;
    }
    return os.str();
}

Eigen::MatrixXd apply_matrix_function(const ScalarMapping& f, const Eigen::MatrixXd& s) {
    if (s.rows() != s.cols()) throw ConfigError("apply_matrix_function: matrix is not square");
    if (f.kind == ScalarMapping::Kind::Identity && !f.domain) return s;

    const SpectralDecomposition sd = spectral_decompose(s);
    if (f.domain) {
        const double tol = 1e-9 * std::max(1.0, sd.eigvals.size() ? sd.eigvals.cwiseAbs().maxCoeff() : 0.0);
        for (Eigen::Index k = 0; k < sd.eigvals.size(); ++k) {
            if (!f.domain->contains(sd.eigvals(k), tol)) {
                std::ostringstream msg;
                msg << "apply_matrix_function: eigenvalue " << sd.eigvals(k) << " (index " << k
                    << ") outside the domain [" << f.domain->lo << ", " << f.domain->hi << "] of "
                    << f.name();
                throw ConfigError(msg.str());
            }
        }
    }
    if (f.kind == ScalarMapping::Kind::Identity) return s;

    Eigen::VectorXd fl = sd.eigvals.unaryExpr([&f](double x) { return f(x); });
    if (sd.orthonormal) {
        Eigen::MatrixXd out = sd.eigvecs * fl.asDiagonal() * sd.eigvecs.transpose();
        return 0.5 * (out + out.transpose());
    }
    return sd.eigvecs * fl.asDiagonal() * sd.eigvecs.inverse();
}

BijectivityCheck check_bijective(const ScalarMapping& f, const Interval& interval) {
    if (!(interval.hi > interval.lo)) throw ConfigError("check_bijective: degenerate interval");
    constexpr int kGrid = 1000;
    const double h = (interval.hi - interval.lo) / (kGrid - 1);
    auto x_at = [&](int k) { return k == kGrid - 1 ? interval.hi : interval.lo + h * k; };

    BijectivityCheck out;
    double prev = f(x_at(0));
    int direction = 0;
    for (int k = 1; k < kGrid; ++k) {
        const double cur = f(x_at(k));
        const int step = cur > prev ? 1 : (cur < prev ? -1 : 0);
        if (step == 0 || (direction != 0 && step != direction)) {
            out.witness = std::make_pair(x_at(k - 1), x_at(k));
            return out;
        }
        direction = step;
        prev = cur;
    }
    out.bijective = true;
    return out;
}

double solve_scalar_root(const ScalarMapping& f, double target, Interval bracket, double x_tol) {
    double a = bracket.lo, b = bracket.hi;
    double fa = f(a) - target, fb = f(b) - target;
    if (fa == 0.0) return a;
    if (fb == 0.0) return b;

    if ((fa < 0) != (fb < 0)) {
        while (b - a > x_tol) {
            const double mid = 0.5 * (a + b);
            if (mid <= a || mid >= b) break;
            const double fm = f(mid) - target;
            if (fm == 0.0) return mid;
            if ((fm < 0) == (fa < 0)) {
                a = mid;
                fa = fm;
            } else {
                b = mid;
                fb = fm;
            }
        }
        // One interpolation step inside the final bracket.
        double x = a - fa * (b - a) / (fb - fa);
        x = std::clamp(x, a, b);
        const double fx = f(x) - target;
        double best = x, best_r = std::abs(fx);
        if (std::abs(fa) < best_r) best = a, best_r = std::abs(fa);
        if (std::abs(fb) < best_r) best = b;
        return best;
    }

    // No sign change: golden-section search on the squared residual.
    constexpr double kInvPhi = 0.6180339887498949;
    auto obj = [&](double x) {
        const double r = f(x) - target;
        return r * r;
    };
    double c = b - kInvPhi * (b - a), d = a + kInvPhi * (b - a);
    double fc = obj(c), fd = obj(d);
    while (b - a > x_tol) {
        if (fc < fd) {
            b = d;
            d = c;
            fd = fc;
            c = b - kInvPhi * (b - a);
            fc = obj(c);
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + kInvPhi * (b - a);
            fd = obj(d);
        }
    }
    double best = 0.5 * (a + b);
    for (double cand : {bracket.lo, bracket.hi}) {
        if (obj(cand) < obj(best)) best = cand;
    }
    return best;
}

InversionResult invert_spectrum(const ScalarMapping& f, const Eigen::VectorXd& omega,
                                InversionMethod method) {
    if (f.domain) {
        const auto bij = check_bijective(f, *f.domain);
        if (!bij.bijective) {
            std::ostringstream msg;
            msg << "invert_spectrum: " << f.name() << " is not bijective on [" << f.domain->lo << ", "
                << f.domain->hi << "]";
            if (bij.witness) msg << " (monotonicity breaks near " << bij.witness->first << ")";
            throw ConfigError(msg.str());
        }
    } else if (f.kind == ScalarMapping::Kind::Polynomial) {
        throw ConfigError("invert_spectrum: polynomial mapping needs a declared domain");
    }

    const bool has_closed_form = f.kind != ScalarMapping::Kind::Polynomial;
    if (method == InversionMethod::Analytic && !has_closed_form) {
        throw ConfigError("invert_spectrum: no closed-form inverse for " + f.name());
    }
    const bool analytic = method == InversionMethod::Analytic ||
                          (method == InversionMethod::Auto && has_closed_form);
    if (!analytic && !f.domain) {
        throw ConfigError("invert_spectrum: root finding needs a declared domain");
    }

    const Eigen::Index n = omega.size();
    InversionResult out;
    out.lambda_hat.resize(n);
    out.residuals.resize(n);

    double range_lo = -std::numeric_limits<double>::infinity();
    double range_hi = std::numeric_limits<double>::infinity();
    if (f.domain) {
        const double a = f(f.domain->lo), b = f(f.domain->hi);
        range_lo = std::min(a, b);
        range_hi = std::max(a, b);
    } else if (f.kind == ScalarMapping::Kind::HeatKernel) {
        range_lo = 0.0;
    }

    for (Eigen::Index k = 0; k < n; ++k) {
        const double w = omega(k);
        const double tol = 1e-9 * std::max(1.0, std::abs(w));
        const bool open_lower = !f.domain && f.kind == ScalarMapping::Kind::HeatKernel;
        if (!std::isfinite(w) || w < range_lo - tol || w > range_hi + tol || (open_lower && w <= 0.0)) {
            std::ostringstream msg;
            msg << "invert_spectrum: omega[" << k << "] = " << w << " lies outside the range of "
                << f.name();
            if (f.domain) msg << " over [" << f.domain->lo << ", " << f.domain->hi << "]";
            throw ConfigError(msg.str());
        }

        double lam;
        if (analytic) {
            if (f.kind == ScalarMapping::Kind::Identity) {
                lam = w;
            } else {
                // Clamp into the range so values within tolerance stay invertible.
                const double wc = f.domain ? std::clamp(w, range_lo, range_hi) : w;
                lam = -std::log(wc / f.alpha) / f.tau;
            }
            if (f.domain) lam = std::clamp(lam, f.domain->lo, f.domain->hi);
        } else {
            lam = solve_scalar_root(f, w, *f.domain);
        }
        const double r = f(lam) - w;
        out.lambda_hat(k) = lam;
        out.residuals(k) = r * r;
    }
    return out;
}

}  // namespace netid
