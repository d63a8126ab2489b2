#include "netid/subspace_id.hpp"

#include <Eigen/Eigenvalues>

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>

namespace netid {
namespace {

Eigen::Index rank_from_singular_values(const Eigen::VectorXd& sv, Eigen::Index rows, Eigen::Index cols) {
    if (sv.size() == 0 || sv(0) == 0.0) return 0;
    const double cut = static_cast<double>(std::max(rows, cols)) * sv(0) *
                       std::numeric_limits<double>::epsilon() * 64.0;
    return (sv.array() > cut).count();
}

/// Singular values at or below this level are indistinguishable from round-off.
double noise_floor(const Eigen::VectorXd& sv) {
    return sv.size() ? sv(0) * static_cast<double>(sv.size()) * std::numeric_limits<double>::epsilon() : 0.0;
}

Eigen::MatrixXd orthonormal_basis(const Eigen::MatrixXd& m) {
    Eigen::BDCSVD<Eigen::MatrixXd> svd(m, Eigen::ComputeThinU);
    const Eigen::Index r = rank_from_singular_values(svd.singularValues(), m.rows(), m.cols());
    return svd.matrixU().leftCols(r);
}

void check_single_length(const Trajectory& traj, Eigen::Index s) {
    if (s >= 1 && traj.outputs.cols() < 2 * s) {
        std::ostringstream msg;
        msg << "build_hankel: trajectory of length " << traj.outputs.cols() << " is too short for s = " << s
            << "; need K >= " << 2 * s << " so that m > s";
        throw ConfigError(msg.str());
    }
}

}  // namespace

HankelBatch build_hankel(const Trajectory& traj, Eigen::Index s, std::optional<Eigen::Index> n_expected) {
    check_single_length(traj, s);
    return build_hankel(std::vector<Trajectory>{traj}, s, n_expected);
}

HankelBatch build_hankel(const std::vector<Trajectory>& experiments, Eigen::Index s,
                         std::optional<Eigen::Index> n_expected) {
    if (experiments.empty()) throw ConfigError("build_hankel: no trajectories");
    if (s < 1) throw ConfigError("build_hankel: window length s must be >= 1");
    if (n_expected && s <= *n_expected) {
        std::ostringstream msg;
        msg << "build_hankel: window length s = " << s << " must exceed the expected order "
            << *n_expected;
        throw ConfigError(msg.str());
    }

    HankelBatch b;
    b.s = s;
    b.input_width = experiments.front().inputs.rows();
    b.output_width = experiments.front().outputs.rows();
    for (std::size_t e = 0; e < experiments.size(); ++e) {
        const Trajectory& t = experiments[e];
        const Eigen::Index k_len = t.outputs.cols();
        if (t.inputs.cols() != k_len) {
            throw ConfigError("build_hankel: inputs and outputs have different lengths");
        }
        if (t.inputs.rows() != b.input_width || t.outputs.rows() != b.output_width) {
            throw ConfigError("build_hankel: experiments differ in input or output width");
        }
        if (k_len < s) {
            std::ostringstream msg;
            msg << "build_hankel: experiment " << e << " has " << k_len << " samples, fewer than s = " << s;
            throw ConfigError(msg.str());
        }
        b.m += k_len - s + 1;
    }
    if (b.m <= s) {
        std::ostringstream msg;
        msg << "build_hankel: " << b.m << " windows for s = " << s << "; need m > s";
        throw ConfigError(msg.str());
    }

    b.U.resize(s * b.input_width, b.m);
    b.Y.resize(s * b.output_width, b.m);
    Eigen::Index col = 0;
    for (const Trajectory& t : experiments) {
        const Eigen::Index m = t.outputs.cols() - s + 1;
        for (Eigen::Index i = 0; i < s; ++i) {
            b.U.block(i * b.input_width, col, b.input_width, m) = t.inputs.middleCols(i, m);
            b.Y.block(i * b.output_width, col, b.output_width, m) = t.outputs.middleCols(i, m);
        }
        col += m;
    }
    return b;
}

RQFactors rq_factorize(const HankelBatch& batch) {
    RQFactors f;
    f.autonomous = batch.U.size() == 0 || batch.U.isZero(0.0);
    const Eigen::Index rows_u = f.autonomous ? 0 : batch.U.rows();
    const Eigen::Index rows_y = batch.Y.rows();
    const Eigen::Index m = batch.m;
    if (!f.autonomous && m <= rows_u) {
        std::ostringstream msg;
        msg << "rq_factorize: " << m << " windows cannot expose the output subspace; need more than s*q = "
            << rows_u << " (lengthen the trajectory or shorten s)";
        throw NumericError(msg.str());
    }

    Eigen::MatrixXd stack(rows_u + rows_y, m);
    if (rows_u > 0) stack.topRows(rows_u) = batch.U;
    stack.bottomRows(rows_y) = batch.Y;

    const Eigen::Index r = std::min(m, stack.rows());
    Eigen::HouseholderQR<Eigen::MatrixXd> qr(stack.transpose());
    Eigen::MatrixXd upper = qr.matrixQR().topRows(r).triangularView<Eigen::Upper>();
    Eigen::MatrixXd q_thin = Eigen::MatrixXd::Identity(m, r);
    q_thin.applyOnTheLeft(qr.householderQ());

    Eigen::MatrixXd lower = upper.transpose();
    Eigen::MatrixXd q_rows = q_thin.transpose();
    for (Eigen::Index k = 0; k < r; ++k) {
        if (lower(k, k) < 0.0) {
            lower.col(k) *= -1.0;
            q_rows.row(k) *= -1.0;
        }
    }

    f.R11 = lower.topLeftCorner(rows_u, rows_u);
    f.R21 = lower.block(rows_u, 0, rows_y, rows_u);
    f.R22 = lower.block(rows_u, rows_u, rows_y, r - rows_u);
    f.Q1 = q_rows.topRows(rows_u);
    f.Q2 = q_rows.middleRows(rows_u, r - rows_u);

    if (rows_u > 0) {
        const Eigen::VectorXd d = f.R11.diagonal().cwiseAbs();
        if (d.minCoeff() <= 1e-10 * d.maxCoeff()) {
            f.warnings.emplace_back(
                "input block is numerically rank deficient; the input may not be persistently exciting");
        }
    }
    return f;
}

OrderEstimate estimate_order(const Eigen::VectorXd& sv, const OrderPolicy& policy) {
    if (sv.size() < 2) throw ConfigError("estimate_order: need at least two singular values");
    if (sv.maxCoeff() <= 0.0) throw NumericError("estimate_order: all singular values are zero (no signal)");

    OrderEstimate est;
    switch (policy.kind) {
        case OrderPolicy::Kind::Fixed:
            if (policy.order < 1) throw ConfigError("estimate_order: fixed order must be >= 1");
            est.order = policy.order;
            return est;
        case OrderPolicy::Kind::Threshold:
            est.order = (sv.array() >= policy.rho * sv(0)).count();
            return est;
        case OrderPolicy::Kind::LargestGap:
            break;
    }

    const double floor = noise_floor(sv);
    const Eigen::VectorXd lifted = sv.cwiseMax(floor);
    double best = -1.0;
    int ties = 0;
    for (Eigen::Index k = 0; k + 1 < lifted.size(); ++k) {
        const double ratio = lifted(k) / lifted(k + 1);
        if (ratio > best) {
            best = ratio;
            est.order = k + 1;
            ties = 1;
        } else if (ratio == best) {
            ++ties;
        }
    }
    est.gap_ratio = best;
    est.low_confidence = ties > 1 || best < 10.0;
    return est;
}

Eigen::VectorXd r22_singular_values(const RQFactors& factors) {
    if (factors.R22.size() == 0) return {};
    Eigen::BDCSVD<Eigen::MatrixXd> svd(factors.R22);
    return svd.singularValues();
}

Eigen::MatrixXd extract_observability_basis(const RQFactors& factors, Eigen::Index p) {
    if (p < 1) throw ConfigError("extract_observability_basis: order must be >= 1");
    Eigen::BDCSVD<Eigen::MatrixXd> svd(factors.R22, Eigen::ComputeThinU);
    const Eigen::Index rank = (svd.singularValues().array() > noise_floor(svd.singularValues())).count();
    if (p > rank) {
        std::ostringstream msg;
        msg << "extract_observability_basis: order " << p << " exceeds the numerical rank " << rank
            << " of R22";
        throw NumericError(msg.str(), static_cast<double>(rank));
    }
    return svd.matrixU().leftCols(p);
}

Eigen::MatrixXd extract_CT(const Eigen::MatrixXd& u_r, Eigen::Index l) {
    if (l < 1 || l > u_r.rows()) throw ConfigError("extract_CT: invalid output width");
    return u_r.topRows(l);
}

Eigen::MatrixXd solve_shift_invariance(const Eigen::MatrixXd& u_r, Eigen::Index l) {
    if (l < 1 || u_r.rows() % l != 0) {
        throw ConfigError("solve_shift_invariance: row count is not a multiple of the output width");
    }
    const Eigen::Index s = u_r.rows() / l;
    if (s < 2) throw ConfigError("solve_shift_invariance: need at least two block rows (s >= 2)");
    const Eigen::MatrixXd up = u_r.topRows((s - 1) * l);
    const Eigen::MatrixXd down = u_r.bottomRows((s - 1) * l);
    if (numerical_rank(up) < u_r.cols()) {
        throw NumericError("solve_shift_invariance: U_R upper block is column-rank deficient "
                           "(system unobservable over s-1 steps)");
    }
    return up.colPivHouseholderQr().solve(down);
}

InputFit solve_bd_x0(const Trajectory& traj, const Eigen::MatrixXd& a_t, const Eigen::MatrixXd& c_t) {
    return solve_bd_x0(std::vector<Trajectory>{traj}, a_t, c_t);
}

InputFit solve_bd_x0(const std::vector<Trajectory>& experiments, const Eigen::MatrixXd& a_t,
                     const Eigen::MatrixXd& c_t) {
    if (experiments.empty()) throw ConfigError("solve_bd_x0: no trajectories");
    const Eigen::Index p = a_t.rows();
    const Eigen::Index l = c_t.rows();
    const Eigen::Index q = experiments.front().inputs.rows();
    const Eigen::Index n_exp = static_cast<Eigen::Index>(experiments.size());
    if (a_t.cols() != p || c_t.cols() != p) throw ConfigError("solve_bd_x0: A_T/C_T shapes disagree");
    Eigen::Index total = 0;
    bool autonomous = true;
    for (const Trajectory& t : experiments) {
        if (t.outputs.rows() != l) throw ConfigError("solve_bd_x0: output width differs from C_T");
        if (t.inputs.rows() != q) throw ConfigError("solve_bd_x0: experiments differ in input width");
        if (t.inputs.cols() != t.outputs.cols()) throw ConfigError("solve_bd_x0: inputs and outputs differ in length");
        total += t.outputs.cols();
        autonomous = autonomous && (t.inputs.size() == 0 || t.inputs.isZero(0.0));
    }

    InputFit fit;
    // theta = [x_1(0); ...; x_N(0); vec(B_T); vec(D)]
    const Eigen::Index shared = p * n_exp;
    const Eigen::Index cols = shared + (autonomous ? 0 : p * q + l * q);
    if (total * l < cols) {
        std::ostringstream msg;
        msg << "solve_bd_x0: " << total * l << " equations for " << cols << " unknowns";
        throw ConfigError(msg.str());
    }

    if (p > 0) {
        Eigen::EigenSolver<Eigen::MatrixXd> es(a_t, false);
        const double rho = es.eigenvalues().cwiseAbs().maxCoeff();
        if (rho > 1.05) {
            std::ostringstream msg;
            msg << "A_T spectral radius " << rho << " exceeds 1.05; regressor columns grow with k";
            fit.warnings.push_back(msg.str());
        }
    }

    Eigen::MatrixXd psi = Eigen::MatrixXd::Zero(total * l, cols);
    Eigen::VectorXd y(total * l);
    Eigen::Index r0 = 0;
    for (Eigen::Index e = 0; e < n_exp; ++e) {
        const Trajectory& traj = experiments[static_cast<std::size_t>(e)];
        Eigen::MatrixXd cak = c_t;                           // C_T A_T^k
        Eigen::MatrixXd z = Eigen::MatrixXd::Zero(p, p * q);  // sum_{i<k} u(i)^T (x) A_T^{k-i-1}
        for (Eigen::Index k = 0; k < traj.outputs.cols(); ++k, r0 += l) {
            y.segment(r0, l) = traj.outputs.col(k);
            psi.block(r0, e * p, l, p) = cak;
            if (!autonomous) {
                psi.block(r0, shared, l, p * q).noalias() = c_t * z;
                for (Eigen::Index j = 0; j < q; ++j) {
                    psi.block(r0, shared + p * q + j * l, l, l).diagonal().setConstant(traj.inputs(j, k));
                }
                z = (a_t * z).eval();
                for (Eigen::Index j = 0; j < q; ++j) {
                    z.block(0, j * p, p, p).diagonal().array() += traj.inputs(j, k);
                }
            }
            cak = (cak * a_t).eval();
        }
    }

    Eigen::ColPivHouseholderQR<Eigen::MatrixXd> qr(psi);
    if (qr.rank() < cols) {
        std::ostringstream msg;
        msg << "solve_bd_x0: regressor has rank " << qr.rank() << " < " << cols
            << "; use a richer (persistently exciting) input";
        throw NumericError(msg.str());
    }
    const Eigen::VectorXd theta = qr.solve(y);
    fit.residual = (psi * theta - y).squaredNorm() / static_cast<double>(std::max<Eigen::Index>(total, 1));
    fit.initial_states = Eigen::Map<const Eigen::MatrixXd>(theta.data(), p, n_exp);
    fit.x_T0 = fit.initial_states.col(0);
    if (autonomous) {
        fit.B_T = Eigen::MatrixXd::Zero(p, q);
        fit.D = Eigen::MatrixXd::Zero(l, q);
    } else {
        fit.B_T = Eigen::Map<const Eigen::MatrixXd>(theta.data() + shared, p, q);
        fit.D = Eigen::Map<const Eigen::MatrixXd>(theta.data() + shared + p * q, l, q);
    }
    return fit;
}

IdentifiedSystem identify(const Trajectory& traj, const IdentifyOptions& opts) {
    check_single_length(traj, opts.s);
    return identify(std::vector<Trajectory>{traj}, opts);
}

IdentifiedSystem identify(const std::vector<Trajectory>& experiments, const IdentifyOptions& opts) {
    const HankelBatch batch = build_hankel(experiments, opts.s, opts.n_expected);
    const RQFactors factors = rq_factorize(batch);

    IdentifiedSystem id;
    id.s = batch.s;
    id.outputs = batch.output_width;
    id.inputs = batch.input_width;
    id.warnings = factors.warnings;
    id.singular_values = r22_singular_values(factors);

    const OrderEstimate order = estimate_order(id.singular_values, opts.order_policy);
    id.order = order.order;
    id.order_low_confidence = order.low_confidence;
    if (order.low_confidence) id.warnings.emplace_back("model order estimate has low confidence");

    id.U_R = extract_observability_basis(factors, id.order);
    id.A_T = solve_shift_invariance(id.U_R, id.outputs);
    id.C_T = extract_CT(id.U_R, id.outputs);

    InputFit fit = solve_bd_x0(experiments, id.A_T, id.C_T);
    id.x_T0 = std::move(fit.x_T0);
    id.initial_states = std::move(fit.initial_states);
    id.B_T = std::move(fit.B_T);
    id.D = std::move(fit.D);
    id.fit_residual = fit.residual;
    id.warnings.insert(id.warnings.end(), fit.warnings.begin(), fit.warnings.end());
    return id;
}

Detransformed detransform(const Eigen::MatrixXd& c_known, const IdentifiedSystem& est) {
    const Eigen::Index n = c_known.cols();
    if (est.order != n) {
        std::ostringstream msg;
        msg << "detransform: identified order " << est.order << " differs from the state dimension " << n
            << "; the similarity transform is undefined for reduced-order models (report A_T instead)";
        throw ConfigError(msg.str());
    }
    if (c_known.rows() != est.C_T.rows()) throw ConfigError("detransform: C and C_T differ in row count");
    if (numerical_rank(c_known) < n) {
        throw ConfigError("detransform: the output matrix C must have rank n");
    }
    Eigen::JacobiSVD<Eigen::MatrixXd> svd(est.C_T);
    const auto& sv = svd.singularValues();
    const double cond = sv(sv.size() - 1) > 0 ? sv(0) / sv(sv.size() - 1)
                                              : std::numeric_limits<double>::infinity();
    if (!(cond <= 1e10)) {
        std::ostringstream msg;
        msg << "detransform: C_T is ill-conditioned (cond = " << cond << ")";
        throw NumericError(msg.str(), cond);
    }

    Detransformed out;
    out.T_hat = c_known.completeOrthogonalDecomposition().pseudoInverse() * est.C_T;
    Eigen::PartialPivLU<Eigen::MatrixXd> lu(out.T_hat);
    out.A_hat = out.T_hat * est.A_T * lu.inverse();
    out.B_hat = out.T_hat * est.B_T;
    out.D_hat = est.D;
    out.x0_hat = out.T_hat * est.x_T0;
    return out;
}

double largest_principal_angle(const Eigen::MatrixXd& a, const Eigen::MatrixXd& b) {
    if (a.rows() != b.rows()) throw ConfigError("largest_principal_angle: row counts differ");
    const Eigen::MatrixXd qa = orthonormal_basis(a);
    const Eigen::MatrixXd qb = orthonormal_basis(b);
    if (qa.cols() != qb.cols()) return M_PI / 2;
    if (qa.cols() == 0) return 0.0;
    const Eigen::MatrixXd resid = qb - qa * (qa.transpose() * qb);
    Eigen::JacobiSVD<Eigen::MatrixXd> svd(resid);
    return std::asin(std::clamp(svd.singularValues()(0), 0.0, 1.0));
}

}  // namespace netid
