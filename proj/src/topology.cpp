#include "netid/topology.hpp"

#include "netid/error.hpp"
#include "netid/spectral.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <limits>
#include <numeric>
#include <sstream>
#include <utility>

namespace netid {
namespace {

constexpr double kReweightFloor = 1e-2;

/// Upper-triangular vertex pairs (i < j) in row-major order.
std::vector<std::pair<int, int>> vertex_pairs(int n) {
    std::vector<std::pair<int, int>> out;
    out.reserve(static_cast<std::size_t>(n) * (n - 1) / 2);
    for (int i = 0; i < n; ++i)
        for (int j = i + 1; j < n; ++j) out.emplace_back(i, j);
    return out;
}

void require_convex_class(const GraphClassConstraint& cls, const char* who) {
    if (cls.cls != ShiftClass::CombinatorialLaplacian && cls.cls != ShiftClass::Adjacency) {
        throw ConfigError(std::string(who) + ": only the adjacency and combinatorial Laplacian classes are supported");
    }
    if (!cls.symmetric) throw ConfigError(std::string(who) + ": directed graph classes are not supported");
}

bool is_laplacian(const GraphClassConstraint& cls) { return cls.cls == ShiftClass::CombinatorialLaplacian; }

/// S(w) for edge weights w >= 0 on `pairs`.
Eigen::MatrixXd shift_from_weights(const Eigen::VectorXd& w, const std::vector<std::pair<int, int>>& pairs, int n,
                                   bool laplacian) {
    Eigen::MatrixXd s = Eigen::MatrixXd::Zero(n, n);
    for (std::size_t e = 0; e < pairs.size(); ++e) {
        const auto [i, j] = pairs[e];
        const double v = w(static_cast<Eigen::Index>(e));
        if (laplacian) {
            s(i, j) -= v;
            s(j, i) -= v;
            s(i, i) += v;
            s(j, j) += v;
        } else {
            s(i, j) += v;
            s(j, i) += v;
        }
    }
    return s;
}

/// Column-major vec(X * B_e) for every basis matrix B_e of the edge parameterization.
Eigen::MatrixXd vec_products(const Eigen::MatrixXd& x, const std::vector<std::pair<int, int>>& pairs,
                             bool laplacian, bool with_diagonal) {
    const Eigen::Index rows = x.rows(), n = x.cols();
    const Eigen::Index count = static_cast<Eigen::Index>(pairs.size()) + (with_diagonal ? n : 0);
    Eigen::MatrixXd out = Eigen::MatrixXd::Zero(rows * n, count);
    for (std::size_t e = 0; e < pairs.size(); ++e) {
        const auto [i, j] = pairs[e];
        auto col = out.col(static_cast<Eigen::Index>(e));
        if (laplacian) {
            const Eigen::VectorXd d = x.col(i) - x.col(j);
            col.segment(i * rows, rows) = d;
            col.segment(j * rows, rows) = -d;
        } else {
            col.segment(j * rows, rows) = x.col(i);
            col.segment(i * rows, rows) = x.col(j);
        }
    }
    if (with_diagonal) {
        for (Eigen::Index i = 0; i < n; ++i) {
            out.col(static_cast<Eigen::Index>(pairs.size()) + i).segment(i * rows, rows) = x.col(i);
        }
    }
    return out;
}

/// Symmetric M from its parameter vector (edge part, then diagonal when present).
Eigen::MatrixXd commutant_from_params(const Eigen::VectorXd& v, const std::vector<std::pair<int, int>>& pairs,
                                      int n, bool laplacian) {
    const Eigen::VectorXd edge_part = v.head(static_cast<Eigen::Index>(pairs.size()));
    Eigen::MatrixXd m = shift_from_weights(edge_part, pairs, n, laplacian);
    if (!laplacian) m.diagonal() += v.tail(n);
    return m;
}

/// Euclidean projection onto {w >= 0, sum(w) = total}.
Eigen::VectorXd project_simplex(const Eigen::VectorXd& v, double total) {
    std::vector<double> u(v.data(), v.data() + v.size());
    std::sort(u.begin(), u.end(), std::greater<>());
    double css = 0.0, theta = 0.0;
    for (std::size_t k = 0; k < u.size(); ++k) {
        css += u[k];
        const double t = (css - total) / static_cast<double>(k + 1);
        if (u[k] - t > 0.0) theta = t;
    }
    return (v.array() - theta).cwiseMax(0.0);
}

double largest_eigenvalue_psd(const Eigen::MatrixXd& h) {
    if (h.size() == 0) return 0.0;
    Eigen::VectorXd x = Eigen::VectorXd::Ones(h.rows()).normalized();
    double lambda = 0.0;
    for (int it = 0; it < 500; ++it) {
        Eigen::VectorXd y = h * x;
        const double norm = y.norm();
        if (norm == 0.0) return 0.0;
        const double next = x.dot(y);
        x = y / norm;
        if (std::abs(next - lambda) <= 1e-10 * std::abs(next)) {
            lambda = next;
            break;
        }
        lambda = next;
    }
    return lambda;
}

Eigen::VectorXd normalized_costs(const Eigen::VectorXd& magnitudes) {
    const double top = magnitudes.size() ? magnitudes.maxCoeff() : 0.0;
    if (!(top > 0.0)) return Eigen::VectorXd::Ones(magnitudes.size());
    Eigen::VectorXd c = (magnitudes.array() + kReweightFloor * top).inverse();
    return c / c.mean();
}

Eigen::VectorXd pair_magnitudes(const Eigen::MatrixXd& m, const std::vector<std::pair<int, int>>& pairs) {
    Eigen::VectorXd out(static_cast<Eigen::Index>(pairs.size()));
    for (std::size_t e = 0; e < pairs.size(); ++e) {
        const auto [i, j] = pairs[e];
        out(static_cast<Eigen::Index>(e)) = 0.5 * (std::abs(m(i, j)) + std::abs(m(j, i)));
    }
    return out;
}

struct QpRun {
    Eigen::VectorXd x;
    std::vector<double> trace;
    int iterations = 0;
};

/// Monotone FISTA for min x'Hx + g'x over the nonnegative orthant, or over the
/// scaled simplex when `simplex_total` is set. Backtracking halves the step
/// until the quadratic upper bound holds; the accepted iterate never raises
/// the objective.
QpRun solve_constrained_qp(const Eigen::MatrixXd& h, const Eigen::VectorXd& g, Eigen::VectorXd x0,
                           std::optional<double> simplex_total, const SolverOptions& solver) {
    auto project = [&](const Eigen::VectorXd& v) {
        return simplex_total ? project_simplex(v, *simplex_total) : Eigen::VectorXd(v.cwiseMax(0.0));
    };
    auto objective = [&](const Eigen::VectorXd& v) { return v.dot(h * v) + g.dot(v); };
    auto gradient = [&](const Eigen::VectorXd& v) -> Eigen::VectorXd { return 2.0 * (h * v) + g; };

    double lip = solver.step > 0.0 ? 1.0 / solver.step : 2.0 * largest_eigenvalue_psd(h);
    if (!(lip > 0.0)) lip = 1.0;

    QpRun run;
    Eigen::VectorXd x = project(x0);
    Eigen::VectorXd y = x;
    double fx = objective(x);
    double t = 1.0;
    run.trace.push_back(fx);

    for (int it = 1; it <= solver.iterations; ++it) {
        const Eigen::VectorXd gy = gradient(y);
        const double fy = objective(y);
        Eigen::VectorXd z;
        double fz = 0.0;
        for (int bt = 0; bt < 60; ++bt) {
            z = project(y - gy / lip);
            fz = objective(z);
            const Eigen::VectorXd d = z - y;
            if (fz <= fy + gy.dot(d) + 0.5 * lip * d.squaredNorm() + 1e-15 * std::abs(fy)) break;
            lip *= 2.0;  // step *= 0.5
        }
        const double t_next = 0.5 * (1.0 + std::sqrt(1.0 + 4.0 * t * t));
        Eigen::VectorXd x_next = fz <= fx ? z : x;
        const double f_next = std::min(fz, fx);
        y = x_next + (t / t_next) * (z - x_next) + ((t - 1.0) / t_next) * (x_next - x);

        const double change = std::abs(fx - f_next);
        x = std::move(x_next);
        fx = f_next;
        t = t_next;
        run.trace.push_back(fx);
        run.iterations = it;

        const Eigen::VectorXd step = project(x - gradient(x) / lip) - x;
        const bool flat = change <= solver.tol * std::max(std::abs(fx), 1e-300);
        const bool still = step.norm() <= 1e2 * solver.tol * std::max(1.0, x.norm());
        if (flat && still) {
            run.x = x;
            return run;
        }
        if (it == solver.iterations) {
            std::ostringstream msg;
            msg << "proximal gradient did not converge in " << solver.iterations
                << " iterations (objective " << fx << ", gradient-mapping norm " << step.norm() * lip << ")";
            throw NumericError(msg.str(), step.norm() * lip);
        }
    }
    run.x = x;
    return run;
}

}  // namespace

ShiftOperator recover_known_mapping(const Eigen::MatrixXd& m_hat, const ScalarMapping& f,
                                    const GraphClassConstraint& cls) {
    if (m_hat.rows() != m_hat.cols()) throw ConfigError("recover_known_mapping: matrix is not square");
    if (f.domain) {
        const auto bij = check_bijective(f, *f.domain);
        if (!bij.bijective) {
            throw ConfigError("recover_known_mapping: " + f.name() + " is not bijective on its domain");
        }
    }
    const Eigen::MatrixXd m = cls.demands_symmetry() ? Eigen::MatrixXd(0.5 * (m_hat + m_hat.transpose())) : m_hat;
    const SpectralDecomposition sd = spectral_decompose(m);
    const InversionResult inv = invert_spectrum(f, sd.eigvals);
    return reconstruct_from_spectrum(sd.eigvecs, inv.lambda_hat, cls, 1e-5);
}

SparsestResult recover_sparsest(const Eigen::MatrixXd& u_hat, const GraphClassConstraint& cls,
                                const SolverOptions& solver, const SparsestOptions& opts) {
    require_convex_class(cls, "recover_sparsest");
    if (u_hat.rows() != u_hat.cols()) throw ConfigError("recover_sparsest: eigenbasis is not square");
    const int n = static_cast<int>(u_hat.rows());
    Eigen::FullPivLU<Eigen::MatrixXd> lu(u_hat);
    if (!lu.isInvertible()) throw ConfigError("recover_sparsest: eigenbasis is singular");
    const Eigen::MatrixXd u_inv = lu.inverse();
    const bool lap = is_laplacian(cls);
    const auto pairs = vertex_pairs(n);
    const Eigen::Index npairs = static_cast<Eigen::Index>(pairs.size());

    // S(omega)(i, j) = sum_k U(i, k) omega_k Uinv(k, j)
    auto entry_row = [&](int i, int j) -> Eigen::RowVectorXd {
        return (u_hat.row(i).array() * u_inv.col(j).transpose().array()).matrix();
    };

    // Equalities E omega = e.
    std::vector<Eigen::RowVectorXd> eq_rows;
    std::vector<double> eq_rhs;
    for (const auto& [i, j] : pairs) {
        eq_rows.push_back(entry_row(i, j) - entry_row(j, i));
        eq_rhs.push_back(0.0);
    }
    for (int i = 0; i < n; ++i) {
        if (lap) {
            Eigen::RowVectorXd r = Eigen::RowVectorXd::Zero(n);
            for (int j = 0; j < n; ++j) r += entry_row(i, j);
            eq_rows.push_back(r);
        } else {
            eq_rows.push_back(entry_row(i, i));
        }
        eq_rhs.push_back(0.0);
    }
    if (cls.trace) {
        Eigen::RowVectorXd r = Eigen::RowVectorXd::Zero(n);
        if (lap) {
            for (int i = 0; i < n; ++i) r += entry_row(i, i);
        } else {
            for (const auto& [i, j] : pairs) r += entry_row(i, j);
        }
        eq_rows.push_back(r);
        eq_rhs.push_back(*cls.trace);
    }
    Eigen::MatrixXd eq(static_cast<Eigen::Index>(eq_rows.size()), n);
    for (std::size_t k = 0; k < eq_rows.size(); ++k) eq.row(static_cast<Eigen::Index>(k)) = eq_rows[k];
    const Eigen::VectorXd eq_b = Eigen::Map<const Eigen::VectorXd>(eq_rhs.data(), static_cast<Eigen::Index>(eq_rhs.size()));

    Eigen::JacobiSVD<Eigen::MatrixXd> esvd(eq, Eigen::ComputeFullV);
    const auto& esv = esvd.singularValues();
    const double ecut = esv.size() && esv(0) > 0 ? 1e-10 * esv(0) * std::max(eq.rows(), eq.cols()) : 0.0;
    const Eigen::Index erank = (esv.array() > ecut).count();
    const Eigen::VectorXd omega_p = eq.completeOrthogonalDecomposition().solve(eq_b);
    const double eq_res = (eq * omega_p - eq_b).norm();
    if (eq_res > 1e-8 * std::max(1.0, eq_b.norm())) {
        std::ostringstream msg;
        msg << "recover_sparsest: no spectrum makes U diag(omega) U^{-1} a " << to_string(cls.cls)
            << " (equality residual " << eq_res << ")";
        throw NumericError(msg.str(), eq_res);
    }
    const Eigen::MatrixXd null = esvd.matrixV().rightCols(n - erank);

    // Signed off-diagonal map: F omega >= 0 on the feasible cone.
    const double sign = lap ? -1.0 : 1.0;
    Eigen::MatrixXd f(npairs, n);
    for (Eigen::Index e = 0; e < npairs; ++e) {
        const auto [i, j] = pairs[static_cast<std::size_t>(e)];
        f.row(e) = sign * 0.5 * (entry_row(i, j) + entry_row(j, i));
    }
    const Eigen::MatrixXd a = f * null;
    const Eigen::VectorXd b = f * omega_p;

    Eigen::VectorXd costs = opts.weight_hint ? normalized_costs(pair_magnitudes(*opts.weight_hint, pairs))
                                             : Eigen::VectorXd::Ones(npairs);
    Eigen::VectorXd xi = Eigen::VectorXd::Zero(null.cols());
    Eigen::VectorXd z = (a * xi + b).cwiseMax(0.0);
    Eigen::VectorXd dual = Eigen::VectorXd::Zero(npairs);
    Eigen::CompleteOrthogonalDecomposition<Eigen::MatrixXd> ata;
    if (null.cols() > 0) ata.compute(a.transpose() * a);

    SparsestResult result;
    const int rounds = std::max(1, opts.reweight_rounds);
    double primal = 0.0;
    for (int round = 0; round < rounds && null.cols() > 0; ++round) {
        const Eigen::VectorXd h = 2.0 * a.transpose() * costs;
        double rho = 1.0;
        double best_primal = std::numeric_limits<double>::infinity();
        int last_improvement = 0;
        bool converged = false;
        for (int it = 1; it <= solver.iterations; ++it) {
            xi = ata.solve(a.transpose() * (z - dual - b) - h / rho);
            const Eigen::VectorXd ax = a * xi + b;
            const Eigen::VectorXd z_prev = z;
            z = (ax + dual).cwiseMax(0.0);
            dual += ax - z;
            primal = (ax - z).norm();
            const double dual_res = rho * (a.transpose() * (z - z_prev)).norm();
            ++result.iterations;

            const double scale = std::max({1.0, ax.norm(), z.norm()});
            if (primal <= solver.tol * scale && dual_res <= solver.tol * std::max(1.0, rho * (a.transpose() * dual).norm())) {
                converged = true;
                break;
            }
            if (primal < 0.99 * best_primal) {
                best_primal = primal;
                last_improvement = it;
            } else if (it - last_improvement > 5000 && primal > std::sqrt(solver.tol) * scale) {
                std::ostringstream msg;
                msg << "recover_sparsest: constraints appear infeasible (primal residual stagnated at " << primal
                    << ")";
                throw NumericError(msg.str(), primal);
            }
            // Residual balancing.
            if (it % 50 == 0) {
                if (primal > 10.0 * dual_res) {
                    rho *= 2.0;
                    dual /= 2.0;
                } else if (dual_res > 10.0 * primal) {
                    rho /= 2.0;
                    dual *= 2.0;
                }
            }
        }
        if (!converged && primal > std::sqrt(solver.tol) * std::max(1.0, z.norm())) {
            std::ostringstream msg;
            msg << "recover_sparsest: ADMM did not converge (primal residual " << primal << ")";
            throw NumericError(msg.str(), primal);
        }
        const Eigen::VectorXd offdiag = (a * xi + b).cwiseMax(0.0);
        if (!(offdiag.maxCoeff() > 0.0)) break;
        costs = normalized_costs(offdiag);
    }

    Eigen::VectorXd omega = omega_p + null * xi;

    // Polish: pin entries that ADMM drove to (numerical) zero.
    {
        const Eigen::VectorXd off = f * omega;
        const double top = off.size() ? off.cwiseAbs().maxCoeff() : 0.0;
        std::vector<Eigen::Index> active;
        for (Eigen::Index e = 0; e < off.size(); ++e)
            if (off(e) <= 1e-5 * top) active.push_back(e);
        if (!active.empty() && top > 0.0) {
            Eigen::MatrixXd k(eq.rows() + static_cast<Eigen::Index>(active.size()), n);
            Eigen::VectorXd rhs(k.rows());
            k.topRows(eq.rows()) = eq;
            rhs.head(eq.rows()) = eq_b;
            for (std::size_t r = 0; r < active.size(); ++r) {
                k.row(eq.rows() + static_cast<Eigen::Index>(r)) = f.row(active[r]);
                rhs(eq.rows() + static_cast<Eigen::Index>(r)) = 0.0;
            }
            const auto kcod = k.completeOrthogonalDecomposition();
            const Eigen::VectorXd polished = omega - kcod.solve(k * omega - rhs);
            const bool consistent = (k * polished - rhs).norm() <= 1e-9 * std::max(1.0, rhs.norm() + top);
            const bool still_feasible = (f * polished).minCoeff() >= -1e-9 * top;
            if (consistent && still_feasible) omega = polished;
        }
    }

    Eigen::MatrixXd s = u_hat * omega.asDiagonal() * u_inv;
    const Eigen::MatrixXd raw = s;
    s = hard_zero(0.5 * (s + s.transpose()));
    if (lap) {
        for (int i = 0; i < n; ++i) {
            double off = 0.0;
            for (int j = 0; j < n; ++j)
                if (j != i) off += s(i, j);
            s(i, i) = -off;
        }
    } else {
        s.diagonal().setZero();
    }

    result.omega = omega;
    result.shift = {s, cls.cls};
    result.spectral_residual = (s - raw).norm();
    for (int i = 0; i < n; ++i)
        for (int j = 0; j < n; ++j)
            if (i != j) result.l1 += std::abs(s(i, j));
    double worst = 0.0;
    for (int i = 0; i < n; ++i)
        for (int j = 0; j < n; ++j)
            if (i != j) worst = std::max(worst, lap ? s(i, j) : -s(i, j));
    worst = std::max(worst, (s - s.transpose()).cwiseAbs().maxCoeff());
    if (lap) worst = std::max(worst, s.rowwise().sum().cwiseAbs().maxCoeff());
    result.class_residual = worst;
    return result;
}

OneShotResult one_shot_state_graph(const Eigen::MatrixXd& u_r, Eigen::Index l, const Eigen::MatrixXd& t_hat,
                                   const GraphClassConstraint& cls, double mu, const SolverOptions& solver,
                                   const OneShotOptions& opts) {
    require_convex_class(cls, "one_shot_state_graph");
    if (!(mu >= 0.0)) throw ConfigError("one_shot_state_graph: mu must be >= 0");
    if (l < 1 || u_r.rows() % l != 0) throw ConfigError("one_shot_state_graph: invalid output width");
    const Eigen::Index s_rows = u_r.rows() / l;
    if (s_rows < 2) throw ConfigError("one_shot_state_graph: need at least two block rows");
    const int n = static_cast<int>(u_r.cols());
    if (t_hat.rows() != n || t_hat.cols() != n) throw ConfigError("one_shot_state_graph: T must be p x p");
    Eigen::FullPivLU<Eigen::MatrixXd> tlu(t_hat);
    if (!tlu.isInvertible()) throw ConfigError("one_shot_state_graph: T is singular");
    const Eigen::MatrixXd t_inv = tlu.inverse();

    const Eigen::MatrixXd p = u_r.topRows((s_rows - 1) * l) * t_inv;
    const Eigen::MatrixXd q = u_r.bottomRows((s_rows - 1) * l) * t_inv;
    const bool lap = is_laplacian(cls);
    const auto pairs = vertex_pairs(n);
    const Eigen::Index npairs = static_cast<Eigen::Index>(pairs.size());

    const Eigen::MatrixXd phi = vec_products(p, pairs, lap, !lap);  // P M(v)
    const Eigen::MatrixXd gamma = vec_products(q, pairs, lap, false);  // Q S(w)
    Eigen::ColPivHouseholderQR<Eigen::MatrixXd> phi_qr(phi);
    Eigen::MatrixXd basis = Eigen::MatrixXd::Identity(phi.rows(), phi_qr.rank());
    basis.applyOnTheLeft(phi_qr.householderQ());
    const Eigen::MatrixXd psi = gamma - basis * (basis.transpose() * gamma);
    const Eigen::MatrixXd h = psi.transpose() * psi;

    std::optional<double> total;
    if (cls.trace) total = lap ? 0.5 * *cls.trace : *cls.trace;

    Eigen::MatrixXd hint;
    if (opts.weight_hint) {
        hint = *opts.weight_hint;
    } else {
        hint = p.completeOrthogonalDecomposition().solve(q);
    }
    Eigen::VectorXd costs = mu > 0.0 ? normalized_costs(pair_magnitudes(hint, pairs)) : Eigen::VectorXd::Ones(npairs);

    Eigen::VectorXd w = total ? Eigen::VectorXd::Constant(npairs, *total / static_cast<double>(std::max<Eigen::Index>(npairs, 1)))
                              : Eigen::VectorXd::Zero(npairs);

    OneShotResult result;
    result.mu = mu;
    const int rounds = mu > 0.0 ? std::max(1, opts.reweight_rounds) : 1;
    for (int round = 0; round < rounds; ++round) {
        const Eigen::VectorXd g = 2.0 * mu * costs;
        QpRun run = solve_constrained_qp(h, g, w, total, solver);
        w = std::move(run.x);
        result.iterations += run.iterations;
        result.objective = run.trace.back();
        result.traces.push_back(std::move(run.trace));
        if (!(w.maxCoeff() > 0.0)) break;
        costs = normalized_costs(w);
    }

    const Eigen::MatrixXd s = shift_from_weights(w, pairs, n, lap);
    const Eigen::VectorXd v = phi_qr.solve(gamma * w);
    result.S_hat = {s, cls.cls};
    result.M_hat = commutant_from_params(v, pairs, n, lap);
    result.data_fit = (psi * w).squaredNorm();
    const double energy = (gamma * w).squaredNorm();
    result.relative_fit = energy > 0.0 ? result.data_fit / energy : 0.0;
    result.edges = static_cast<int>(graph_from_matrix(s, cls.cls, opts.support_threshold).edges.size());
    if (opts.a_hat) result.commutation = verify_commutation(s, *opts.a_hat);
    return result;
}

MuSweep one_shot_sweep(const Eigen::MatrixXd& u_r, Eigen::Index l, const Eigen::MatrixXd& t_hat,
                       const GraphClassConstraint& cls, const SolverOptions& solver, const OneShotOptions& opts) {
    if (l < 1 || u_r.rows() % l != 0 || u_r.rows() / l < 2) {
        throw ConfigError("one_shot_sweep: invalid output width");
    }
    const double scale = u_r.bottomRows(u_r.rows() - l).norm();
    std::vector<double> mus{0.0};
    for (int k = 0; k < 10; ++k) mus.push_back(scale * std::pow(10.0, -4.0 + 6.0 * k / 9.0));

    MuSweep sweep;
    for (double mu : mus) sweep.runs.push_back(one_shot_state_graph(u_r, l, t_hat, cls, mu, solver, opts));

    const double base = sweep.runs.front().relative_fit;
    int best = 0;
    for (int k = 1; k < static_cast<int>(sweep.runs.size()); ++k) {
        const auto& r = sweep.runs[static_cast<std::size_t>(k)];
        if (r.edges == 0 || r.relative_fit > 1.05 * base + 1e-4) continue;
        if (r.edges < sweep.runs[static_cast<std::size_t>(best)].edges) best = k;
    }
    sweep.chosen = best;
    sweep.best = sweep.runs[static_cast<std::size_t>(best)];
    return sweep;
}

double verify_commutation(const Eigen::MatrixXd& s, const Eigen::MatrixXd& a) { return commutation_residual(s, a); }

double shift_commutation_residual(const Eigen::MatrixXd& u_r, Eigen::Index l, const Eigen::MatrixXd& t_hat,
                                  const Eigen::MatrixXd& s, const Eigen::MatrixXd& a) {
    if (l < 1 || u_r.rows() % l != 0) throw ConfigError("shift_commutation_residual: invalid output width");
    const Eigen::Index rows = u_r.rows() - l;
    const Eigen::MatrixXd t_inv = t_hat.fullPivLu().inverse();
    return (u_r.topRows(rows) * t_inv * s * a - u_r.bottomRows(rows) * t_inv * s).norm();
}

}  // namespace netid
