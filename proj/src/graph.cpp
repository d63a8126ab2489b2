#include "netid/graph.hpp"

#include "netid/error.hpp"

#include <Eigen/Eigenvalues>

#include <algorithm>
#include <cmath>
#include <iomanip>
#include <istream>
#include <numeric>
#include <ostream>
#include <random>
#include <set>
#include <sstream>
#include <utility>

namespace netid {

void validate(const Graph& g) {
    if (g.n < 0) throw ConfigError("graph: negative vertex count");
    std::set<std::pair<int, int>> seen;
    for (const auto& e : g.edges) {
        if (e.i < 0 || e.i >= g.n || e.j < 0 || e.j >= g.n) {
            std::ostringstream msg;
            msg << "graph: edge (" << e.i << ", " << e.j << ") out of range for n = " << g.n;
            throw ConfigError(msg.str());
        }
        if (e.i == e.j && !g.allow_self_loops) {
            throw ConfigError("graph: self-loop at vertex " + std::to_string(e.i));
        }
        if (!std::isfinite(e.weight)) throw ConfigError("graph: non-finite edge weight");
        auto key = g.directed ? std::make_pair(e.i, e.j)
                              : std::make_pair(std::min(e.i, e.j), std::max(e.i, e.j));
        if (!seen.insert(key).second) {
            std::ostringstream msg;
            msg << "graph: duplicate edge (" << e.i << ", " << e.j << ")";
            throw ConfigError(msg.str());
        }
    }
}

std::string to_string(ShiftClass c) {
    switch (c) {
        case ShiftClass::General: return "general";
        case ShiftClass::Adjacency: return "adjacency";
        case ShiftClass::CombinatorialLaplacian: return "laplacian";
        case ShiftClass::NormalizedLaplacian: return "normalized_laplacian";
    }
    return "general";
}

ShiftClass shift_class_from_string(const std::string& s) {
    if (s == "general") return ShiftClass::General;
    if (s == "adjacency") return ShiftClass::Adjacency;
    if (s == "laplacian" || s == "combinatorial_laplacian") return ShiftClass::CombinatorialLaplacian;
    if (s == "normalized_laplacian") return ShiftClass::NormalizedLaplacian;
    throw ConfigError("unknown shift class '" + s + "'");
}

Eigen::MatrixXd adjacency_matrix(const Graph& g) {
    validate(g);
    Eigen::MatrixXd w = Eigen::MatrixXd::Zero(g.n, g.n);
    for (const auto& e : g.edges) {
        w(e.i, e.j) += e.weight;
        if (!g.directed && e.i != e.j) w(e.j, e.i) += e.weight;
    }
    return w;
}

ShiftOperator build_shift(const Graph& g, const GraphClassConstraint& cls) {
    const bool laplacian = cls.cls == ShiftClass::CombinatorialLaplacian ||
                           cls.cls == ShiftClass::NormalizedLaplacian;
    if (laplacian && g.directed) {
        throw ConfigError("build_shift: Laplacian classes require an undirected graph");
    }
    if (laplacian && g.allow_self_loops) {
        for (const auto& e : g.edges) {
            if (e.i == e.j) throw ConfigError("build_shift: Laplacian of a graph with self-loops");
        }
    }
    Eigen::MatrixXd w = adjacency_matrix(g);

    switch (cls.cls) {
        case ShiftClass::General:
        case ShiftClass::Adjacency:
            return {w, cls.cls};
        case ShiftClass::CombinatorialLaplacian: {
            Eigen::MatrixXd l = -w;
            for (int i = 0; i < g.n; ++i) {
                double off = 0.0;
                for (int j = 0; j < g.n; ++j) {
                    if (j != i) off += l(i, j);
                }
                l(i, i) = -off;
            }
            return {l, cls.cls};
        }
        case ShiftClass::NormalizedLaplacian: {
            Eigen::VectorXd deg = w.rowwise().sum();
            Eigen::VectorXd inv_sqrt(g.n);
            for (int i = 0; i < g.n; ++i) inv_sqrt(i) = deg(i) > 0 ? 1.0 / std::sqrt(deg(i)) : 0.0;
            Eigen::MatrixXd l = -(inv_sqrt.asDiagonal() * w * inv_sqrt.asDiagonal());
            for (int i = 0; i < g.n; ++i) l(i, i) = deg(i) > 0 ? 1.0 : 0.0;
            return {l, cls.cls};
        }
    }
    return {w, cls.cls};
}

std::vector<std::string> class_violations(const Eigen::MatrixXd& m, const GraphClassConstraint& cls,
                                          double tol) {
    std::vector<std::string> out;
    if (m.rows() != m.cols()) {
        out.emplace_back("matrix is not square");
        return out;
    }
    const Eigen::Index n = m.rows();
    const double scale = std::max(1.0, n > 0 ? m.cwiseAbs().maxCoeff() : 0.0);
    const double eps = tol * scale;
    auto note = [&](const std::string& what, double value) {
        std::ostringstream msg;
        msg << what << " (max violation " << std::setprecision(3) << value << ")";
        out.push_back(msg.str());
    };

    if (cls.cls == ShiftClass::General) return out;

    if (cls.demands_symmetry()) {
        double asym = n > 0 ? (m - m.transpose()).cwiseAbs().maxCoeff() : 0.0;
        if (asym > eps) note("not symmetric", asym);
    }

    switch (cls.cls) {
        case ShiftClass::Adjacency: {
            double diag = n > 0 ? m.diagonal().cwiseAbs().maxCoeff() : 0.0;
            if (diag > eps) note("nonzero diagonal", diag);
            if (cls.max_degree && n > 0) {
                double worst = (m.rowwise().sum().array() - *cls.max_degree).maxCoeff();
                if (worst > eps) note("degree above bound", worst);
            }
            break;
        }
        case ShiftClass::CombinatorialLaplacian: {
            double rows = n > 0 ? m.rowwise().sum().cwiseAbs().maxCoeff() : 0.0;
            if (rows > eps) note("row sums not zero", rows);
            double positive_off = 0.0;
            for (Eigen::Index i = 0; i < n; ++i)
                for (Eigen::Index j = 0; j < n; ++j)
                    if (i != j) positive_off = std::max(positive_off, m(i, j));
            if (positive_off > eps) note("positive off-diagonal entry", positive_off);
            if (cls.max_degree && n > 0) {
                double worst = (m.diagonal().array() - *cls.max_degree).maxCoeff();
                if (worst > eps) note("degree above bound", worst);
            }
            break;
        }
        case ShiftClass::NormalizedLaplacian: {
            if (n == 0) break;
            Eigen::MatrixXd sym = 0.5 * (m + m.transpose());
            Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(sym, Eigen::EigenvaluesOnly);
            double lo = es.eigenvalues().minCoeff();
            double hi = es.eigenvalues().maxCoeff();
            if (lo < -eps) note("eigenvalue below 0", -lo);
            if (hi > 2.0 + eps) note("eigenvalue above 2", hi - 2.0);
            break;
        }
        case ShiftClass::General:
            break;
    }
    return out;
}

GraphFamily graph_family_from_string(const std::string& name, double p) {
    if (name == "erdos_renyi" || name == "er") return GraphFamily::erdos_renyi(p);
    if (name == "ring") return GraphFamily::ring();
    if (name == "path") return GraphFamily::path();
    if (name == "grid") return GraphFamily::grid();
    throw ConfigError("unknown graph family '" + name + "'");
}

bool is_connected(const Graph& g) {
    if (g.n <= 1) return true;
    std::vector<int> parent(g.n);
    std::iota(parent.begin(), parent.end(), 0);
    auto find = [&](int x) {
        while (parent[x] != x) x = parent[x] = parent[parent[x]];
        return x;
    };
    int components = g.n;
    for (const auto& e : g.edges) {
        int a = find(e.i), b = find(e.j);
        if (a != b) {
            parent[a] = b;
            --components;
        }
    }
    return components == 1;
}

Graph random_graph(const GraphFamily& family, int n, std::uint64_t seed, int max_retries) {
    if (n < 2) throw ConfigError("random_graph: need n >= 2");
    Graph g;
    g.n = n;
    switch (family.kind) {
        case GraphFamily::Kind::Path:
            for (int i = 0; i + 1 < n; ++i) g.edges.push_back({i, i + 1, 1.0});
            return g;
        case GraphFamily::Kind::Ring:
            for (int i = 0; i + 1 < n; ++i) g.edges.push_back({i, i + 1, 1.0});
            if (n > 2) g.edges.push_back({n - 1, 0, 1.0});
            return g;
        case GraphFamily::Kind::Grid: {
            int rows = static_cast<int>(std::sqrt(static_cast<double>(n)));
            while (rows > 1 && n % rows != 0) --rows;
            const int cols = n / rows;
            for (int r = 0; r < rows; ++r) {
                for (int c = 0; c < cols; ++c) {
                    int v = r * cols + c;
                    if (c + 1 < cols) g.edges.push_back({v, v + 1, 1.0});
                    if (r + 1 < rows) g.edges.push_back({v, v + cols, 1.0});
                }
            }
            return g;
        }
        case GraphFamily::Kind::ErdosRenyi:
            break;
    }

    if (!(family.p > 0.0 && family.p < 1.0)) {
        throw ConfigError("random_graph: Erdos-Renyi probability must lie in (0, 1)");
    }
    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<double> unif(0.0, 1.0);
    for (int attempt = 0; attempt < max_retries; ++attempt) {
        g.edges.clear();
        for (int i = 0; i < n; ++i)
            for (int j = i + 1; j < n; ++j)
                if (unif(rng) < family.p) g.edges.push_back({i, j, 1.0});
        if (is_connected(g)) return g;
    }
    std::ostringstream msg;
    msg << "random_graph: no connected Erdos-Renyi graph with p = " << family.p << " after "
        << max_retries << " draws; try a larger p";
    throw NumericError(msg.str());
}

Graph graph_from_matrix(const Eigen::MatrixXd& s, ShiftClass cls, double rel_threshold) {
    Graph g;
    g.n = static_cast<int>(s.rows());
    const bool symmetric = (s - s.transpose()).cwiseAbs().maxCoeff() <=
                           1e-9 * std::max(1.0, s.cwiseAbs().maxCoeff());
    g.directed = !symmetric;
    double biggest = 0.0;
    for (Eigen::Index i = 0; i < s.rows(); ++i)
        for (Eigen::Index j = 0; j < s.cols(); ++j)
            if (i != j) biggest = std::max(biggest, std::abs(s(i, j)));
    if (biggest == 0.0) return g;
    const double cut = rel_threshold * biggest;
    const double sign = (cls == ShiftClass::CombinatorialLaplacian ||
                         cls == ShiftClass::NormalizedLaplacian)
                            ? -1.0
                            : 1.0;
    for (Eigen::Index i = 0; i < s.rows(); ++i) {
        for (Eigen::Index j = g.directed ? 0 : i + 1; j < s.cols(); ++j) {
            if (i == j) continue;
            double v = g.directed ? s(i, j) : 0.5 * (s(i, j) + s(j, i));
            if (std::abs(v) > cut) g.edges.push_back({static_cast<int>(i), static_cast<int>(j), sign * v});
        }
    }
    return g;
}

SupportScore compare_support(const Graph& truth, const Graph& estimate) {
    auto keys = [](const Graph& g) {
        std::set<std::pair<int, int>> out;
        for (const auto& e : g.edges) {
            if (e.i == e.j) continue;
            out.emplace(std::min(e.i, e.j), std::max(e.i, e.j));
        }
        return out;
    };
    const auto t = keys(truth);
    const auto e = keys(estimate);
    SupportScore sc;
    for (const auto& k : e) (t.count(k) ? sc.true_positive : sc.false_positive)++;
    sc.false_negative = static_cast<int>(t.size()) - sc.true_positive;
    const int est = sc.true_positive + sc.false_positive;
    const int tru = sc.true_positive + sc.false_negative;
    sc.precision = est > 0 ? double(sc.true_positive) / est : (tru == 0 ? 1.0 : 0.0);
    sc.recall = tru > 0 ? double(sc.true_positive) / tru : 1.0;
    sc.f_score = (sc.precision + sc.recall) > 0
                     ? 2.0 * sc.precision * sc.recall / (sc.precision + sc.recall)
                     : 0.0;
    return sc;
}

void write_edge_list(std::ostream& os, const Graph& g) {
    os << "n " << g.n << " directed " << (g.directed ? 1 : 0) << '\n';
    os << std::setprecision(17);
    for (const auto& e : g.edges) os << e.i << ' ' << e.j << ' ' << e.weight << '\n';
}

Graph read_edge_list(std::istream& is) {
    Graph g;
    std::string line;
    if (!std::getline(is, line)) throw ConfigError("edge list: missing header");
    {
        std::istringstream hs(line);
        std::string kn, kd;
        int directed = 0;
        if (!(hs >> kn >> g.n >> kd >> directed) || kn != "n" || kd != "directed") {
            throw ConfigError("edge list: header must read 'n <count> directed <0|1>'");
        }
        g.directed = directed != 0;
    }
    int lineno = 1;
    while (std::getline(is, line)) {
        ++lineno;
        if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
        std::istringstream ls(line);
        Edge e;
        if (!(ls >> e.i >> e.j >> e.weight)) {
            throw ConfigError("edge list: malformed line " + std::to_string(lineno));
        }
        g.edges.push_back(e);
    }
    validate(g);
    return g;
}

void write_dot(std::ostream& os, const Graph& g, const std::string& name) {
    const char* arrow = g.directed ? " -> " : " -- ";
    os << (g.directed ? "digraph " : "graph ") << name << " {\n";
    for (int v = 0; v < g.n; ++v) os << "  " << v << ";\n";
    os << std::setprecision(6);
    for (const auto& e : g.edges) {
        os << "  " << e.i << arrow << e.j << " [weight=" << e.weight << "];\n";
    }
    os << "}\n";
}

}  // namespace netid
