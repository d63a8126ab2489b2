#pragma once

#include <Eigen/Dense>

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

namespace netid {

struct Edge {
    int i = 0;
    int j = 0;
    double weight = 1.0;
};

/// Vertex/edge structure. Undirected graphs store each edge once.
struct Graph {
    int n = 0;
    std::vector<Edge> edges;
    bool directed = false;
    bool allow_self_loops = false;
};

/// Throws ConfigError when indices are out of range, self-loops are not allowed,
/// or an undirected edge is listed twice.
void validate(const Graph& g);

enum class ShiftClass {
    General,  ///< no structural requirement
    Adjacency,
    CombinatorialLaplacian,
    NormalizedLaplacian,
};

std::string to_string(ShiftClass c);
ShiftClass shift_class_from_string(const std::string& s);

/// Set of admissible graph matrices used by reconstruction and recovery.
///
/// `trace` anchors the scale of recovered matrices: for Laplacian classes it
/// fixes trace(S), for adjacency it fixes the sum of upper off-diagonal
/// weights. Without it the zero matrix is always admissible.
struct GraphClassConstraint {
    ShiftClass cls = ShiftClass::General;
    bool symmetric = true;
    std::optional<double> max_degree;
    std::optional<double> trace;

    static GraphClassConstraint of(ShiftClass c) {
        GraphClassConstraint g;
        g.cls = c;
        return g;
    }

    bool demands_symmetry() const { return cls != ShiftClass::General && symmetric; }
};

struct ShiftOperator {
    Eigen::MatrixXd matrix;
    ShiftClass cls = ShiftClass::General;
};

/// Dense matrix of `g` in the requested class. Laplacian diagonals are the
/// negated off-diagonal row sums, so L * 1 vanishes
/// (exactly for integer weights).
ShiftOperator build_shift(const Graph& g, const GraphClassConstraint& cls);

/// Dense weighted adjacency (W(i,j) = W(j,i) = w for undirected edges).
Eigen::MatrixXd adjacency_matrix(const Graph& g);

/// Human-readable descriptions of every violated class invariant; empty when `m`
/// belongs to the class. `tol` is scaled by max(1, max |m_ij|).
std::vector<std::string> class_violations(const Eigen::MatrixXd& m,
                                          const GraphClassConstraint& cls,
                                          double tol = 1e-10);

struct GraphFamily {
    enum class Kind { ErdosRenyi, Ring, Path, Grid };
    Kind kind = Kind::ErdosRenyi;
    double p = 0.3;

    static GraphFamily erdos_renyi(double p) { return {Kind::ErdosRenyi, p}; }
    static GraphFamily ring() { return {Kind::Ring, 0.0}; }
    static GraphFamily path() { return {Kind::Path, 0.0}; }
    static GraphFamily grid() { return {Kind::Grid, 0.0}; }
};

GraphFamily graph_family_from_string(const std::string& name, double p);

/// Unit-weight graph from `family`. Erdos-Renyi draws are resampled until
/// connected, up to `max_retries` attempts.
Graph random_graph(const GraphFamily& family, int n, std::uint64_t seed, int max_retries = 1000);

bool is_connected(const Graph& g);

/// Edges read off the off-diagonal of a shift matrix. An entry counts when
/// its magnitude exceeds `rel_threshold` times the largest off-diagonal
/// magnitude. Laplacian weights are reported as -S(i,j).
Graph graph_from_matrix(const Eigen::MatrixXd& s, ShiftClass cls, double rel_threshold = 1e-3);

struct SupportScore {
    int true_positive = 0;
    int false_positive = 0;
    int false_negative = 0;
    double precision = 0.0;
    double recall = 0.0;
    double f_score = 0.0;
};

/// Edge-set comparison ignoring weights and orientation.
SupportScore compare_support(const Graph& truth, const Graph& estimate);

// Text formats: edge list (`n <count> directed <0|1>` header, then `i j weight`)
// and Graphviz DOT.
void write_edge_list(std::ostream& os, const Graph& g);
Graph read_edge_list(std::istream& is);
void write_dot(std::ostream& os, const Graph& g, const std::string& name = "G");

}  // namespace netid
