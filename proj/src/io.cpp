#include "netid/io.hpp"

#include "netid/error.hpp"

#include <charconv>
#include <cmath>
#include <fstream>
#include <iomanip>
#include <sstream>
#include <vector>

namespace netid {
namespace {

std::vector<std::string> split_commas(const std::string& line) {
    std::vector<std::string> out;
    std::string cell;
    std::istringstream ss(line);
    while (std::getline(ss, cell, ',')) out.push_back(cell);
    if (!line.empty() && line.back() == ',') out.emplace_back();
    return out;
}

double parse_double(std::string cell, std::size_t line_no) {
    while (!cell.empty() && (cell.back() == '\r' || cell.back() == ' ')) cell.pop_back();
    std::size_t start = cell.find_first_not_of(' ');
    if (start == std::string::npos) throw ConfigError("csv line " + std::to_string(line_no) + ": empty cell");
    const char* first = cell.data() + start;
    const char* last = cell.data() + cell.size();
    if (*first == '+') ++first;
    double v = 0.0;
    auto [ptr, ec] = std::from_chars(first, last, v);
    if (ec != std::errc() || ptr != last) {
        throw ConfigError("csv line " + std::to_string(line_no) + ": cannot parse '" + cell + "'");
    }
    return v;
}

Eigen::MatrixXd rows_to_matrix(const std::vector<std::vector<double>>& rows) {
    if (rows.empty()) return {};
    Eigen::MatrixXd m(static_cast<Eigen::Index>(rows.size()), static_cast<Eigen::Index>(rows.front().size()));
    for (std::size_t i = 0; i < rows.size(); ++i)
        for (std::size_t j = 0; j < rows[i].size(); ++j)
            m(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) = rows[i][j];
    return m;
}

void set_precision(std::ostream& os) { os << std::setprecision(17); }

}  // namespace

void write_dense_csv(std::ostream& os, const Eigen::MatrixXd& m) {
    set_precision(os);
    for (Eigen::Index i = 0; i < m.rows(); ++i) {
        for (Eigen::Index j = 0; j < m.cols(); ++j) {
            if (j) os << ',';
            os << m(i, j);
        }
        os << '\n';
    }
}

Eigen::MatrixXd read_dense_csv(std::istream& is) {
    std::vector<std::vector<double>> rows;
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(is, line)) {
        ++line_no;
        if (line.empty() || line == "\r") continue;
        std::vector<double> row;
        for (const auto& cell : split_commas(line)) row.push_back(parse_double(cell, line_no));
        if (!rows.empty() && row.size() != rows.front().size()) {
            throw ConfigError("csv line " + std::to_string(line_no) + ": ragged row");
        }
        rows.push_back(std::move(row));
    }
    return rows_to_matrix(rows);
}

void write_trajectory_csv(std::ostream& os, const Trajectory& traj) {
    const Eigen::Index q = traj.inputs.rows(), l = traj.outputs.rows(), k = traj.length();
    if (traj.inputs.cols() != k) throw ConfigError("trajectory: inputs and outputs differ in length");
    os << 't';
    for (Eigen::Index i = 0; i < q; ++i) os << ",u_" << i;
    for (Eigen::Index i = 0; i < l; ++i) os << ",y_" << i;
    os << '\n';
    set_precision(os);
    for (Eigen::Index t = 0; t < k; ++t) {
        os << t;
        for (Eigen::Index i = 0; i < q; ++i) os << ',' << traj.inputs(i, t);
        for (Eigen::Index i = 0; i < l; ++i) os << ',' << traj.outputs(i, t);
        os << '\n';
    }
}

Trajectory read_trajectory_csv(std::istream& is) {
    std::string header;
    if (!std::getline(is, header)) throw ConfigError("trajectory csv: missing header");
    if (!header.empty() && header.back() == '\r') header.pop_back();
    const auto names = split_commas(header);
    if (names.empty() || names.front() != "t") throw ConfigError("trajectory csv: header must start with 't'");
    Eigen::Index q = 0, l = 0;
    for (std::size_t c = 1; c < names.size(); ++c) {
        const std::string& nm = names[c];
        const bool is_u = nm.rfind("u_", 0) == 0, is_y = nm.rfind("y_", 0) == 0;
        if (is_u && l == 0 && nm == "u_" + std::to_string(q)) {
            ++q;
        } else if (is_y && nm == "y_" + std::to_string(l)) {
            ++l;
        } else {
            throw ConfigError("trajectory csv: unexpected column '" + nm + "'");
        }
    }
    if (l == 0) throw ConfigError("trajectory csv: no output columns");

    std::vector<std::vector<double>> rows;
    std::string line;
    std::size_t line_no = 1;
    while (std::getline(is, line)) {
        ++line_no;
        if (line.empty() || line == "\r") continue;
        const auto cells = split_commas(line);
        if (cells.size() != names.size()) {
            throw ConfigError("trajectory csv line " + std::to_string(line_no) + ": expected " +
                              std::to_string(names.size()) + " columns");
        }
        std::vector<double> row;
        for (const auto& cell : cells) row.push_back(parse_double(cell, line_no));
        rows.push_back(std::move(row));
    }
    const Eigen::MatrixXd data = rows_to_matrix(rows);
    Trajectory traj;
    const Eigen::Index k = data.rows();
    traj.inputs = k ? Eigen::MatrixXd(data.middleCols(1, q).transpose()) : Eigen::MatrixXd(q, 0);
    traj.outputs = k ? Eigen::MatrixXd(data.middleCols(1 + q, l).transpose()) : Eigen::MatrixXd(l, 0);
    return traj;
}

void write_singular_values_csv(std::ostream& os, const Eigen::VectorXd& sv) {
    os << "index,sigma\n";
    set_precision(os);
    for (Eigen::Index k = 0; k < sv.size(); ++k) os << k + 1 << ',' << sv(k) << '\n';
}

json to_json(const Eigen::MatrixXd& m) {
    json rows = json::array();
    for (Eigen::Index i = 0; i < m.rows(); ++i) {
        json row = json::array();
        for (Eigen::Index j = 0; j < m.cols(); ++j) row.push_back(m(i, j));
        rows.push_back(std::move(row));
    }
    return rows;
}

json to_json(const Eigen::VectorXd& v) {
    json out = json::array();
    for (Eigen::Index k = 0; k < v.size(); ++k) out.push_back(v(k));
    return out;
}

Eigen::MatrixXd matrix_from_json(const json& j, const std::string& what) {
    if (!j.is_array()) throw ConfigError(what + ": expected an array of rows");
    const auto rows = static_cast<Eigen::Index>(j.size());
    if (rows == 0) return {};
    if (!j[0].is_array()) throw ConfigError(what + ": expected an array of rows");
    const auto cols = static_cast<Eigen::Index>(j[0].size());
    Eigen::MatrixXd m(rows, cols);
    for (Eigen::Index r = 0; r < rows; ++r) {
        const json& row = j[static_cast<std::size_t>(r)];
        if (!row.is_array() || static_cast<Eigen::Index>(row.size()) != cols) {
            throw ConfigError(what + ": ragged matrix");
        }
        for (Eigen::Index c = 0; c < cols; ++c) {
            const json& x = row[static_cast<std::size_t>(c)];
            if (!x.is_number()) throw ConfigError(what + ": non-numeric entry");
            m(r, c) = x.get<double>();
        }
    }
    return m;
}

Eigen::VectorXd vector_from_json(const json& j, const std::string& what) {
    if (!j.is_array()) throw ConfigError(what + ": expected an array");
    Eigen::VectorXd v(static_cast<Eigen::Index>(j.size()));
    for (std::size_t k = 0; k < j.size(); ++k) {
        if (!j[k].is_number()) throw ConfigError(what + ": non-numeric entry");
        v(static_cast<Eigen::Index>(k)) = j[k].get<double>();
    }
    return v;
}

json to_json(const ScalarMapping& f) {
    json j;
    switch (f.kind) {
        case ScalarMapping::Kind::Identity: j["kind"] = "identity"; break;
        case ScalarMapping::Kind::HeatKernel:
            j["kind"] = "heat";
            j["alpha"] = f.alpha;
            j["tau"] = f.tau;
            break;
        case ScalarMapping::Kind::Polynomial:
            j["kind"] = "polynomial";
            j["coeffs"] = f.coeffs;
            break;
    }
    if (f.domain) j["domain"] = {f.domain->lo, f.domain->hi};
    return j;
}

ScalarMapping mapping_from_json(const json& j) {
    if (!j.is_object()) throw ConfigError("mapping: expected an object");
    for (const auto& [key, _] : j.items()) {
        if (key != "kind" && key != "alpha" && key != "tau" && key != "coeffs" && key != "domain") {
            throw ConfigError("mapping: unknown key '" + key + "'");
        }
    }
    if (!j.contains("kind") || !j["kind"].is_string()) throw ConfigError("mapping: missing 'kind'");
    std::optional<Interval> dom;
    if (j.contains("domain")) {
        const json& d = j["domain"];
        if (!d.is_array() || d.size() != 2 || !d[0].is_number() || !d[1].is_number()) {
            throw ConfigError("mapping: 'domain' must be [lo, hi]");
        }
        dom = Interval{d[0].get<double>(), d[1].get<double>()};
        if (!(dom->hi > dom->lo)) throw ConfigError("mapping: empty domain");
    }
    auto number = [&](const char* key) {
        if (!j.contains(key) || !j[key].is_number()) throw ConfigError(std::string("mapping: missing number '") + key + "'");
        return j[key].get<double>();
    };
    const std::string kind = j["kind"].get<std::string>();
    if (kind == "identity") return ScalarMapping::identity(dom);
    if (kind == "heat") return ScalarMapping::heat_kernel(number("alpha"), number("tau"), dom);
    if (kind == "polynomial") {
        if (!j.contains("coeffs") || !j["coeffs"].is_array()) throw ConfigError("mapping: missing 'coeffs'");
        std::vector<double> c;
        for (const auto& x : j["coeffs"]) {
            if (!x.is_number()) throw ConfigError("mapping: non-numeric coefficient");
            c.push_back(x.get<double>());
        }
        return ScalarMapping::polynomial(std::move(c), dom);
    }
    throw ConfigError("mapping: unknown kind '" + kind + "'");
}

json to_json(const GraphClassConstraint& c) {
    json j;
    j["class"] = to_string(c.cls);
    j["symmetric"] = c.symmetric;
    if (c.trace) j["trace"] = *c.trace;
    if (c.max_degree) j["max_degree"] = *c.max_degree;
    return j;
}

GraphClassConstraint class_from_json(const json& j) {
    GraphClassConstraint c;
    if (j.is_string()) {
        c.cls = shift_class_from_string(j.get<std::string>());
        return c;
    }
    if (!j.is_object()) throw ConfigError("class: expected a string or an object");
    for (const auto& [key, value] : j.items()) {
        if (key == "class") {
            if (!value.is_string()) throw ConfigError("class: 'class' must be a string");
            c.cls = shift_class_from_string(value.get<std::string>());
        } else if (key == "symmetric") {
            if (!value.is_boolean()) throw ConfigError("class: 'symmetric' must be a boolean");
            c.symmetric = value.get<bool>();
        } else if (key == "trace") {
            if (!value.is_number()) throw ConfigError("class: 'trace' must be a number");
            c.trace = value.get<double>();
        } else if (key == "max_degree") {
            if (!value.is_number()) throw ConfigError("class: 'max_degree' must be a number");
            c.max_degree = value.get<double>();
        } else {
            throw ConfigError("class: unknown key '" + key + "'");
        }
    }
    return c;
}

json to_json(const IdentifiedSystem& sys) {
    json j;
    j["order"] = sys.order;
    j["s"] = sys.s;
    j["outputs"] = sys.outputs;
    j["inputs"] = sys.inputs;
    j["A_T"] = to_json(sys.A_T);
    j["B_T"] = to_json(sys.B_T);
    j["C_T"] = to_json(sys.C_T);
    j["D"] = to_json(sys.D);
    j["x_T0"] = to_json(sys.x_T0);
    j["initial_states"] = to_json(sys.initial_states);
    j["T_hat"] = to_json(sys.T_hat);
    j["singular_values"] = to_json(sys.singular_values);
    j["U_R"] = to_json(sys.U_R);
    j["fit_residual"] = sys.fit_residual;
    j["order_low_confidence"] = sys.order_low_confidence;
    j["warnings"] = sys.warnings;
    return j;
}

IdentifiedSystem identified_from_json(const json& j) {
    if (!j.is_object()) throw ConfigError("identified system: expected an object");
    auto need = [&](const char* key) -> const json& {
        if (!j.contains(key)) throw ConfigError(std::string("identified system: missing '") + key + "'");
        return j[key];
    };
    IdentifiedSystem sys;
    sys.order = need("order").get<Eigen::Index>();
    sys.s = need("s").get<Eigen::Index>();
    sys.outputs = need("outputs").get<Eigen::Index>();
    sys.inputs = need("inputs").get<Eigen::Index>();
    sys.A_T = matrix_from_json(need("A_T"), "A_T");
    sys.B_T = matrix_from_json(need("B_T"), "B_T");
    sys.C_T = matrix_from_json(need("C_T"), "C_T");
    sys.D = matrix_from_json(need("D"), "D");
    sys.x_T0 = vector_from_json(need("x_T0"), "x_T0");
    sys.initial_states = j.contains("initial_states") ? matrix_from_json(j["initial_states"], "initial_states")
                                                      : Eigen::MatrixXd(sys.x_T0);
    sys.T_hat = matrix_from_json(need("T_hat"), "T_hat");
    sys.singular_values = vector_from_json(need("singular_values"), "singular_values");
    sys.U_R = matrix_from_json(need("U_R"), "U_R");
    sys.fit_residual = need("fit_residual").get<double>();
    sys.order_low_confidence = j.value("order_low_confidence", false);
    if (j.contains("warnings")) sys.warnings = j["warnings"].get<std::vector<std::string>>();
    if (sys.U_R.rows() != sys.s * sys.outputs || sys.U_R.cols() != sys.order) {
        throw ConfigError("identified system: U_R shape does not match s, outputs and order");
    }
    return sys;
}

std::string read_text_file(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw ConfigError("cannot open '" + path.string() + "'");
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

void write_text_file(const std::filesystem::path& path, const std::string& text) {
    if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
    std::ofstream out(path, std::ios::binary);
    if (!out) throw Error("cannot write '" + path.string() + "'");
    out << text;
    if (!out) throw Error("write failed for '" + path.string() + "'");
}

json read_json_file(const std::filesystem::path& path) {
    const std::string text = read_text_file(path);
    try {
        return json::parse(text);
    } catch (const json::parse_error& e) {
        throw ConfigError("'" + path.string() + "' is not valid JSON: " + e.what());
    }
}

Eigen::MatrixXd read_dense_csv_file(const std::filesystem::path& path) {
    std::istringstream ss(read_text_file(path));
    return read_dense_csv(ss);
}

}  // namespace netid
