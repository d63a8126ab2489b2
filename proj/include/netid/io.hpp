#pragma once

#include "netid/graph.hpp"
#include "netid/lti.hpp"
#include "netid/matrix_function.hpp"
#include "netid/subspace_id.hpp"

#include <json.hpp>

#include <Eigen/Dense>

#include <filesystem>
#include <iosfwd>
#include <string>

namespace netid {

using json = nlohmann::json;

// Dense CSV: one matrix row per line, 17 significant digits, no header.
void write_dense_csv(std::ostream& os, const Eigen::MatrixXd& m);
Eigen::MatrixXd read_dense_csv(std::istream& is);

/// Header `t,u_0,...,u_{q-1},y_0,...,y_{l-1}`, one row per sample.
void write_trajectory_csv(std::ostream& os, const Trajectory& traj);
Trajectory read_trajectory_csv(std::istream& is);

/// Header `index,sigma` with 1-based index.
void write_singular_values_csv(std::ostream& os, const Eigen::VectorXd& sv);

// Matrices are arrays of rows; vectors are flat arrays.
json to_json(const Eigen::MatrixXd& m);
json to_json(const Eigen::VectorXd& v);
Eigen::MatrixXd matrix_from_json(const json& j, const std::string& what);
Eigen::VectorXd vector_from_json(const json& j, const std::string& what);

/// {"kind":"identity"|"heat"|"polynomial", "alpha", "tau", "coeffs", "domain":[lo,hi]}
json to_json(const ScalarMapping& f);
ScalarMapping mapping_from_json(const json& j);

/// {"class":"laplacian", "symmetric":true, "trace":c, "max_degree":d}
json to_json(const GraphClassConstraint& c);
GraphClassConstraint class_from_json(const json& j);

json to_json(const IdentifiedSystem& sys);
IdentifiedSystem identified_from_json(const json& j);

// File helpers. Readers raise ConfigError for missing or malformed files.
std::string read_text_file(const std::filesystem::path& path);
void write_text_file(const std::filesystem::path& path, const std::string& text);
json read_json_file(const std::filesystem::path& path);
Eigen::MatrixXd read_dense_csv_file(const std::filesystem::path& path);

}  // namespace netid
