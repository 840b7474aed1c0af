#pragma once

#include <Eigen/Core>
#include <string>
#include <utility>
#include <vector>

#include "craniomorph/coordinate_layout.hpp"
#include "craniomorph/landmarks.hpp"
#include "craniomorph/tri_mesh.hpp"

namespace craniomorph {

// Centered skull/face data tables; row i of X and Y is the same individual.
struct ShapeTablePair {
    Eigen::MatrixXd X;  // n x p, centered skull coordinates (mm)
    Eigen::MatrixXd Y;  // n x q, centered face coordinates (mm)
    Eigen::VectorXd x_template;
    Eigen::VectorXd y_template;
    CoordinateLayout skull_layout;
    CoordinateLayout face_layout;

    int n() const { return static_cast<int>(X.rows()); }
    int p() const { return static_cast<int>(X.cols()); }
    int q() const { return static_cast<int>(Y.cols()); }
};

// Flattens every entry, takes arithmetic-mean templates and centers.
// All entries must share both layouts (ids and midplane flags).
ShapeTablePair assemble(const std::vector<std::pair<LandmarkSet, TriMesh>>& entries);

ShapeTablePair assemble_vectors(const std::vector<Eigen::VectorXd>& skulls,
                                const std::vector<Eigen::VectorXd>& faces,
                                CoordinateLayout skull_layout, CoordinateLayout face_layout);

// Rebuilds a mesh with `topology`'s triangles from a centered+template vector.
TriMesh unflatten_mesh(const Eigen::VectorXd& centered, const Eigen::VectorXd& template_vec,
                       const CoordinateLayout& layout, const TriMesh& topology);

// Directory archive: layout.json, X.csv, Y.csv, templates.csv. Values are
// written with 17 significant digits so round-trips are exact.
void save_table(const std::string& dir, const ShapeTablePair& table);
ShapeTablePair load_table(const std::string& dir);

}  // namespace craniomorph
