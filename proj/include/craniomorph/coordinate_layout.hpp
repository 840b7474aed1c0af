#pragma once

#include <Eigen/Core>
#include <string>
#include <vector>

#include "craniomorph/landmarks.hpp"
#include "craniomorph/tri_mesh.hpp"

namespace craniomorph {

// One point's contribution to a flattened coordinate vector: midplane points
// contribute (y,z), lateral points contribute (x,y,z).
struct LayoutEntry {
    std::string id;
    bool midplane = false;

    bool operator==(const LayoutEntry&) const = default;
};

struct CoordinateLayout {
    std::vector<LayoutEntry> entries;

    int total_dim() const;
    bool operator==(const CoordinateLayout&) const = default;
};

CoordinateLayout layout_from_landmarks(const LandmarkSet& lm);

// mesh vertices as all-lateral entries with ids "v0", "v1", ...
CoordinateLayout layout_from_mesh(const TriMesh& mesh);

// Concatenates coordinates in layout order, dropping the x component of
// midplane points. Throws LayoutError when ids mismatch or a midplane point
// has |x| > 1e-3 mm.
Eigen::VectorXd flatten(const LandmarkSet& lm, const CoordinateLayout& layout);
Eigen::VectorXd flatten(const TriMesh& mesh, const CoordinateLayout& layout);

// Inverse of flatten on centered vectors: adds the template, reinserts x = 0
// for midplane points. Throws LayoutError on dimension mismatch.
std::vector<Eigen::Vector3d> unflatten(const Eigen::VectorXd& centered,
                                       const Eigen::VectorXd& template_vec,
                                       const CoordinateLayout& layout);

}  // namespace craniomorph
