#pragma once

#include <Eigen/Core>
#include <vector>

#include "craniomorph/mesh_distance.hpp"
#include "craniomorph/tri_mesh.hpp"

namespace craniomorph {

// Point on a mesh surface: triangle index + barycentric coordinates.
struct SurfacePoint {
    int triangle = -1;
    Eigen::Vector3d bary = Eigen::Vector3d::Zero();

    Eigen::Vector3d position(const TriMesh& m) const;
    static SurfacePoint at_vertex(const TriMesh& m, int vertex);
};

// Closest surface point to p (uses the index's deterministic tie-breaks).
SurfacePoint locate_on_surface(const SurfaceIndex& index, const Eigen::Vector3d& p);

// Geodesic distance field from one source; carries the source so path
// extraction can terminate exactly on it.
struct DistanceField {
    Eigen::VectorXd values;  // per vertex, mm; +inf where unreachable
    SurfacePoint source;
};

// First-order fast marching (triangle update with obtuse-angle unfolding).
// Vertices unreachable from the source keep +inf.
DistanceField fast_marching_field(const TriMesh& mesh, int source_vertex);
DistanceField fast_marching_field(const TriMesh& mesh, const SurfacePoint& source);

}  // namespace craniomorph
