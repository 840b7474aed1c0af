#pragma once

#include <Eigen/Core>
#include <utility>
#include <vector>

#include "craniomorph/landmarks.hpp"
#include "craniomorph/tri_mesh.hpp"

namespace craniomorph {

// Plane n·x + offset = 0 with unit normal.
struct Plane {
    Eigen::Vector3d normal = Eigen::Vector3d::UnitX();
    double offset = 0.0;

    double signed_distance(const Eigen::Vector3d& p) const { return normal.dot(p) + offset; }
};

// Total-least-squares plane through midline points: normal = eigenvector of
// the point covariance with the smallest eigenvalue. Throws DomainError on
// fewer than 3 points or collinear points.
Plane fit_symmetry_plane(const std::vector<Eigen::Vector3d>& midpoints);

double plane_residual_sum_sq(const Plane& pl, const std::vector<Eigen::Vector3d>& pts);

enum class Side { Left, Right };

// Rigid frame in which the plane becomes x = 0: x' = R (x - x0) with the
// signed plane distance in the first coordinate. Deterministic tangent choice.
Eigen::Matrix3d plane_frame_rotation(const Plane& pl);
Eigen::Vector3d to_plane_frame(const Plane& pl, const Eigen::Vector3d& p);

// Cuts the mesh at the plane (exact edge-plane intersections, shared cut
// vertices), keeps the requested side, rotates into the plane frame, and
// mirrors left halves (x -> -x, winding flipped) so both sides share one
// chirality. Midplane landmarks are projected exactly onto x = 0; lateral
// landmarks of the other side are dropped and trailing _L/_R/_l/_r id
// suffixes are stripped so both halves share one template.
std::pair<TriMesh, LandmarkSet> split_half(const TriMesh& mesh, const Plane& plane, Side side,
                                           const LandmarkSet& landmarks);

}  // namespace craniomorph
