#pragma once

#include <Eigen/Core>
#include <string>
#include <vector>

#include "craniomorph/fast_marching.hpp"
#include "craniomorph/tri_mesh.hpp"

namespace craniomorph {

// Polyline on the mesh surface from one point to another.
struct GeodesicPath {
    std::vector<Eigen::Vector3d> waypoints;
    double length = 0.0;  // sum of consecutive waypoint distances, mm
    std::string from_id, to_id;
};

// Backtrace from target to the field's source by steepest descent of the
// piecewise-linear distance field. Throws DomainError if the target is not
// reachable, NumericalError (with location) if the descent stagnates.
GeodesicPath geodesic_path(const TriMesh& mesh, const DistanceField& field,
                           const SurfacePoint& target);

// Point at arc length = length/2 along the polyline (linear interpolation
// inside a segment). Throws DomainError on zero-length paths.
Eigen::Vector3d geodesic_midpoint(const GeodesicPath& path);

}  // namespace craniomorph
