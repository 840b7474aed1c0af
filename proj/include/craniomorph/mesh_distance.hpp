#pragma once

#include <Eigen/Core>
#include <vector>

#include "craniomorph/tri_mesh.hpp"

namespace craniomorph {

// Exact closest point on triangle (a,b,c) to p (vertex/edge/interior cases).
Eigen::Vector3d closest_point_on_triangle(const Eigen::Vector3d& p, const Eigen::Vector3d& a,
                                          const Eigen::Vector3d& b, const Eigen::Vector3d& c);

double point_triangle_distance(const Eigen::Vector3d& p, const Eigen::Vector3d& a,
                               const Eigen::Vector3d& b, const Eigen::Vector3d& c);

// Barycentric coordinates of p with respect to triangle (a,b,c), clamped to
// the triangle (p is assumed to lie on or near it); components sum to 1.
Eigen::Vector3d barycentric_clamped(const Eigen::Vector3d& p, const Eigen::Vector3d& a,
                                    const Eigen::Vector3d& b, const Eigen::Vector3d& c);

struct SurfaceHit {
    double distance = 0.0;
    int triangle = -1;
    Eigen::Vector3d point = Eigen::Vector3d::Zero();  // closest point on surface
};

// Static AABB tree over mesh triangles. Queries are deterministic: among
// equidistant triangles the lowest triangle index wins, and subtrees are only
// pruned when strictly farther than the current best.
class SurfaceIndex {
public:
    explicit SurfaceIndex(const TriMesh& mesh);

    SurfaceHit closest(const Eigen::Vector3d& p) const;
    double distance(const Eigen::Vector3d& p) const { return closest(p).distance; }

    const TriMesh& mesh() const { return *mesh_; }

private:
    struct Node {
        Eigen::Vector3d lo, hi;
        int left = -1, right = -1;   // children, or
        int begin = 0, end = 0;      // leaf triangle range in order_
    };
    const TriMesh* mesh_;
    std::vector<Node> nodes_;
    std::vector<int> order_;

    int build(std::vector<int>& tris, int begin, int end);
    void query(int node, const Eigen::Vector3d& p, SurfaceHit& best) const;
    double box_sq_dist(const Node& n, const Eigen::Vector3d& p) const;
};

// min over all triangles of the exact point-to-triangle distance
double point_to_surface_distance(const Eigen::Vector3d& p, const TriMesh& mesh);

struct DistanceStats {
    std::vector<double> distances;  // per source vertex, mm
    double mean = 0.0;
    double median = 0.0;
    double std = 0.0;  // population convention (divide by n)
    double max = 0.0;
};

DistanceStats make_distance_stats(std::vector<double> distances);

// per-vertex distances of `source` vertices to the `target` surface
DistanceStats mesh_to_surface_stats(const TriMesh& source, const TriMesh& target);
DistanceStats mesh_to_surface_stats(const TriMesh& source, const SurfaceIndex& target);

}  // namespace craniomorph
