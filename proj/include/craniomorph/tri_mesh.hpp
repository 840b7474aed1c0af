#pragma once

#include <Eigen/Core>
#include <array>
#include <utility>
#include <vector>

namespace craniomorph {

// Triangulated surface, vertex positions in mm.
struct TriMesh {
    std::vector<Eigen::Vector3d> vertices;
    std::vector<std::array<int, 3>> triangles;

    int n_vertices() const { return static_cast<int>(vertices.size()); }
    int n_triangles() const { return static_cast<int>(triangles.size()); }
    bool empty() const { return vertices.empty(); }
};

double triangle_area(const TriMesh& m, int t);

// Validates indices and coordinates; drops triangles with area < 1e-12 mm^2.
// Returns the number of dropped triangles (callers may log a warning).
// Throws DomainError on out-of-range indices or non-finite coordinates.
int validate_and_repair(TriMesh& m);

// Unique undirected edges as (lo, hi) vertex index pairs, sorted.
std::vector<std::pair<int, int>> mesh_edges(const TriMesh& m);

double mean_edge_length(const TriMesh& m);

// triangles incident to each vertex
std::vector<std::vector<int>> vertex_triangles(const TriMesh& m);

// one-ring vertex neighbours
std::vector<std::vector<int>> vertex_neighbors(const TriMesh& m);

// undirected edges that belong to exactly one triangle
std::vector<std::pair<int, int>> boundary_edges(const TriMesh& m);

// For each triangle, the neighbor across the edge opposite each corner
// (-1 at boundaries and non-manifold edges).
std::vector<std::array<int, 3>> triangle_adjacency(const TriMesh& m);

Eigen::Vector3d mesh_centroid(const TriMesh& m);

void bounding_box(const TriMesh& m, Eigen::Vector3d& lo, Eigen::Vector3d& hi);

}  // namespace craniomorph
