#include "craniomorph/tri_mesh.hpp"

#include <Eigen/Geometry>

#include <algorithm>
#include <cmath>
#include <map>

#include "craniomorph/error.hpp"

namespace craniomorph {

double triangle_area(const TriMesh& m, int t) {
    const auto& f = m.triangles[t];
    Eigen::Vector3d e1 = m.vertices[f[1]] - m.vertices[f[0]];
    Eigen::Vector3d e2 = m.vertices[f[2]] - m.vertices[f[0]];
    return 0.5 * e1.cross(e2).norm();
}

int validate_and_repair(TriMesh& m) {
    const int nv = m.n_vertices();
    for (int i = 0; i < nv; ++i) {
        if (!m.vertices[i].allFinite())
            throw DomainError("non-finite vertex coordinate at index " + std::to_string(i));
    }
    for (const auto& f : m.triangles) {
        for (int k = 0; k < 3; ++k) {
            if (f[k] < 0 || f[k] >= nv)
                throw DomainError("triangle references vertex " + std::to_string(f[k]) +
                                  " of " + std::to_string(nv));
        }
    }
    std::vector<std::array<int, 3>> kept;
    kept.reserve(m.triangles.size());
    int dropped = 0;
    for (int t = 0; t < m.n_triangles(); ++t) {
        if (triangle_area(m, t) < 1e-12)
            ++dropped;
        else
            kept.push_back(m.triangles[t]);
    }
    m.triangles = std::move(kept);
    return dropped;
}

std::vector<std::pair<int, int>> mesh_edges(const TriMesh& m) {
    std::vector<std::pair<int, int>> edges;
    edges.reserve(m.triangles.size() * 3);
    for (const auto& f : m.triangles) {
        for (int k = 0; k < 3; ++k) {
            int a = f[k], b = f[(k + 1) % 3];
            edges.emplace_back(std::min(a, b), std::max(a, b));
        }
    }
    std::sort(edges.begin(), edges.end());
    edges.erase(std::unique(edges.begin(), edges.end()), edges.end());
    return edges;
}

double mean_edge_length(const TriMesh& m) {
    auto edges = mesh_edges(m);
    if (edges.empty()) return 0.0;
    double s = 0.0;
    for (auto [a, b] : edges) s += (m.vertices[a] - m.vertices[b]).norm();
    return s / static_cast<double>(edges.size());
}

std::vector<std::vector<int>> vertex_triangles(const TriMesh& m) {
    std::vector<std::vector<int>> vt(m.n_vertices());
    for (int t = 0; t < m.n_triangles(); ++t)
        for (int k = 0; k < 3; ++k) vt[m.triangles[t][k]].push_back(t);
    return vt;
}

std::vector<std::vector<int>> vertex_neighbors(const TriMesh& m) {
    std::vector<std::vector<int>> nb(m.n_vertices());
    for (auto [a, b] : mesh_edges(m)) {
        nb[a].push_back(b);
        nb[b].push_back(a);
    }
    return nb;
}

std::vector<std::pair<int, int>> boundary_edges(const TriMesh& m) {
    std::map<std::pair<int, int>, int> count;
    for (const auto& f : m.triangles) {
        for (int k = 0; k < 3; ++k) {
            int a = f[k], b = f[(k + 1) % 3];
            ++count[{std::min(a, b), std::max(a, b)}];
        }
    }
    std::vector<std::pair<int, int>> out;
    for (const auto& [e, c] : count)
        if (c == 1) out.push_back(e);
    return out;
}

std::vector<std::array<int, 3>> triangle_adjacency(const TriMesh& m) {
    std::vector<std::array<int, 3>> adj(m.n_triangles(), {-1, -1, -1});
    std::map<std::pair<int, int>, std::vector<std::pair<int, int>>> by_edge;
    for (int t = 0; t < m.n_triangles(); ++t) {
        for (int i = 0; i < 3; ++i) {
            int a = m.triangles[t][(i + 1) % 3];
            int b = m.triangles[t][(i + 2) % 3];
            by_edge[{std::min(a, b), std::max(a, b)}].push_back({t, i});
        }
    }
    for (const auto& [edge, faces] : by_edge) {
        if (faces.size() != 2) continue;
        adj[faces[0].first][faces[0].second] = faces[1].first;
        adj[faces[1].first][faces[1].second] = faces[0].first;
    }
    return adj;
}

Eigen::Vector3d mesh_centroid(const TriMesh& m) {
    Eigen::Vector3d c = Eigen::Vector3d::Zero();
    if (m.vertices.empty()) return c;
    for (const auto& v : m.vertices) c += v;
    return c / static_cast<double>(m.vertices.size());
}

void bounding_box(const TriMesh& m, Eigen::Vector3d& lo, Eigen::Vector3d& hi) {
    if (m.empty()) throw DomainError("bounding_box: empty mesh");
    lo = hi = m.vertices[0];
    for (const auto& v : m.vertices) {
        lo = lo.cwiseMin(v);
        hi = hi.cwiseMax(v);
    }
}

}  // namespace craniomorph
