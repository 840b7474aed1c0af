#include "craniomorph/fast_marching.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <queue>
#include <utility>
#include <vector>

#include "craniomorph/error.hpp"

namespace craniomorph {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();
constexpr double kTiny = 1e-20;

Eigen::Vector2d rotate2(const Eigen::Vector2d& v, double angle) {
    double c = std::cos(angle), s = std::sin(angle);
    return {c * v.x() - s * v.y(), s * v.x() + c * v.y()};
}

class Marcher {
public:
    explicit Marcher(const TriMesh& mesh)
        : mesh_(mesh),
          v_tris_(vertex_triangles(mesh)),
          v_nbrs_(vertex_neighbors(mesh)),
          adj_(triangle_adjacency(mesh)),
          dist_(Eigen::VectorXd::Constant(mesh.n_vertices(), kInf)),
          state_(mesh.n_vertices(), kFar) {}

    Eigen::VectorXd run(const std::vector<std::pair<int, double>>& seeds) {
        for (const auto& [v, d0] : seeds) {
            if (v < 0 || v >= mesh_.n_vertices())
                throw DomainError("fast marching seed vertex out of range");
            if (d0 < dist_[v]) {
                dist_[v] = d0;
                state_[v] = kTrial;
                heap_.push({d0, v});
            }
        }
        while (!heap_.empty()) {
            auto [d, v] = heap_.top();
            heap_.pop();
            if (state_[v] == kDead || d > dist_[v]) continue;  // stale entry
            state_[v] = kDead;
            for (int w : v_nbrs_[v]) {
                if (state_[w] == kDead) continue;
                double nd = kInf;
                for (int f : v_tris_[w]) nd = std::min(nd, face_update(f, w));
                if (state_[w] == kFar) {
                    dist_[w] = nd;
                    state_[w] = kTrial;
                    heap_.push({nd, w});
                } else if (nd < dist_[w]) {
                    dist_[w] = nd;
                    heap_.push({nd, w});
                }
            }
        }
        return dist_;
    }

private:
    enum State : uint8_t { kFar, kTrial, kDead };

    // Quadratic update from a triangle with one corner at the vertex being
    // updated: edge lengths b (to contributor 1, value d1) and a (to
    // contributor 2, value d2), cos of the angle between them = dot.
    static double planar_update(double d1, double d2, double a, double b, double dot) {
        double sin2 = 1.0 - dot * dot;
        double u = d2 - d1;
        double f2 = a * a + b * b - 2.0 * a * b * dot;
        double f1 = b * u * (a * dot - b);
        double f0 = b * b * (u * u - a * a * sin2);
        double delta = f1 * f1 - f0 * f2;
        double t = -kInf;
        if (delta >= 0.0) {
            if (std::abs(f2) > kTiny) {
                t = (-f1 - std::sqrt(delta)) / f2;
                if (t < u || b * (t - u) / t < a * dot || a / dot < b * (t - u) / t)
                    t = (-f1 + std::sqrt(delta)) / f2;
            } else if (f1 != 0.0) {
                t = -f0 / f1;
            }
        }
        // upwind criterion: characteristic must come from inside the triangle
        if (u < t && a * dot < b * (t - u) / t && b * (t - u) / t < a / dot) return t + d1;
        return std::min(b + d1, a + d2);
    }

    // Trilaterate the unfolded source position from the two contributor
    // distances and read the update as the straight distance to it. Exact on
    // flat regions, where the planar-wave update is only first order near a
    // point source. Falls back to the planar update when the distance circles
    // are inconsistent or the reconstructed characteristic misses the triangle.
    static double circular_update(double d1, double d2, double a, double b, double dot) {
        double s = std::sqrt(std::max(0.0, 1.0 - dot * dot));
        // updated vertex at the origin, contributors at A and B
        Eigen::Vector2d A(b, 0.0), B(a * dot, a * s);
        double c = (B - A).norm();
        if (c < kTiny) return std::min(d1 + b, d2 + a);
        Eigen::Vector2d u = (B - A) / c;
        double wx = -b * u.x(), wy = b * u.y();  // origin in the A->B frame
        if (wy <= kTiny) return planar_update(d1, d2, a, b, dot);
        double sx = (d1 * d1 - d2 * d2 + c * c) / (2.0 * c);
        double sy2 = d1 * d1 - sx * sx;
        if (sy2 < 0.0) return planar_update(d1, d2, a, b, dot);
        double sy = -std::sqrt(sy2);  // source on the far side of AB
        // the segment source->vertex must cross the contributor edge
        double t = -sy / (wy - sy);
        double x_cross = sx + (wx - sx) * t;
        if (x_cross < -1e-12 || x_cross > c + 1e-12) return planar_update(d1, d2, a, b, dot);
        double T = std::hypot(wx - sx, wy - sy);
        if (T + 1e-12 < std::max(d1, d2)) return planar_update(d1, d2, a, b, dot);
        return T;
    }

    int face_neighbor(int f, int vertex) const {
        for (int i = 0; i < 3; ++i)
            if (mesh_.triangles[f][i] == vertex) return adj_[f][i];
        return -1;
    }

    int third_vertex(int f, int a, int b) const {
        for (int v : mesh_.triangles[f])
            if (v != a && v != b) return v;
        return -1;
    }

    // Flatten the fan of triangles across the edge opposite `vert` until a
    // pseudo-contributor inside the wedge of the obtuse corner is found.
    // Returns its vertex index (or -1), with its unfolded distance to `vert`
    // and the cosines against the two original edges.
    int unfold_triangle(int face, int vert, int vert1, int vert2, double& dist, double& dot1,
                        double& dot2) const {
        const Eigen::Vector3d& pv = mesh_.vertices[vert];
        Eigen::Vector3d e1 = mesh_.vertices[vert1] - pv;
        double norm1 = e1.norm();
        e1 /= norm1;
        Eigen::Vector3d e2 = mesh_.vertices[vert2] - pv;
        double norm2 = e2.norm();
        e2 /= norm2;
        double dot = e1.dot(e2);

        // boundary rays of the wedge: {x : x.dot(eq_i) = 0}
        Eigen::Vector2d eq1(dot, std::sqrt(std::max(0.0, 1.0 - dot * dot)));
        Eigen::Vector2d eq2(1.0, 0.0);

        Eigen::Vector2d x1(norm1, 0.0);
        Eigen::Vector2d x2 = eq1 * norm2;
        Eigen::Vector2d start1 = x1, start2 = x2;

        int pv1 = vert1, pv2 = vert2;
        int cur_face = face_neighbor(face, vert);
        for (int iter = 0; iter < 50 && cur_face >= 0; ++iter) {
            int pv3 = third_vertex(cur_face, pv1, pv2);
            if (pv3 < 0) break;

            Eigen::Vector3d f1 = mesh_.vertices[pv2] - mesh_.vertices[pv1];
            double n1 = f1.norm();
            f1 /= n1;
            Eigen::Vector3d f2 = mesh_.vertices[pv3] - mesh_.vertices[pv1];
            double n2 = f2.norm();
            f2 /= n2;
            double d = f1.dot(f2);
            // unfold pv3 into the plane: rotate (x2-x1) by -angle, scale to n2
            Eigen::Vector2d vv = (x2 - x1) * (n2 / n1);
            Eigen::Vector2d x = rotate2(vv, -std::acos(std::clamp(d, -1.0, 1.0))) + x1;

            auto crosses = [&x](const Eigen::Vector2d& from, const Eigen::Vector2d& eq) {
                double lambda = -from.dot(eq) / (x - from).dot(eq);
                return lambda >= 0.0 && lambda <= 1.0;
            };
            bool i11 = crosses(x1, eq1), i12 = crosses(x1, eq2);
            bool i21 = crosses(x2, eq1), i22 = crosses(x2, eq2);
            if (i11 && i12) {
                // still left of the wedge: unfold across [x, x1]
                cur_face = face_neighbor(cur_face, pv2);
                pv2 = pv3;
                x2 = x;
            } else if (i21 && i22) {
                cur_face = face_neighbor(cur_face, pv1);
                pv1 = pv3;
                x1 = x;
            } else {
                dist = x.norm();
                dot1 = x.dot(start1) / (dist * start1.norm());
                dot2 = x.dot(start2) / (dist * start2.norm());
                return pv3;
            }
        }
        return -1;
    }

    // Contribution of face f to the distance of vertex w. Only settled
    // vertices act as contributors.
    double face_update(int f, int w) {
        int v1 = -1, v2 = -1;
        for (int v : mesh_.triangles[f]) {
            if (v == w) continue;
            (v1 < 0 ? v1 : v2) = v;
        }
        if (dist_[v1] > dist_[v2]) std::swap(v1, v2);

        bool usable1 = state_[v1] == kDead;
        bool usable2 = state_[v2] == kDead;
        if (!usable1 && !usable2) return kInf;

        Eigen::Vector3d e1 = mesh_.vertices[v1] - mesh_.vertices[w];
        double b = e1.norm();
        Eigen::Vector3d e2 = mesh_.vertices[v2] - mesh_.vertices[w];
        double a = e2.norm();
        if (!usable1) return dist_[v2] + a;
        if (!usable2) return dist_[v1] + b;

        double d1 = dist_[v1], d2 = dist_[v2];
        if (a < kTiny || b < kTiny) return std::min(d1 + b, d2 + a);
        double dot = e1.dot(e2) / (a * b);
        if (dot < 0.0) {
            double c, dot1, dot2;
            int pv = unfold_triangle(f, w, v1, v2, c, dot1, dot2);
            if (pv >= 0 && state_[pv] != kFar) {
                double d3 = dist_[pv];
                return std::min(circular_update(d1, d3, c, b, dot1),
                                circular_update(d3, d2, a, c, dot2));
            }
        }
        return circular_update(d1, d2, a, b, dot);
    }

    const TriMesh& mesh_;
    std::vector<std::vector<int>> v_tris_;
    std::vector<std::vector<int>> v_nbrs_;
    std::vector<std::array<int, 3>> adj_;
    Eigen::VectorXd dist_;
    std::vector<uint8_t> state_;
    std::priority_queue<std::pair<double, int>, std::vector<std::pair<double, int>>,
                        std::greater<>>
        heap_;
};

}  // namespace

Eigen::Vector3d SurfacePoint::position(const TriMesh& m) const {
    if (triangle < 0 || triangle >= m.n_triangles())
        throw DomainError("surface point references an invalid triangle");
    const auto& t = m.triangles[triangle];
    return bary[0] * m.vertices[t[0]] + bary[1] * m.vertices[t[1]] + bary[2] * m.vertices[t[2]];
}

SurfacePoint SurfacePoint::at_vertex(const TriMesh& m, int vertex) {
    if (vertex < 0 || vertex >= m.n_vertices())
        throw DomainError("vertex index out of range");
    for (int t = 0; t < m.n_triangles(); ++t) {
        for (int i = 0; i < 3; ++i) {
            if (m.triangles[t][i] == vertex) {
                SurfacePoint sp;
                sp.triangle = t;
                sp.bary = Eigen::Vector3d::Zero();
                sp.bary[i] = 1.0;
                return sp;
            }
        }
    }
    throw DomainError("vertex is not referenced by any triangle");
}

SurfacePoint locate_on_surface(const SurfaceIndex& index, const Eigen::Vector3d& p) {
    SurfaceHit hit = index.closest(p);
    const TriMesh& m = index.mesh();
    const auto& t = m.triangles[hit.triangle];
    SurfacePoint sp;
    sp.triangle = hit.triangle;
    sp.bary = barycentric_clamped(hit.point, m.vertices[t[0]], m.vertices[t[1]],
                                  m.vertices[t[2]]);
    return sp;
}

DistanceField fast_marching_field(const TriMesh& mesh, int source_vertex) {
    if (mesh.empty()) throw DomainError("fast marching requires a non-empty mesh");
    DistanceField field;
    field.source = SurfacePoint::at_vertex(mesh, source_vertex);
    Marcher marcher(mesh);
    field.values = marcher.run({{source_vertex, 0.0}});
    return field;
}

DistanceField fast_marching_field(const TriMesh& mesh, const SurfacePoint& source) {
    if (mesh.empty()) throw DomainError("fast marching requires a non-empty mesh");
    if (source.triangle < 0 || source.triangle >= mesh.n_triangles())
        throw DomainError("fast marching source triangle out of range");
    Eigen::Vector3d p = source.position(mesh);
    std::vector<std::pair<int, double>> seeds;
    for (int i = 0; i < 3; ++i) {
        int v = mesh.triangles[source.triangle][i];
        seeds.push_back({v, (mesh.vertices[v] - p).norm()});
    }
    DistanceField field;
    field.source = source;
    Marcher marcher(mesh);
    field.values = marcher.run(seeds);
    return field;
}

}  // namespace craniomorph
