#include "craniomorph/mesh_distance.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "craniomorph/error.hpp"

namespace craniomorph {

// Ericson, "Real-Time Collision Detection", 5.1.5.
Eigen::Vector3d closest_point_on_triangle(const Eigen::Vector3d& p, const Eigen::Vector3d& a,
                                          const Eigen::Vector3d& b, const Eigen::Vector3d& c) {
    Eigen::Vector3d ab = b - a, ac = c - a, ap = p - a;
    double d1 = ab.dot(ap), d2 = ac.dot(ap);
    if (d1 <= 0.0 && d2 <= 0.0) return a;

    Eigen::Vector3d bp = p - b;
    double d3 = ab.dot(bp), d4 = ac.dot(bp);
    if (d3 >= 0.0 && d4 <= d3) return b;

    double vc = d1 * d4 - d3 * d2;
    if (vc <= 0.0 && d1 >= 0.0 && d3 <= 0.0) {
        double v = d1 / (d1 - d3);
        return a + v * ab;
    }

    Eigen::Vector3d cp = p - c;
    double d5 = ab.dot(cp), d6 = ac.dot(cp);
    if (d6 >= 0.0 && d5 <= d6) return c;

    double vb = d5 * d2 - d1 * d6;
    if (vb <= 0.0 && d2 >= 0.0 && d6 <= 0.0) {
        double w = d2 / (d2 - d6);
        return a + w * ac;
    }

    double va = d3 * d6 - d5 * d4;
    if (va <= 0.0 && (d4 - d3) >= 0.0 && (d5 - d6) >= 0.0) {
        double w = (d4 - d3) / ((d4 - d3) + (d5 - d6));
        return b + w * (c - b);
    }

    double denom = 1.0 / (va + vb + vc);
    double v = vb * denom, w = vc * denom;
    return a + ab * v + ac * w;
}

double point_triangle_distance(const Eigen::Vector3d& p, const Eigen::Vector3d& a,
                               const Eigen::Vector3d& b, const Eigen::Vector3d& c) {
    return (p - closest_point_on_triangle(p, a, b, c)).norm();
}

Eigen::Vector3d barycentric_clamped(const Eigen::Vector3d& p, const Eigen::Vector3d& a,
                                    const Eigen::Vector3d& b, const Eigen::Vector3d& c) {
    Eigen::Vector3d ab = b - a, ac = c - a, ap = p - a;
    double d00 = ab.dot(ab), d01 = ab.dot(ac), d11 = ac.dot(ac);
    double d20 = ap.dot(ab), d21 = ap.dot(ac);
    double denom = d00 * d11 - d01 * d01;
    double v = 0.0, w = 0.0;
    if (std::abs(denom) > 1e-20) {
        v = (d11 * d20 - d01 * d21) / denom;
        w = (d00 * d21 - d01 * d20) / denom;
    }
    v = std::clamp(v, 0.0, 1.0);
    w = std::clamp(w, 0.0, 1.0);
    double u = 1.0 - v - w;
    if (u < 0.0) {
        double s = v + w;
        v /= s;
        w /= s;
        u = 0.0;
    }
    return {u, v, w};
}

SurfaceIndex::SurfaceIndex(const TriMesh& mesh) : mesh_(&mesh) {
    if (mesh.empty() || mesh.n_triangles() == 0)
        throw DomainError("SurfaceIndex: mesh has no triangles");
    order_.resize(mesh.n_triangles());
    std::iota(order_.begin(), order_.end(), 0);
    nodes_.reserve(2 * order_.size());
    build(order_, 0, static_cast<int>(order_.size()));
}

int SurfaceIndex::build(std::vector<int>& tris, int begin, int end) {
    Node n;
    n.lo = Eigen::Vector3d::Constant(std::numeric_limits<double>::infinity());
    n.hi = -n.lo;
    for (int i = begin; i < end; ++i) {
        const auto& f = mesh_->triangles[tris[i]];
        for (int k = 0; k < 3; ++k) {
            n.lo = n.lo.cwiseMin(mesh_->vertices[f[k]]);
            n.hi = n.hi.cwiseMax(mesh_->vertices[f[k]]);
        }
    }
    int idx = static_cast<int>(nodes_.size());
    nodes_.push_back(n);
    if (end - begin <= 4) {
        // keep leaf triangles in ascending index order for deterministic ties
        std::sort(tris.begin() + begin, tris.begin() + end);
        nodes_[idx].begin = begin;
        nodes_[idx].end = end;
        return idx;
    }
    Eigen::Vector3d ext = n.hi - n.lo;
    int axis = 0;
    if (ext.y() > ext.x()) axis = 1;
    if (ext.z() > ext[axis]) axis = 2;
    int mid = (begin + end) / 2;
    std::nth_element(tris.begin() + begin, tris.begin() + mid, tris.begin() + end,
                     [&](int t1, int t2) {
                         const auto& f1 = mesh_->triangles[t1];
                         const auto& f2 = mesh_->triangles[t2];
                         double c1 = 0.0, c2 = 0.0;
                         for (int k = 0; k < 3; ++k) {
                             c1 += mesh_->vertices[f1[k]][axis];
                             c2 += mesh_->vertices[f2[k]][axis];
                         }
                         if (c1 != c2) return c1 < c2;
                         return t1 < t2;  // deterministic order for equal centroids
                     });
    int l = build(tris, begin, mid);
    int r = build(tris, mid, end);
    nodes_[idx].left = l;
    nodes_[idx].right = r;
    nodes_[idx].begin = nodes_[idx].end = 0;
    return idx;
}

double SurfaceIndex::box_sq_dist(const Node& n, const Eigen::Vector3d& p) const {
    double s = 0.0;
    for (int k = 0; k < 3; ++k) {
        double d = 0.0;
        if (p[k] < n.lo[k]) d = n.lo[k] - p[k];
        else if (p[k] > n.hi[k]) d = p[k] - n.hi[k];
        s += d * d;
    }
    return s;
}

void SurfaceIndex::query(int node, const Eigen::Vector3d& p, SurfaceHit& best) const {
    const Node& n = nodes_[node];
    if (n.left < 0) {
        for (int i = n.begin; i < n.end; ++i) {
            int t = order_[i];
            const auto& f = mesh_->triangles[t];
            Eigen::Vector3d cp = closest_point_on_triangle(p, mesh_->vertices[f[0]],
                                                           mesh_->vertices[f[1]],
                                                           mesh_->vertices[f[2]]);
            double d2 = (p - cp).squaredNorm();
            double b2 = best.distance * best.distance;
            // strict improvement, or equal distance with lower triangle index
            if (best.triangle < 0 || d2 < b2 || (d2 == b2 && t < best.triangle)) {
                best.distance = std::sqrt(d2);
                best.triangle = t;
                best.point = cp;
            }
        }
        return;
    }
    double dl = box_sq_dist(nodes_[n.left], p);
    double dr = box_sq_dist(nodes_[n.right], p);
    int first = n.left, second = n.right;
    double dfirst = dl, dsecond = dr;
    if (dr < dl) {
        std::swap(first, second);
        std::swap(dfirst, dsecond);
    }
    double b2 = (best.triangle < 0) ? std::numeric_limits<double>::infinity()
                                    : best.distance * best.distance;
    if (dfirst <= b2) query(first, p, best);
    b2 = (best.triangle < 0) ? std::numeric_limits<double>::infinity()
                             : best.distance * best.distance;
    if (dsecond <= b2) query(second, p, best);  // prune only when strictly farther
}

SurfaceHit SurfaceIndex::closest(const Eigen::Vector3d& p) const {
    SurfaceHit best;
    best.distance = std::numeric_limits<double>::infinity();
    query(0, p, best);
    return best;
}

double point_to_surface_distance(const Eigen::Vector3d& p, const TriMesh& mesh) {
    if (mesh.empty() || mesh.n_triangles() == 0)
        throw DomainError("point_to_surface_distance: empty mesh");
    double best = std::numeric_limits<double>::infinity();
    for (const auto& f : mesh.triangles) {
        double d = point_triangle_distance(p, mesh.vertices[f[0]], mesh.vertices[f[1]],
                                           mesh.vertices[f[2]]);
        best = std::min(best, d);
    }
    return best;
}

DistanceStats make_distance_stats(std::vector<double> distances) {
    if (distances.empty()) throw DomainError("distance stats of empty set");
    DistanceStats s;
    s.distances = std::move(distances);
    const size_t n = s.distances.size();
    double sum = 0.0;
    s.max = 0.0;
    for (double d : s.distances) {
        sum += d;
        s.max = std::max(s.max, d);
    }
    s.mean = sum / static_cast<double>(n);
    double var = 0.0;
    for (double d : s.distances) var += (d - s.mean) * (d - s.mean);
    s.std = std::sqrt(var / static_cast<double>(n));
    std::vector<double> sorted = s.distances;
    std::sort(sorted.begin(), sorted.end());
    // middle order statistic; mean of the two middle values for even counts
    if (n % 2 == 1)
        s.median = sorted[n / 2];
    else
        s.median = 0.5 * (sorted[n / 2 - 1] + sorted[n / 2]);
    return s;
}

DistanceStats mesh_to_surface_stats(const TriMesh& source, const SurfaceIndex& target) {
    if (source.empty()) throw DomainError("mesh_to_surface_stats: empty source mesh");
    std::vector<double> d(source.vertices.size());
    for (size_t i = 0; i < source.vertices.size(); ++i)
        d[i] = target.distance(source.vertices[i]);
    return make_distance_stats(std::move(d));
}

DistanceStats mesh_to_surface_stats(const TriMesh& source, const TriMesh& target) {
    SurfaceIndex idx(target);
    return mesh_to_surface_stats(source, idx);
}

}  // namespace craniomorph
