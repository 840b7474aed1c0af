#include "craniomorph/symmetry.hpp"

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <cstring>
#include <map>

#include "craniomorph/error.hpp"

namespace craniomorph {

Plane fit_symmetry_plane(const std::vector<Eigen::Vector3d>& midpoints) {
    if (midpoints.size() < 3) throw DomainError("plane fit needs at least 3 points");
    Eigen::Vector3d mean = Eigen::Vector3d::Zero();
    for (const auto& p : midpoints) mean += p;
    mean /= static_cast<double>(midpoints.size());
    Eigen::Matrix3d cov = Eigen::Matrix3d::Zero();
    for (const auto& p : midpoints) {
        Eigen::Vector3d d = p - mean;
        cov += d * d.transpose();
    }
    Eigen::SelfAdjointEigenSolver<Eigen::Matrix3d> eig(cov);
    // smallest eigenvalue first; the middle one must be positive or the
    // points are (numerically) collinear and the plane is undetermined
    if (eig.eigenvalues()(1) <= 1e-12 * std::max(1.0, eig.eigenvalues()(2)))
        throw DomainError("plane fit: points are collinear");
    Plane pl;
    pl.normal = eig.eigenvectors().col(0).normalized();
    // deterministic sign: largest-magnitude normal entry positive
    int imax = 0;
    for (int k = 1; k < 3; ++k)
        if (std::abs(pl.normal[k]) > std::abs(pl.normal[imax])) imax = k;
    if (pl.normal[imax] < 0) pl.normal = -pl.normal;
    pl.offset = -pl.normal.dot(mean);
    return pl;
}

double plane_residual_sum_sq(const Plane& pl, const std::vector<Eigen::Vector3d>& pts) {
    double s = 0.0;
    for (const auto& p : pts) {
        double d = pl.signed_distance(p);
        s += d * d;
    }
    return s;
}

Eigen::Matrix3d plane_frame_rotation(const Plane& pl) {
    Eigen::Vector3d n = pl.normal;
    // tangent from the world axis least aligned with the normal
    int imin = 0;
    for (int k = 1; k < 3; ++k)
        if (std::abs(n[k]) < std::abs(n[imin])) imin = k;
    Eigen::Vector3d t1 = n.cross(Eigen::Vector3d::Unit(imin)).normalized();
    Eigen::Vector3d t2 = n.cross(t1);
    Eigen::Matrix3d R;
    R.row(0) = n;
    R.row(1) = t1;
    R.row(2) = t2;
    return R;
}

Eigen::Vector3d to_plane_frame(const Plane& pl, const Eigen::Vector3d& p) {
    Eigen::Vector3d x0 = -pl.offset * pl.normal;  // point of the plane nearest the origin
    return plane_frame_rotation(pl) * (p - x0);
}

namespace {

std::string strip_side_suffix(const std::string& id) {
    for (const char* suf : {"_L", "_R", "_l", "_r"}) {
        size_t n = id.size(), m = std::strlen(suf);
        if (n > m && id.compare(n - m, m, suf) == 0) return id.substr(0, n - m);
    }
    return id;
}

}  // namespace

std::pair<TriMesh, LandmarkSet> split_half(const TriMesh& mesh, const Plane& plane, Side side,
                                           const LandmarkSet& landmarks) {
    const double mirror = (side == Side::Left) ? -1.0 : 1.0;
    // transform all vertices into the plane frame; mirror left so the kept
    // half always lies in x >= 0
    std::vector<Eigen::Vector3d> fv(mesh.vertices.size());
    for (size_t i = 0; i < mesh.vertices.size(); ++i) {
        fv[i] = to_plane_frame(plane, mesh.vertices[i]);
        fv[i].x() *= mirror;
    }

    TriMesh out;
    std::vector<int> remap(mesh.vertices.size(), -1);
    auto keep_vertex = [&](int i) {
        if (remap[i] < 0) {
            remap[i] = out.n_vertices();
            out.vertices.push_back(fv[i]);
        }
        return remap[i];
    };
    // one welded cut vertex per crossing edge
    std::map<std::pair<int, int>, int> cut;
    auto cut_vertex = [&](int a, int b) {
        auto key = std::minmax(a, b);
        auto it = cut.find(key);
        if (it != cut.end()) return it->second;
        double xa = fv[a].x(), xb = fv[b].x();
        double t = xa / (xa - xb);  // only called when signs differ strictly
        Eigen::Vector3d p = fv[a] + t * (fv[b] - fv[a]);
        p.x() = 0.0;  // exact on the cut
        int idx = out.n_vertices();
        out.vertices.push_back(p);
        cut.emplace(key, idx);
        return idx;
    };

    const bool flip = (side == Side::Left);  // mirroring reverses orientation
    auto emit = [&](int a, int b, int c) {
        if (flip) std::swap(b, c);
        out.triangles.push_back({a, b, c});
    };

    for (const auto& f : mesh.triangles) {
        int idx[3] = {f[0], f[1], f[2]};
        double x[3];
        int n_pos = 0, n_neg = 0;
        for (int k = 0; k < 3; ++k) {
            x[k] = fv[idx[k]].x();
            if (x[k] > 0) ++n_pos;
            else if (x[k] < 0) ++n_neg;
        }
        if (n_neg == 0) {
            // entirely on the kept side (on-plane vertices included)
            emit(keep_vertex(idx[0]), keep_vertex(idx[1]), keep_vertex(idx[2]));
            continue;
        }
        if (n_pos == 0) continue;  // entirely discarded
        // straddling: clip polygon against x >= 0
        std::vector<int> poly;
        for (int k = 0; k < 3; ++k) {
            int a = idx[k], b = idx[(k + 1) % 3];
            if (x[k] >= 0) poly.push_back(keep_vertex(a));
            if ((x[k] > 0 && fv[b].x() < 0) || (x[k] < 0 && fv[b].x() > 0))
                poly.push_back(cut_vertex(a, b));
        }
        for (size_t k = 1; k + 1 < poly.size(); ++k) emit(poly[0], poly[k], poly[k + 1]);
    }
    if (out.triangles.empty()) throw DomainError("split_half: mesh entirely on the other side");
    validate_and_repair(out);

    LandmarkSet lm_out;
    for (const auto& lm : landmarks.points) {
        Landmark l = lm;
        l.position = to_plane_frame(plane, lm.position);
        l.position.x() *= mirror;
        if (lm.midplane) {
            l.position.x() = 0.0;  // exact projection
        } else {
            if (l.position.x() < 0) continue;  // other side's lateral landmark
            l.id = strip_side_suffix(l.id);
        }
        lm_out.points.push_back(l);
    }
    // connectivity survives only where every referenced id survived
    auto has = [&](const std::string& id) { return lm_out.find(id) >= 0; };
    for (const auto& tri : landmarks.connectivity) {
        std::array<std::string, 3> t;
        for (int k = 0; k < 3; ++k) {
            int src = landmarks.find(tri[k]);
            t[k] = (src >= 0 && !landmarks.points[src].midplane) ? strip_side_suffix(tri[k])
                                                                 : tri[k];
        }
        if (has(t[0]) && has(t[1]) && has(t[2])) lm_out.connectivity.push_back(t);
    }
    lm_out.validate();
    return {std::move(out), std::move(lm_out)};
}

}  // namespace craniomorph
