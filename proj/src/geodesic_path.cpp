#include "craniomorph/geodesic_path.hpp"

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>

#include "craniomorph/error.hpp"
#include "craniomorph/mesh_distance.hpp"

namespace craniomorph {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

std::string format_point(const Eigen::Vector3d& p) {
    std::ostringstream os;
    os << "(" << p.x() << ", " << p.y() << ", " << p.z() << ")";
    return os.str();
}

// Walks downhill through the piecewise-linear field one triangle at a time.
class Backtracer {
public:
    Backtracer(const TriMesh& mesh, const DistanceField& field)
        : mesh_(mesh),
          field_(field.values),
          source_(field.source),
          v_tris_(vertex_triangles(mesh)),
          adj_(triangle_adjacency(mesh)) {}

    std::vector<Eigen::Vector3d> trace(const SurfacePoint& target) {
        const auto& tri = mesh_.triangles[target.triangle];
        for (int k = 0; k < 3; ++k) {
            if (!std::isfinite(field_[tri[k]]))
                throw DomainError("geodesic target is not reachable from the source");
        }
        waypoints_.clear();

        face_ = target.triangle;
        bary_ = target.bary;
        at_vertex_ = vertex_of(target);
        push_waypoint(position());

        source_pos_ = source_.position(mesh_);
        const long max_steps = 10L * std::max(1, mesh_.n_triangles()) + 100;
        for (long step = 0; step < max_steps; ++step) {
            if (finished()) return waypoints_;
            if (at_vertex_ >= 0)
                step_from_vertex();
            else
                step_in_face();
        }
        throw NumericalError("geodesic descent failed to terminate near " +
                             format_point(position()));
    }

private:
    // --- state ------------------------------------------------------------
    int face_ = -1;             // current triangle
    Eigen::Vector3d bary_;      // barycentric position inside face_
    int at_vertex_ = -1;        // >= 0 when sitting exactly on that vertex
    std::vector<Eigen::Vector3d> waypoints_;
    Eigen::Vector3d source_pos_;

    const TriMesh& mesh_;
    const Eigen::VectorXd& field_;
    SurfacePoint source_;
    std::vector<std::vector<int>> v_tris_;
    std::vector<std::array<int, 3>> adj_;

    Eigen::Vector3d position() const {
        if (at_vertex_ >= 0) return mesh_.vertices[at_vertex_];
        const auto& t = mesh_.triangles[face_];
        return bary_[0] * mesh_.vertices[t[0]] + bary_[1] * mesh_.vertices[t[1]] +
               bary_[2] * mesh_.vertices[t[2]];
    }

    void push_waypoint(const Eigen::Vector3d& p) {
        if (!waypoints_.empty() && (waypoints_.back() - p).norm() < 1e-12) return;
        waypoints_.push_back(p);
    }

    int vertex_of(const SurfacePoint& sp) const {
        const auto& t = mesh_.triangles[sp.triangle];
        for (int k = 0; k < 3; ++k)
            if (sp.bary[k] > 1.0 - 1e-12) return t[k];
        return -1;
    }

    bool source_touches(int face) const {
        if (face == source_.triangle) return true;
        return false;
    }

    bool finished() {
        if (at_vertex_ >= 0) {
            if (field_[at_vertex_] <= 0.0) return true;  // vertex source reached
            const auto& st = mesh_.triangles[source_.triangle];
            for (int k = 0; k < 3; ++k) {
                if (st[k] == at_vertex_) {
                    push_waypoint(source_pos_);
                    return true;
                }
            }
            return false;
        }
        if (source_touches(face_)) {
            push_waypoint(source_pos_);
            return true;
        }
        return false;
    }

    // Steepest-descent direction of the linear interpolant on face f,
    // in-plane, unnormalized. Returns false if the field is flat on f.
    bool descent_direction(int f, Eigen::Vector3d& dir) const {
        const auto& t = mesh_.triangles[f];
        const Eigen::Vector3d& A = mesh_.vertices[t[0]];
        const Eigen::Vector3d& B = mesh_.vertices[t[1]];
        const Eigen::Vector3d& C = mesh_.vertices[t[2]];
        double dA = field_[t[0]], dB = field_[t[1]], dC = field_[t[2]];
        if (!std::isfinite(dA) || !std::isfinite(dB) || !std::isfinite(dC)) return false;

        Eigen::Vector3d u = B - A;
        double lu = u.norm();
        if (lu < 1e-15) return false;
        u /= lu;
        Eigen::Vector3d n = (B - A).cross(C - A);
        double ln = n.norm();
        if (ln < 1e-15) return false;
        n /= ln;
        Eigen::Vector3d w = n.cross(u);

        double cx = (C - A).dot(u), cy = (C - A).dot(w);
        if (std::abs(cy) < 1e-15) return false;
        double gx = (dB - dA) / lu;
        double gy = (dC - dA - gx * cx) / cy;
        dir = -(gx * u + gy * w);
        return dir.norm() > 1e-12;
    }

    // true if `dir` (in the plane of f) points into f from vertex v
    bool points_into_face(int f, int v, const Eigen::Vector3d& dir) const {
        const auto& t = mesh_.triangles[f];
        int i = 0;
        while (t[i] != v) ++i;
        const Eigen::Vector3d& P = mesh_.vertices[v];
        Eigen::Vector3d e1 = mesh_.vertices[t[(i + 1) % 3]] - P;
        Eigen::Vector3d e2 = mesh_.vertices[t[(i + 2) % 3]] - P;
        // solve dir ~= alpha e1 + beta e2 (least squares in-plane)
        Eigen::Matrix2d G;
        G << e1.dot(e1), e1.dot(e2), e1.dot(e2), e2.dot(e2);
        Eigen::Vector2d rhs(e1.dot(dir), e2.dot(dir));
        double det = G(0, 0) * G(1, 1) - G(0, 1) * G(1, 0);
        if (std::abs(det) < 1e-20) return false;
        Eigen::Vector2d ab = G.inverse() * rhs;
        double scale = ab.cwiseAbs().maxCoeff();
        if (scale <= 0.0) return false;
        return ab[0] >= -1e-9 * scale && ab[1] >= -1e-9 * scale;
    }

    double interp_value() const {
        if (at_vertex_ >= 0) return field_[at_vertex_];
        const auto& t = mesh_.triangles[face_];
        return bary_[0] * field_[t[0]] + bary_[1] * field_[t[1]] + bary_[2] * field_[t[2]];
    }

    void stagnation() const {
        throw NumericalError("geodesic descent stagnated at " + format_point(position()) +
                             " (field value " + std::to_string(interp_value()) + ")");
    }

    // Hop to the lowest-valued neighbor vertex; last-resort discrete step.
    void vertex_fallback(int v) {
        int best = -1;
        double bestd = field_[v];
        for (int f : v_tris_[v]) {
            for (int w : mesh_.triangles[f]) {
                if (w != v && field_[w] < bestd) {
                    bestd = field_[w];
                    best = w;
                }
            }
        }
        if (best < 0) stagnation();
        at_vertex_ = best;
        face_ = v_tris_[best].front();
        push_waypoint(mesh_.vertices[best]);
    }

    void step_from_vertex() {
        int v = at_vertex_;
        int chosen = -1;
        Eigen::Vector3d chosen_dir;
        for (int f : v_tris_[v]) {
            Eigen::Vector3d dir;
            if (!descent_direction(f, dir)) continue;
            if (points_into_face(f, v, dir)) {
                chosen = f;
                chosen_dir = dir;
                break;  // v_tris_ is in ascending face order: deterministic
            }
        }
        if (chosen < 0) {
            vertex_fallback(v);
            return;
        }
        face_ = chosen;
        const auto& t = mesh_.triangles[face_];
        bary_ = Eigen::Vector3d::Zero();
        for (int k = 0; k < 3; ++k)
            if (t[k] == v) bary_[k] = 1.0;
        at_vertex_ = -1;
        march(chosen_dir);
    }

    void step_in_face() {
        Eigen::Vector3d dir;
        if (!descent_direction(face_, dir)) {
            // flat field: drop to the lowest corner if that helps
            const auto& t = mesh_.triangles[face_];
            int best = 0;
            for (int k = 1; k < 3; ++k)
                if (field_[t[k]] < field_[t[best]]) best = k;
            if (field_[t[best]] >= interp_value() - 1e-15) stagnation();
            at_vertex_ = t[best];
            push_waypoint(mesh_.vertices[at_vertex_]);
            return;
        }
        march(dir);
    }

    // Advance inside face_ along dir until an edge is hit, then cross it.
    void march(const Eigen::Vector3d& dir) {
        const auto& t = mesh_.triangles[face_];
        const Eigen::Vector3d& A = mesh_.vertices[t[0]];
        const Eigen::Vector3d& B = mesh_.vertices[t[1]];
        const Eigen::Vector3d& C = mesh_.vertices[t[2]];
        Eigen::Vector3d p = position();

        // barycentric rate of change along dir
        Eigen::Vector3d b0 = barycentric_affine(p, A, B, C);
        Eigen::Vector3d b1 = barycentric_affine(p + dir, A, B, C);
        Eigen::Vector3d eta = b1 - b0;

        int exit = -1;
        double s = kInf;
        for (int k = 0; k < 3; ++k) {
            if (eta[k] < -1e-15) {
                double sk = -bary_[k] / eta[k];
                if (sk < s) {  // ties keep the earliest k: deterministic
                    s = sk;
                    exit = k;
                }
            }
        }
        if (exit < 0) stagnation();

        Eigen::Vector3d nb = bary_ + s * eta;
        nb[exit] = 0.0;
        for (int k = 0; k < 3; ++k) nb[k] = std::max(0.0, nb[k]);
        double sum = nb.sum();
        if (sum < 1e-15) stagnation();
        nb /= sum;

        // landed on a vertex?
        for (int k = 0; k < 3; ++k) {
            if (nb[k] > 1.0 - 1e-9) {
                at_vertex_ = t[k];
                push_waypoint(mesh_.vertices[at_vertex_]);
                return;
            }
        }

        bary_ = nb;
        Eigen::Vector3d q = position();
        push_waypoint(q);

        int nbr = adj_[face_][exit];
        if (nbr < 0) {
            // boundary: slide to the lower-valued endpoint of the edge
            int a = t[(exit + 1) % 3], b = t[(exit + 2) % 3];
            int lower = field_[a] <= field_[b] ? a : b;
            if (field_[lower] >= interp_value() - 1e-15) stagnation();
            at_vertex_ = lower;
            push_waypoint(mesh_.vertices[lower]);
            return;
        }

        // enter the neighbor
        const auto& tn = mesh_.triangles[nbr];
        face_ = nbr;
        bary_ = barycentric_clamped(q, mesh_.vertices[tn[0]], mesh_.vertices[tn[1]],
                                    mesh_.vertices[tn[2]]);
        at_vertex_ = -1;

        // If the neighbor's descent points back out through the shared edge
        // the trajectory lies in a valley along that edge: slide to the lower
        // endpoint instead of ping-ponging between the two faces.
        int ea = t[(exit + 1) % 3], eb = t[(exit + 2) % 3];
        Eigen::Vector3d ndir;
        if (!descent_direction(nbr, ndir)) return;  // flat: handled next step
        int opp = -1;
        for (int v : tn)
            if (v != ea && v != eb) opp = v;
        Eigen::Vector3d edir = (mesh_.vertices[eb] - mesh_.vertices[ea]).normalized();
        Eigen::Vector3d oa = mesh_.vertices[opp] - mesh_.vertices[ea];
        Eigen::Vector3d inward = oa - oa.dot(edir) * edir;  // edge -> interior of nbr
        if (ndir.dot(inward) <= 1e-12 * ndir.norm() * inward.norm()) {
            int lower = field_[ea] <= field_[eb] ? ea : eb;
            if (field_[lower] >= interp_value() - 1e-15) stagnation();
            at_vertex_ = lower;
            push_waypoint(mesh_.vertices[lower]);
        }
    }

    static Eigen::Vector3d barycentric_affine(const Eigen::Vector3d& p, const Eigen::Vector3d& a,
                                              const Eigen::Vector3d& b,
                                              const Eigen::Vector3d& c) {
        Eigen::Vector3d ab = b - a, ac = c - a, ap = p - a;
        double d00 = ab.dot(ab), d01 = ab.dot(ac), d11 = ac.dot(ac);
        double d20 = ap.dot(ab), d21 = ap.dot(ac);
        double denom = d00 * d11 - d01 * d01;
        double v = (d11 * d20 - d01 * d21) / denom;
        double w = (d00 * d21 - d01 * d20) / denom;
        return {1.0 - v - w, v, w};
    }
};

}  // namespace

GeodesicPath geodesic_path(const TriMesh& mesh, const DistanceField& field,
                           const SurfacePoint& target) {
    if (mesh.empty()) throw DomainError("geodesic_path: empty mesh");
    if (field.values.size() != mesh.n_vertices())
        throw DomainError("geodesic_path: field size does not match mesh");
    if (target.triangle < 0 || target.triangle >= mesh.n_triangles())
        throw DomainError("geodesic_path: target triangle out of range");

    GeodesicPath path;
    Eigen::Vector3d tp = target.position(mesh);
    Eigen::Vector3d sp = field.source.position(mesh);
    if ((tp - sp).norm() < 1e-12) {
        path.waypoints = {tp};
        path.length = 0.0;
        return path;
    }

    Backtracer tracer(mesh, field);
    path.waypoints = tracer.trace(target);
    path.length = 0.0;
    for (size_t i = 1; i < path.waypoints.size(); ++i)
        path.length += (path.waypoints[i] - path.waypoints[i - 1]).norm();
    return path;
}

Eigen::Vector3d geodesic_midpoint(const GeodesicPath& path) {
    if (path.waypoints.empty() || path.length <= 0.0)
        throw DomainError("geodesic midpoint of a zero-length path");
    double half = 0.5 * path.length;
    double acc = 0.0;
    for (size_t i = 1; i < path.waypoints.size(); ++i) {
        double seg = (path.waypoints[i] - path.waypoints[i - 1]).norm();
        if (acc + seg >= half) {
            double t = seg > 0.0 ? (half - acc) / seg : 0.0;
            return path.waypoints[i - 1] + t * (path.waypoints[i] - path.waypoints[i - 1]);
        }
        acc += seg;
    }
    return path.waypoints.back();
}

}  // namespace craniomorph
