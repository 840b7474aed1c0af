#include "craniomorph/registration.hpp"

#include <Eigen/Geometry>
#include <Eigen/Sparse>
#include <algorithm>
#include <cmath>
#include <limits>
#include <set>
#include <vector>

#include "craniomorph/error.hpp"

namespace craniomorph {

namespace {

Eigen::Matrix3Xd to_matrix(const std::vector<Eigen::Vector3d>& pts) {
    Eigen::Matrix3Xd m(3, pts.size());
    for (size_t i = 0; i < pts.size(); ++i) m.col(i) = pts[i];
    return m;
}

// graph Laplacian of the reference edges; edges touching a boundary vertex
// get doubled weight to stiffen the open rim
Eigen::SparseMatrix<double> edge_laplacian(const TriMesh& ref) {
    std::set<int> boundary;
    for (auto [a, b] : boundary_edges(ref)) {
        boundary.insert(a);
        boundary.insert(b);
    }
    std::vector<Eigen::Triplet<double>> trip;
    for (auto [a, b] : mesh_edges(ref)) {
        double w = (boundary.count(a) || boundary.count(b)) ? 2.0 : 1.0;
        trip.push_back({a, a, w});
        trip.push_back({b, b, w});
        trip.push_back({a, b, -w});
        trip.push_back({b, a, -w});
    }
    Eigen::SparseMatrix<double> L(ref.n_vertices(), ref.n_vertices());
    L.setFromTriplets(trip.begin(), trip.end());
    return L;
}

}  // namespace

CorrespondenceResult register_reference(const TriMesh& reference, const TriMesh& target,
                                        const RegistrationParams& params) {
    if (reference.empty() || reference.n_triangles() == 0)
        throw DomainError("register_reference: empty reference mesh");
    if (target.empty() || target.n_triangles() == 0)
        throw DomainError("register_reference: empty target mesh");

    const int n = reference.n_vertices();
    SurfaceIndex target_index(target);

    CorrespondenceResult result;
    result.deformed_reference = reference;
    result.similarity.setIdentity();
    auto& verts = result.deformed_reference.vertices;

    {
        double init_mean = 0.0;
        for (const auto& v : verts) init_mean += target_index.distance(v);
        init_mean /= n;
        if (init_mean > params.init_radius)
            throw DomainError("register_reference: meshes are not pre-aligned (mean distance " +
                              std::to_string(init_mean) + " mm exceeds init_radius)");
    }

    // ---- stage 1: similarity alignment -----------------------------------
    bool stage1_converged = false;
    double prev_obj = std::numeric_limits<double>::infinity();
    for (int it = 0; it < params.similarity_iters; ++it) {
        Eigen::Matrix3Xd src = to_matrix(verts);
        Eigen::Matrix3Xd dst(3, n);
        double obj = 0.0;
        for (int i = 0; i < n; ++i) {
            SurfaceHit hit = target_index.closest(verts[i]);
            dst.col(i) = hit.point;
            obj += hit.distance * hit.distance;
        }
        if (std::abs(prev_obj - obj) <= params.tol * std::max(prev_obj, 1e-30)) {
            stage1_converged = true;
            break;
        }
        prev_obj = obj;
        Eigen::Matrix4d T = Eigen::umeyama(src, dst, true);
        result.similarity = T * result.similarity;
        for (int i = 0; i < n; ++i)
            verts[i] = T.block<3, 3>(0, 0) * verts[i] + T.block<3, 1>(0, 3);
    }

    // ---- stage 2: coarse-to-fine elastic deformation ----------------------
    Eigen::SparseMatrix<double> L = edge_laplacian(reference);
    Eigen::MatrixX3d d = Eigen::MatrixX3d::Zero(n, 3);
    std::vector<Eigen::Vector3d> base = verts;  // positions after stage 1

    bool elastic_converged = true;
    for (int level = 0; level < params.levels; ++level) {
        double f = params.levels > 1 ? double(level) / (params.levels - 1) : 1.0;
        double alpha = params.alpha_start * std::pow(params.alpha_end / params.alpha_start, f);

        // freeze the inlier set for the level so the objective is monotone
        Eigen::VectorXd w(n);
        int inliers = 0;
        for (int i = 0; i < n; ++i) {
            Eigen::Vector3d p = base[i] + d.row(i).transpose();
            w[i] = target_index.distance(p) <= params.outlier ? 1.0 : 0.0;
            inliers += w[i] > 0.0;
        }
        if (inliers == 0)
            throw DomainError("register_reference: no overlap with target within outlier radius");

        Eigen::SparseMatrix<double> A = alpha * L;
        for (int i = 0; i < n; ++i) A.coeffRef(i, i) += w[i] + 1e-12;
        Eigen::SimplicialLDLT<Eigen::SparseMatrix<double>> solver(A);
        if (solver.info() != Eigen::Success)
            throw NumericalError("register_reference: elastic system factorization failed");

        std::vector<double> trace;
        bool level_done = false;
        double level_prev = std::numeric_limits<double>::infinity();
        for (int it = 0; it < params.level_iters; ++it) {
            Eigen::MatrixX3d rhs(n, 3);
            double data = 0.0;
            for (int i = 0; i < n; ++i) {
                Eigen::Vector3d p = base[i] + d.row(i).transpose();
                SurfaceHit hit = target_index.closest(p);
                rhs.row(i) = w[i] * (hit.point - base[i]).transpose();
                if (w[i] > 0.0) data += hit.distance * hit.distance;
            }
            double smooth = (L * d).cwiseProduct(d).sum();
            double obj = data + alpha * smooth;
            trace.push_back(obj);
            if (std::abs(level_prev - obj) <= params.tol * std::max(level_prev, 1e-30)) {
                level_done = true;
                break;
            }
            level_prev = obj;
            for (int c = 0; c < 3; ++c) d.col(c) = solver.solve(rhs.col(c));
        }
        if (!level_done) elastic_converged = false;
        result.objective_trace.push_back(std::move(trace));
    }
    for (int i = 0; i < n; ++i) verts[i] = base[i] + d.row(i).transpose();

    // ---- stage 3: snap onto the target surface ----------------------------
    for (int i = 0; i < n; ++i) {
        SurfaceHit hit = target_index.closest(verts[i]);
        if (hit.distance <= params.snap) verts[i] = hit.point;
        if (hit.distance > params.outlier) result.outlier_vertices.push_back(i);
    }

    result.converged = stage1_converged && elastic_converged;
    result.forward_stats = mesh_to_surface_stats(result.deformed_reference, target_index);
    SurfaceIndex deformed_index(result.deformed_reference);
    result.backward_stats = mesh_to_surface_stats(target, deformed_index);
    return result;
}

}  // namespace craniomorph
