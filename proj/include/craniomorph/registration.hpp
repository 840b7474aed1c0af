#pragma once

#include <Eigen/Core>
#include <vector>

#include "craniomorph/mesh_distance.hpp"
#include "craniomorph/tri_mesh.hpp"

namespace craniomorph {

struct RegistrationParams {
    double init_radius = 50.0;    // mm; larger initial mean distance = not pre-aligned
    int similarity_iters = 50;    // stage-1 closest-point iterations
    int levels = 4;               // elastic coarse-to-fine levels
    double alpha_start = 100.0;   // smoothness weight at the coarsest level
    double alpha_end = 1.0;       // ... at the finest level
    int level_iters = 20;         // elastic iterations per level
    double outlier = 4.0;         // mm; beyond this a vertex leaves the data term
    double snap = 1.0;            // mm; final projection threshold
    double tol = 1e-6;            // relative objective improvement to declare convergence
};

struct CorrespondenceResult {
    TriMesh deformed_reference;       // reference topology, deformed onto the target
    DistanceStats forward_stats;      // deformed vertices -> target surface
    DistanceStats backward_stats;     // target vertices -> deformed surface
    bool converged = true;
    std::vector<int> outlier_vertices;          // flagged (beyond params.outlier)
    Eigen::Matrix4d similarity;                 // accumulated stage-1 transform
    std::vector<std::vector<double>> objective_trace;  // per level, per iteration

    int outlier_count() const { return static_cast<int>(outlier_vertices.size()); }
};

// Three-stage registration of a reference mesh onto a target surface:
// (1) similarity alignment by iterated closest-point with a closed-form
//     rotation/translation/scale fit;
// (2) coarse-to-fine elastic stage minimizing
//       sum_i ||(v_i + d_i) - closest_target(v_i + d_i)||^2
//         + alpha * sum_edges ||d_u - d_v||^2
//     with alpha stepping from alpha_start down to alpha_end over `levels`
//     (edges touching a boundary vertex get doubled stiffness);
// (3) projection of vertices onto the target where closer than params.snap.
CorrespondenceResult register_reference(const TriMesh& reference, const TriMesh& target,
                                        const RegistrationParams& params = {});

}  // namespace craniomorph
