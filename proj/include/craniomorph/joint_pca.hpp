#pragma once

#include <Eigen/Core>
#include <vector>

#include "craniomorph/coordinate_layout.hpp"
#include "craniomorph/shape_table.hpp"

namespace craniomorph {

// Joint shape model: eigenpairs of the (p+q)x(p+q) scatter of Z = [X Y],
// computed through the n x n Gram matrix. Each column of `components` is a
// unit vector a_j = [v_j; w_j] pairing a skull mode with its face mode.
struct JointPcaModel {
    Eigen::VectorXd eigenvalues;  // non-increasing, > 1e-10 * largest
    Eigen::MatrixXd components;   // (p+q) x m, orthonormal columns
    int p = 0;
    int q = 0;
    Eigen::VectorXd x_template, y_template;
    CoordinateLayout skull_layout, face_layout;

    int count() const { return static_cast<int>(eigenvalues.size()); }
    Eigen::VectorXd skull_part(int j) const { return components.col(j).head(p); }
    Eigen::VectorXd face_part(int j) const { return components.col(j).tail(q); }
};

// Sign convention: the largest-magnitude entry of each component is positive.
// Throws DomainError when the data has no variance.
JointPcaModel fit_joint_pca(const ShapeTablePair& table);

struct FitWeights {
    Eigen::VectorXd b;
    double residual_norm = 0.0;
    std::vector<int> skipped;  // components whose skull part had zero norm
};

// Greedy sequential projections (order matters; NOT joint least squares):
//   x_0 = x0;  b_j = <x_{j-1}, v_j> / ||v_j||^2;  x_j = x_{j-1} - b_j v_j
// Components with ||v_j|| = 0 are skipped with weight 0 and recorded.
FitWeights best_fit_weights(const JointPcaModel& model, const Eigen::VectorXd& x0, int m);

// y_template + sum_j b_j w_j  (full, uncentered face vector)
Eigen::VectorXd reconstruct_face(const JointPcaModel& model, const FitWeights& weights);

}  // namespace craniomorph
