#pragma once

#include <Eigen/Core>
#include <vector>

#include "craniomorph/coordinate_layout.hpp"
#include "craniomorph/landmarks.hpp"
#include "craniomorph/shape_table.hpp"

namespace craniomorph {

// Latent-vector regression model. The coefficient matrix is kept factored:
//   B = latent_vectors * face_loadings^T                (p x q)
// with face_loadings.col(i) = Y^T X v_i / score_norm_i. The factored form is
// exact and keeps model files small at benchmark dimensions.
struct LrrModel {
    Eigen::MatrixXd latent_vectors;  // p x r, unit columns; scores X v_i are
                                     // mutually orthogonal (the columns
                                     // themselves are oblique)
    Eigen::VectorXd score_norms;     // r, strictly positive: v_i^T (X^T X) v_i
    Eigen::MatrixXd face_loadings;   // q x r
    Eigen::VectorXd x_template, y_template;
    CoordinateLayout skull_layout, face_layout;
    int r = 0;
    bool truncated = false;  // requested more components than the data's rank

    Eigen::MatrixXd coefficient_matrix() const;  // dense p x q B
};

// Iterative extraction: for i = 1..r take the dominant joint eigenvector of
// [X_i Y] (Gram trick), keep its skull part, sweep it through the accumulated
// deflation map (an oblique Gram-Schmidt against the previous latent vectors
// that keeps successive scores mutually orthogonal), normalize; score with
// the ORIGINAL X and deflate X_{i+1} = X_i - t (t^T X_i)/(t^T t). Stops early
// (truncated=true) when the post-sweep norm drops below 1e-10.
LrrModel fit_lrr(const ShapeTablePair& table, int r);

struct Prediction {
    Eigen::VectorXd centered;                 // predicted centered face vector
    std::vector<Eigen::Vector3d> positions;   // with template added
};

Prediction predict(const LrrModel& model, const LandmarkSet& skull);

// centered-in, centered-out core; r_use <= model.r truncates the model
// (identical to fitting with fewer components, by greedy nesting)
Eigen::VectorXd predict_centered(const LrrModel& model, const Eigen::VectorXd& x0, int r_use);

}  // namespace craniomorph
