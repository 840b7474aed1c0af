#include "craniomorph/joint_pca.hpp"

#include <Eigen/Eigenvalues>
#include <cmath>

#include "craniomorph/error.hpp"

namespace craniomorph {

JointPcaModel fit_joint_pca(const ShapeTablePair& table) {
    const int n = table.n();
    if (n < 2) throw DomainError("fit_joint_pca requires at least 2 entries");

    Eigen::MatrixXd Z(n, table.p() + table.q());
    Z << table.X, table.Y;

    // eigenpairs of Z^T Z through the n x n Gram matrix Z Z^T
    Eigen::MatrixXd gram = Z * Z.transpose();
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(gram);
    if (eig.info() != Eigen::Success)
        throw NumericalError("fit_joint_pca: eigendecomposition failed");

    const Eigen::VectorXd& evals = eig.eigenvalues();  // ascending
    double lambda_max = evals[n - 1];
    if (!(lambda_max > 0.0)) throw DomainError("fit_joint_pca: data has zero variance");
    const double cutoff = 1e-10 * lambda_max;

    std::vector<int> keep;
    for (int i = n - 1; i >= 0; --i)
        if (evals[i] >= cutoff) keep.push_back(i);

    JointPcaModel model;
    model.p = table.p();
    model.q = table.q();
    model.x_template = table.x_template;
    model.y_template = table.y_template;
    model.skull_layout = table.skull_layout;
    model.face_layout = table.face_layout;
    model.eigenvalues.resize(keep.size());
    model.components.resize(table.p() + table.q(), keep.size());
    for (size_t j = 0; j < keep.size(); ++j) {
        double lambda = evals[keep[j]];
        model.eigenvalues[j] = lambda;
        Eigen::VectorXd a = Z.transpose() * eig.eigenvectors().col(keep[j]) / std::sqrt(lambda);
        int imax = 0;
        a.cwiseAbs().maxCoeff(&imax);
        if (a[imax] < 0.0) a = -a;
        model.components.col(j) = a;
    }
    return model;
}

FitWeights best_fit_weights(const JointPcaModel& model, const Eigen::VectorXd& x0, int m) {
    if (m < 0 || m > model.count())
        throw DomainError("best_fit_weights: component count " + std::to_string(m) +
                          " exceeds model size " + std::to_string(model.count()));
    if (x0.size() != model.p)
        throw LayoutError("best_fit_weights: skull vector dimension " +
                          std::to_string(x0.size()) + " != " + std::to_string(model.p));
    FitWeights out;
    out.b = Eigen::VectorXd::Zero(m);
    Eigen::VectorXd residual = x0;
    for (int j = 0; j < m; ++j) {
        Eigen::VectorXd v = model.skull_part(j);
        double nv2 = v.squaredNorm();
        if (nv2 < 1e-24) {
            out.skipped.push_back(j);
            continue;
        }
        out.b[j] = residual.dot(v) / nv2;
        residual -= out.b[j] * v;
    }
    out.residual_norm = residual.norm();
    return out;
}

Eigen::VectorXd reconstruct_face(const JointPcaModel& model, const FitWeights& weights) {
    if (weights.b.size() > model.count())
        throw DomainError("reconstruct_face: more weights than components");
    Eigen::VectorXd y = model.y_template;
    for (int j = 0; j < weights.b.size(); ++j) {
        if (weights.b[j] != 0.0) y += weights.b[j] * model.face_part(j);
    }
    return y;
}

}  // namespace craniomorph
