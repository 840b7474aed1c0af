#include "craniomorph/lrr.hpp"

#include <Eigen/Eigenvalues>
#include <cmath>

#include "craniomorph/error.hpp"

namespace craniomorph {

Eigen::MatrixXd LrrModel::coefficient_matrix() const {
    return latent_vectors * face_loadings.transpose();
}

LrrModel fit_lrr(const ShapeTablePair& table, int r) {
    const int n = table.n(), p = table.p(), q = table.q();
    if (n < 2) throw DomainError("fit_lrr requires at least 2 entries");
    if (r < 1) throw DomainError("fit_lrr: component count must be >= 1");
    if (table.X.squaredNorm() <= 0.0)
        throw DomainError("fit_lrr: skull table has no variance");

    LrrModel model;
    model.x_template = table.x_template;
    model.y_template = table.y_template;
    model.skull_layout = table.skull_layout;
    model.face_layout = table.face_layout;

    Eigen::MatrixXd Xi = table.X;
    // Accumulated deflation map: X * N == Xi at every step. Sweeping each raw
    // skull part through N re-expresses the deflated-matrix score in terms of
    // the original X, so t_i = X v_i are the deflation scores — mutually
    // orthogonal by construction — and the per-direction normalization in the
    // coefficient sum is exact least squares on the extracted score subspace.
    // The swept vectors are normalized (the coefficient terms are insensitive
    // to their scale) but are NOT mutually orthogonal.
    Eigen::MatrixXd N = Eigen::MatrixXd::Identity(p, p);
    std::vector<Eigen::VectorXd> vs;
    for (int i = 0; i < r; ++i) {
        Eigen::MatrixXd Z(n, p + q);
        Z << Xi, table.Y;
        Eigen::MatrixXd gram = Z * Z.transpose();
        Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(gram);
        if (eig.info() != Eigen::Success)
            throw NumericalError("fit_lrr: eigendecomposition failed at component " +
                                 std::to_string(i + 1));
        double lambda = eig.eigenvalues()[n - 1];
        if (!(lambda > 0.0)) {
            model.truncated = true;
            break;
        }
        Eigen::VectorXd a = Z.transpose() * eig.eigenvectors().col(n - 1) / std::sqrt(lambda);
        Eigen::VectorXd v = N * a.head(p);
        double nv = v.norm();
        if (nv < 1e-10) {
            model.truncated = true;  // skull rank exhausted
            break;
        }
        v /= nv;

        Eigen::VectorXd t = table.X * v;  // score against the ORIGINAL table
        double tt = t.squaredNorm();
        if (!(tt > 0.0)) {
            model.truncated = true;
            break;
        }
        vs.push_back(v);
        Eigen::RowVectorXd load = t.transpose() * Xi / tt;
        Xi -= t * load;
        N -= v * load;
    }
    if (vs.empty()) throw DomainError("fit_lrr: no extractable components");

    model.r = static_cast<int>(vs.size());
    model.latent_vectors.resize(p, model.r);
    model.score_norms.resize(model.r);
    model.face_loadings.resize(q, model.r);
    for (int i = 0; i < model.r; ++i) {
        model.latent_vectors.col(i) = vs[i];
        Eigen::VectorXd t = table.X * vs[i];
        model.score_norms[i] = t.squaredNorm();
        model.face_loadings.col(i) = table.Y.transpose() * t / model.score_norms[i];
    }
    return model;
}

Eigen::VectorXd predict_centered(const LrrModel& model, const Eigen::VectorXd& x0, int r_use) {
    if (x0.size() != model.latent_vectors.rows())
        throw LayoutError("predict: skull vector dimension " + std::to_string(x0.size()) +
                          " != " + std::to_string(model.latent_vectors.rows()));
    if (r_use < 0 || r_use > model.r)
        throw DomainError("predict: r_use " + std::to_string(r_use) + " out of range");
    Eigen::VectorXd s = model.latent_vectors.leftCols(r_use).transpose() * x0;
    return model.face_loadings.leftCols(r_use) * s;
}

Prediction predict(const LrrModel& model, const LandmarkSet& skull) {
    Eigen::VectorXd x = flatten(skull, model.skull_layout);
    Eigen::VectorXd x0 = x - model.x_template;
    Prediction pred;
    pred.centered = predict_centered(model, x0, model.r);
    pred.positions = unflatten(pred.centered, model.y_template, model.face_layout);
    return pred;
}

}  // namespace craniomorph
