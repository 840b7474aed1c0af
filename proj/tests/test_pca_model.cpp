#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <Eigen/Core>
#include <Eigen/Eigenvalues>
#include <filesystem>
#include <fstream>
#include <random>

#include "craniomorph/error.hpp"
#include "craniomorph/joint_pca.hpp"
#include "craniomorph/model_io.hpp"
#include "craniomorph/shape_table.hpp"

using namespace craniomorph;

namespace {

std::mt19937 gen(424242);

Eigen::MatrixXd randn(int rows, int cols) {
    std::normal_distribution<double> g;
    Eigen::MatrixXd m(rows, cols);
    for (int i = 0; i < rows; ++i)
        for (int j = 0; j < cols; ++j) m(i, j) = g(gen);
    return m;
}

CoordinateLayout lateral_layout(const char* prefix, int points) {
    CoordinateLayout layout;
    for (int i = 0; i < points; ++i)
        layout.entries.push_back({prefix + std::to_string(i), false});
    return layout;
}

// centered random table; p and q must be multiples of 3
ShapeTablePair random_table(int n, int p, int q) {
    ShapeTablePair t;
    t.X = randn(n, p);
    t.Y = randn(n, q);
    t.X.rowwise() -= t.X.colwise().mean();
    t.Y.rowwise() -= t.Y.colwise().mean();
    t.x_template = randn(p, 1);
    t.y_template = randn(q, 1);
    t.skull_layout = lateral_layout("s", p / 3);
    t.face_layout = lateral_layout("v", q / 3);
    return t;
}

// Frozen reference: greedy sequential projections, two lines per component.
Eigen::VectorXd greedy_reference(const JointPcaModel& model, Eigen::VectorXd r, int m,
                                 double* residual = nullptr) {
    Eigen::VectorXd b = Eigen::VectorXd::Zero(m);
    for (int j = 0; j < m; ++j) {
        Eigen::VectorXd v = model.components.col(j).head(model.p);
        if (v.squaredNorm() < 1e-24) continue;
        b[j] = r.dot(v) / v.squaredNorm();
        r -= b[j] * v;
    }
    if (residual) *residual = r.norm();
    return b;
}

}  // namespace

TEST_CASE("joint pca matches a dense eigensolver") {
    int n = 8, p = 6, q = 9;
    ShapeTablePair table = random_table(n, p, q);
    JointPcaModel model = fit_joint_pca(table);

    // dense oracle on the full (p+q) x (p+q) scatter
    Eigen::MatrixXd Z(n, p + q);
    Z << table.X, table.Y;
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> dense(Z.transpose() * Z);
    REQUIRE(dense.info() == Eigen::Success);

    REQUIRE(model.count() == n - 1);  // centering removes one dimension
    for (int j = 0; j < model.count(); ++j) {
        double lambda = dense.eigenvalues()[p + q - 1 - j];  // descending
        CHECK(model.eigenvalues[j] == doctest::Approx(lambda).epsilon(1e-9));
        // same eigenspace, up to sign
        Eigen::VectorXd d = dense.eigenvectors().col(p + q - 1 - j);
        CHECK(std::abs(model.components.col(j).dot(d)) == doctest::Approx(1.0).epsilon(1e-8));
    }

    SUBCASE("components are orthonormal, eigenvalues non-increasing") {
        Eigen::MatrixXd gram = model.components.transpose() * model.components;
        CHECK((gram - Eigen::MatrixXd::Identity(model.count(), model.count())).norm() < 1e-10);
        for (int j = 1; j < model.count(); ++j)
            CHECK(model.eigenvalues[j] <= model.eigenvalues[j - 1] + 1e-12);
        for (int j = 0; j < model.count(); ++j)
            CHECK(model.eigenvalues[j] > 1e-10 * model.eigenvalues[0]);
    }
    SUBCASE("sign convention: largest-magnitude entry positive") {
        for (int j = 0; j < model.count(); ++j) {
            int imax = 0;
            model.components.col(j).cwiseAbs().maxCoeff(&imax);
            CHECK(model.components.col(j)[imax] > 0.0);
        }
    }
    SUBCASE("skull and face parts concatenate to the component") {
        for (int j = 0; j < model.count(); ++j) {
            Eigen::VectorXd cat(p + q);
            cat << model.skull_part(j), model.face_part(j);
            CHECK(cat == model.components.col(j));
        }
    }
    SUBCASE("fit is deterministic") {
        JointPcaModel again = fit_joint_pca(table);
        CHECK(again.eigenvalues == model.eigenvalues);
        CHECK(again.components == model.components);
    }
}

TEST_CASE("low-rank data yields a low-rank model") {
    int n = 10, k = 2, p = 6, q = 9;
    Eigen::MatrixXd B = randn(n, k), V = randn(k, p), W = randn(k, q);
    ShapeTablePair t = random_table(n, p, q);
    t.X = B * V;
    t.Y = B * W;
    t.X.rowwise() -= t.X.colwise().mean();
    t.Y.rowwise() -= t.Y.colwise().mean();
    JointPcaModel model = fit_joint_pca(t);
    CHECK(model.count() == k);

    ShapeTablePair zero = t;
    zero.X.setZero();
    zero.Y.setZero();
    CHECK_THROWS_AS(fit_joint_pca(zero), DomainError);
}

TEST_CASE("greedy weights match the frozen reference on random cases") {
    for (int trial = 0; trial < 100; ++trial) {
        int n = 5 + trial % 7, p = 3 * (2 + trial % 3), q = 3 * (3 + trial % 2);
        ShapeTablePair table = random_table(n, p, q);
        JointPcaModel model = fit_joint_pca(table);
        Eigen::VectorXd x0 = randn(p, 1);
        int m = 1 + trial % model.count();

        double ref_res = 0.0;
        Eigen::VectorXd ref = greedy_reference(model, x0, m, &ref_res);
        FitWeights got = best_fit_weights(model, x0, m);
        REQUIRE(got.b.size() == m);
        CHECK((got.b - ref).cwiseAbs().maxCoeff() < 1e-10);
        CHECK(got.residual_norm == doctest::Approx(ref_res).epsilon(1e-10));
        CHECK(got.skipped.empty());
    }
}

TEST_CASE("greedy weights are order-dependent projections, not least squares") {
    // two non-orthogonal skull parts: the greedy result must differ from the
    // joint least-squares solution whenever the order matters
    JointPcaModel model;
    model.p = 2;
    model.q = 1;
    model.components.resize(3, 2);
    model.components.col(0) << 1.0, 0.0, 0.0;
    model.components.col(1) << std::sqrt(0.5), std::sqrt(0.5), 0.0;
    model.eigenvalues = Eigen::Vector2d(2.0, 1.0);
    model.y_template = Eigen::VectorXd::Zero(1);

    Eigen::VectorXd x0(2);
    x0 << 0.0, 1.0;
    FitWeights w = best_fit_weights(model, x0, 2);
    // projection on e1 gives 0, then projection on the diagonal gives 1/sqrt(2)
    CHECK(w.b[0] == doctest::Approx(0.0));
    CHECK(w.b[1] == doctest::Approx(std::sqrt(0.5)).epsilon(1e-12));
    // least squares would solve exactly (b = [-1, sqrt(2)]) with zero residual
    CHECK(w.residual_norm > 0.1);
}

TEST_CASE("zero skull parts are skipped and recorded") {
    JointPcaModel model;
    model.p = 3;
    model.q = 2;
    model.components.resize(5, 3);
    model.components.col(0) << 1, 0, 0, 0.0, 0.0;
    model.components.col(1) << 0, 0, 0, 1.0, 0.0;  // face-only component
    model.components.col(2) << 0, 1, 0, 0.0, 0.0;
    model.eigenvalues = Eigen::Vector3d(3.0, 2.0, 1.0);
    model.y_template = Eigen::VectorXd::Zero(2);

    Eigen::VectorXd x0(3);
    x0 << 2.0, 3.0, 0.0;
    FitWeights w = best_fit_weights(model, x0, 3);
    CHECK(w.b[0] == doctest::Approx(2.0));
    CHECK(w.b[1] == 0.0);
    CHECK(w.b[2] == doctest::Approx(3.0));
    REQUIRE(w.skipped.size() == 1);
    CHECK(w.skipped[0] == 1);

    SUBCASE("bad arguments") {
        CHECK_THROWS_AS(best_fit_weights(model, x0, 4), DomainError);
        CHECK_THROWS_AS(best_fit_weights(model, Eigen::VectorXd::Zero(2), 2), LayoutError);
    }
}

TEST_CASE("face reconstruction adds weighted face parts to the template") {
    ShapeTablePair table = random_table(7, 6, 9);
    JointPcaModel model = fit_joint_pca(table);
    Eigen::VectorXd x0 = randn(6, 1);
    FitWeights w = best_fit_weights(model, x0, 3);
    Eigen::VectorXd y = reconstruct_face(model, w);
    Eigen::VectorXd expect = model.y_template;
    for (int j = 0; j < 3; ++j) expect += w.b[j] * model.face_part(j);
    CHECK((y - expect).norm() < 1e-12);

    FitWeights too_many;
    too_many.b = Eigen::VectorXd::Zero(model.count() + 1);
    CHECK_THROWS_AS(reconstruct_face(model, too_many), DomainError);
}

TEST_CASE("pca model archives round trip exactly") {
    namespace fs = std::filesystem;
    auto dir = fs::temp_directory_path() / "craniomorph_pcaio";
    fs::remove_all(dir);
    fs::create_directories(dir);
    std::string path = (dir / "model.json").string();

    ShapeTablePair table = random_table(6, 6, 9);
    JointPcaModel model = fit_joint_pca(table);
    save_model(path, model);
    CHECK(model_kind(path) == "joint_pca");

    JointPcaModel r = load_pca_model(path);
    CHECK(r.eigenvalues == model.eigenvalues);
    CHECK(r.components == model.components);
    CHECK(r.p == model.p);
    CHECK(r.q == model.q);
    CHECK(r.x_template == model.x_template);
    CHECK(r.y_template == model.y_template);
    CHECK(r.skull_layout == model.skull_layout);
    CHECK(r.face_layout == model.face_layout);

    SUBCASE("weights computed from the reloaded model are identical") {
        Eigen::VectorXd x0 = randn(6, 1);
        CHECK(best_fit_weights(r, x0, 3).b == best_fit_weights(model, x0, 3).b);
    }
    SUBCASE("format guards") {
        CHECK_THROWS_AS(load_pca_model((dir / "none.json").string()), IoError);
        std::ofstream(path) << "{]";
        CHECK_THROWS_AS(load_pca_model(path), FormatError);
        std::ofstream(path) << R"({"format_version":1,"kind":"mystery"})";
        CHECK_THROWS_AS(load_pca_model(path), FormatError);
    }
}
