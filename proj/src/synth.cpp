#include "craniomorph/synth.hpp"

#include <Eigen/QR>
#include <Eigen/SVD>
#include <cmath>

#include "craniomorph/coordinate_layout.hpp"
#include "craniomorph/error.hpp"
#include "craniomorph/rng.hpp"
#include "craniomorph/shape_table.hpp"

namespace craniomorph {

namespace {

// stream salts for the independent substreams of one dataset seed
enum : std::uint64_t { kLatents = 1, kLoadV = 2, kLoadW = 3, kNoiseX = 4, kNoiseY = 5 };

Eigen::MatrixXd gaussian_matrix(Rng& rng, int rows, int cols) {
    Eigen::MatrixXd m(rows, cols);
    for (int i = 0; i < rows; ++i)
        for (int j = 0; j < cols; ++j) m(i, j) = rng.gaussian();
    return m;
}

// k x dim matrix with orthogonal rows of the given norm
Eigen::MatrixXd orthogonal_rows(Rng& rng, int k, int dim, double row_norm) {
    Eigen::MatrixXd g = gaussian_matrix(rng, dim, k);
    Eigen::HouseholderQR<Eigen::MatrixXd> qr(g);
    Eigen::MatrixXd q = qr.householderQ() * Eigen::MatrixXd::Identity(dim, k);
    return row_norm * q.transpose();
}

int matrix_rank(const Eigen::MatrixXd& m) {
    Eigen::JacobiSVD<Eigen::MatrixXd> svd(m);
    double tol = 1e-10 * svd.singularValues()[0] * std::max(m.rows(), m.cols());
    return (svd.singularValues().array() > tol).count();
}

}  // namespace

void SynthSpec::validate() const {
    if (n < 3) throw DomainError("synth: n must be at least 3");
    if (latent_dim < 1) throw DomainError("synth: latent_dim must be positive");
    if (latent_dim >= n - 1)
        throw DomainError("synth: latent_dim " + std::to_string(latent_dim) +
                          " must be < n-1 = " + std::to_string(n - 1));
    if (noise_sigma < 0.0) throw DomainError("synth: noise_sigma must be >= 0");
    if (!(latent_decay > 0.0) || latent_decay > 1.0)
        throw DomainError("synth: latent_decay must be in (0, 1]");
    if (skull_template.points.empty()) throw DomainError("synth: missing skull template");
    if (face_template.empty()) throw DomainError("synth: missing face template");
    skull_template.validate();

    const int p = layout_from_landmarks(skull_template).total_dim();
    const int q = 3 * face_template.n_vertices();
    if (V.size() > 0) {
        if (V.rows() != latent_dim || V.cols() != p)
            throw DomainError("synth: V must be latent_dim x p");
        if (matrix_rank(V) < latent_dim) throw DomainError("synth: V is not full row rank");
    }
    if (W.size() > 0) {
        if (W.rows() != latent_dim || W.cols() != q)
            throw DomainError("synth: W must be latent_dim x q");
        if (matrix_rank(W) < latent_dim) throw DomainError("synth: W is not full row rank");
    }
}

SynthDataset generate(const SynthSpec& spec) {
    spec.validate();
    const int n = spec.n, k = spec.latent_dim;
    CoordinateLayout skull_layout = layout_from_landmarks(spec.skull_template);
    CoordinateLayout face_layout = layout_from_mesh(spec.face_template);
    const int p = skull_layout.total_dim();
    const int q = face_layout.total_dim();

    SynthDataset data;
    if (spec.V.size() > 0) {
        data.V = spec.V;
    } else {
        Rng rng(derive_seed(spec.seed, kLoadV));
        data.V = orthogonal_rows(rng, k, p, spec.skull_scale * std::sqrt(double(p)));
    }
    if (spec.W.size() > 0) {
        data.W = spec.W;
    } else {
        Rng rng(derive_seed(spec.seed, kLoadW));
        data.W = orthogonal_rows(rng, k, q, spec.face_scale * std::sqrt(double(q)));
    }

    {
        Rng rng(derive_seed(spec.seed, kLatents));
        data.latents = gaussian_matrix(rng, n, k);
        for (int j = 0; j < k; ++j)
            data.latents.col(j) *= std::pow(spec.latent_decay, 0.5 * j);
    }

    Eigen::MatrixXd xrows = data.latents * data.V;  // centered skull rows
    Eigen::MatrixXd yrows = data.latents * data.W;
    if (spec.noise_sigma > 0.0) {
        Rng rx(derive_seed(spec.seed, kNoiseX));
        xrows += spec.noise_sigma * gaussian_matrix(rx, n, p);
        Rng ry(derive_seed(spec.seed, kNoiseY));
        yrows += spec.noise_sigma * gaussian_matrix(ry, n, q);
    }

    Eigen::VectorXd skull_base = flatten(spec.skull_template, skull_layout);
    Eigen::VectorXd face_base = flatten(spec.face_template, face_layout);

    data.skulls.reserve(n);
    data.faces.reserve(n);
    for (int i = 0; i < n; ++i) {
        LandmarkSet lm = spec.skull_template;  // ids, flags, generations, connectivity
        auto positions = unflatten(xrows.row(i).transpose(), skull_base, skull_layout);
        for (size_t j = 0; j < positions.size(); ++j) lm.points[j].position = positions[j];
        data.skulls.push_back(std::move(lm));
        data.faces.push_back(unflatten_mesh(yrows.row(i).transpose(), face_base, face_layout,
                                            spec.face_template));
    }
    return data;
}

Eigen::MatrixXd oracle_regression(const Eigen::MatrixXd& X, const Eigen::MatrixXd& Y) {
    if (X.rows() != Y.rows()) throw DomainError("oracle_regression: row count mismatch");
    return X.completeOrthogonalDecomposition().solve(Y);
}

LandmarkSet make_skull_template(int n_midplane, int n_lateral) {
    if (n_midplane < 1 || n_lateral < 0)
        throw DomainError("make_skull_template: need at least one midplane point");
    LandmarkSet lm;
    const double pi = 3.14159265358979323846;
    for (int i = 0; i < n_midplane; ++i) {
        double t = n_midplane > 1 ? pi * double(i) / (n_midplane - 1) : pi / 2;
        Landmark l;
        l.id = "m" + std::to_string(i);
        l.midplane = true;
        l.position = {0.0, 80.0 * std::cos(t), 40.0 + 80.0 * std::sin(t)};
        lm.points.push_back(std::move(l));
    }
    const double golden = 2.399963229728653;  // radians
    for (int i = 0; i < n_lateral; ++i) {
        double z = n_lateral > 1 ? 1.0 - 2.0 * (i + 0.5) / n_lateral : 0.0;
        double r = 90.0 * std::sqrt(std::max(0.0, 1.0 - z * z));
        double phi = golden * i;
        Landmark l;
        l.id = "l" + std::to_string(i);
        l.midplane = false;
        l.position = {r * std::cos(phi), r * std::sin(phi), 40.0 + 90.0 * z};
        lm.points.push_back(std::move(l));
    }
    return lm;
}

namespace {

// A column count is usable when the row-major grid triangulation leaves no
// vertex outside every triangle: either the grid is exactly rectangular, or
// there are >= 3 rows and the partial last row has >= 2 vertices.
bool grid_cols_ok(int n, int cols) {
    if (cols < 2 || cols > n / 2) return false;
    int rows = (n + cols - 1) / cols;
    int tail = n - (rows - 1) * cols;
    if (tail == cols) return true;
    return rows >= 3 && tail >= 2;
}

}  // namespace

TriMesh make_face_template(int n_vertices) {
    if (n_vertices < 4) throw DomainError("make_face_template: too few vertices");
    int cols = 0;
    const int mid = static_cast<int>(std::ceil(std::sqrt(static_cast<double>(n_vertices))));
    for (int d = 0; d <= n_vertices && cols == 0; ++d) {
        if (grid_cols_ok(n_vertices, mid + d)) cols = mid + d;
        else if (grid_cols_ok(n_vertices, mid - d)) cols = mid - d;
    }
    if (cols == 0)
        throw DomainError("make_face_template: no connected grid has " +
                          std::to_string(n_vertices) + " vertices; adjust the count by 1");

    const int rows = (n_vertices + cols - 1) / cols;
    const double spacing = 3.0;
    const double cx = spacing * (cols - 1) / 2.0, cy = spacing * (rows - 1) / 2.0;
    TriMesh m;
    m.vertices.reserve(n_vertices);
    for (int v = 0; v < n_vertices; ++v) {
        double x = spacing * (v % cols);
        double y = spacing * (v / cols);
        double dx = (x - cx) / 45.0, dy = (y - cy) / 45.0;
        m.vertices.push_back({x, y, 25.0 * std::exp(-dx * dx - dy * dy)});
    }
    for (int i = 0; i + 1 < rows; ++i) {
        for (int j = 0; j + 1 < cols; ++j) {
            int v00 = i * cols + j, v01 = v00 + 1;
            int v10 = v00 + cols, v11 = v10 + 1;
            if (v11 >= n_vertices) continue;
            m.triangles.push_back({v00, v10, v11});
            m.triangles.push_back({v00, v11, v01});
        }
    }

    std::vector<char> used(n_vertices, 0);
    for (const auto& t : m.triangles)
        for (int v : t) used[v] = 1;
    for (int v = 0; v < n_vertices; ++v)
        if (!used[v]) throw InternalError("make_face_template: vertex outside every triangle");
    return m;
}

SynthSpec benchmark_spec(std::uint64_t seed, int n_midplane, int n_lateral) {
    SynthSpec spec;
    spec.seed = seed;
    spec.n = 50;
    spec.latent_dim = 8;
    spec.noise_sigma = 0.5;
    spec.latent_decay = 0.9;
    spec.skull_scale = 2.0;
    spec.face_scale = 0.5;
    spec.skull_template = make_skull_template(n_midplane, n_lateral);
    spec.face_template = make_face_template(1741);
    return spec;
}

}  // namespace craniomorph
