#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <Eigen/Core>
#include <Eigen/Geometry>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <limits>
#include <random>
#include <set>

#include "craniomorph/error.hpp"
#include "craniomorph/landmarks.hpp"
#include "craniomorph/mesh_distance.hpp"
#include "craniomorph/mesh_io.hpp"
#include "craniomorph/symmetry.hpp"
#include "craniomorph/tri_mesh.hpp"

using namespace craniomorph;
namespace fs = std::filesystem;

namespace {

fs::path temp_dir(const char* tag) {
    auto dir = fs::temp_directory_path() / (std::string("craniomorph_") + tag);
    fs::remove_all(dir);
    fs::create_directories(dir);
    return dir;
}

TriMesh two_triangle_square() {
    TriMesh m;
    m.vertices = {{0, 0, 0}, {1, 0, 0}, {1, 1, 0}, {0, 1, 0}};
    m.triangles = {{0, 1, 2}, {0, 2, 3}};
    return m;
}

TriMesh tetrahedron() {
    TriMesh m;
    m.vertices = {{0, 0, 0}, {1, 0, 0}, {0, 1, 0}, {0, 0, 1}};
    m.triangles = {{0, 2, 1}, {0, 1, 3}, {1, 2, 3}, {0, 3, 2}};
    return m;
}

// Wavy grid with enough triangles to exercise the AABB tree.
TriMesh wavy_grid(int nx, int ny) {
    TriMesh m;
    for (int j = 0; j < ny; ++j)
        for (int i = 0; i < nx; ++i)
            m.vertices.push_back({double(i), double(j), std::sin(i * 0.7) * std::cos(j * 0.5)});
    for (int j = 0; j + 1 < ny; ++j)
        for (int i = 0; i + 1 < nx; ++i) {
            int v = j * nx + i;
            m.triangles.push_back({v, v + 1, v + nx + 1});
            m.triangles.push_back({v, v + nx + 1, v + nx});
        }
    return m;
}

// Brute-force closest-point oracle: dense barycentric sampling. The sampled
// minimum can exceed the true one by at most the lattice spacing (the
// distance-to-point function is 1-Lipschitz on the triangle).
double sampled_min_distance(const Eigen::Vector3d& p, const Eigen::Vector3d& a,
                            const Eigen::Vector3d& b, const Eigen::Vector3d& c, int steps) {
    double best = std::numeric_limits<double>::infinity();
    for (int i = 0; i <= steps; ++i)
        for (int j = 0; j <= steps - i; ++j) {
            double u = double(i) / steps, v = double(j) / steps;
            best = std::min(best, (p - (a + u * (b - a) + v * (c - a))).norm());
        }
    return best;
}

}  // namespace

TEST_CASE("triangle area and repair") {
    TriMesh m = two_triangle_square();
    CHECK(triangle_area(m, 0) == doctest::Approx(0.5).epsilon(1e-12));
    CHECK(triangle_area(m, 1) == doctest::Approx(0.5).epsilon(1e-12));

    SUBCASE("degenerate triangles are dropped, count reported") {
        m.triangles.push_back({0, 1, 1});                                // repeated vertex
        m.triangles.push_back({0, 1, 0});                                // repeated vertex
        m.vertices.push_back({0.5, 0.0, 0.0});                           // on the 0-1 edge
        m.triangles.push_back({0, 4, 1});                                // collinear
        CHECK(validate_and_repair(m) == 3);
        CHECK(m.n_triangles() == 2);
    }
    SUBCASE("out-of-range index throws") {
        m.triangles.push_back({0, 1, 9});
        CHECK_THROWS_AS(validate_and_repair(m), DomainError);
    }
    SUBCASE("non-finite coordinate throws") {
        m.vertices[2][1] = std::numeric_limits<double>::quiet_NaN();
        CHECK_THROWS_AS(validate_and_repair(m), DomainError);
    }
}

TEST_CASE("edges, neighbors, boundaries, adjacency") {
    TriMesh m = two_triangle_square();
    auto edges = mesh_edges(m);
    CHECK(edges.size() == 5);  // 4 rim + 1 diagonal
    CHECK(std::is_sorted(edges.begin(), edges.end()));
    for (auto [a, b] : edges) CHECK(a < b);

    auto boundary = boundary_edges(m);
    CHECK(boundary.size() == 4);  // diagonal is interior
    std::set<std::pair<int, int>> bset(boundary.begin(), boundary.end());
    CHECK(!bset.count({0, 2}));

    auto nbrs = vertex_neighbors(m);
    CHECK(nbrs[0].size() == 3);  // 1, 2, 3
    CHECK(nbrs[1].size() == 2);  // 0, 2

    auto vt = vertex_triangles(m);
    CHECK(vt[0].size() == 2);
    CHECK(vt[1].size() == 1);

    auto adj = triangle_adjacency(m);
    // Triangle 0 = (0,1,2): the edge opposite corner 1 is (0,2), shared with triangle 1.
    CHECK(adj[0][1] == 1);
    CHECK(adj[0][0] == -1);
    CHECK(adj[0][2] == -1);
    CHECK(adj[1][2] == 0);  // edge (0,2) is opposite vertex 3

    SUBCASE("closed mesh has no boundary") {
        CHECK(boundary_edges(tetrahedron()).empty());
        for (auto& row : triangle_adjacency(tetrahedron()))
            for (int t : row) CHECK(t >= 0);
    }

    double expect = (4.0 + std::sqrt(2.0)) / 5.0;
    CHECK(mean_edge_length(m) == doctest::Approx(expect).epsilon(1e-12));
    CHECK(mesh_centroid(m).isApprox(Eigen::Vector3d(0.5, 0.5, 0.0), 1e-12));
    Eigen::Vector3d lo, hi;
    bounding_box(m, lo, hi);
    CHECK(lo.isApprox(Eigen::Vector3d::Zero(), 1e-12));
    CHECK(hi.isApprox(Eigen::Vector3d(1, 1, 0), 1e-12));
    CHECK_THROWS_AS(bounding_box(TriMesh{}, lo, hi), DomainError);
}

TEST_CASE("mesh io round trips") {
    auto dir = temp_dir("meshio");
    TriMesh m = wavy_grid(5, 4);

    SUBCASE("obj preserves coordinates exactly") {
        save_obj((dir / "m.obj").string(), m);
        TriMesh r = load_mesh((dir / "m.obj").string());
        REQUIRE(r.n_vertices() == m.n_vertices());
        REQUIRE(r.n_triangles() == m.n_triangles());
        for (int i = 0; i < m.n_vertices(); ++i) CHECK(r.vertices[i] == m.vertices[i]);
        CHECK(r.triangles == m.triangles);
    }
    SUBCASE("ply preserves coordinates exactly, with optional quality") {
        std::vector<double> q(m.n_vertices());
        for (int i = 0; i < m.n_vertices(); ++i) q[i] = 0.25 * i;
        save_ply((dir / "m.ply").string(), m, q);
        TriMesh r = load_mesh((dir / "m.ply").string());
        REQUIRE(r.n_vertices() == m.n_vertices());
        for (int i = 0; i < m.n_vertices(); ++i) CHECK(r.vertices[i] == m.vertices[i]);
        CHECK(r.triangles == m.triangles);
        CHECK_THROWS_AS(save_ply((dir / "bad.ply").string(), m, {1.0, 2.0}), DomainError);
    }
    SUBCASE("format from extension") {
        CHECK(mesh_format_from_path("a/b.obj") == MeshFormat::OBJ);
        CHECK(mesh_format_from_path("a/b.PLY") == MeshFormat::PLY);
        CHECK_THROWS_AS(mesh_format_from_path("a/b.stl"), UsageError);
    }
    SUBCASE("missing file is an io error") {
        CHECK_THROWS_AS(load_mesh((dir / "nope.obj").string()), IoError);
    }
    SUBCASE("malformed file reports the line") {
        std::ofstream((dir / "bad.obj").string()) << "v 0 0 0\nv 1 0 0\nv 0 1 0\nf 1 2 zz\n";
        try {
            load_mesh((dir / "bad.obj").string());
            FAIL("expected FormatError");
        } catch (const FormatError& e) {
            CHECK(std::string(e.what()).find(":4") != std::string::npos);
        }
    }
    SUBCASE("degenerate faces are dropped and counted") {
        std::ofstream((dir / "deg.obj").string())
            << "v 0 0 0\nv 1 0 0\nv 0 1 0\nf 1 2 3\nf 1 2 2\n";
        int dropped = -1;
        TriMesh r = load_mesh((dir / "deg.obj").string(), &dropped);
        CHECK(dropped == 1);
        CHECK(r.n_triangles() == 1);
    }
}

TEST_CASE("landmark io and validation") {
    auto dir = temp_dir("lmio");
    LandmarkSet lm;
    lm.points.push_back({"nasion", {0.0, 12.5, -3.25}, true, 0});
    lm.points.push_back({"orbit", {4.75, 10.0, -2.0}, false, 0});
    lm.points.push_back({"g1:nasion+orbit", {2.375, 11.25, -2.625}, false, 1});
    lm.connectivity.push_back({"nasion", "orbit", "g1:nasion+orbit"});

    SUBCASE("template round trip is exact") {
        save_landmarks((dir / "t.json").string(), lm);
        LandmarkSet r = load_landmarks((dir / "t.json").string());
        REQUIRE(r.size() == 3);
        for (int i = 0; i < 3; ++i) {
            CHECK(r.points[i].id == lm.points[i].id);
            CHECK(r.points[i].position == lm.points[i].position);
            CHECK(r.points[i].midplane == lm.points[i].midplane);
            CHECK(r.points[i].generation == lm.points[i].generation);
        }
        CHECK(r.connectivity == lm.connectivity);
    }
    SUBCASE("plain array form loads") {
        std::ofstream((dir / "a.json").string())
            << R"([{"id":"a","position":[1,2,3],"midplane":true},)"
            << R"({"id":"b","position":[4,5,6]}])";
        LandmarkSet r = load_landmarks((dir / "a.json").string());
        REQUIRE(r.size() == 2);
        CHECK(r.points[0].midplane);
        CHECK(!r.points[1].midplane);
        CHECK(r.points[1].position == Eigen::Vector3d(4, 5, 6));
        CHECK(r.find("b") == 1);
        CHECK(r.find("zz") == -1);
    }
    SUBCASE("validate rejects duplicates and unknown connectivity") {
        LandmarkSet bad = lm;
        bad.points.push_back({"nasion", {1, 1, 1}, false, 0});
        CHECK_THROWS_AS(bad.validate(), DomainError);
        LandmarkSet bad2 = lm;
        bad2.connectivity.push_back({"nasion", "orbit", "ghost"});
        CHECK_THROWS_AS(bad2.validate(), DomainError);
    }
    SUBCASE("malformed json is a format error") {
        std::ofstream((dir / "bad.json").string()) << "{not json";
        CHECK_THROWS_AS(load_landmarks((dir / "bad.json").string()), FormatError);
        CHECK_THROWS_AS(load_landmarks((dir / "missing.json").string()), IoError);
    }
}

TEST_CASE("closest point on triangle matches dense sampling") {
    std::mt19937 gen(20240901);
    std::uniform_real_distribution<double> u(-2.0, 2.0);
    int checked = 0;
    for (int trial = 0; trial < 120; ++trial) {
        Eigen::Vector3d a(u(gen), u(gen), u(gen)), b(u(gen), u(gen), u(gen)),
            c(u(gen), u(gen), u(gen));
        if ((b - a).cross(c - a).norm() < 1e-3) continue;
        Eigen::Vector3d p(1.5 * u(gen), 1.5 * u(gen), 1.5 * u(gen));
        Eigen::Vector3d cp = closest_point_on_triangle(p, a, b, c);
        double exact = point_triangle_distance(p, a, b, c);
        CHECK((p - cp).norm() == doctest::Approx(exact).epsilon(1e-12));

        int steps = 160;
        double sampled = sampled_min_distance(p, a, b, c, steps);
        double spacing = ((b - a).norm() + (c - a).norm()) / steps;
        CHECK(exact <= sampled + 1e-12);
        CHECK(sampled - exact <= spacing);
        ++checked;
    }
    CHECK(checked > 100);

    SUBCASE("hand cases: face, edge, vertex regions") {
        Eigen::Vector3d a(0, 0, 0), b(2, 0, 0), c(0, 2, 0);
        CHECK(point_triangle_distance({0.5, 0.5, 3.0}, a, b, c) == doctest::Approx(3.0));
        CHECK(point_triangle_distance({1.0, -2.0, 0.0}, a, b, c) == doctest::Approx(2.0));
        CHECK(point_triangle_distance({-3.0, -4.0, 0.0}, a, b, c) == doctest::Approx(5.0));
        CHECK(point_triangle_distance({0.5, 0.5, 0.0}, a, b, c) == doctest::Approx(0.0));
        // beyond the hypotenuse: closest point is the projection onto it
        double d = point_triangle_distance({2.0, 2.0, 0.0}, a, b, c);
        CHECK(d == doctest::Approx(std::sqrt(2.0)).epsilon(1e-12));
    }
}

TEST_CASE("clamped barycentric coordinates") {
    Eigen::Vector3d a(0, 0, 0), b(1, 0, 0), c(0, 1, 0);
    SUBCASE("interior point reproduces itself") {
        Eigen::Vector3d p(0.2, 0.3, 0.0);
        Eigen::Vector3d w = barycentric_clamped(p, a, b, c);
        CHECK(w.sum() == doctest::Approx(1.0).epsilon(1e-12));
        CHECK((w[0] * a + w[1] * b + w[2] * c - p).norm() < 1e-12);
    }
    SUBCASE("outside point clamps to the boundary") {
        Eigen::Vector3d w = barycentric_clamped({2.0, -1.0, 0.0}, a, b, c);
        CHECK(w.sum() == doctest::Approx(1.0).epsilon(1e-12));
        CHECK(w.minCoeff() >= -1e-12);
        CHECK((w[0] * a + w[1] * b + w[2] * c - Eigen::Vector3d(1, 0, 0)).norm() < 1e-9);
    }
}

TEST_CASE("surface index agrees with per-triangle scan") {
    TriMesh m = wavy_grid(12, 9);
    SurfaceIndex index(m);
    std::mt19937 gen(7);
    std::uniform_real_distribution<double> ux(-1.0, 12.0), uy(-1.0, 9.0), uz(-3.0, 3.0);
    for (int trial = 0; trial < 300; ++trial) {
        Eigen::Vector3d p(ux(gen), uy(gen), uz(gen));
        double best = std::numeric_limits<double>::infinity();
        for (int t = 0; t < m.n_triangles(); ++t) {
            auto& f = m.triangles[t];
            best = std::min(best, point_triangle_distance(p, m.vertices[f[0]], m.vertices[f[1]],
                                                          m.vertices[f[2]]));
        }
        SurfaceHit hit = index.closest(p);
        CHECK(hit.distance == doctest::Approx(best).epsilon(1e-12));
        CHECK((p - hit.point).norm() == doctest::Approx(hit.distance).epsilon(1e-9));
        REQUIRE(hit.triangle >= 0);
        auto& f = m.triangles[hit.triangle];
        CHECK(point_triangle_distance(p, m.vertices[f[0]], m.vertices[f[1]],
                                      m.vertices[f[2]]) == doctest::Approx(hit.distance));
        CHECK(point_to_surface_distance(p, m) == doctest::Approx(best).epsilon(1e-12));
    }

    SUBCASE("exact ties resolve to the lowest triangle index") {
        TriMesh two;
        two.vertices = {{1, 0, 0},  {1, 1, 0},  {1, 0, 1},     // triangle 0 at x = +1
                        {-1, 0, 0}, {-1, 1, 0}, {-1, 0, 1}};   // mirror at x = -1
        two.triangles = {{0, 1, 2}, {3, 4, 5}};
        SurfaceIndex idx(two);
        CHECK(idx.closest({0.0, 0.2, 0.2}).triangle == 0);
    }
    SUBCASE("empty mesh is rejected") {
        CHECK_THROWS_AS(SurfaceIndex{TriMesh{}}, DomainError);
    }
}

TEST_CASE("distance statistics") {
    SUBCASE("hand-computed values, population std") {
        DistanceStats s = make_distance_stats({1.0, 2.0, 3.0, 4.0});
        CHECK(s.mean == doctest::Approx(2.5));
        CHECK(s.median == doctest::Approx(2.5));
        CHECK(s.max == doctest::Approx(4.0));
        CHECK(s.std == doctest::Approx(std::sqrt(1.25)).epsilon(1e-12));
        CHECK(make_distance_stats({5.0, 1.0, 3.0}).median == doctest::Approx(3.0));
        CHECK_THROWS_AS(make_distance_stats({}), DomainError);
    }
    SUBCASE("offset plane distances") {
        TriMesh base = two_triangle_square();
        TriMesh lifted = base;
        for (auto& v : lifted.vertices) v.z() += 0.75;
        DistanceStats s = mesh_to_surface_stats(lifted, base);
        CHECK(s.mean == doctest::Approx(0.75).epsilon(1e-12));
        CHECK(s.std == doctest::Approx(0.0));
        CHECK(s.distances.size() == 4);
    }
}

TEST_CASE("symmetry plane fit") {
    // grid on the plane 2x + y - z = 3
    Eigen::Vector3d n(2, 1, -1);
    std::vector<Eigen::Vector3d> pts;
    for (int i = -2; i <= 2; ++i)
        for (int j = -2; j <= 2; ++j) {
            Eigen::Vector3d q(i * 1.3, j * 0.9, 0.0);
            q.z() = 2 * q.x() + q.y() - 3;
            pts.push_back(q);
        }
    Plane pl = fit_symmetry_plane(pts);
    Eigen::Vector3d nu = n.normalized();
    CHECK(std::abs(std::abs(pl.normal.dot(nu)) - 1.0) < 1e-9);
    CHECK(plane_residual_sum_sq(pl, pts) < 1e-18);
    for (auto& q : pts) CHECK(std::abs(pl.signed_distance(q)) < 1e-9);

    SUBCASE("frame puts the plane at x = 0") {
        Eigen::Matrix3d R = plane_frame_rotation(pl);
        CHECK((R * R.transpose() - Eigen::Matrix3d::Identity()).norm() < 1e-12);
        for (auto& q : pts) CHECK(std::abs(to_plane_frame(pl, q).x()) < 1e-9);
        Eigen::Vector3d off = pts[3] + 2.0 * pl.normal;
        CHECK(to_plane_frame(pl, off).x() == doctest::Approx(pl.signed_distance(off)));
    }
    SUBCASE("degenerate inputs are rejected") {
        CHECK_THROWS_AS(fit_symmetry_plane({pts[0], pts[1]}), DomainError);
        std::vector<Eigen::Vector3d> line;
        for (int i = 0; i < 5; ++i) line.push_back(Eigen::Vector3d(i, 2.0 * i, -i));
        CHECK_THROWS_AS(fit_symmetry_plane(line), DomainError);
    }
}

TEST_CASE("split half produces mirrored, template-compatible halves") {
    // symmetric tent over the y axis, asymmetric in z so mirroring is visible
    TriMesh m;
    m.vertices = {{-2, 0, 0}, {2, 0, 0}, {0, 0, 2}, {-2, 3, 0}, {2, 3, 0}, {0, 3, 2}};
    m.triangles = {{0, 1, 2}, {3, 5, 4}, {0, 2, 5}, {0, 5, 3}, {1, 4, 5}, {1, 5, 2}};

    LandmarkSet lm;
    lm.points.push_back({"apex", {0.0, 1.5, 2.0}, true, 0});
    lm.points.push_back({"base_L", {-2.0, 1.5, 0.0}, false, 0});
    lm.points.push_back({"base_R", {2.0, 1.5, 0.0}, false, 0});

    Plane pl;  // x = 0
    pl.normal = Eigen::Vector3d::UnitX();
    pl.offset = 0.0;

    auto [right_mesh, right_lm] = split_half(m, pl, Side::Right, lm);
    auto [left_mesh, left_lm] = split_half(m, pl, Side::Left, lm);

    SUBCASE("both halves share one template") {
        REQUIRE(right_lm.size() == 2);
        REQUIRE(left_lm.size() == 2);
        for (int i = 0; i < 2; ++i) {
            CHECK(right_lm.points[i].id == left_lm.points[i].id);
            CHECK(right_lm.points[i].id.find("_R") == std::string::npos);
            CHECK(right_lm.points[i].id.find("_L") == std::string::npos);
        }
        CHECK(right_lm.find("apex") >= 0);
        CHECK(right_lm.find("base") >= 0);
    }
    SUBCASE("midplane landmarks land exactly on x = 0, laterals keep x > 0") {
        for (auto& set : {right_lm, left_lm}) {
            CHECK(set.points[set.find("apex")].position.x() == 0.0);
            CHECK(set.points[set.find("base")].position.x() > 0.0);
        }
        // the mirrored left base must coincide with the right base
        CHECK(left_lm.points[left_lm.find("base")].position.isApprox(
            right_lm.points[right_lm.find("base")].position, 1e-9));
    }
    SUBCASE("all kept vertices sit on the positive side") {
        for (auto& v : right_mesh.vertices) CHECK(v.x() >= -1e-9);
        for (auto& v : left_mesh.vertices) CHECK(v.x() >= -1e-9);
    }
    SUBCASE("mirroring preserves total area") {
        double ra = 0, la = 0;
        for (int t = 0; t < right_mesh.n_triangles(); ++t) ra += triangle_area(right_mesh, t);
        for (int t = 0; t < left_mesh.n_triangles(); ++t) la += triangle_area(left_mesh, t);
        CHECK(ra == doctest::Approx(la).epsilon(1e-9));
    }
    SUBCASE("plane outside the mesh leaves nothing") {
        Plane far_plane;
        far_plane.normal = Eigen::Vector3d::UnitX();
        far_plane.offset = -100.0;
        CHECK_THROWS_AS(split_half(m, far_plane, Side::Left, lm), DomainError);
    }
}
