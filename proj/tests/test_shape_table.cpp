#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <Eigen/Core>
#include <filesystem>
#include <fstream>

#include "craniomorph/coordinate_layout.hpp"
#include "craniomorph/dataset.hpp"
#include "craniomorph/error.hpp"
#include "craniomorph/mesh_io.hpp"
#include "craniomorph/shape_table.hpp"
#include "craniomorph/synth.hpp"

using namespace craniomorph;
namespace fs = std::filesystem;

namespace {

fs::path temp_dir(const char* tag) {
    auto dir = fs::temp_directory_path() / (std::string("craniomorph_") + tag);
    fs::remove_all(dir);
    fs::create_directories(dir);
    return dir;
}

LandmarkSet small_skull(double dx) {
    LandmarkSet lm;
    lm.points.push_back({"m0", {0.0, 1.0 + dx, 2.0}, true, 0});
    lm.points.push_back({"m1", {0.0, 3.0, 4.0 - dx}, true, 0});
    lm.points.push_back({"s0", {1.0 + dx, 0.5, 0.25}, false, 0});
    lm.points.push_back({"s1", {-2.0, 0.75 + dx, 1.5}, false, 0});
    return lm;
}

TriMesh small_face(double dz) {
    TriMesh m;
    m.vertices = {{0, 0, dz}, {2, 0, dz}, {2, 2, -dz}, {0, 2, 1 + dz}};
    m.triangles = {{0, 1, 2}, {0, 2, 3}};
    return m;
}

}  // namespace

TEST_CASE("landmark layouts flatten midplane points to two coordinates") {
    LandmarkSet lm = small_skull(0.0);
    CoordinateLayout layout = layout_from_landmarks(lm);
    REQUIRE(layout.entries.size() == 4);
    CHECK(layout.total_dim() == 2 * 2 + 2 * 3);

    Eigen::VectorXd v = flatten(lm, layout);
    REQUIRE(v.size() == 10);
    // m0 -> (y,z), m1 -> (y,z), s0 -> (x,y,z), s1 -> (x,y,z)
    CHECK(v[0] == 1.0);
    CHECK(v[1] == 2.0);
    CHECK(v[2] == 3.0);
    CHECK(v[3] == 4.0);
    CHECK(v[4] == 1.0);
    CHECK(v[7] == -2.0);

    SUBCASE("unflatten inverts flatten") {
        Eigen::VectorXd tmpl = Eigen::VectorXd::Zero(10);
        auto pts = unflatten(v, tmpl, layout);
        REQUIRE(pts.size() == 4);
        for (int i = 0; i < 4; ++i) CHECK((pts[i] - lm.points[i].position).norm() == 0.0);
        CHECK(pts[0].x() == 0.0);  // reinserted midplane x
    }
    SUBCASE("id mismatch is a layout error") {
        LandmarkSet other = lm;
        other.points[2].id = "wrong";
        CHECK_THROWS_AS(flatten(other, layout), LayoutError);
    }
    SUBCASE("off-plane midplane point is a layout error") {
        LandmarkSet off = lm;
        off.points[0].position.x() = 0.01;
        CHECK_THROWS_AS(flatten(off, layout), LayoutError);
    }
    SUBCASE("dimension mismatches are layout errors") {
        CHECK_THROWS_AS(unflatten(Eigen::VectorXd::Zero(7), Eigen::VectorXd::Zero(10), layout),
                        LayoutError);
        CHECK_THROWS_AS(unflatten(Eigen::VectorXd::Zero(10), Eigen::VectorXd::Zero(7), layout),
                        LayoutError);
    }
}

TEST_CASE("mesh layouts are all-lateral") {
    TriMesh m = small_face(0.5);
    CoordinateLayout layout = layout_from_mesh(m);
    CHECK(layout.total_dim() == 12);
    CHECK(layout.entries[0].id == "v0");
    CHECK(layout.entries[3].id == "v3");
    for (auto& e : layout.entries) CHECK(!e.midplane);

    Eigen::VectorXd v = flatten(m, layout);
    CHECK(v[2] == 0.5);
    CHECK(v[11] == 1.5);

    TriMesh wrong = m;
    wrong.vertices.pop_back();
    CHECK_THROWS_AS(flatten(wrong, layout), LayoutError);
}

TEST_CASE("assemble centers both tables") {
    std::vector<std::pair<LandmarkSet, TriMesh>> entries;
    for (double d : {-0.5, 0.0, 0.5, 1.0}) entries.push_back({small_skull(d), small_face(d)});
    ShapeTablePair table = assemble(entries);
    CHECK(table.n() == 4);
    CHECK(table.p() == 10);
    CHECK(table.q() == 12);

    // templates are the arithmetic means, rows are exactly centered
    Eigen::VectorXd first = flatten(entries[0].first, table.skull_layout);
    CHECK((table.X.row(0).transpose() + table.x_template - first).norm() < 1e-14);
    CHECK(table.X.colwise().sum().cwiseAbs().maxCoeff() < 1e-13);
    CHECK(table.Y.colwise().sum().cwiseAbs().maxCoeff() < 1e-13);

    SUBCASE("mismatched templates are rejected") {
        auto bad = entries;
        bad[2].first.points[1].id = "zz";
        CHECK_THROWS_AS(assemble(bad), LayoutError);
        auto bad2 = entries;
        bad2[1].second.vertices.pop_back();
        CHECK_THROWS_AS(assemble(bad2), LayoutError);
    }
    SUBCASE("assemble_vectors matches assemble") {
        std::vector<Eigen::VectorXd> xs, ys;
        for (auto& [lm, mesh] : entries) {
            xs.push_back(flatten(lm, table.skull_layout));
            ys.push_back(flatten(mesh, table.face_layout));
        }
        ShapeTablePair t2 = assemble_vectors(xs, ys, table.skull_layout, table.face_layout);
        CHECK(t2.X == table.X);
        CHECK(t2.Y == table.Y);
        CHECK(t2.x_template == table.x_template);
        CHECK(t2.y_template == table.y_template);

        xs.pop_back();
        CHECK_THROWS_AS(assemble_vectors(xs, ys, table.skull_layout, table.face_layout),
                        DomainError);
    }
    SUBCASE("unflatten_mesh rebuilds an entry on the shared topology") {
        TriMesh rebuilt = unflatten_mesh(table.Y.row(1).transpose(), table.y_template,
                                         table.face_layout, entries[0].second);
        REQUIRE(rebuilt.n_vertices() == 4);
        CHECK(rebuilt.triangles == entries[0].second.triangles);
        for (int v = 0; v < 4; ++v)
            CHECK((rebuilt.vertices[v] - entries[1].second.vertices[v]).norm() < 1e-14);

        TriMesh tiny;
        tiny.vertices = {{0, 0, 0}, {1, 0, 0}, {0, 1, 0}};
        tiny.triangles = {{0, 1, 2}};
        CHECK_THROWS_AS(unflatten_mesh(table.Y.row(1).transpose(), table.y_template,
                                       table.face_layout, tiny),
                        LayoutError);
    }
}

TEST_CASE("table archives round trip exactly") {
    auto dir = temp_dir("table");
    std::vector<std::pair<LandmarkSet, TriMesh>> entries;
    for (double d : {-0.25, 0.333333333333333, 0.71}) {
        entries.push_back({small_skull(d * M_PI), small_face(d)});
    }
    ShapeTablePair table = assemble(entries);
    save_table((dir / "t").string(), table);
    ShapeTablePair r = load_table((dir / "t").string());

    CHECK(r.X == table.X);
    CHECK(r.Y == table.Y);
    CHECK(r.x_template == table.x_template);
    CHECK(r.y_template == table.y_template);
    CHECK(r.skull_layout == table.skull_layout);
    CHECK(r.face_layout == table.face_layout);

    SUBCASE("missing directory is an io error") {
        CHECK_THROWS_AS(load_table((dir / "absent").string()), IoError);
    }
    SUBCASE("corrupt layout file is a format error") {
        std::ofstream((dir / "t" / "layout.json").string()) << "{broken";
        CHECK_THROWS_AS(load_table((dir / "t").string()), FormatError);
    }
}

TEST_CASE("individual keys strip side suffixes") {
    CHECK(individual_key("s01_L") == "s01");
    CHECK(individual_key("s01_R") == "s01");
    CHECK(individual_key("s01_r") == "s01");
    CHECK(individual_key("s01_l") == "s01");
    CHECK(individual_key("s01") == "s01");
    CHECK(individual_key("s01_X") == "s01_X");
    CHECK(individual_key("_L") == "_L");  // too short to be a suffix
    CHECK(individual_key("left") == "left");
}

TEST_CASE("dataset directories round trip") {
    auto dir = temp_dir("dataset");
    SynthSpec spec;
    spec.seed = 11;
    spec.n = 5;
    spec.latent_dim = 2;
    spec.noise_sigma = 0.1;
    spec.skull_template = make_skull_template(5, 9);
    spec.face_template = make_face_template(16);
    SynthDataset synth = generate(spec);
    save_dataset((dir / "d").string(), synth);

    Dataset data = load_dataset((dir / "d").string());
    REQUIRE(data.size() == 5);
    CHECK(data.entries[0].id == "e000");
    CHECK(data.entries[4].id == "e004");
    for (auto& e : data.entries) {
        CHECK(e.individual == e.id);  // no side suffix on synthetic ids
        CHECK(e.skull.size() == synth.skulls[0].size());
        CHECK(e.face.n_vertices() == 16);
        // deformed defaults to the observed face
        CHECK(e.deformed.n_vertices() == e.face.n_vertices());
    }
    // coordinates survive the save/load exactly
    for (int i = 0; i < 5; ++i) {
        for (int k = 0; k < synth.skulls[i].size(); ++k)
            CHECK(data.entries[i].skull.points[k].position == synth.skulls[i].points[k].position);
        for (int v = 0; v < 16; ++v)
            CHECK(data.entries[i].face.vertices[v] == synth.faces[i].vertices[v]);
    }

    SUBCASE("twin ids group by individual") {
        // hand-written manifest with explicit side suffixes
        auto tdir = dir / "twins";
        fs::create_directories(tdir);
        save_landmarks((tdir / "a.skull.json").string(), synth.skulls[0]);
        save_ply((tdir / "a.face.ply").string(), synth.faces[0]);
        std::ofstream(tdir / "dataset.json")
            << R"({"version":1,"entries":[)"
            << R"({"id":"s01_L","skull":"a.skull.json","face":"a.face.ply"},)"
            << R"({"id":"s01_R","skull":"a.skull.json","face":"a.face.ply"},)"
            << R"({"id":"s02","skull":"a.skull.json","face":"a.face.ply"}]})";
        Dataset twins = load_dataset(tdir.string());
        CHECK(twins.entries[0].individual == "s01");
        CHECK(twins.entries[1].individual == "s01");
        CHECK(twins.entries[2].individual == "s02");
    }
    SUBCASE("bad manifests are format errors, missing ones io errors") {
        CHECK_THROWS_AS(load_dataset((dir / "nowhere").string()), IoError);
        auto bdir = dir / "bad";
        fs::create_directories(bdir);
        std::ofstream(bdir / "dataset.json") << R"({"version":99,"entries":[]})";
        CHECK_THROWS_AS(load_dataset(bdir.string()), FormatError);
        std::ofstream(bdir / "dataset.json") << R"({"version":1,"entries":[]})";
        CHECK_THROWS_AS(load_dataset(bdir.string()), FormatError);
        std::ofstream(bdir / "dataset.json") << R"({"version":1,"entries":[{"id":"x"}]})";
        CHECK_THROWS_AS(load_dataset(bdir.string()), FormatError);
    }
}
