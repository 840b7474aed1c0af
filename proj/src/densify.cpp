#include "craniomorph/densify.hpp"

#include <algorithm>
#include <map>
#include <set>
#include <string>
#include <utility>
#include <vector>

#include "craniomorph/error.hpp"
#include "craniomorph/fast_marching.hpp"
#include "craniomorph/geodesic_path.hpp"
#include "craniomorph/mesh_distance.hpp"

namespace craniomorph {

namespace {

constexpr double kMinGeodesicLength = 0.5;  // mm
constexpr double kMidplaneTol = 1e-3;       // mm, |x| bound for midplane points

std::string midpoint_id(int gen, const std::string& a, const std::string& b) {
    return "g" + std::to_string(gen) + ":" + a + "+" + b;
}

}  // namespace

LandmarkSet densify(const TriMesh& mesh, const LandmarkSet& landmarks, int iterations) {
    if (iterations < 0) throw DomainError("densify: iterations must be non-negative");
    landmarks.validate();
    LandmarkSet cur = landmarks;
    if (iterations == 0) return cur;
    if (cur.connectivity.empty())
        throw DomainError("densify requires connectivity on the input landmarks");
    if (mesh.empty() || mesh.n_triangles() == 0)
        throw DomainError("densify requires a non-empty mesh");

    SurfaceIndex index(mesh);
    const double min_euclid = 2.0 * mean_edge_length(mesh);

    for (int pass = 0; pass < iterations; ++pass) {
        int gen = 0;
        for (const auto& p : cur.points) gen = std::max(gen, p.generation);
        gen += 1;

        std::map<std::string, int> by_id;
        for (int i = 0; i < cur.size(); ++i) by_id[cur.points[i].id] = i;

        // unique edges in template order (pairs of point indices, lo first)
        std::vector<std::pair<int, int>> edges;
        for (const auto& tri : cur.connectivity) {
            int a = by_id.at(tri[0]), b = by_id.at(tri[1]), c = by_id.at(tri[2]);
            edges.push_back(std::minmax(a, b));
            edges.push_back(std::minmax(b, c));
            edges.push_back(std::minmax(c, a));
        }
        std::sort(edges.begin(), edges.end());
        edges.erase(std::unique(edges.begin(), edges.end()), edges.end());

        // midpoint of each non-degenerate edge, fields grouped by source
        std::map<std::pair<int, int>, std::string> edge_mid;
        std::vector<Landmark> added;
        int field_for = -1;
        DistanceField field;
        for (auto [ia, ib] : edges) {
            const Landmark& la = cur.points[ia];
            const Landmark& lb = cur.points[ib];
            if ((la.position - lb.position).norm() < min_euclid) continue;

            try {
                if (field_for != ia) {
                    field = fast_marching_field(mesh, locate_on_surface(index, la.position));
                    field_for = ia;
                }
                SurfacePoint target = locate_on_surface(index, lb.position);
                GeodesicPath path = geodesic_path(mesh, field, target);
                if (path.length < kMinGeodesicLength) continue;

                Landmark mid;
                mid.id = midpoint_id(gen, la.id, lb.id);
                mid.position = geodesic_midpoint(path);
                mid.generation = gen;
                mid.midplane = la.midplane && lb.midplane;
                if (mid.midplane) {
                    for (const auto& w : path.waypoints) {
                        if (std::abs(w.x()) > kMidplaneTol) {
                            mid.midplane = false;
                            break;
                        }
                    }
                }
                edge_mid[{ia, ib}] = mid.id;
                added.push_back(std::move(mid));
            } catch (const NumericalError& e) {
                throw NumericalError("edge " + la.id + "+" + lb.id + ": " + e.what());
            } catch (const DomainError& e) {
                throw DomainError("edge " + la.id + "+" + lb.id + ": " + e.what());
            }
        }

        // 1-to-4 subdivision wherever all three midpoints exist
        std::vector<std::array<std::string, 3>> next_conn;
        for (const auto& tri : cur.connectivity) {
            int a = by_id.at(tri[0]), b = by_id.at(tri[1]), c = by_id.at(tri[2]);
            auto mab = edge_mid.find(std::minmax(a, b));
            auto mbc = edge_mid.find(std::minmax(b, c));
            auto mca = edge_mid.find(std::minmax(c, a));
            if (mab == edge_mid.end() || mbc == edge_mid.end() || mca == edge_mid.end()) {
                next_conn.push_back(tri);
                continue;
            }
            const std::string &ab = mab->second, &bc = mbc->second, &ca = mca->second;
            next_conn.push_back({tri[0], ab, ca});
            next_conn.push_back({ab, tri[1], bc});
            next_conn.push_back({ca, bc, tri[2]});
            next_conn.push_back({ab, bc, ca});
        }

        for (auto& lm : added) cur.points.push_back(std::move(lm));
        cur.connectivity = std::move(next_conn);
    }
    cur.validate();
    return cur;
}

}  // namespace craniomorph
