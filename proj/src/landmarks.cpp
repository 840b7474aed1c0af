#include "craniomorph/landmarks.hpp"

#include <fstream>
#include <set>

#include <json.hpp>

#include "craniomorph/error.hpp"

namespace craniomorph {

using nlohmann::json;

int LandmarkSet::find(const std::string& id) const {
    for (size_t i = 0; i < points.size(); ++i)
        if (points[i].id == id) return static_cast<int>(i);
    return -1;
}

void LandmarkSet::validate() const {
    std::set<std::string> seen;
    for (const auto& p : points) {
        if (!seen.insert(p.id).second) throw DomainError("duplicate landmark id '" + p.id + "'");
        if (p.generation < 0) throw DomainError("negative generation on '" + p.id + "'");
        if (!p.position.allFinite())
            throw DomainError("non-finite position on '" + p.id + "'");
    }
    for (const auto& tri : connectivity)
        for (const auto& id : tri)
            if (!seen.count(id))
                throw DomainError("connectivity references unknown id '" + id + "'");
}

namespace {

Landmark parse_landmark(const json& j, const std::string& path) {
    Landmark lm;
    try {
        lm.id = j.at("id").get<std::string>();
        auto pos = j.at("position");
        if (!pos.is_array() || pos.size() != 3)
            throw FormatError(path + ": position must be [x,y,z]");
        lm.position = Eigen::Vector3d(pos[0].get<double>(), pos[1].get<double>(),
                                      pos[2].get<double>());
        lm.midplane = j.value("midplane", false);
        lm.generation = j.value("generation", 0);
    } catch (const json::exception& e) {
        throw FormatError(path + ": bad landmark record: " + e.what());
    }
    return lm;
}

}  // namespace

LandmarkSet load_landmarks(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw IoError("cannot open " + path);
    json j;
    try {
        in >> j;
    } catch (const json::exception& e) {
        throw FormatError(path + ": " + e.what());
    }
    LandmarkSet out;
    const json* pts = nullptr;
    if (j.is_array()) {
        pts = &j;
    } else if (j.is_object() && j.contains("points")) {
        pts = &j["points"];
        if (j.contains("triangles")) {
            for (const auto& t : j["triangles"]) {
                if (!t.is_array() || t.size() != 3)
                    throw FormatError(path + ": triangle must be [id,id,id]");
                out.connectivity.push_back({t[0].get<std::string>(), t[1].get<std::string>(),
                                            t[2].get<std::string>()});
            }
        }
    } else {
        throw FormatError(path + ": expected landmark array or {points, triangles} object");
    }
    for (const auto& rec : *pts) out.points.push_back(parse_landmark(rec, path));
    out.validate();
    return out;
}

void save_landmarks(const std::string& path, const LandmarkSet& lm) {
    json pts = json::array();
    for (const auto& p : lm.points) {
        pts.push_back({{"id", p.id},
                       {"position", {p.position.x(), p.position.y(), p.position.z()}},
                       {"midplane", p.midplane},
                       {"generation", p.generation}});
    }
    json j;
    if (lm.connectivity.empty()) {
        j = pts;  // simple array form
    } else {
        json tris = json::array();
        for (const auto& t : lm.connectivity) tris.push_back({t[0], t[1], t[2]});
        j = {{"points", pts}, {"triangles", tris}};
    }
    std::ofstream out(path);
    if (!out) throw IoError("cannot write " + path);
    out << j.dump(1) << '\n';
    if (!out) throw IoError("write failure on " + path);
}

}  // namespace craniomorph
