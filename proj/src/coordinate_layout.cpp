#include "craniomorph/coordinate_layout.hpp"

#include <cmath>

#include "craniomorph/error.hpp"

namespace craniomorph {

namespace {
constexpr double kMidplaneTol = 1e-3;  // mm
}

int CoordinateLayout::total_dim() const {
    int d = 0;
    for (const auto& e : entries) d += e.midplane ? 2 : 3;
    return d;
}

CoordinateLayout layout_from_landmarks(const LandmarkSet& lm) {
    CoordinateLayout layout;
    layout.entries.reserve(lm.points.size());
    for (const auto& p : lm.points) layout.entries.push_back({p.id, p.midplane});
    return layout;
}

CoordinateLayout layout_from_mesh(const TriMesh& mesh) {
    CoordinateLayout layout;
    layout.entries.reserve(mesh.vertices.size());
    for (int i = 0; i < mesh.n_vertices(); ++i)
        layout.entries.push_back({"v" + std::to_string(i), false});
    return layout;
}

Eigen::VectorXd flatten(const LandmarkSet& lm, const CoordinateLayout& layout) {
    if (lm.size() != static_cast<int>(layout.entries.size()))
        throw LayoutError("flatten: landmark count " + std::to_string(lm.size()) +
                          " does not match layout (" + std::to_string(layout.entries.size()) +
                          " entries)");
    Eigen::VectorXd v(layout.total_dim());
    int k = 0;
    for (size_t i = 0; i < layout.entries.size(); ++i) {
        const auto& e = layout.entries[i];
        const auto& p = lm.points[i];
        if (p.id != e.id)
            throw LayoutError("flatten: landmark id '" + p.id + "' does not match layout id '" +
                              e.id + "' at position " + std::to_string(i));
        if (e.midplane) {
            if (std::abs(p.position.x()) > kMidplaneTol)
                throw LayoutError("flatten: midplane point '" + p.id + "' has |x| = " +
                                  std::to_string(std::abs(p.position.x())) + " mm > 1e-3 mm");
            v[k++] = p.position.y();
            v[k++] = p.position.z();
        } else {
            v[k++] = p.position.x();
            v[k++] = p.position.y();
            v[k++] = p.position.z();
        }
    }
    return v;
}

Eigen::VectorXd flatten(const TriMesh& mesh, const CoordinateLayout& layout) {
    if (mesh.n_vertices() != static_cast<int>(layout.entries.size()))
        throw LayoutError("flatten: mesh vertex count does not match layout");
    Eigen::VectorXd v(layout.total_dim());
    int k = 0;
    for (size_t i = 0; i < layout.entries.size(); ++i) {
        if (layout.entries[i].midplane)
            throw LayoutError("flatten: mesh layouts must be all-lateral");
        v[k++] = mesh.vertices[i].x();
        v[k++] = mesh.vertices[i].y();
        v[k++] = mesh.vertices[i].z();
    }
    return v;
}

std::vector<Eigen::Vector3d> unflatten(const Eigen::VectorXd& centered,
                                       const Eigen::VectorXd& template_vec,
                                       const CoordinateLayout& layout) {
    const int dim = layout.total_dim();
    if (centered.size() != dim)
        throw LayoutError("unflatten: vector length " + std::to_string(centered.size()) +
                          " does not match layout dimension " + std::to_string(dim));
    if (template_vec.size() != dim)
        throw LayoutError("unflatten: template length does not match layout dimension");
    Eigen::VectorXd full = centered + template_vec;
    std::vector<Eigen::Vector3d> out;
    out.reserve(layout.entries.size());
    int k = 0;
    for (const auto& e : layout.entries) {
        Eigen::Vector3d p;
        if (e.midplane) {
            p = {0.0, full[k], full[k + 1]};
            k += 2;
        } else {
            p = {full[k], full[k + 1], full[k + 2]};
            k += 3;
        }
        out.push_back(p);
    }
    return out;
}

}  // namespace craniomorph
