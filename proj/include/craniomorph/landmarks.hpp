#pragma once

#include <Eigen/Core>
#include <array>
#include <string>
#include <vector>

namespace craniomorph {

struct Landmark {
    std::string id;
    Eigen::Vector3d position = Eigen::Vector3d::Zero();
    bool midplane = false;
    int generation = 0;  // 0 = anatomical, g>0 = midpoint created at iteration g
};

// Ordered, generation-tagged landmark template with geodesic connectivity.
// The ordering is the correspondence contract: individuals sharing a template
// list the same ids in the same order.
struct LandmarkSet {
    std::vector<Landmark> points;
    std::vector<std::array<std::string, 3>> connectivity;  // id triples

    int size() const { return static_cast<int>(points.size()); }
    int find(const std::string& id) const;  // -1 if absent

    // Throws DomainError on duplicate ids or connectivity referencing
    // unknown ids.
    void validate() const;
};

// Landmark file: JSON array of {id, position, midplane} or template object
// {points: [... plus generation], triangles: [[id,id,id],...]}.
LandmarkSet load_landmarks(const std::string& path);
void save_landmarks(const std::string& path, const LandmarkSet& lm);

}  // namespace craniomorph
