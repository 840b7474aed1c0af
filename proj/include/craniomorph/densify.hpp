#pragma once

#include "craniomorph/landmarks.hpp"
#include "craniomorph/tri_mesh.hpp"

namespace craniomorph {

// Iterative refinement of a landmark template: every pass inserts the
// geodesic midpoint of each unique connectivity edge as a new landmark and
// splits each fully-subdivided triangle 1-to-4. Edges whose geodesic
// degenerates (shorter than 0.5 mm, or endpoints closer than twice the mean
// mesh edge length) are skipped and their triangles kept coarse.
//
// New ids are "g<generation>:<idA>+<idB>"; ordering depends only on the input
// template, so meshes sharing a template yield identical id sequences.
LandmarkSet densify(const TriMesh& mesh, const LandmarkSet& landmarks, int iterations);

}  // namespace craniomorph
