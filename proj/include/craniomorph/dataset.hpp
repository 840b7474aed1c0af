#pragma once

#include <string>
#include <vector>

#include "craniomorph/landmarks.hpp"
#include "craniomorph/synth.hpp"
#include "craniomorph/tri_mesh.hpp"

namespace craniomorph {

// One pipeline entry: skull landmarks, the measured face surface, and the
// correspondence mesh (deformed reference) sharing topology across entries.
// For synthetic data the observed face already is the correspondence mesh.
struct DatasetEntry {
    std::string id;
    std::string individual;  // hold-out grouping key (mirrored halves share it)
    LandmarkSet skull;
    TriMesh face;
    TriMesh deformed;
};

struct Dataset {
    std::vector<DatasetEntry> entries;

    int size() const { return static_cast<int>(entries.size()); }
};

// "e012_L" / "e012_R" / "e012_l" ... -> "e012"; ids without a side suffix
// are their own individual.
std::string individual_key(const std::string& id);

// Directory layout: dataset.json (entry manifest) + entries/<id>.skull.json,
// entries/<id>.face.ply [, entries/<id>.deformed.ply] + truth/ for synthetic
// ground truth (latents.csv, V.csv, W.csv).
void save_dataset(const std::string& dir, const SynthDataset& data);
Dataset load_dataset(const std::string& dir);

}  // namespace craniomorph
