#pragma once

#include <string>
#include <vector>

#include "craniomorph/tri_mesh.hpp"

namespace craniomorph {

enum class MeshFormat { OBJ, PLY };

MeshFormat mesh_format_from_path(const std::string& path);

// Throws IoError if unreadable, FormatError (with line number) if malformed.
// Degenerate triangles are dropped; *dropped (if non-null) receives the count.
TriMesh load_mesh(const std::string& path, MeshFormat format, int* dropped = nullptr);
TriMesh load_mesh(const std::string& path, int* dropped = nullptr);  // format from extension

void save_obj(const std::string& path, const TriMesh& m);

// ASCII PLY; if `quality` is non-empty it must have one value per vertex and
// is written as a per-vertex float property named "quality".
void save_ply(const std::string& path, const TriMesh& m,
              const std::vector<double>& quality = {});

void save_mesh(const std::string& path, const TriMesh& m);  // format from extension

}  // namespace craniomorph
