#include "craniomorph/dataset.hpp"

#include <filesystem>
#include <fstream>
#include <iomanip>
#include <sstream>

#include <json.hpp>

#include "craniomorph/error.hpp"
#include "craniomorph/landmarks.hpp"
#include "craniomorph/mesh_io.hpp"

namespace craniomorph {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

constexpr int kDatasetVersion = 1;

void make_dir(const fs::path& dir) {
    std::error_code ec;
    fs::create_directories(dir, ec);
    if (ec) throw IoError("cannot create directory " + dir.string() + ": " + ec.message());
}

void write_csv(const fs::path& path, const Eigen::MatrixXd& m, const std::string& prefix) {
    std::ofstream out(path);
    if (!out) throw IoError("cannot write " + path.string());
    out.precision(17);
    for (int j = 0; j < m.cols(); ++j) out << (j ? "," : "") << prefix << j;
    out << '\n';
    for (int i = 0; i < m.rows(); ++i) {
        for (int j = 0; j < m.cols(); ++j) out << (j ? "," : "") << m(i, j);
        out << '\n';
    }
}

std::string entry_name(int i) {
    std::ostringstream s;
    s << 'e' << std::setw(3) << std::setfill('0') << i;
    return s.str();
}

}  // namespace

std::string individual_key(const std::string& id) {
    if (id.size() > 2 && id[id.size() - 2] == '_') {
        char side = id.back();
        if (side == 'L' || side == 'R' || side == 'l' || side == 'r')
            return id.substr(0, id.size() - 2);
    }
    return id;
}

void save_dataset(const std::string& dir, const SynthDataset& data) {
    if (data.skulls.size() != data.faces.size())
        throw DomainError("dataset has mismatched skull/face counts");
    make_dir(dir);
    make_dir(fs::path(dir) / "entries");
    make_dir(fs::path(dir) / "truth");

    json manifest;
    manifest["version"] = kDatasetVersion;
    json entries = json::array();
    for (size_t i = 0; i < data.skulls.size(); ++i) {
        std::string name = entry_name(static_cast<int>(i));
        std::string skull_rel = "entries/" + name + ".skull.json";
        std::string face_rel = "entries/" + name + ".face.ply";
        save_landmarks((fs::path(dir) / skull_rel).string(), data.skulls[i]);
        save_ply((fs::path(dir) / face_rel).string(), data.faces[i]);
        entries.push_back({{"id", name}, {"skull", skull_rel}, {"face", face_rel}});
    }
    manifest["entries"] = std::move(entries);

    std::ofstream out(fs::path(dir) / "dataset.json");
    if (!out) throw IoError("cannot write " + dir + "/dataset.json");
    out << manifest.dump(2) << '\n';

    write_csv(fs::path(dir) / "truth" / "latents.csv", data.latents, "t");
    write_csv(fs::path(dir) / "truth" / "V.csv", data.V, "x");
    write_csv(fs::path(dir) / "truth" / "W.csv", data.W, "y");
}

Dataset load_dataset(const std::string& dir) {
    fs::path manifest_path = fs::path(dir) / "dataset.json";
    std::ifstream in(manifest_path);
    if (!in) throw IoError("cannot open " + manifest_path.string());
    json manifest;
    try {
        in >> manifest;
    } catch (const json::exception& e) {
        throw FormatError(manifest_path.string() + ": " + e.what());
    }
    if (!manifest.is_object() || !manifest.contains("version") || !manifest.contains("entries"))
        throw FormatError(manifest_path.string() + ": expected {version, entries}");
    if (manifest["version"] != kDatasetVersion)
        throw FormatError(manifest_path.string() + ": unsupported dataset version");
    if (!manifest["entries"].is_array())
        throw FormatError(manifest_path.string() + ": entries must be an array");

    Dataset data;
    for (const auto& e : manifest["entries"]) {
        if (!e.is_object() || !e.contains("id") || !e.contains("skull") || !e.contains("face"))
            throw FormatError(manifest_path.string() + ": entry needs {id, skull, face}");
        DatasetEntry entry;
        entry.id = e["id"].get<std::string>();
        entry.individual =
            e.contains("individual") ? e["individual"].get<std::string>() : individual_key(entry.id);
        entry.skull = load_landmarks((fs::path(dir) / e["skull"].get<std::string>()).string());
        entry.face = load_mesh((fs::path(dir) / e["face"].get<std::string>()).string());
        entry.deformed = e.contains("deformed")
                             ? load_mesh((fs::path(dir) / e["deformed"].get<std::string>()).string())
                             : entry.face;
        data.entries.push_back(std::move(entry));
    }
    if (data.entries.empty()) throw FormatError(manifest_path.string() + ": no entries");
    return data;
}

}  // namespace craniomorph
