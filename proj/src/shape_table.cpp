#include "craniomorph/shape_table.hpp"

#include <filesystem>
#include <fstream>
#include <iomanip>
#include <sstream>

#include <json.hpp>

#include "craniomorph/error.hpp"

namespace craniomorph {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

std::vector<std::string> layout_labels(const CoordinateLayout& layout) {
    std::vector<std::string> labels;
    labels.reserve(layout.total_dim());
    for (const auto& e : layout.entries) {
        if (!e.midplane) labels.push_back(e.id + ":x");
        labels.push_back(e.id + ":y");
        labels.push_back(e.id + ":z");
    }
    return labels;
}

void check_id(const std::string& id) {
    if (id.empty() || id.find(',') != std::string::npos ||
        id.find('\n') != std::string::npos || id.find('\r') != std::string::npos)
        throw LayoutError("point id '" + id + "' is empty or contains a separator character");
}

void write_csv_row(std::ofstream& os, const std::vector<std::string>& cells) {
    for (size_t i = 0; i < cells.size(); ++i) {
        if (i) os << ',';
        os << cells[i];
    }
    os << '\n';
}

void write_matrix_csv(const std::string& path, const std::vector<std::string>& header,
                      const Eigen::MatrixXd& m) {
    std::ofstream os(path);
    if (!os) throw IoError("cannot write " + path);
    os << std::setprecision(17);
    write_csv_row(os, header);
    for (Eigen::Index i = 0; i < m.rows(); ++i) {
        for (Eigen::Index j = 0; j < m.cols(); ++j) {
            if (j) os << ',';
            os << m(i, j);
        }
        os << '\n';
    }
    if (!os) throw IoError("write failed for " + path);
}

std::vector<std::string> split_csv(const std::string& line) {
    std::vector<std::string> out;
    std::string cur;
    std::istringstream is(line);
    while (std::getline(is, cur, ',')) out.push_back(cur);
    if (!line.empty() && line.back() == ',') out.push_back("");
    return out;
}

Eigen::MatrixXd read_matrix_csv(const std::string& path, std::vector<std::string>& header) {
    std::ifstream is(path);
    if (!is) throw IoError("cannot open " + path);
    std::string line;
    if (!std::getline(is, line)) throw FormatError(path + ": missing header row");
    if (!line.empty() && line.back() == '\r') line.pop_back();
    header = split_csv(line);
    std::vector<std::vector<double>> rows;
    int lineno = 1;
    while (std::getline(is, line)) {
        ++lineno;
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line.empty()) continue;
        auto cells = split_csv(line);
        if (cells.size() != header.size())
            throw FormatError(path + ":" + std::to_string(lineno) + ": expected " +
                              std::to_string(header.size()) + " columns, got " +
                              std::to_string(cells.size()));
        std::vector<double> row(cells.size());
        for (size_t j = 0; j < cells.size(); ++j) {
            try {
                size_t used = 0;
                row[j] = std::stod(cells[j], &used);
                if (used != cells[j].size()) throw std::invalid_argument("trailing");
            } catch (const std::exception&) {
                throw FormatError(path + ":" + std::to_string(lineno) + ": bad number '" +
                                  cells[j] + "'");
            }
        }
        rows.push_back(std::move(row));
    }
    Eigen::MatrixXd m(rows.size(), header.size());
    for (size_t i = 0; i < rows.size(); ++i)
        for (size_t j = 0; j < header.size(); ++j) m(i, j) = rows[i][j];
    return m;
}

json layout_to_json(const CoordinateLayout& layout) {
    json arr = json::array();
    for (const auto& e : layout.entries) arr.push_back({{"id", e.id}, {"midplane", e.midplane}});
    return arr;
}

CoordinateLayout layout_from_json(const json& arr, const std::string& context) {
    if (!arr.is_array()) throw FormatError(context + ": layout must be an array");
    CoordinateLayout layout;
    for (const auto& e : arr) {
        if (!e.is_object() || !e.contains("id") || !e.contains("midplane"))
            throw FormatError(context + ": layout entries need id and midplane fields");
        layout.entries.push_back({e.at("id").get<std::string>(), e.at("midplane").get<bool>()});
    }
    return layout;
}

}  // namespace

ShapeTablePair assemble_vectors(const std::vector<Eigen::VectorXd>& skulls,
                                const std::vector<Eigen::VectorXd>& faces,
                                CoordinateLayout skull_layout, CoordinateLayout face_layout) {
    const int n = static_cast<int>(skulls.size());
    if (n < 2) throw DomainError("assemble requires at least 2 entries");
    if (faces.size() != skulls.size())
        throw DomainError("assemble: skull and face entry counts differ");
    const int p = skull_layout.total_dim();
    const int q = face_layout.total_dim();
    for (const auto& v : skulls)
        if (v.size() != p) throw LayoutError("assemble: skull vector dimension mismatch");
    for (const auto& v : faces)
        if (v.size() != q) throw LayoutError("assemble: face vector dimension mismatch");

    ShapeTablePair table;
    table.skull_layout = std::move(skull_layout);
    table.face_layout = std::move(face_layout);
    table.X.resize(n, p);
    table.Y.resize(n, q);
    for (int i = 0; i < n; ++i) {
        table.X.row(i) = skulls[i].transpose();
        table.Y.row(i) = faces[i].transpose();
    }
    table.x_template = table.X.colwise().mean();
    table.y_template = table.Y.colwise().mean();
    table.X.rowwise() -= table.x_template.transpose();
    table.Y.rowwise() -= table.y_template.transpose();
    return table;
}

ShapeTablePair assemble(const std::vector<std::pair<LandmarkSet, TriMesh>>& entries) {
    if (entries.size() < 2) throw DomainError("assemble requires at least 2 entries");
    CoordinateLayout skull_layout = layout_from_landmarks(entries.front().first);
    CoordinateLayout face_layout = layout_from_mesh(entries.front().second);
    std::vector<Eigen::VectorXd> skulls, faces;
    skulls.reserve(entries.size());
    faces.reserve(entries.size());
    for (const auto& [lm, mesh] : entries) {
        if (layout_from_landmarks(lm) != skull_layout)
            throw LayoutError("assemble: inconsistent skull layouts across entries");
        if (mesh.n_vertices() != static_cast<int>(face_layout.entries.size()))
            throw LayoutError("assemble: inconsistent face vertex counts across entries");
        skulls.push_back(flatten(lm, skull_layout));
        faces.push_back(flatten(mesh, face_layout));
    }
    return assemble_vectors(std::move(skulls), std::move(faces), std::move(skull_layout),
                            std::move(face_layout));
}

TriMesh unflatten_mesh(const Eigen::VectorXd& centered, const Eigen::VectorXd& template_vec,
                       const CoordinateLayout& layout, const TriMesh& topology) {
    if (static_cast<int>(layout.entries.size()) != topology.n_vertices())
        throw LayoutError("unflatten_mesh: layout entry count does not match topology");
    TriMesh out;
    out.vertices = unflatten(centered, template_vec, layout);
    out.triangles = topology.triangles;
    return out;
}

void save_table(const std::string& dir, const ShapeTablePair& table) {
    for (const auto& e : table.skull_layout.entries) check_id(e.id);
    for (const auto& e : table.face_layout.entries) check_id(e.id);
    std::error_code ec;
    fs::create_directories(dir, ec);
    if (ec) throw IoError("cannot create directory " + dir + ": " + ec.message());

    json layout_doc;
    layout_doc["skull"] = layout_to_json(table.skull_layout);
    layout_doc["face"] = layout_to_json(table.face_layout);
    {
        std::ofstream os(dir + "/layout.json");
        if (!os) throw IoError("cannot write " + dir + "/layout.json");
        os << layout_doc.dump(2) << '\n';
    }

    auto xl = layout_labels(table.skull_layout);
    auto yl = layout_labels(table.face_layout);
    write_matrix_csv(dir + "/X.csv", xl, table.X);
    write_matrix_csv(dir + "/Y.csv", yl, table.Y);

    std::vector<std::string> theader;
    for (const auto& l : xl) theader.push_back("skull:" + l);
    for (const auto& l : yl) theader.push_back("face:" + l);
    Eigen::MatrixXd trow(1, table.x_template.size() + table.y_template.size());
    trow << table.x_template.transpose(), table.y_template.transpose();
    write_matrix_csv(dir + "/templates.csv", theader, trow);
}

ShapeTablePair load_table(const std::string& dir) {
    std::ifstream is(dir + "/layout.json");
    if (!is) throw IoError("cannot open " + dir + "/layout.json");
    json doc;
    try {
        is >> doc;
    } catch (const json::exception& e) {
        throw FormatError(dir + "/layout.json: " + e.what());
    }
    if (!doc.contains("skull") || !doc.contains("face"))
        throw FormatError(dir + "/layout.json: needs skull and face layouts");

    ShapeTablePair table;
    table.skull_layout = layout_from_json(doc["skull"], dir + "/layout.json");
    table.face_layout = layout_from_json(doc["face"], dir + "/layout.json");

    std::vector<std::string> xh, yh, th;
    table.X = read_matrix_csv(dir + "/X.csv", xh);
    table.Y = read_matrix_csv(dir + "/Y.csv", yh);
    Eigen::MatrixXd trow = read_matrix_csv(dir + "/templates.csv", th);

    auto xl = layout_labels(table.skull_layout);
    auto yl = layout_labels(table.face_layout);
    if (xh != xl) throw FormatError(dir + "/X.csv: header does not match layout.json");
    if (yh != yl) throw FormatError(dir + "/Y.csv: header does not match layout.json");
    if (trow.rows() != 1 || trow.cols() != static_cast<Eigen::Index>(xl.size() + yl.size()))
        throw FormatError(dir + "/templates.csv: expected one row of " +
                          std::to_string(xl.size() + yl.size()) + " values");
    if (table.X.rows() != table.Y.rows())
        throw FormatError(dir + ": X.csv and Y.csv row counts differ");

    table.x_template = trow.row(0).head(xl.size()).transpose();
    table.y_template = trow.row(0).tail(yl.size()).transpose();
    return table;
}

}  // namespace craniomorph
