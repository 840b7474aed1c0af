#include "craniomorph/model_io.hpp"

#include <cmath>
#include <fstream>

#include <json.hpp>

#include "craniomorph/error.hpp"

namespace craniomorph {

using nlohmann::json;

namespace {

constexpr int kFormatVersion = 1;

json vector_to_json(const Eigen::VectorXd& v) {
    json arr = json::array();
    for (Eigen::Index i = 0; i < v.size(); ++i) arr.push_back(v[i]);
    return arr;
}

json matrix_to_json(const Eigen::MatrixXd& m) {
    json rows = json::array();
    for (Eigen::Index i = 0; i < m.rows(); ++i) {
        json row = json::array();
        for (Eigen::Index j = 0; j < m.cols(); ++j) row.push_back(m(i, j));
        rows.push_back(std::move(row));
    }
    return rows;
}

Eigen::VectorXd vector_from_json(const json& arr, const std::string& what) {
    if (!arr.is_array()) throw FormatError(what + " must be an array");
    Eigen::VectorXd v(arr.size());
    for (size_t i = 0; i < arr.size(); ++i) {
        if (!arr[i].is_number()) throw FormatError(what + " has a non-numeric entry");
        v[i] = arr[i].get<double>();
    }
    return v;
}

Eigen::MatrixXd matrix_from_json(const json& rows, const std::string& what) {
    if (!rows.is_array()) throw FormatError(what + " must be an array of rows");
    if (rows.empty()) return Eigen::MatrixXd(0, 0);
    size_t cols = rows[0].is_array() ? rows[0].size() : 0;
    Eigen::MatrixXd m(rows.size(), cols);
    for (size_t i = 0; i < rows.size(); ++i) {
        if (!rows[i].is_array() || rows[i].size() != cols)
            throw FormatError(what + " rows are ragged");
        for (size_t j = 0; j < cols; ++j) {
            if (!rows[i][j].is_number()) throw FormatError(what + " has a non-numeric entry");
            m(i, j) = rows[i][j].get<double>();
        }
    }
    return m;
}

json layout_to_json(const CoordinateLayout& layout) {
    json arr = json::array();
    for (const auto& e : layout.entries) arr.push_back({{"id", e.id}, {"midplane", e.midplane}});
    return arr;
}

CoordinateLayout layout_from_json(const json& arr, const std::string& what) {
    if (!arr.is_array()) throw FormatError(what + " must be an array");
    CoordinateLayout layout;
    for (const auto& e : arr) {
        if (!e.is_object() || !e.contains("id") || !e.contains("midplane"))
            throw FormatError(what + " entries need id and midplane");
        layout.entries.push_back({e.at("id").get<std::string>(), e.at("midplane").get<bool>()});
    }
    return layout;
}

json load_document(const std::string& path) {
    std::ifstream is(path);
    if (!is) throw IoError("cannot open " + path);
    json doc;
    try {
        is >> doc;
    } catch (const json::exception& e) {
        throw FormatError(path + ": " + e.what());
    }
    if (!doc.is_object()) throw FormatError(path + ": model file must be a JSON object");
    if (!doc.contains("format_version") || !doc.contains("kind"))
        throw FormatError(path + ": missing format_version or kind");
    if (doc["format_version"].get<int>() != kFormatVersion)
        throw FormatError(path + ": unsupported format_version");
    return doc;
}

void write_document(const std::string& path, const json& doc) {
    std::ofstream os(path);
    if (!os) throw IoError("cannot write " + path);
    os << doc.dump() << '\n';
    if (!os) throw IoError("write failed for " + path);
}

json common_header(const std::string& kind, int p, int q, const Eigen::VectorXd& xt,
                   const Eigen::VectorXd& yt, const CoordinateLayout& sl,
                   const CoordinateLayout& fl) {
    json doc;
    doc["format_version"] = kFormatVersion;
    doc["kind"] = kind;
    doc["p"] = p;
    doc["q"] = q;
    doc["x_template"] = vector_to_json(xt);
    doc["y_template"] = vector_to_json(yt);
    doc["skull_layout"] = layout_to_json(sl);
    doc["face_layout"] = layout_to_json(fl);
    return doc;
}

void read_common(const json& doc, const std::string& path, int& p, int& q, Eigen::VectorXd& xt,
                 Eigen::VectorXd& yt, CoordinateLayout& sl, CoordinateLayout& fl) {
    for (const char* key : {"p", "q", "x_template", "y_template", "skull_layout", "face_layout"})
        if (!doc.contains(key)) throw FormatError(path + ": missing field '" + key + "'");
    p = doc["p"].get<int>();
    q = doc["q"].get<int>();
    xt = vector_from_json(doc["x_template"], path + ": x_template");
    yt = vector_from_json(doc["y_template"], path + ": y_template");
    sl = layout_from_json(doc["skull_layout"], path + ": skull_layout");
    fl = layout_from_json(doc["face_layout"], path + ": face_layout");
    if (xt.size() != p || sl.total_dim() != p)
        throw FormatError(path + ": skull dimensions are inconsistent");
    if (yt.size() != q || fl.total_dim() != q)
        throw FormatError(path + ": face dimensions are inconsistent");
}

}  // namespace

void save_model(const std::string& path, const JointPcaModel& model) {
    json doc = common_header("joint_pca", model.p, model.q, model.x_template, model.y_template,
                             model.skull_layout, model.face_layout);
    doc["eigenvalues"] = vector_to_json(model.eigenvalues);
    doc["components"] = matrix_to_json(model.components);
    write_document(path, doc);
}

void save_model(const std::string& path, const LrrModel& model) {
    json doc = common_header("lrr", static_cast<int>(model.latent_vectors.rows()),
                             static_cast<int>(model.face_loadings.rows()), model.x_template,
                             model.y_template, model.skull_layout, model.face_layout);
    doc["r"] = model.r;
    doc["truncated"] = model.truncated;
    doc["latent_vectors"] = matrix_to_json(model.latent_vectors);
    doc["score_norms"] = vector_to_json(model.score_norms);
    doc["face_loadings"] = matrix_to_json(model.face_loadings);
    write_document(path, doc);
}

std::string model_kind(const std::string& path) {
    json doc = load_document(path);
    return doc["kind"].get<std::string>();
}

JointPcaModel load_pca_model(const std::string& path) {
    json doc = load_document(path);
    if (doc["kind"] != "joint_pca")
        throw FormatError(path + ": expected kind joint_pca, found " +
                          doc["kind"].get<std::string>());
    JointPcaModel model;
    read_common(doc, path, model.p, model.q, model.x_template, model.y_template,
                model.skull_layout, model.face_layout);
    if (!doc.contains("eigenvalues") || !doc.contains("components"))
        throw FormatError(path + ": missing eigenvalues or components");
    model.eigenvalues = vector_from_json(doc["eigenvalues"], path + ": eigenvalues");
    model.components = matrix_from_json(doc["components"], path + ": components");
    if (model.components.rows() != model.p + model.q ||
        model.components.cols() != model.eigenvalues.size())
        throw FormatError(path + ": component matrix shape mismatch");
    for (Eigen::Index j = 1; j < model.eigenvalues.size(); ++j)
        if (model.eigenvalues[j] > model.eigenvalues[j - 1])
            throw FormatError(path + ": eigenvalues are not non-increasing");
    if (model.eigenvalues.size() > 0 && model.eigenvalues.minCoeff() < 0.0)
        throw FormatError(path + ": negative eigenvalue");
    return model;
}

LrrModel load_lrr_model(const std::string& path, bool verify) {
    json doc = load_document(path);
    if (doc["kind"] != "lrr")
        throw FormatError(path + ": expected kind lrr, found " + doc["kind"].get<std::string>());
    LrrModel model;
    int p = 0, q = 0;
    read_common(doc, path, p, q, model.x_template, model.y_template, model.skull_layout,
                model.face_layout);
    for (const char* key : {"r", "latent_vectors", "score_norms", "face_loadings"})
        if (!doc.contains(key)) throw FormatError(path + ": missing field '" + key + "'");
    model.r = doc["r"].get<int>();
    model.truncated = doc.value("truncated", false);
    model.latent_vectors = matrix_from_json(doc["latent_vectors"], path + ": latent_vectors");
    model.score_norms = vector_from_json(doc["score_norms"], path + ": score_norms");
    model.face_loadings = matrix_from_json(doc["face_loadings"], path + ": face_loadings");
    if (model.latent_vectors.rows() != p || model.latent_vectors.cols() != model.r)
        throw FormatError(path + ": latent_vectors shape mismatch");
    if (model.face_loadings.rows() != q || model.face_loadings.cols() != model.r)
        throw FormatError(path + ": face_loadings shape mismatch");
    if (model.score_norms.size() != model.r)
        throw FormatError(path + ": score_norms length mismatch");
    if (verify) {
        for (int i = 0; i < model.r; ++i) {
            if (std::abs(model.latent_vectors.col(i).norm() - 1.0) > 1e-8)
                throw FormatError(path + ": latent vector " + std::to_string(i) +
                                  " is not unit length");
            if (!(model.score_norms[i] > 0.0))
                throw FormatError(path + ": non-positive score norm");
        }
    }
    return model;
}

}  // namespace craniomorph
