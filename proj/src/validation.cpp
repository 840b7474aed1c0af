#include "craniomorph/validation.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <limits>
#include <map>
#include <thread>

#include <json.hpp>

#include "craniomorph/coordinate_layout.hpp"
#include "craniomorph/error.hpp"
#include "craniomorph/joint_pca.hpp"
#include "craniomorph/lrr.hpp"
#include "craniomorph/mesh_distance.hpp"
#include "craniomorph/mesh_io.hpp"

namespace craniomorph {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

struct Fold {
    std::string individual;
    std::vector<int> holdout;  // dataset indices
};

std::vector<Fold> make_folds(const Dataset& data) {
    std::vector<Fold> folds;
    std::map<std::string, int> index;  // individual -> fold
    for (int i = 0; i < data.size(); ++i) {
        const std::string& key = data.entries[i].individual;
        auto it = index.find(key);
        if (it == index.end()) {
            index.emplace(key, static_cast<int>(folds.size()));
            folds.push_back({key, {i}});
        } else {
            folds[it->second].holdout.push_back(i);
        }
    }
    return folds;
}

bool wants(const std::vector<std::string>& methods, const std::string& m) {
    return std::find(methods.begin(), methods.end(), m) != methods.end();
}

// Uncentered predicted face vectors for counts 1..maxc, evaluated lazily:
// `advance(c)` brings the accumulator to count c (components beyond the
// model's rank contribute nothing, matching a truncated fit).
struct NestedPredictor {
    Eigen::VectorXd y;       // current uncentered prediction
    Eigen::VectorXd gains;   // per-component weights
    const Eigen::MatrixXd* modes = nullptr;  // q x r face modes
    int built = 0;

    void advance(int count) {
        int target = std::min<int>(count, static_cast<int>(gains.size()));
        for (; built < target; ++built) y += gains(built) * modes->col(built);
    }
};

NestedPredictor lrr_predictor(const LrrModel& model, const Eigen::VectorXd& x0,
                              const Eigen::VectorXd& y_template) {
    NestedPredictor np;
    np.y = y_template;
    np.gains = model.latent_vectors.transpose() * x0;
    np.modes = &model.face_loadings;
    return np;
}

struct PcaPredictor {
    Eigen::VectorXd y;
    Eigen::VectorXd gains;
    Eigen::MatrixXd modes;  // q x m face parts (owned: components stores [v; w])
    int built = 0;

    void advance(int count) {
        int target = std::min<int>(count, static_cast<int>(gains.size()));
        for (; built < target; ++built) y += gains(built) * modes.col(built);
    }
};

PcaPredictor pca_predictor(const JointPcaModel& model, const Eigen::VectorXd& x0,
                           const Eigen::VectorXd& y_template, int maxc) {
    PcaPredictor np;
    np.y = y_template;
    int m = std::min(maxc, model.count());
    FitWeights w = best_fit_weights(model, x0, m);
    np.gains = w.b;
    np.modes = model.components.bottomRows(model.q).leftCols(m);
    return np;
}

double mean_vertex_error(const Eigen::VectorXd& y, const SurfaceIndex& truth,
                         Eigen::Ref<Eigen::VectorXd> per_vertex) {
    const int nv = static_cast<int>(y.size()) / 3;
    double sum = 0.0;
    for (int v = 0; v < nv; ++v) {
        double d = truth.distance(y.segment<3>(3 * v));
        per_vertex(v) = d;
        sum += d;
    }
    return sum / nv;
}

}  // namespace

ShapeTablePair training_table(const Dataset& data, const std::vector<int>& holdout) {
    std::vector<std::pair<LandmarkSet, TriMesh>> train;
    for (int i = 0; i < data.size(); ++i) {
        if (std::find(holdout.begin(), holdout.end(), i) == holdout.end())
            train.emplace_back(data.entries[i].skull, data.entries[i].deformed);
    }
    return assemble(train);
}

CvReport loo_crossval(const Dataset& data, const std::vector<std::string>& methods,
                      int max_components, int jobs) {
    const int n = data.size();
    if (n < 3)
        throw DomainError("cross-validation needs at least 3 entries, got " + std::to_string(n));
    if (methods.empty()) throw DomainError("no methods requested");
    for (const auto& m : methods)
        if (m != "pca" && m != "lrr") throw DomainError("unknown method: " + m);
    if (max_components < 1 || max_components > n - 2)
        throw DomainError("max_components must be in [1, " + std::to_string(n - 2) + "], got " +
                          std::to_string(max_components));

    const int maxc = max_components;
    const bool want_lrr = wants(methods, "lrr");
    const bool want_pca = wants(methods, "pca");
    std::vector<Fold> folds = make_folds(data);

    struct MethodBuffers {
        Eigen::MatrixXd entry_errors;              // n x maxc
        std::vector<Eigen::MatrixXd> vertex_errors;  // per entry, n_verts x maxc
    };
    std::map<std::string, MethodBuffers> buffers;
    for (const auto& m : methods) {
        buffers[m].entry_errors = Eigen::MatrixXd::Constant(n, maxc, kNaN);
        buffers[m].vertex_errors.resize(n);
    }
    MethodBuffers* lrr_buf = want_lrr ? &buffers.at("lrr") : nullptr;
    MethodBuffers* pca_buf = want_pca ? &buffers.at("pca") : nullptr;
    std::vector<std::string> fold_failure(folds.size());

    auto run_fold = [&](size_t f) {
        try {
            ShapeTablePair table = training_table(data, folds[f].holdout);
            LrrModel lrr;
            JointPcaModel pca;
            if (want_lrr) lrr = fit_lrr(table, std::min(maxc, table.n() - 1));
            if (want_pca) pca = fit_joint_pca(table);
            const int nv = table.q() / 3;
            for (int idx : folds[f].holdout) {
                const DatasetEntry& e = data.entries[idx];
                Eigen::VectorXd x0 = flatten(e.skull, table.skull_layout) - table.x_template;
                SurfaceIndex truth(e.face);
                if (want_lrr) {
                    NestedPredictor np = lrr_predictor(lrr, x0, table.y_template);
                    Eigen::MatrixXd verts(nv, maxc);
                    for (int c = 1; c <= maxc; ++c) {
                        np.advance(c);
                        lrr_buf->entry_errors(idx, c - 1) =
                            mean_vertex_error(np.y, truth, verts.col(c - 1));
                    }
                    lrr_buf->vertex_errors[idx] = std::move(verts);
                }
                if (want_pca) {
                    PcaPredictor np = pca_predictor(pca, x0, table.y_template, maxc);
                    Eigen::MatrixXd verts(nv, maxc);
                    for (int c = 1; c <= maxc; ++c) {
                        np.advance(c);
                        pca_buf->entry_errors(idx, c - 1) =
                            mean_vertex_error(np.y, truth, verts.col(c - 1));
                    }
                    pca_buf->vertex_errors[idx] = std::move(verts);
                }
            }
        } catch (const Error& err) {
            fold_failure[f] = err.what();
            if (fold_failure[f].empty()) fold_failure[f] = "unknown error";
        }
    };

    if (jobs <= 1 || folds.size() <= 1) {
        for (size_t f = 0; f < folds.size(); ++f) run_fold(f);
    } else {
        std::atomic<size_t> next{0};
        auto worker = [&] {
            for (size_t f = next.fetch_add(1); f < folds.size(); f = next.fetch_add(1)) run_fold(f);
        };
        std::vector<std::thread> pool;
        int nthreads = std::min<int>(jobs, static_cast<int>(folds.size()));
        for (int t = 0; t < nthreads; ++t) pool.emplace_back(worker);
        for (auto& t : pool) t.join();
    }

    CvReport report;
    report.max_components = maxc;
    for (const auto& e : data.entries) report.entry_ids.push_back(e.id);

    std::vector<char> failed(n, 0);
    std::map<int, std::string> failure_by_entry;
    for (size_t f = 0; f < folds.size(); ++f) {
        if (fold_failure[f].empty()) continue;
        for (int idx : folds[f].holdout) failure_by_entry[idx] = fold_failure[f];
    }
    for (const auto& [idx, reason] : failure_by_entry) {
        failed[idx] = 1;
        report.failed_entries.push_back(idx);
        report.failure_reasons.push_back(reason);
    }

    std::vector<int> ok;
    for (int i = 0; i < n; ++i)
        if (!failed[i]) ok.push_back(i);
    report.n_successful = static_cast<int>(ok.size());
    if (ok.empty())
        throw DomainError("every cross-validation fold failed; first reason: " + fold_failure[0]);

    for (const auto& m : methods) {
        const MethodBuffers& buf = buffers[m];
        MethodCurve curve;
        curve.method = m;
        curve.entry_errors = buf.entry_errors;
        curve.mean_curve.resize(maxc);
        curve.std_curve.resize(maxc);
        for (int c = 0; c < maxc; ++c) {
            double sum = 0.0;
            for (int i : ok) sum += buf.entry_errors(i, c);
            double mean = sum / ok.size();
            double var = 0.0;
            for (int i : ok) var += std::pow(buf.entry_errors(i, c) - mean, 2);
            curve.mean_curve(c) = mean;
            curve.std_curve(c) = std::sqrt(var / ok.size());
        }
        curve.optimum = 1;
        for (int c = 1; c < maxc; ++c)
            if (curve.mean_curve(c) < curve.mean_curve(curve.optimum - 1)) curve.optimum = c + 1;
        curve.mean_at_optimum = curve.mean_curve(curve.optimum - 1);
        curve.std_at_optimum = curve.std_curve(curve.optimum - 1);

        if (ok.size() >= 2) {
            std::vector<Eigen::VectorXd> fields;
            for (int i : ok) fields.push_back(buf.vertex_errors[i].col(curve.optimum - 1));
            auto [mean_field, std_field] = local_error_fields(fields);
            curve.local_mean = std::move(mean_field);
            curve.local_std = std::move(std_field);
        }
        report.curves.push_back(std::move(curve));
    }

    // Reverse (surface-to-prediction) errors at each method's optimum.
    for (auto& curve : report.curves)
        curve.reverse_errors = Eigen::VectorXd::Constant(n, kNaN);
    for (size_t f = 0; f < folds.size(); ++f) {
        if (!fold_failure[f].empty()) continue;
        ShapeTablePair table = training_table(data, folds[f].holdout);
        for (auto& curve : report.curves) {
            LrrModel lrr;
            JointPcaModel pca;
            if (curve.method == "lrr") lrr = fit_lrr(table, std::min(curve.optimum, table.n() - 1));
            else pca = fit_joint_pca(table);
            for (int idx : folds[f].holdout) {
                const DatasetEntry& e = data.entries[idx];
                Eigen::VectorXd x0 = flatten(e.skull, table.skull_layout) - table.x_template;
                Eigen::VectorXd y;
                if (curve.method == "lrr") {
                    y = table.y_template +
                        predict_centered(lrr, x0, std::min(curve.optimum, lrr.r));
                } else {
                    FitWeights w =
                        best_fit_weights(pca, x0, std::min(curve.optimum, pca.count()));
                    y = reconstruct_face(pca, w);
                }
                TriMesh predicted =
                    unflatten_mesh(y - table.y_template, table.y_template, table.face_layout,
                                   e.deformed);
                SurfaceIndex pred_index(predicted);
                double sum = 0.0;
                for (const auto& v : e.face.vertices) sum += pred_index.distance(v);
                curve.reverse_errors(idx) = sum / e.face.vertices.size();
            }
        }
    }
    for (auto& curve : report.curves) {
        double sum = 0.0;
        for (int i : ok) sum += curve.reverse_errors(i);
        curve.reverse_mean_at_optimum = sum / ok.size();
    }

    return report;
}

std::pair<Eigen::VectorXd, Eigen::VectorXd> local_error_fields(
    const std::vector<Eigen::VectorXd>& fields) {
    if (fields.size() < 2)
        throw DomainError("per-vertex statistics need at least 2 fields, got " +
                          std::to_string(fields.size()));
    const auto dim = fields[0].size();
    for (const auto& f : fields)
        if (f.size() != dim) throw DomainError("per-vertex fields have mismatched sizes");
    Eigen::VectorXd mean = Eigen::VectorXd::Zero(dim);
    for (const auto& f : fields) mean += f;
    mean /= static_cast<double>(fields.size());
    Eigen::VectorXd var = Eigen::VectorXd::Zero(dim);
    for (const auto& f : fields) var += (f - mean).cwiseAbs2();
    var /= static_cast<double>(fields.size());
    return {mean, var.cwiseSqrt()};
}

Histogram error_histogram(const std::vector<double>& errors, double bin_width) {
    if (!(bin_width > 0.0)) throw DomainError("histogram bin width must be positive");
    Histogram h;
    h.bin_width = bin_width;
    for (double e : errors) {
        if (!(e >= 0.0)) throw DomainError("histogram values must be non-negative");
        auto bin = static_cast<size_t>(std::floor(e / bin_width));
        if (h.counts.size() <= bin) h.counts.resize(bin + 1, 0);
        ++h.counts[bin];
    }
    return h;
}

void save_cv_report(const std::string& dir, const CvReport& report, const TriMesh& topology,
                    double hist_bin_width) {
    std::error_code ec;
    fs::create_directories(dir, ec);
    if (ec) throw IoError("cannot create directory " + dir + ": " + ec.message());

    json summary;
    summary["n_entries"] = report.entry_ids.size();
    summary["n_successful"] = report.n_successful;
    summary["max_components"] = report.max_components;
    json failed = json::array();
    for (size_t k = 0; k < report.failed_entries.size(); ++k)
        failed.push_back({{"id", report.entry_ids[report.failed_entries[k]]},
                          {"reason", report.failure_reasons[k]}});
    summary["failed"] = std::move(failed);
    json methods = json::array();
    for (const auto& c : report.curves)
        methods.push_back({{"method", c.method},
                           {"optimum", c.optimum},
                           {"mean_error", c.mean_at_optimum},
                           {"std_error", c.std_at_optimum},
                           {"reverse_mean_error", c.reverse_mean_at_optimum}});
    summary["methods"] = std::move(methods);
    {
        std::ofstream out(fs::path(dir) / "summary.json");
        if (!out) throw IoError("cannot write " + dir + "/summary.json");
        out << summary.dump(2) << '\n';
    }

    {
        std::ofstream out(fs::path(dir) / "curves.csv");
        if (!out) throw IoError("cannot write " + dir + "/curves.csv");
        out.precision(17);
        out << "method,components,mean,std\n";
        for (const auto& c : report.curves)
            for (int k = 0; k < c.mean_curve.size(); ++k)
                out << c.method << ',' << (k + 1) << ',' << c.mean_curve(k) << ','
                    << c.std_curve(k) << '\n';
    }

    {
        std::ofstream out(fs::path(dir) / "hist.csv");
        if (!out) throw IoError("cannot write " + dir + "/hist.csv");
        out.precision(17);
        out << "method,bin_lo,bin_hi,count\n";
        for (const auto& c : report.curves) {
            std::vector<double> at_opt;
            for (int i = 0; i < c.entry_errors.rows(); ++i) {
                double e = c.entry_errors(i, c.optimum - 1);
                if (std::isfinite(e)) at_opt.push_back(e);
            }
            Histogram h = error_histogram(at_opt, hist_bin_width);
            for (size_t b = 0; b < h.counts.size(); ++b)
                out << c.method << ',' << b * h.bin_width << ',' << (b + 1) * h.bin_width << ','
                    << h.counts[b] << '\n';
        }
    }

    const MethodCurve* headline = nullptr;
    for (const auto& c : report.curves)
        if (c.method == "lrr") headline = &c;
    if (!headline && !report.curves.empty()) headline = &report.curves.front();
    if (headline && headline->local_mean.size() > 0) {
        if (static_cast<size_t>(headline->local_mean.size()) != topology.vertices.size())
            throw LayoutError("report topology has " + std::to_string(topology.vertices.size()) +
                              " vertices but local fields have " +
                              std::to_string(headline->local_mean.size()));
        std::vector<double> mean_q(headline->local_mean.data(),
                                   headline->local_mean.data() + headline->local_mean.size());
        std::vector<double> std_q(headline->local_std.data(),
                                  headline->local_std.data() + headline->local_std.size());
        save_ply((fs::path(dir) / "local_mean.ply").string(), topology, mean_q);
        save_ply((fs::path(dir) / "local_std.ply").string(), topology, std_q);
    }
}

}  // namespace craniomorph
