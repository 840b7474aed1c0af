// craniomorph: command-line front end for the skull-to-face shape pipeline.
//
// Exit codes: 0 success, 2 usage, 3 io, 4 format, 5 layout, 6 domain,
// 7 numerical, 8 internal. Every failure prints a single-line JSON error
// record on stderr; progress logs are single-line JSON on stderr too.

#include <CLI11.hpp>
#include <json.hpp>

#include <filesystem>
#include <fstream>
#include <functional>
#include <iomanip>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

#include "craniomorph/dataset.hpp"
#include "craniomorph/densify.hpp"
#include "craniomorph/error.hpp"
#include "craniomorph/joint_pca.hpp"
#include "craniomorph/landmarks.hpp"
#include "craniomorph/lrr.hpp"
#include "craniomorph/mesh_io.hpp"
#include "craniomorph/model_io.hpp"
#include "craniomorph/registration.hpp"
#include "craniomorph/shape_table.hpp"
#include "craniomorph/synth.hpp"
#include "craniomorph/validation.hpp"

namespace fs = std::filesystem;
using nlohmann::json;
using namespace craniomorph;

namespace {

void log_line(json j) { std::cerr << j.dump() << '\n'; }

void log_event(const std::string& event, json fields = json::object()) {
    fields["event"] = event;
    log_line(std::move(fields));
}

// --config file: JSON object whose top-level scalar keys apply to every
// subcommand and whose object-valued keys scope to the matching subcommand.
// Command-line flags always win over config values.
json load_config(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw IoError("cannot open config " + path);
    try {
        json doc;
        in >> doc;
        if (!doc.is_object()) throw FormatError("config " + path + ": expected a JSON object");
        return doc;
    } catch (const json::exception& e) {
        throw FormatError("config " + path + ": " + e.what());
    }
}

json scoped_config(const json& config, const std::string& sub) {
    json scope = json::object();
    for (const auto& [key, value] : config.items())
        if (!value.is_object()) scope[key] = value;
    if (config.contains(sub) && config[sub].is_object())
        for (const auto& [key, value] : config[sub].items()) scope[key] = value;
    return scope;
}

// Applies config values to options the user did not pass on the command line.
struct ConfigBinder {
    json scope = json::object();
    std::vector<std::function<void()>> actions;

    template <typename T>
    void bind(CLI::Option* opt, T& var, const std::string& key) {
        if (!scope.contains(key)) return;
        json value = scope[key];
        actions.push_back([opt, &var, value] {
            if (opt->count() == 0) {
                try {
                    var = value.get<T>();
                } catch (const json::exception&) {
                    throw FormatError("config key \"" + opt->get_name() +
                                      "\" has the wrong type: " + value.dump());
                }
            }
        });
    }

    void apply() const {
        for (const auto& a : actions) a();
    }
};

std::string long_name(const std::string& spec) {
    std::istringstream in(spec);
    std::string token;
    while (std::getline(in, token, ','))
        if (token.rfind("--", 0) == 0) return token.substr(2);
    return spec;
}

template <typename T>
CLI::Option* opt(CLI::App* sub, ConfigBinder& binder, const std::string& name, T& var,
                 const std::string& desc) {
    CLI::Option* o = sub->add_option(name, var, desc);
    binder.bind(o, var, long_name(name));
    return o;
}

std::vector<std::string> split_list(const std::string& csv) {
    std::vector<std::string> out;
    std::istringstream in(csv);
    std::string token;
    while (std::getline(in, token, ','))
        if (!token.empty()) out.push_back(token);
    return out;
}

json stats_json(const DistanceStats& s) {
    return {{"mean", s.mean}, {"median", s.median}, {"std", s.std}, {"max", s.max}};
}

// ---------------------------------------------------------------- densify --

struct DensifyOpts {
    std::string landmarks, mesh, out;
    int iterations = 1;
};

void run_densify(const DensifyOpts& o) {
    LandmarkSet lm = load_landmarks(o.landmarks);
    TriMesh mesh = load_mesh(o.mesh);
    log_event("loaded", {{"landmarks", lm.size()},
                         {"vertices", mesh.vertices.size()},
                         {"triangles", mesh.triangles.size()}});
    LandmarkSet refined = densify(mesh, lm, o.iterations);
    save_landmarks(o.out, refined);
    log_event("wrote", {{"path", o.out}, {"landmarks", refined.size()}});
}

// --------------------------------------------------------------- register --

struct RegisterOpts {
    std::string reference, target, out, summary;
    RegistrationParams params;
};

void run_register(const RegisterOpts& o) {
    TriMesh reference = load_mesh(o.reference);
    TriMesh target = load_mesh(o.target);
    log_event("loaded", {{"reference_vertices", reference.vertices.size()},
                         {"target_vertices", target.vertices.size()}});
    CorrespondenceResult res = register_reference(reference, target, o.params);
    save_mesh(o.out, res.deformed_reference);
    log_event("registered", {{"converged", res.converged},
                             {"outliers", res.outlier_count()},
                             {"forward_mean", res.forward_stats.mean},
                             {"backward_median", res.backward_stats.median}});
    log_event("wrote", {{"path", o.out}});
    if (!o.summary.empty()) {
        json doc;
        doc["converged"] = res.converged;
        doc["outliers"] = res.outlier_count();
        doc["forward"] = stats_json(res.forward_stats);
        doc["backward"] = stats_json(res.backward_stats);
        std::vector<std::vector<double>> sim(4, std::vector<double>(4));
        for (int i = 0; i < 4; ++i)
            for (int j = 0; j < 4; ++j) sim[i][j] = res.similarity(i, j);
        doc["similarity"] = sim;
        std::ofstream out(o.summary);
        if (!out) throw IoError("cannot write " + o.summary);
        out << doc.dump(2) << '\n';
        log_event("wrote", {{"path", o.summary}});
    }
}

// --------------------------------------------------------------- assemble --

struct AssembleOpts {
    std::string dataset, out;
};

void run_assemble(const AssembleOpts& o) {
    Dataset data = load_dataset(o.dataset);
    log_event("loaded", {{"entries", data.size()}});
    std::vector<std::pair<LandmarkSet, TriMesh>> entries;
    for (const auto& e : data.entries) entries.emplace_back(e.skull, e.deformed);
    ShapeTablePair table = assemble(entries);
    save_table(o.out, table);
    log_event("wrote",
              {{"path", o.out}, {"n", table.n()}, {"p", table.p()}, {"q", table.q()}});
}

// -------------------------------------------------------------------- fit --

struct FitOpts {
    std::string table, method = "lrr", out;
    int components = 0;
};

void run_fit(const FitOpts& o) {
    if (o.method != "lrr" && o.method != "pca")
        throw UsageError("--method must be lrr or pca, got " + o.method);
    ShapeTablePair table = load_table(o.table);
    log_event("loaded", {{"n", table.n()}, {"p", table.p()}, {"q", table.q()}});
    if (o.method == "lrr") {
        if (o.components < 1)
            throw UsageError("fitting lrr requires --components >= 1");
        LrrModel model = fit_lrr(table, o.components);
        save_model(o.out, model);
        log_event("wrote",
                  {{"path", o.out}, {"components", model.r}, {"truncated", model.truncated}});
    } else {
        JointPcaModel model = fit_joint_pca(table);
        if (o.components > 0 && o.components < model.count()) {
            model.eigenvalues = model.eigenvalues.head(o.components).eval();
            model.components = model.components.leftCols(o.components).eval();
        }
        save_model(o.out, model);
        log_event("wrote", {{"path", o.out}, {"components", model.count()}});
    }
}

// ---------------------------------------------------------------- predict --

struct PredictOpts {
    std::string model, skull, out, topology;
    int components = 0;  // 0 = all the model has
};

void run_predict(const PredictOpts& o) {
    std::string kind = model_kind(o.model);
    LandmarkSet skull = load_landmarks(o.skull);
    Eigen::VectorXd y;
    Eigen::VectorXd y_template;
    CoordinateLayout face_layout;
    int used = 0;
    if (kind == "lrr") {
        LrrModel model = load_lrr_model(o.model);
        Eigen::VectorXd x0 = flatten(skull, model.skull_layout) - model.x_template;
        used = o.components > 0 ? std::min(o.components, model.r) : model.r;
        y = model.y_template + predict_centered(model, x0, used);
        y_template = model.y_template;
        face_layout = model.face_layout;
    } else if (kind == "joint_pca") {
        JointPcaModel model = load_pca_model(o.model);
        Eigen::VectorXd x0 = flatten(skull, model.skull_layout) - model.x_template;
        used = o.components > 0 ? std::min(o.components, model.count()) : model.count();
        FitWeights weights = best_fit_weights(model, x0, used);
        y = reconstruct_face(model, weights);
        y_template = model.y_template;
        face_layout = model.face_layout;
    } else {
        throw FormatError(o.model + ": unknown model kind " + kind);
    }
    log_event("predicted", {{"model", kind}, {"components", used}});

    TriMesh predicted;
    if (o.topology.empty()) {  // point cloud
        predicted.vertices = unflatten(y - y_template, y_template, face_layout);
    } else {
        // unflatten_mesh checks the vertex count against the layout
        predicted = unflatten_mesh(y - y_template, y_template, face_layout,
                                   load_mesh(o.topology));
    }
    save_mesh(o.out, predicted);
    log_event("wrote", {{"path", o.out}, {"vertices", predicted.vertices.size()}});
}

// --------------------------------------------------------------- crossval --

struct CrossvalOpts {
    std::string dataset, out, methods = "lrr,pca";
    int max_components = 0;  // 0 = n - 2
    int jobs = 1;
    double hist_bin = 0.25;
};

void run_crossval(const CrossvalOpts& o) {
    Dataset data = load_dataset(o.dataset);
    int maxc = o.max_components > 0 ? o.max_components : data.size() - 2;
    std::vector<std::string> methods = split_list(o.methods);
    log_event("loaded", {{"entries", data.size()}, {"max_components", maxc}});
    CvReport report = loo_crossval(data, methods, maxc, o.jobs);
    for (const auto& c : report.curves)
        log_event("curve", {{"method", c.method},
                            {"optimum", c.optimum},
                            {"mean_error", c.mean_at_optimum},
                            {"std_error", c.std_at_optimum}});
    save_cv_report(o.out, report, data.entries.front().deformed, o.hist_bin);
    log_event("wrote", {{"path", o.out}, {"successful", report.n_successful}});
}

// ------------------------------------------------------------------ synth --

struct SynthOpts {
    std::string out;
    SynthSpec spec;  // templates filled from the size options below
    int midplane = 47, lateral = 198, face_vertices = 1741;
};

void run_synth(SynthOpts o) {
    o.spec.skull_template = make_skull_template(o.midplane, o.lateral);
    o.spec.face_template = make_face_template(o.face_vertices);
    SynthDataset data = generate(o.spec);
    save_dataset(o.out, data);
    log_event("wrote", {{"path", o.out},
                        {"entries", data.skulls.size()},
                        {"skull_points", o.spec.skull_template.size()},
                        {"face_vertices", o.spec.face_template.vertices.size()}});
}

// ----------------------------------------------------------------- report --

struct ReportOpts {
    std::string in, out, export_maps;
};

void run_report(const ReportOpts& o) {
    fs::path dir(o.in);
    std::ifstream sin(dir / "summary.json");
    if (!sin) throw IoError("cannot open " + (dir / "summary.json").string());
    json summary;
    try {
        sin >> summary;
    } catch (const json::exception& e) {
        throw FormatError((dir / "summary.json").string() + ": " + e.what());
    }

    std::ifstream cin_(dir / "curves.csv");
    if (!cin_) throw IoError("cannot open " + (dir / "curves.csv").string());
    // method -> mean curve, indexed by component count
    std::vector<std::pair<std::string, std::vector<double>>> curves;
    std::string line;
    std::getline(cin_, line);  // header
    while (std::getline(cin_, line)) {
        if (line.empty()) continue;
        auto fields = split_list(line);
        if (fields.size() < 3)
            throw FormatError((dir / "curves.csv").string() + ": bad row: " + line);
        auto it = std::find_if(curves.begin(), curves.end(),
                               [&](const auto& c) { return c.first == fields[0]; });
        if (it == curves.end()) {
            curves.push_back({fields[0], {}});
            it = std::prev(curves.end());
        }
        try {
            it->second.push_back(std::stod(fields[2]));
        } catch (const std::exception&) {
            throw FormatError((dir / "curves.csv").string() + ": bad number in row: " + line);
        }
    }

    std::ostringstream table;
    table << "cross-validation: " << summary["n_entries"] << " entries, "
          << summary["n_successful"] << " successful, max "
          << summary["max_components"] << " components\n\n";
    table << std::left << std::setw(8) << "method" << std::setw(9) << "optimum"
          << std::setw(12) << "mean (mm)" << std::setw(12) << "std (mm)"
          << "reverse (mm)\n";
    table << std::fixed << std::setprecision(4);
    for (const auto& m : summary["methods"])
        table << std::left << std::setw(8) << m["method"].get<std::string>() << std::setw(9)
              << m["optimum"].get<int>() << std::setw(12) << m["mean_error"].get<double>()
              << std::setw(12) << m["std_error"].get<double>()
              << m["reverse_mean_error"].get<double>() << '\n';
    if (!summary["failed"].empty()) {
        table << "\nexcluded folds:\n";
        for (const auto& f : summary["failed"])
            table << "  " << f["id"].get<std::string>() << ": " << f["reason"].get<std::string>()
                  << '\n';
    }
    table << "\n" << std::left << std::setw(12) << "components";
    for (const auto& c : curves) table << std::setw(12) << c.first;
    table << '\n';
    size_t rows = 0;
    for (const auto& c : curves) rows = std::max(rows, c.second.size());
    for (size_t k = 0; k < rows; ++k) {
        table << std::left << std::setw(12) << (k + 1);
        for (const auto& c : curves) {
            if (k < c.second.size()) table << std::setw(12) << c.second[k];
            else table << std::setw(12) << "-";
        }
        table << '\n';
    }

    if (o.out.empty()) {
        std::cout << table.str();
    } else {
        std::ofstream out(o.out);
        if (!out) throw IoError("cannot write " + o.out);
        out << table.str();
        log_event("wrote", {{"path", o.out}});
    }

    if (!o.export_maps.empty()) {
        std::error_code ec;
        fs::create_directories(o.export_maps, ec);
        if (ec) throw IoError("cannot create directory " + o.export_maps + ": " + ec.message());
        bool any = false;
        for (const char* name : {"local_mean.ply", "local_std.ply"}) {
            if (!fs::exists(dir / name)) continue;
            fs::copy_file(dir / name, fs::path(o.export_maps) / name,
                          fs::copy_options::overwrite_existing, ec);
            if (ec) throw IoError("cannot copy " + (dir / name).string() + ": " + ec.message());
            log_event("wrote", {{"path", (fs::path(o.export_maps) / name).string()}});
            any = true;
        }
        if (!any)
            throw IoError("no local error maps found in " + o.in +
                          " (need at least 2 successful folds)");
    }
}

// ------------------------------------------------------------------- main --

int run(int argc, char** argv) {
    // config must be known before options are built so it can seed defaults
    json config = json::object();
    for (int i = 1; i < argc; ++i) {
        std::string arg = argv[i];
        if (arg == "--config" && i + 1 < argc) config = load_config(argv[i + 1]);
        else if (arg.rfind("--config=", 0) == 0) config = load_config(arg.substr(9));
    }

    CLI::App app{"craniomorph: facial shape prediction from skull landmarks"};
    app.require_subcommand(1);
    std::string config_path;
    app.add_option("--config", config_path,
                   "JSON config file; command-line flags override its values");

    DensifyOpts densify_opts;
    ConfigBinder densify_cfg{scoped_config(config, "densify")};
    CLI::App* densify_cmd =
        app.add_subcommand("densify", "refine a landmark template with geodesic midpoints");
    opt(densify_cmd, densify_cfg, "--landmarks", densify_opts.landmarks,
        "input landmark template (JSON)")->required();
    opt(densify_cmd, densify_cfg, "--mesh", densify_opts.mesh, "surface carrying the landmarks")
        ->required();
    opt(densify_cmd, densify_cfg, "--iterations", densify_opts.iterations,
        "refinement passes (default 1)");
    opt(densify_cmd, densify_cfg, "--out", densify_opts.out, "output landmark file")->required();
    densify_cmd->callback([&] {
        densify_cfg.apply();
        run_densify(densify_opts);
    });

    RegisterOpts register_opts;
    ConfigBinder register_cfg{scoped_config(config, "register")};
    CLI::App* register_cmd =
        app.add_subcommand("register", "deform a reference mesh onto a target surface");
    opt(register_cmd, register_cfg, "--reference", register_opts.reference, "reference mesh")
        ->required();
    opt(register_cmd, register_cfg, "--target", register_opts.target, "target mesh")->required();
    opt(register_cmd, register_cfg, "--out", register_opts.out, "deformed reference output")
        ->required();
    opt(register_cmd, register_cfg, "--summary", register_opts.summary,
        "write registration statistics to this JSON file");
    opt(register_cmd, register_cfg, "--init-radius", register_opts.params.init_radius,
        "max initial mean distance (mm) considered pre-aligned");
    opt(register_cmd, register_cfg, "--levels", register_opts.params.levels,
        "elastic coarse-to-fine levels");
    opt(register_cmd, register_cfg, "--alpha-start", register_opts.params.alpha_start,
        "smoothness weight at the coarsest level");
    opt(register_cmd, register_cfg, "--alpha-end", register_opts.params.alpha_end,
        "smoothness weight at the finest level");
    opt(register_cmd, register_cfg, "--level-iters", register_opts.params.level_iters,
        "elastic iterations per level");
    opt(register_cmd, register_cfg, "--similarity-iters", register_opts.params.similarity_iters,
        "closest-point iterations for the similarity stage");
    opt(register_cmd, register_cfg, "--outlier", register_opts.params.outlier,
        "distance (mm) beyond which a vertex leaves the data term");
    opt(register_cmd, register_cfg, "--snap", register_opts.params.snap,
        "final projection threshold (mm)");
    opt(register_cmd, register_cfg, "--tol", register_opts.params.tol,
        "relative objective improvement declaring convergence");
    register_cmd->callback([&] {
        register_cfg.apply();
        run_register(register_opts);
    });

    AssembleOpts assemble_opts;
    ConfigBinder assemble_cfg{scoped_config(config, "assemble")};
    CLI::App* assemble_cmd =
        app.add_subcommand("assemble", "build centered skull/face data tables from a dataset");
    opt(assemble_cmd, assemble_cfg, "--dataset", assemble_opts.dataset, "dataset directory")
        ->required();
    opt(assemble_cmd, assemble_cfg, "--out", assemble_opts.out, "output table directory")
        ->required();
    assemble_cmd->callback([&] {
        assemble_cfg.apply();
        run_assemble(assemble_opts);
    });

    FitOpts fit_opts;
    ConfigBinder fit_cfg{scoped_config(config, "fit")};
    CLI::App* fit_cmd = app.add_subcommand("fit", "fit a prediction model to assembled tables");
    opt(fit_cmd, fit_cfg, "--table", fit_opts.table, "table directory from `assemble`")
        ->required();
    opt(fit_cmd, fit_cfg, "--method", fit_opts.method, "lrr (default) or pca");
    opt(fit_cmd, fit_cfg, "--components", fit_opts.components,
        "component count (required for lrr; truncates pca)");
    opt(fit_cmd, fit_cfg, "--out", fit_opts.out, "output model file (JSON)")->required();
    fit_cmd->callback([&] {
        fit_cfg.apply();
        run_fit(fit_opts);
    });

    PredictOpts predict_opts;
    ConfigBinder predict_cfg{scoped_config(config, "predict")};
    CLI::App* predict_cmd =
        app.add_subcommand("predict", "predict a face surface from skull landmarks");
    opt(predict_cmd, predict_cfg, "--model", predict_opts.model, "model file from `fit`")
        ->required();
    opt(predict_cmd, predict_cfg, "--skull", predict_opts.skull, "skull landmark file")
        ->required();
    opt(predict_cmd, predict_cfg, "--components", predict_opts.components,
        "use only the first N components (default: all)");
    opt(predict_cmd, predict_cfg, "--topology", predict_opts.topology,
        "mesh supplying output connectivity (default: point cloud)");
    opt(predict_cmd, predict_cfg, "--out", predict_opts.out, "predicted mesh output")->required();
    predict_cmd->callback([&] {
        predict_cfg.apply();
        run_predict(predict_opts);
    });

    CrossvalOpts crossval_opts;
    ConfigBinder crossval_cfg{scoped_config(config, "crossval")};
    CLI::App* crossval_cmd = app.add_subcommand(
        "crossval", "leave-one-out cross-validation over a dataset (mirrored pairs held out together)");
    opt(crossval_cmd, crossval_cfg, "--dataset", crossval_opts.dataset, "dataset directory")
        ->required();
    opt(crossval_cmd, crossval_cfg, "--methods", crossval_opts.methods,
        "comma-separated subset of lrr,pca");
    opt(crossval_cmd, crossval_cfg, "--max-components", crossval_opts.max_components,
        "largest component count to evaluate (default n-2)");
    opt(crossval_cmd, crossval_cfg, "--jobs", crossval_opts.jobs,
        "fold-level worker threads (results are independent of this)");
    opt(crossval_cmd, crossval_cfg, "--hist-bin", crossval_opts.hist_bin,
        "error histogram bin width (mm)");
    opt(crossval_cmd, crossval_cfg, "--out", crossval_opts.out, "report output directory")
        ->required();
    crossval_cmd->callback([&] {
        crossval_cfg.apply();
        run_crossval(crossval_opts);
    });

    SynthOpts synth_opts;
    ConfigBinder synth_cfg{scoped_config(config, "synth")};
    CLI::App* synth_cmd =
        app.add_subcommand("synth", "generate a synthetic skull/face dataset with known truth");
    opt(synth_cmd, synth_cfg, "--out", synth_opts.out, "dataset output directory")->required();
    opt(synth_cmd, synth_cfg, "--seed", synth_opts.spec.seed, "RNG seed (default 0)");
    opt(synth_cmd, synth_cfg, "--n", synth_opts.spec.n, "number of individuals");
    opt(synth_cmd, synth_cfg, "--latent-dim", synth_opts.spec.latent_dim,
        "true latent dimension");
    opt(synth_cmd, synth_cfg, "--noise", synth_opts.spec.noise_sigma,
        "coordinate noise sigma (mm)");
    opt(synth_cmd, synth_cfg, "--decay", synth_opts.spec.latent_decay,
        "latent amplitude decay per mode");
    opt(synth_cmd, synth_cfg, "--skull-scale", synth_opts.spec.skull_scale,
        "skull loading amplitude (mm)");
    opt(synth_cmd, synth_cfg, "--face-scale", synth_opts.spec.face_scale,
        "face loading amplitude (mm)");
    opt(synth_cmd, synth_cfg, "--midplane", synth_opts.midplane, "skull midplane landmark count");
    opt(synth_cmd, synth_cfg, "--lateral", synth_opts.lateral, "skull lateral landmark count");
    opt(synth_cmd, synth_cfg, "--face-vertices", synth_opts.face_vertices,
        "face template vertex count");
    synth_cmd->callback([&] {
        synth_cfg.apply();
        run_synth(synth_opts);
    });

    ReportOpts report_opts;
    ConfigBinder report_cfg{scoped_config(config, "report")};
    CLI::App* report_cmd =
        app.add_subcommand("report", "render a crossval report directory as a text table");
    opt(report_cmd, report_cfg, "--in", report_opts.in, "report directory from `crossval`")
        ->required();
    opt(report_cmd, report_cfg, "--out", report_opts.out,
        "write the table to this file (default: stdout)");
    opt(report_cmd, report_cfg, "--export-maps", report_opts.export_maps,
        "copy the local error map meshes into this directory");
    report_cmd->callback([&] {
        report_cfg.apply();
        run_report(report_opts);
    });

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp&) {
        std::cout << app.help();  // delegates to the parsed subcommand
        return 0;
    } catch (const CLI::ParseError& e) {
        throw UsageError(e.what());
    }
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    try {
        return run(argc, argv);
    } catch (const Error& e) {
        log_line({{"error",
                   {{"kind", e.kind()}, {"exit_code", e.exit_code()}, {"message", e.what()}}}});
        return e.exit_code();
    } catch (const std::exception& e) {
        log_line({{"error", {{"kind", "internal"}, {"exit_code", 8}, {"message", e.what()}}}});
        return 8;
    }
}
