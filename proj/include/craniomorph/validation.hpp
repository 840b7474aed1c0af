#pragma once

#include <Eigen/Core>
#include <string>
#include <utility>
#include <vector>

#include "craniomorph/dataset.hpp"
#include "craniomorph/shape_table.hpp"

namespace craniomorph {

// Per-method leave-one-out error curve. entry_errors(i, c-1) is the mean
// point-to-surface distance (mm) from the c-component prediction of entry i
// to its true face surface; rows of failed folds are NaN.
struct MethodCurve {
    std::string method;
    Eigen::MatrixXd entry_errors;  // n_entries x max_components
    Eigen::VectorXd mean_curve;    // per component count, successful entries only
    Eigen::VectorXd std_curve;     // population std per component count
    int optimum = 0;               // 1-based count minimizing mean_curve; ties -> fewest
    double mean_at_optimum = 0.0;
    double std_at_optimum = 0.0;
    // Surface-to-prediction direction at the optimum: diagnostic only, never
    // used for model selection.
    Eigen::VectorXd reverse_errors;  // per entry (NaN = failed fold)
    double reverse_mean_at_optimum = 0.0;
    // Per predicted vertex at the optimum, across successful entries.
    // Empty when fewer than two folds succeeded.
    Eigen::VectorXd local_mean, local_std;
};

struct CvReport {
    std::vector<std::string> entry_ids;
    int max_components = 0;
    int n_successful = 0;
    std::vector<MethodCurve> curves;
    std::vector<int> failed_entries;           // dataset indices, excluded everywhere
    std::vector<std::string> failure_reasons;  // parallel to failed_entries
};

// Table assembled from the entries NOT listed in holdout (dataset order kept).
// A fold's training table is bit-identical to the table of a dataset from
// which the held-out entries were physically removed.
ShapeTablePair training_table(const Dataset& data, const std::vector<int>& holdout);

// Leave-one-out cross-validation over individuals: entries sharing an
// `individual` key (mirrored halves) are held out together. One max-count fit
// per fold serves every component count by nesting. methods may contain
// "pca" and/or "lrr". Requires n >= 3 and 1 <= max_components <= n - 2.
// Folds whose fit or prediction throws are excluded from every statistic and
// reported in failed_entries. jobs > 1 distributes folds across threads;
// results are identical regardless of jobs.
CvReport loo_crossval(const Dataset& data, const std::vector<std::string>& methods,
                      int max_components, int jobs = 1);

// Population mean/std per coordinate across >= 2 equally sized fields.
std::pair<Eigen::VectorXd, Eigen::VectorXd> local_error_fields(
    const std::vector<Eigen::VectorXd>& fields);

// Fixed-width bins anchored at 0: counts[i] covers [i*w, (i+1)*w).
struct Histogram {
    double bin_width = 0.0;
    std::vector<long> counts;
};
Histogram error_histogram(const std::vector<double>& errors, double bin_width);

// Writes summary.json, curves.csv, hist.csv and, when local fields are
// available, local_mean.ply / local_std.ply (headline method: "lrr" when
// present) with the error value stored as the per-vertex quality property.
// `topology` supplies the predicted mesh connectivity.
void save_cv_report(const std::string& dir, const CvReport& report, const TriMesh& topology,
                    double hist_bin_width = 0.25);

}  // namespace craniomorph
