#pragma once
// Two-stage feature refinement: per-setting L1 probes merged by cross-setting
// consistency, then intra-class redundancy pruning over advantage bins.

#include <string>
#include <vector>

#include "rankroute/lasso.hpp"
#include "rankroute/matrix.hpp"

namespace rr {

struct DroppedFeature {
    std::string name;
    std::string reason;  // "zero-weight" | "inconsistent" | "redundant"
};

struct SelectionReport {
    std::vector<std::string> schema;  // full input schema
    std::vector<std::vector<double>> per_setting_coefficients;
    std::vector<double> full_fit_coefficients;
    double alpha = 0.0;
    double tau = 0.0;
    double rho = 0.0;
    std::vector<std::string> kept;  // in schema order
    std::vector<DroppedFeature> dropped;
    std::vector<std::string> warnings;
};

// Keeps a feature iff it appears in at least `tau` of the per-setting
// supports. Output preserves first-appearance order across settings.
std::vector<std::string> consistency_filter(const std::vector<std::vector<std::string>>& supports,
                                            double tau);

struct RedundancyConfig {
    double rho = 0.9;  // absolute within-class correlation threshold
    int n_bins = 3;    // advantage quantile classes
};

// Bins rows into y-quantile classes, links features whose absolute
// correlation exceeds rho in every usable class, and keeps the member with
// the largest |coefficient| from each linked group. Classes with fewer than
// 3 rows are skipped (with a warning).
std::vector<std::string> redundancy_prune(const DataMatrix& x, const std::vector<double>& y,
                                          const std::vector<std::string>& schema,
                                          const std::vector<std::string>& kept,
                                          const std::vector<double>& coefficients,
                                          const RedundancyConfig& config,
                                          std::vector<std::string>* warnings = nullptr);

struct SelectionConfig {
    double alpha = 0.0;  // <= 0: choose by cross-validation
    double tau = 0.6;
    RedundancyConfig redundancy;
    int n_settings = 3;                          // row shards acting as settings
    std::vector<std::string> pinned = {"delta_cost_est"};  // never dropped
};

// Full pipeline stage over a standardized feature table.
SelectionReport run_selection(const DataMatrix& x, const std::vector<double>& y,
                              const std::vector<std::string>& schema, const SelectionConfig& config);

}  // namespace rr
