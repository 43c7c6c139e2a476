#pragma once
// Threshold sweep, Pareto frontier, deployment anchors and frozen policies.
// The routing rule compares predicted advantage against eta times the
// estimated extra cost; sweeping eta traces the accuracy-efficiency curve.

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "rankroute/common.hpp"
#include "rankroute/errors.hpp"
#include "rankroute/metrics.hpp"
#include "rankroute/ranking.hpp"

namespace rr {

// Think iff a_hat - eta * delta_cost_est >= 0 (boundary routes to Think).
Mode route(double a_hat, double delta_cost_est, double eta);

struct FrontierPoint {
    double eta = 0.0;
    double mean_tokens = 0.0;
    double utility = 0.0;
    double think_fraction = 0.0;
    bool nondominated = false;
};

// Per-instance realized utility and token cost of both logged modes,
// aligned by index.
struct ModeStats {
    std::vector<std::string> ids;
    std::vector<double> u_non, u_think;
    std::vector<double> t_non, t_think;

    std::size_t size() const { return ids.size(); }
    double mean_tokens_think() const;
    double mean_tokens_non() const;
    double mean_utility_think() const;
    double mean_utility_non() const;
};

// Evaluates each record's two outcomes under `metric`; records must cover
// every instance (missing ones are an error).
ModeStats summarize_modes(const std::vector<RankingInstance>& instances,
                          const std::vector<DualModeRecord>& records, const UtilityMetric& metric);

struct SweepInputs {
    const std::vector<double>& predictions;  // a_hat per instance
    const std::vector<double>& delta_costs;  // estimated extra tokens, >= 1
    const ModeStats& stats;

    void validate() const;  // aligned lengths
};

// One operating point: route each instance at eta, average the realized
// logged tokens and utility.
FrontierPoint evaluate_eta(const SweepInputs& inputs, double eta);

std::vector<FrontierPoint> sweep_eta(const SweepInputs& inputs, const std::vector<double>& grid,
                                     Exec exec = Exec::Parallel);

// 0, then n_log log-spaced values spanning the flip-threshold range of the
// positive predictions, then one value above every flip threshold.
std::vector<double> default_eta_grid(const std::vector<double>& predictions,
                                     const std::vector<double>& delta_costs, std::size_t n_log = 200);

// Non-dominated subset: keep p unless some q has tokens <= and utility >=
// with one strict. Exact duplicates keep one representative. Output sorted by
// tokens ascending with the nondominated flag set.
std::vector<FrontierPoint> pareto_filter(const std::vector<FrontierPoint>& points);

// --- anchor selection ------------------------------------------------------
// The *_index functions operate on already-normalized (t, u) pairs in [0,1]
// and implement the bare selection arithmetic; the *_point functions wrap
// them with min-max normalization over the frontier.

struct NormalizedPoint {
    double t = 0.0;
    double u = 0.0;
};

std::vector<NormalizedPoint> normalize_frontier(const std::vector<FrontierPoint>& frontier);

struct KneeIndexResult {
    std::size_t index = 0;
    bool collinear = false;  // no interior point leaves the endpoint chord
};

// Interior point with the largest signed distance above the chord joining
// the first and last points (t ascending). Collinear inputs fall back to the
// lowest-token endpoint.
KneeIndexResult knee_index(const std::vector<NormalizedPoint>& pts);

// argmin of w_t * t^2 + w_u * (1 - u)^2; ties prefer lower tokens.
std::size_t utopia_index(const std::vector<NormalizedPoint>& pts, double w_t, double w_u);

struct AnchorChoice {
    FrontierPoint point;
    std::size_t index = 0;
    std::vector<std::string> flags;  // "no-knee", "knee-fallback-utopia"
};

// Fewer than 3 frontier points fall back to the utopia anchor (flagged).
AnchorChoice knee_point(const std::vector<FrontierPoint>& frontier);
AnchorChoice utopia_point(const std::vector<FrontierPoint>& frontier, double w_t = 1.0,
                          double w_u = 1.0);
// Lowest-token point with utility >= u_base + epsilon; throws
// EpsilonInfeasibleError (carrying the maximum achievable utility) otherwise.
AnchorChoice epsilon_point(const std::vector<FrontierPoint>& frontier, double u_base, double epsilon);
AnchorChoice umax_point(const std::vector<FrontierPoint>& frontier);

// Grid value minimizing the squared budget gap, refined by bisection between
// its grid neighbours (expected tokens are non-increasing in eta). Ties
// prefer the larger (cheaper) eta.
double calibrate_eta(double target_mean_tokens, const SweepInputs& inputs,
                     const std::vector<double>& grid);

// --- frozen deployment policy ----------------------------------------------

enum class Anchor { Knee, Utopia, Epsilon, UMax, Manual };

std::string anchor_name(Anchor a);
Anchor anchor_from_name(const std::string& name);

struct PolicyArtifact {
    Anchor anchor = Anchor::Manual;
    double eta_frozen = 0.0;
    double expected_mean_tokens = 0.0;
    double expected_utility = 0.0;
    double expected_think_fraction = 0.0;
    // anchor parameters, where applicable
    std::optional<double> w_t, w_u, u_base, epsilon;
    // provenance
    std::string model_hash;
    std::string data_hash;
    std::string created_at;
    std::vector<std::string> flags;

    Mode route(double a_hat, double delta_cost_est) const;

    std::string save_text() const;
    static PolicyArtifact load_text(const std::string& text);
};

PolicyArtifact freeze_policy(Anchor anchor, double eta, const FrontierPoint& validation_point,
                             const std::string& model_hash, const std::string& data_hash,
                             const std::string& created_at);

}  // namespace rr
