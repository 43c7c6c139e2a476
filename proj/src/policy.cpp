#include "rankroute/policy.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>
#include <numeric>
#include <stdexcept>

#include <json.hpp>

namespace rr {

namespace {
using ojson = nlohmann::ordered_json;

double mean_of(const std::vector<double>& v) {
    return v.empty() ? 0.0 : std::accumulate(v.begin(), v.end(), 0.0) / static_cast<double>(v.size());
}
}  // namespace

Mode route(double a_hat, double delta_cost_est, double eta) {
    if (eta < 0.0) throw std::invalid_argument("route: eta must be >= 0");
    if (delta_cost_est < 1.0)
        throw std::invalid_argument("route: delta_cost_est must be >= 1 (clamp upstream)");
    return a_hat - eta * delta_cost_est >= 0.0 ? Mode::Think : Mode::NonThink;
}

double ModeStats::mean_tokens_think() const { return mean_of(t_think); }
double ModeStats::mean_tokens_non() const { return mean_of(t_non); }
double ModeStats::mean_utility_think() const { return mean_of(u_think); }
double ModeStats::mean_utility_non() const { return mean_of(u_non); }

ModeStats summarize_modes(const std::vector<RankingInstance>& instances,
                          const std::vector<DualModeRecord>& records, const UtilityMetric& metric) {
    std::map<std::string, const DualModeRecord*> by_id;
    for (const auto& r : records) by_id[r.instance_id] = &r;

    ModeStats stats;
    stats.ids.reserve(instances.size());
    for (const auto& instance : instances) {
        const auto it = by_id.find(instance.id);
        if (it == by_id.end())
            throw std::invalid_argument("summarize_modes: no dual-mode record for instance " +
                                        instance.id);
        const DualModeRecord& rec = *it->second;
        stats.ids.push_back(instance.id);
        stats.u_non.push_back(metric.evaluate(instance, rec.non_think.ranking));
        stats.u_think.push_back(metric.evaluate(instance, rec.think.ranking));
        stats.t_non.push_back(static_cast<double>(rec.non_think.tokens));
        stats.t_think.push_back(static_cast<double>(rec.think.tokens));
    }
    return stats;
}

void SweepInputs::validate() const {
    const std::size_t n = stats.size();
    if (predictions.size() != n || delta_costs.size() != n)
        throw std::invalid_argument("sweep inputs: predictions/delta_costs/stats lengths differ");
    for (const double d : delta_costs)
        if (d < 1.0) throw std::invalid_argument("sweep inputs: delta cost below 1");
}

FrontierPoint evaluate_eta(const SweepInputs& inputs, double eta) {
    inputs.validate();
    const std::size_t n = inputs.stats.size();
    if (n == 0) throw std::invalid_argument("evaluate_eta: empty validation set");

    double tokens = 0.0, utility = 0.0;
    std::size_t think_count = 0;
    for (std::size_t i = 0; i < n; ++i) {
        const Mode m = route(inputs.predictions[i], inputs.delta_costs[i], eta);
        if (m == Mode::Think) {
            ++think_count;
            tokens += inputs.stats.t_think[i];
            utility += inputs.stats.u_think[i];
        } else {
            tokens += inputs.stats.t_non[i];
            utility += inputs.stats.u_non[i];
        }
    }
    FrontierPoint point;
    point.eta = eta;
    point.mean_tokens = tokens / static_cast<double>(n);
    point.utility = utility / static_cast<double>(n);
    point.think_fraction = static_cast<double>(think_count) / static_cast<double>(n);
    return point;
}

std::vector<FrontierPoint> sweep_eta(const SweepInputs& inputs, const std::vector<double>& grid,
                                     Exec exec) {
    inputs.validate();
    if (grid.size() < 2) throw std::invalid_argument("sweep_eta: grid needs at least 2 values");
    std::vector<FrontierPoint> points(grid.size());
    for_each_index(exec, grid.size(), [&](std::size_t g) { points[g] = evaluate_eta(inputs, grid[g]); });
    return points;
}

std::vector<double> default_eta_grid(const std::vector<double>& predictions,
                                     const std::vector<double>& delta_costs, std::size_t n_log) {
    if (predictions.size() != delta_costs.size())
        throw std::invalid_argument("default_eta_grid: length mismatch");

    double ratio_lo = std::numeric_limits<double>::infinity();
    double ratio_hi = 0.0;
    for (std::size_t i = 0; i < predictions.size(); ++i) {
        if (predictions[i] <= 0.0) continue;
        const double flip = predictions[i] / delta_costs[i];
        ratio_lo = std::min(ratio_lo, flip);
        ratio_hi = std::max(ratio_hi, flip);
    }

    std::vector<double> grid;
    grid.push_back(0.0);
    if (ratio_hi <= 0.0) {
        // nothing routes to Think at any positive eta
        grid.push_back(1.0);
        return grid;
    }
    ratio_lo = std::min(ratio_lo, ratio_hi);
    const double log_lo = std::log(ratio_lo);
    const double log_hi = std::log(ratio_hi);
    for (std::size_t i = 0; i < n_log; ++i) {
        const double t = n_log == 1 ? 0.0
                                    : static_cast<double>(i) / static_cast<double>(n_log - 1);
        grid.push_back(std::exp(log_lo + (log_hi - log_lo) * t));
    }
    grid.push_back(ratio_hi * (1.0 + 1e-9) + 1e-300);  // above every flip threshold
    return grid;
}

std::vector<FrontierPoint> pareto_filter(const std::vector<FrontierPoint>& points) {
    if (points.empty()) throw std::invalid_argument("pareto_filter: no points");

    std::vector<FrontierPoint> sorted = points;
    std::stable_sort(sorted.begin(), sorted.end(), [](const FrontierPoint& a, const FrontierPoint& b) {
        if (a.mean_tokens != b.mean_tokens) return a.mean_tokens < b.mean_tokens;
        return a.utility > b.utility;
    });

    std::vector<FrontierPoint> kept;
    double best_utility = -std::numeric_limits<double>::infinity();
    for (const auto& p : sorted) {
        if (p.utility > best_utility) {
            FrontierPoint q = p;
            q.nondominated = true;
            kept.push_back(q);
            best_utility = p.utility;
        }
    }
    return kept;
}

std::vector<NormalizedPoint> normalize_frontier(const std::vector<FrontierPoint>& frontier) {
    if (frontier.empty()) throw std::invalid_argument("normalize_frontier: no points");
    double t_lo = frontier.front().mean_tokens, t_hi = t_lo;
    double u_lo = frontier.front().utility, u_hi = u_lo;
    for (const auto& p : frontier) {
        t_lo = std::min(t_lo, p.mean_tokens);
        t_hi = std::max(t_hi, p.mean_tokens);
        u_lo = std::min(u_lo, p.utility);
        u_hi = std::max(u_hi, p.utility);
    }
    std::vector<NormalizedPoint> out;
    out.reserve(frontier.size());
    for (const auto& p : frontier) {
        NormalizedPoint q;
        q.t = t_hi > t_lo ? (p.mean_tokens - t_lo) / (t_hi - t_lo) : 0.0;
        q.u = u_hi > u_lo ? (p.utility - u_lo) / (u_hi - u_lo) : 0.0;
        out.push_back(q);
    }
    return out;
}

KneeIndexResult knee_index(const std::vector<NormalizedPoint>& pts) {
    if (pts.size() < 3) throw std::invalid_argument("knee_index: need at least 3 points");

    std::vector<std::size_t> order(pts.size());
    std::iota(order.begin(), order.end(), 0);
    std::stable_sort(order.begin(), order.end(),
                     [&](std::size_t a, std::size_t b) { return pts[a].t < pts[b].t; });
    const NormalizedPoint a = pts[order.front()];
    const NormalizedPoint b = pts[order.back()];
    const double dx = b.t - a.t;
    const double dy = b.u - a.u;
    const double chord = std::hypot(dx, dy);
    if (chord < 1e-15) return {order.front(), true};

    // signed perpendicular distance above the endpoint chord
    auto signed_distance = [&](const NormalizedPoint& p) {
        return (dx * (p.u - a.u) - dy * (p.t - a.t)) / chord;
    };

    bool all_collinear = true;
    bool found = false;
    std::size_t best = order.front();
    double best_distance = -std::numeric_limits<double>::infinity();
    for (std::size_t k = 0; k < order.size(); ++k) {
        const double d = signed_distance(pts[order[k]]);
        if (std::abs(d) > 1e-12) all_collinear = false;
        if (k == 0 || k + 1 == order.size()) continue;  // interior points only
        if (d > best_distance) {  // strict: ties keep the lower-token point
            best_distance = d;
            best = order[k];
            found = true;
        }
    }
    if (all_collinear || !found) return {order.front(), true};
    return {best, false};
}

std::size_t utopia_index(const std::vector<NormalizedPoint>& pts, double w_t, double w_u) {
    if (pts.empty()) throw std::invalid_argument("utopia_index: no points");
    if (w_t < 0.0 || w_u < 0.0 || (w_t == 0.0 && w_u == 0.0))
        throw std::invalid_argument("utopia_index: weights must be positive");

    std::size_t best = 0;
    double best_obj = std::numeric_limits<double>::infinity();
    double best_t = std::numeric_limits<double>::infinity();
    for (std::size_t i = 0; i < pts.size(); ++i) {
        const double obj = w_t * pts[i].t * pts[i].t + w_u * (1.0 - pts[i].u) * (1.0 - pts[i].u);
        if (obj < best_obj || (obj == best_obj && pts[i].t < best_t)) {
            best_obj = obj;
            best = i;
            best_t = pts[i].t;
        }
    }
    return best;
}

AnchorChoice knee_point(const std::vector<FrontierPoint>& frontier) {
    if (frontier.empty()) throw std::invalid_argument("knee_point: empty frontier");
    if (frontier.size() < 3) {
        AnchorChoice choice = utopia_point(frontier, 1.0, 1.0);
        choice.flags.push_back("knee-fallback-utopia");
        return choice;
    }
    const KneeIndexResult res = knee_index(normalize_frontier(frontier));
    AnchorChoice choice;
    choice.index = res.index;
    choice.point = frontier[res.index];
    if (res.collinear) choice.flags.push_back("no-knee");
    return choice;
}

AnchorChoice utopia_point(const std::vector<FrontierPoint>& frontier, double w_t, double w_u) {
    if (frontier.empty()) throw std::invalid_argument("utopia_point: empty frontier");
    const std::size_t idx = utopia_index(normalize_frontier(frontier), w_t, w_u);
    return {frontier[idx], idx, {}};
}

AnchorChoice epsilon_point(const std::vector<FrontierPoint>& frontier, double u_base, double epsilon) {
    if (frontier.empty()) throw std::invalid_argument("epsilon_point: empty frontier");
    const double target = u_base + epsilon;

    std::vector<std::size_t> order(frontier.size());
    std::iota(order.begin(), order.end(), 0);
    std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
        return frontier[a].mean_tokens < frontier[b].mean_tokens;
    });

    for (const std::size_t i : order)
        if (frontier[i].utility >= target) return {frontier[i], i, {}};

    // report the best we could have achieved; the caller chooses the fallback
    double max_utility = -std::numeric_limits<double>::infinity();
    for (const auto& p : frontier) max_utility = std::max(max_utility, p.utility);
    throw EpsilonInfeasibleError("epsilon_point: no frontier point reaches utility target " +
                                     std::to_string(target) + " (max achievable " +
                                     std::to_string(max_utility) + ")",
                                 max_utility);
}

AnchorChoice umax_point(const std::vector<FrontierPoint>& frontier) {
    if (frontier.empty()) throw std::invalid_argument("umax_point: empty frontier");
    std::size_t best = 0;
    for (std::size_t i = 1; i < frontier.size(); ++i) {
        const bool better = frontier[i].utility > frontier[best].utility ||
                            (frontier[i].utility == frontier[best].utility &&
                             frontier[i].mean_tokens < frontier[best].mean_tokens);
        if (better) best = i;
    }
    return {frontier[best], best, {}};
}

double calibrate_eta(double target_mean_tokens, const SweepInputs& inputs,
                     const std::vector<double>& grid) {
    if (grid.empty()) throw std::invalid_argument("calibrate_eta: empty grid");
    inputs.validate();

    auto gap = [&](double eta) {
        const double d = evaluate_eta(inputs, eta).mean_tokens - target_mean_tokens;
        return d * d;
    };

    std::vector<double> sorted_grid = grid;
    std::sort(sorted_grid.begin(), sorted_grid.end());

    std::size_t best = 0;
    double best_gap = gap(sorted_grid[0]);
    for (std::size_t i = 1; i < sorted_grid.size(); ++i) {
        const double g = gap(sorted_grid[i]);
        if (g <= best_gap) {  // ties prefer the larger eta
            best_gap = g;
            best = i;
        }
    }

    // expected tokens are a non-increasing step function of eta, so bisection
    // between the best point's neighbours can only tighten the gap
    double lo = best > 0 ? sorted_grid[best - 1] : sorted_grid[best];
    double hi = best + 1 < sorted_grid.size() ? sorted_grid[best + 1] : sorted_grid[best];
    double best_eta = sorted_grid[best];
    for (int iter = 0; iter < 64 && hi > lo; ++iter) {
        const double mid = 0.5 * (lo + hi);
        const double g = gap(mid);
        if (g < best_gap || (g == best_gap && mid > best_eta)) {
            best_gap = g;
            best_eta = mid;
        }
        if (evaluate_eta(inputs, mid).mean_tokens > target_mean_tokens)
            lo = mid;  // spending too much: raise eta
        else
            hi = mid;
    }
    return best_eta;
}

std::string anchor_name(Anchor a) {
    switch (a) {
        case Anchor::Knee: return "knee";
        case Anchor::Utopia: return "utopia";
        case Anchor::Epsilon: return "epsilon";
        case Anchor::UMax: return "umax";
        case Anchor::Manual: return "manual";
    }
    return "manual";
}

Anchor anchor_from_name(const std::string& name) {
    if (name == "knee") return Anchor::Knee;
    if (name == "utopia") return Anchor::Utopia;
    if (name == "epsilon") return Anchor::Epsilon;
    if (name == "umax") return Anchor::UMax;
    if (name == "manual") return Anchor::Manual;
    throw std::invalid_argument("unknown anchor: " + name);
}

Mode PolicyArtifact::route(double a_hat, double delta_cost_est) const {
    return rr::route(a_hat, delta_cost_est, eta_frozen);
}

std::string PolicyArtifact::save_text() const {
    ojson doc;
    doc["format"] = "rankroute-policy";
    doc["version"] = 1;
    doc["anchor"] = anchor_name(anchor);
    doc["eta_frozen"] = eta_frozen;
    doc["expected"] = {{"mean_tokens", expected_mean_tokens},
                       {"utility", expected_utility},
                       {"think_fraction", expected_think_fraction}};
    ojson params = ojson::object();
    if (w_t) params["w_t"] = *w_t;
    if (w_u) params["w_u"] = *w_u;
    if (u_base) params["u_base"] = *u_base;
    if (epsilon) params["epsilon"] = *epsilon;
    doc["params"] = params;
    doc["provenance"] = {
        {"model_hash", model_hash}, {"data_hash", data_hash}, {"created_at", created_at}};
    doc["flags"] = flags;
    return doc.dump();
}

PolicyArtifact PolicyArtifact::load_text(const std::string& text) {
    ojson doc;
    try {
        doc = ojson::parse(text);
    } catch (const nlohmann::json::exception& e) {
        throw ParseError(std::string("policy artifact: malformed payload: ") + e.what());
    }
    try {
        if (doc.at("format").get<std::string>() != "rankroute-policy")
            throw ParseError("policy artifact: unrecognized format field");
        if (doc.at("version").get<int>() != 1) throw ParseError("policy artifact: unsupported version");

        PolicyArtifact artifact;
        artifact.anchor = anchor_from_name(doc.at("anchor").get<std::string>());
        artifact.eta_frozen = doc.at("eta_frozen").get<double>();
        if (artifact.eta_frozen < 0.0) throw ParseError("policy artifact: negative eta");
        const auto& expected = doc.at("expected");
        artifact.expected_mean_tokens = expected.at("mean_tokens").get<double>();
        artifact.expected_utility = expected.at("utility").get<double>();
        artifact.expected_think_fraction = expected.at("think_fraction").get<double>();
        const auto& params = doc.at("params");
        if (params.contains("w_t")) artifact.w_t = params.at("w_t").get<double>();
        if (params.contains("w_u")) artifact.w_u = params.at("w_u").get<double>();
        if (params.contains("u_base")) artifact.u_base = params.at("u_base").get<double>();
        if (params.contains("epsilon")) artifact.epsilon = params.at("epsilon").get<double>();
        const auto& prov = doc.at("provenance");
        artifact.model_hash = prov.at("model_hash").get<std::string>();
        artifact.data_hash = prov.at("data_hash").get<std::string>();
        artifact.created_at = prov.at("created_at").get<std::string>();
        artifact.flags = doc.at("flags").get<std::vector<std::string>>();
        return artifact;
    } catch (const nlohmann::json::exception& e) {
        throw ParseError(std::string("policy artifact: missing or mistyped field: ") + e.what());
    }
}

PolicyArtifact freeze_policy(Anchor anchor, double eta, const FrontierPoint& validation_point,
                             const std::string& model_hash, const std::string& data_hash,
                             const std::string& created_at) {
    if (eta < 0.0) throw std::invalid_argument("freeze_policy: eta must be >= 0");
    PolicyArtifact artifact;
    artifact.anchor = anchor;
    artifact.eta_frozen = eta;
    artifact.expected_mean_tokens = validation_point.mean_tokens;
    artifact.expected_utility = validation_point.utility;
    artifact.expected_think_fraction = validation_point.think_fraction;
    artifact.model_hash = model_hash;
    artifact.data_hash = data_hash;
    artifact.created_at = created_at;
    return artifact;
}

}  // namespace rr
