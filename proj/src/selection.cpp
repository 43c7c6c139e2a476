#include "rankroute/selection.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <numeric>
#include <set>
#include <stdexcept>

namespace rr {

std::vector<std::string> consistency_filter(const std::vector<std::vector<std::string>>& supports,
                                            double tau) {
    if (supports.empty()) throw std::invalid_argument("consistency_filter: need at least one setting");
    if (tau <= 0.0 || tau > 1.0) throw std::invalid_argument("consistency_filter: tau must be in (0,1]");

    std::vector<std::string> order;
    std::map<std::string, int> counts;
    for (const auto& support : supports)
        for (const auto& name : support) {
            if (!counts.count(name)) order.push_back(name);
            ++counts[name];
        }

    std::vector<std::string> kept;
    const double n = static_cast<double>(supports.size());
    for (const auto& name : order)
        if (static_cast<double>(counts[name]) / n >= tau) kept.push_back(name);
    return kept;
}

namespace {

// Pearson correlation over the given rows; constant columns correlate with
// nothing.
double abs_correlation(const DataMatrix& x, const std::vector<std::size_t>& rows, std::size_t a,
                       std::size_t b) {
    const double n = static_cast<double>(rows.size());
    double ma = 0.0, mb = 0.0;
    for (const std::size_t r : rows) {
        ma += x.at(r, a);
        mb += x.at(r, b);
    }
    ma /= n;
    mb /= n;
    double cov = 0.0, va = 0.0, vb = 0.0;
    for (const std::size_t r : rows) {
        const double da = x.at(r, a) - ma;
        const double db = x.at(r, b) - mb;
        cov += da * db;
        va += da * da;
        vb += db * db;
    }
    if (va < 1e-24 || vb < 1e-24) return 0.0;
    return std::abs(cov / std::sqrt(va * vb));
}

std::size_t index_of(const std::vector<std::string>& schema, const std::string& name) {
    const auto it = std::find(schema.begin(), schema.end(), name);
    if (it == schema.end()) throw std::invalid_argument("unknown feature name: " + name);
    return static_cast<std::size_t>(it - schema.begin());
}

}  // namespace

std::vector<std::string> redundancy_prune(const DataMatrix& x, const std::vector<double>& y,
                                          const std::vector<std::string>& schema,
                                          const std::vector<std::string>& kept,
                                          const std::vector<double>& coefficients,
                                          const RedundancyConfig& config,
                                          std::vector<std::string>* warnings) {
    if (kept.empty()) throw std::invalid_argument("redundancy_prune: kept set must be non-empty");
    if (x.rows != y.size()) throw std::invalid_argument("redundancy_prune: X/y size mismatch");

    // quantile classes over y: sort rows by label, cut into n_bins chunks
    std::vector<std::size_t> by_label(x.rows);
    std::iota(by_label.begin(), by_label.end(), 0);
    std::stable_sort(by_label.begin(), by_label.end(),
                     [&](std::size_t a, std::size_t b) { return y[a] < y[b]; });

    std::vector<std::vector<std::size_t>> classes;
    const std::size_t bins = static_cast<std::size_t>(std::max(1, config.n_bins));
    for (std::size_t b = 0; b < bins; ++b) {
        const std::size_t lo = b * x.rows / bins;
        const std::size_t hi = (b + 1) * x.rows / bins;
        if (hi > lo) classes.emplace_back(by_label.begin() + static_cast<std::ptrdiff_t>(lo),
                                          by_label.begin() + static_cast<std::ptrdiff_t>(hi));
    }
    std::vector<std::vector<std::size_t>> usable;
    for (auto& cls : classes) {
        if (cls.size() < 3) {
            if (warnings)
                warnings->push_back("redundancy_prune: class with " + std::to_string(cls.size()) +
                                    " instances skipped");
            continue;
        }
        usable.push_back(std::move(cls));
    }
    if (usable.empty()) return kept;  // nothing to measure on

    const std::size_t m = kept.size();
    std::vector<std::size_t> cols(m);
    for (std::size_t i = 0; i < m; ++i) cols[i] = index_of(schema, kept[i]);

    // link features correlated above rho in every usable class
    std::vector<std::vector<std::size_t>> adjacency(m);
    for (std::size_t i = 0; i < m; ++i)
        for (std::size_t j = i + 1; j < m; ++j) {
            bool linked = true;
            for (const auto& cls : usable)
                if (abs_correlation(x, cls, cols[i], cols[j]) <= config.rho) {
                    linked = false;
                    break;
                }
            if (linked) {
                adjacency[i].push_back(j);
                adjacency[j].push_back(i);
            }
        }

    // connected components; each keeps its highest-|coefficient| member
    std::vector<bool> visited(m, false);
    std::set<std::string> survivors;
    for (std::size_t start = 0; start < m; ++start) {
        if (visited[start]) continue;
        std::vector<std::size_t> component, stack{start};
        visited[start] = true;
        while (!stack.empty()) {
            const std::size_t cur = stack.back();
            stack.pop_back();
            component.push_back(cur);
            for (const std::size_t next : adjacency[cur])
                if (!visited[next]) {
                    visited[next] = true;
                    stack.push_back(next);
                }
        }
        std::size_t best = component.front();
        for (const std::size_t member : component) {
            const double cur = std::abs(coefficients[cols[member]]);
            const double top = std::abs(coefficients[cols[best]]);
            if (cur > top || (cur == top && member < best)) best = member;
        }
        survivors.insert(kept[best]);
    }

    std::vector<std::string> out;
    for (const auto& name : kept)
        if (survivors.count(name)) out.push_back(name);
    return out;
}

SelectionReport run_selection(const DataMatrix& x, const std::vector<double>& y,
                              const std::vector<std::string>& schema, const SelectionConfig& config) {
    if (x.rows != y.size() || x.cols != schema.size())
        throw std::invalid_argument("run_selection: shape mismatch");
    if (x.rows < 4) throw std::invalid_argument("run_selection: too few rows");

    SelectionReport report;
    report.schema = schema;
    report.tau = config.tau;
    report.rho = config.redundancy.rho;
    report.alpha = config.alpha > 0.0 ? config.alpha : select_alpha_cv(x, y);

    // settings = row shards (round-robin), each refit independently
    const int n_settings = std::max(1, config.n_settings);
    std::vector<std::vector<std::string>> supports;
    for (int s = 0; s < n_settings; ++s) {
        std::vector<std::size_t> rows;
        for (std::size_t r = 0; r < x.rows; ++r)
            if (static_cast<int>(r % static_cast<std::size_t>(n_settings)) == s) rows.push_back(r);
        if (rows.size() < 2) continue;
        std::vector<double> y_s;
        for (const std::size_t r : rows) y_s.push_back(y[r]);
        const LassoFit fit = fit_l1_probe(x.select_rows(rows), y_s, report.alpha);
        report.per_setting_coefficients.push_back(fit.coefficients);
        std::vector<std::string> support;
        for (const std::size_t j : fit.support()) support.push_back(schema[j]);
        supports.push_back(std::move(support));
    }

    const LassoFit full_fit = fit_l1_probe(x, y, report.alpha);
    report.full_fit_coefficients = full_fit.coefficients;

    std::set<std::string> in_any_support;
    for (const auto& support : supports) in_any_support.insert(support.begin(), support.end());
    const std::vector<std::string> consistent_list = consistency_filter(supports, config.tau);
    const std::set<std::string> consistent(consistent_list.begin(), consistent_list.end());

    const std::set<std::string> pinned(config.pinned.begin(), config.pinned.end());
    for (const auto& name : config.pinned)
        if (std::find(schema.begin(), schema.end(), name) == schema.end())
            throw std::invalid_argument("run_selection: pinned feature not in schema: " + name);

    std::vector<std::string> stage2;  // schema order
    std::vector<DroppedFeature> dropped;
    for (const auto& name : schema) {
        if (pinned.count(name) || consistent.count(name)) {
            stage2.push_back(name);
        } else if (in_any_support.count(name)) {
            dropped.push_back({name, "inconsistent"});
        } else {
            dropped.push_back({name, "zero-weight"});
        }
    }

    std::vector<std::string> final_kept =
        redundancy_prune(x, y, schema, stage2, report.full_fit_coefficients, config.redundancy,
                         &report.warnings);
    // pinned features survive pruning too
    std::set<std::string> final_set(final_kept.begin(), final_kept.end());
    for (const auto& name : config.pinned) final_set.insert(name);

    for (const auto& name : stage2) {
        if (final_set.count(name))
            report.kept.push_back(name);
        else
            dropped.push_back({name, "redundant"});
    }
    // deterministic report order: schema order for drops as well
    std::stable_sort(dropped.begin(), dropped.end(), [&](const DroppedFeature& a, const DroppedFeature& b) {
        return index_of(schema, a.name) < index_of(schema, b.name);
    });
    report.dropped = std::move(dropped);
    return report;
}

}  // namespace rr
