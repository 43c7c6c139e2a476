#pragma once
// Independent brute-force oracles used by the unit and acceptance suites.
// These deliberately avoid the library's code paths: exhaustive enumeration
// instead of sorting tricks, direct loops instead of prefix sums.

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>
#include <numeric>
#include <string>
#include <vector>

#include "rankroute/matrix.hpp"
#include "rankroute/policy.hpp"
#include "rankroute/probe_mask.hpp"

namespace oracle {

inline double dcg(const std::vector<int>& grades_in_order, int k) {
    double sum = 0.0;
    for (std::size_t pos = 0; pos < grades_in_order.size() && pos < static_cast<std::size_t>(k); ++pos)
        sum += (std::pow(2.0, grades_in_order[pos]) - 1.0) /
               (std::log(static_cast<double>(pos) + 2.0) / std::log(2.0));
    return sum;
}

// ideal DCG by exhaustive enumeration over all permutations of the items
inline double ideal_dcg(std::vector<int> grades, int k) {
    std::sort(grades.begin(), grades.end());
    double best = 0.0;
    do {
        best = std::max(best, dcg(grades, k));
    } while (std::next_permutation(grades.begin(), grades.end()));
    return best;
}

inline double ndcg(const std::vector<std::string>& order, const std::map<std::string, int>& qrels,
                   int k) {
    std::vector<int> in_order;
    for (const auto& item : order) {
        const auto it = qrels.find(item);
        in_order.push_back(it == qrels.end() ? 0 : it->second);
    }
    std::vector<int> all_grades;
    for (const auto& [_, g] : qrels) all_grades.push_back(g);
    const double ideal = ideal_dcg(all_grades, k);
    if (ideal <= 0.0) return 0.0;
    return dcg(in_order, k) / ideal;
}

inline double recall(const std::vector<std::string>& order, const std::map<std::string, int>& qrels,
                     int k) {
    std::size_t positives = 0, hits = 0;
    for (const auto& [item, g] : qrels)
        if (g > 0) {
            ++positives;
            for (std::size_t pos = 0; pos < order.size() && pos < static_cast<std::size_t>(k); ++pos)
                if (order[pos] == item) {
                    ++hits;
                    break;
                }
        }
    return positives == 0 ? 0.0 : static_cast<double>(hits) / static_cast<double>(positives);
}

inline int top1(const std::vector<std::string>& order, const std::map<std::string, int>& qrels) {
    int max_grade = 0;
    for (const auto& [_, g] : qrels) max_grade = std::max(max_grade, g);
    if (order.empty() || max_grade == 0) return 0;
    const auto it = qrels.find(order.front());
    return it != qrels.end() && it->second == max_grade ? 1 : 0;
}

inline double pairwise(const std::vector<std::string>& pred, const std::vector<std::string>& truth) {
    auto position = [](const std::vector<std::string>& list, const std::string& item) {
        for (std::size_t i = 0; i < list.size(); ++i)
            if (list[i] == item) return static_cast<long>(i);
        return -1L;
    };
    long agree = 0, total = 0;
    for (std::size_t i = 0; i < truth.size(); ++i)
        for (std::size_t j = i + 1; j < truth.size(); ++j) {
            const long pi = position(pred, truth[i]);
            const long pj = position(pred, truth[j]);
            if (pi < 0 || pj < 0) continue;
            ++total;
            if (pi < pj) ++agree;
        }
    return total < 1 ? 1.0 : static_cast<double>(agree) / static_cast<double>(total);
}

// O(n^2) dominance filter with duplicate collapsing, sorted by tokens
inline std::vector<rr::FrontierPoint> pareto(const std::vector<rr::FrontierPoint>& points) {
    std::vector<rr::FrontierPoint> unique;
    for (const auto& p : points) {
        const bool dup = std::any_of(unique.begin(), unique.end(), [&](const rr::FrontierPoint& q) {
            return q.mean_tokens == p.mean_tokens && q.utility == p.utility;
        });
        if (!dup) unique.push_back(p);
    }
    std::vector<rr::FrontierPoint> kept;
    for (const auto& p : unique) {
        bool dominated = false;
        for (const auto& q : unique) {
            const bool weak = q.mean_tokens <= p.mean_tokens && q.utility >= p.utility;
            const bool strict = q.mean_tokens < p.mean_tokens || q.utility > p.utility;
            if (weak && strict) {
                dominated = true;
                break;
            }
        }
        if (!dominated) kept.push_back(p);
    }
    std::stable_sort(kept.begin(), kept.end(), [](const rr::FrontierPoint& a, const rr::FrontierPoint& b) {
        return a.mean_tokens < b.mean_tokens;
    });
    return kept;
}

// closed-form mask predicate over 0-based token positions
inline bool mask_predicate(const rr::ProbeLayout& layout, std::size_t i, std::size_t j) {
    if (j > i) return false;
    if (j < layout.prefix_len) return true;
    const int bi = layout.block_of(i);
    const int bj = layout.block_of(j);
    return bi >= 0 && bi == bj;
}

// --- exhaustive regression-tree oracle ---------------------------------------

struct OracleNode {
    int feature = -1;
    double threshold = 0.0;
    double value = 0.0;
    std::vector<OracleNode> children;  // [left, right] when split

    bool is_leaf() const { return feature < 0; }
};

struct OracleTreeParams {
    int max_depth = 3;
    int min_samples_leaf = 1;
    std::vector<bool> decreasing;  // per feature
};

inline double weighted_mean(const std::vector<std::size_t>& rows, const std::vector<double>& y,
                            const std::vector<double>& w) {
    double ws = 0.0, wy = 0.0;
    for (const auto r : rows) {
        ws += w[r];
        wy += w[r] * y[r];
    }
    return wy / ws;
}

// moment form (sum w*y^2 - 2v sum w*y + v^2 sum w): with integer-valued
// inputs the sums are exact, so gains agree bitwise with any evaluation order
inline double weighted_sse(const std::vector<std::size_t>& rows, const std::vector<double>& y,
                           const std::vector<double>& w, double value) {
    double ws = 0.0, wy = 0.0, wy2 = 0.0;
    for (const auto r : rows) {
        ws += w[r];
        wy += w[r] * y[r];
        wy2 += w[r] * y[r] * y[r];
    }
    return wy2 - 2.0 * value * wy + value * value * ws;
}

inline OracleNode build_oracle_tree(const rr::DataMatrix& x, const std::vector<double>& y,
                                    const std::vector<double>& w, std::vector<std::size_t> rows,
                                    const OracleTreeParams& params, double lo, double hi, int depth) {
    OracleNode node;
    node.value = std::clamp(weighted_mean(rows, y, w), lo, hi);
    if (depth >= params.max_depth ||
        rows.size() < 2 * static_cast<std::size_t>(params.min_samples_leaf))
        return node;

    const double node_sse = weighted_sse(rows, y, w, node.value);
    double best_gain = 1e-12;
    int best_feature = -1;
    double best_threshold = 0.0, best_left = 0.0, best_right = 0.0;

    for (std::size_t f = 0; f < x.cols; ++f) {
        std::vector<double> values;
        for (const auto r : rows) values.push_back(x.at(r, f));
        std::sort(values.begin(), values.end());
        values.erase(std::unique(values.begin(), values.end()), values.end());
        for (std::size_t v = 0; v + 1 < values.size(); ++v) {
            const double threshold = 0.5 * (values[v] + values[v + 1]);
            std::vector<std::size_t> left, right;
            for (const auto r : rows) (x.at(r, f) <= threshold ? left : right).push_back(r);
            if (left.size() < static_cast<std::size_t>(params.min_samples_leaf) ||
                right.size() < static_cast<std::size_t>(params.min_samples_leaf))
                continue;
            const double v_left = std::clamp(weighted_mean(left, y, w), lo, hi);
            const double v_right = std::clamp(weighted_mean(right, y, w), lo, hi);
            if (params.decreasing[f] && v_left < v_right) continue;
            const double gain = node_sse - weighted_sse(left, y, w, v_left) -
                                weighted_sse(right, y, w, v_right);
            // scanning order is ascending feature then ascending threshold, so
            // keeping strict improvements realizes the lowest-index tie-break
            if (gain > best_gain) {
                best_gain = gain;
                best_feature = static_cast<int>(f);
                best_threshold = threshold;
                best_left = v_left;
                best_right = v_right;
            }
        }
    }
    if (best_feature < 0) return node;

    node.feature = best_feature;
    node.threshold = best_threshold;
    std::vector<std::size_t> left, right;
    for (const auto r : rows)
        (x.at(r, static_cast<std::size_t>(best_feature)) <= best_threshold ? left : right).push_back(r);
    double left_lo = lo, left_hi = hi, right_lo = lo, right_hi = hi;
    if (params.decreasing[static_cast<std::size_t>(best_feature)]) {
        const double mid = 0.5 * (best_left + best_right);
        left_lo = mid;
        right_hi = mid;
    }
    node.children.push_back(build_oracle_tree(x, y, w, left, params, left_lo, left_hi, depth + 1));
    node.children.push_back(build_oracle_tree(x, y, w, right, params, right_lo, right_hi, depth + 1));
    return node;
}

inline double oracle_tree_predict(const OracleNode& node, const double* row) {
    if (node.is_leaf()) return node.value;
    return oracle_tree_predict(node.children[row[node.feature] <= node.threshold ? 0 : 1], row);
}

}  // namespace oracle
