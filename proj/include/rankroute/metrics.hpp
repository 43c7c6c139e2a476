#pragma once
// Listwise ranking metrics: NDCG@k, Recall@k, Top-1 agreement, pairwise accuracy.

#include <map>
#include <string>
#include <vector>

#include "rankroute/ranking.hpp"

namespace rr {

// Metric value plus a degenerate-input marker. Batch evaluation never aborts
// on empty qrels; it returns 0.0 (or 1.0 for degenerate pairwise input) with
// the flag set instead.
struct MetricResult {
    double value = 0.0;
    bool flagged = false;  // "no relevant items" / "degenerate"

    operator double() const { return value; }
};

using GradeMap = std::map<std::string, int>;

// Gain 2^rel - 1, discount log2(pos + 1), normalized by the ideal DCG.
// All-zero qrels yield {0.0, flagged}.
MetricResult ndcg_at_k(const RankedList& ranking, const GradeMap& qrels, int k);

// |top-k  intersect  positives| / |positives|; positives are grades > 0.
MetricResult recall_at_k(const RankedList& ranking, const GradeMap& qrels, int k);

// 1 iff the first item carries a maximal grade (any tie at the max counts).
// Throws on an empty ranking.
int top1_agreement(const RankedList& ranking, const GradeMap& qrels);

// Fraction of common-item pairs ordered identically in `pred` and `truth`.
// Fewer than 2 common items yields {1.0, flagged}.
MetricResult pairwise_accuracy(const std::vector<std::string>& pred,
                               const std::vector<std::string>& truth);

// Canonical ground-truth total order: descending grade, ties broken by
// candidate-list position.
std::vector<std::string> truth_order(const RankingInstance& instance);

// Utility metric selector used for advantage labeling and evaluation.
struct UtilityMetric {
    enum class Kind { Ndcg, Recall, Top1, Pairwise };
    Kind kind = Kind::Ndcg;
    int k = 10;

    std::string name() const;              // e.g. "ndcg@10"
    static UtilityMetric parse(const std::string& name);

    // Utility of a mode outcome on its instance. Unparseable/empty rankings
    // score as-is (an empty list earns 0 for ndcg/recall/top1 and the
    // degenerate pairwise value).
    double evaluate(const RankingInstance& instance, const RankedList& ranking) const;
};

}  // namespace rr
