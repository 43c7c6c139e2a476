#include "rankroute/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <unordered_map>
#include <unordered_set>

namespace rr {

namespace {

double dcg(const std::vector<int>& grades_in_order, int k) {
    double sum = 0.0;
    const std::size_t depth = std::min<std::size_t>(grades_in_order.size(), static_cast<std::size_t>(k));
    for (std::size_t pos = 0; pos < depth; ++pos) {
        const double gain = std::exp2(static_cast<double>(grades_in_order[pos])) - 1.0;
        sum += gain / std::log2(static_cast<double>(pos) + 2.0);
    }
    return sum;
}

}  // namespace

MetricResult ndcg_at_k(const RankedList& ranking, const GradeMap& qrels, int k) {
    if (k < 1) throw std::invalid_argument("ndcg_at_k: k must be >= 1");

    bool any_positive = false;
    std::vector<int> ideal;
    ideal.reserve(qrels.size());
    for (const auto& [item, g] : qrels) {
        if (g > 0) any_positive = true;
        ideal.push_back(g);
    }
    if (!any_positive) return {0.0, true};

    std::vector<int> actual;
    actual.reserve(ranking.order.size());
    for (const auto& item : ranking.order) {
        const auto it = qrels.find(item);
        actual.push_back(it == qrels.end() ? 0 : it->second);
    }

    std::sort(ideal.begin(), ideal.end(), std::greater<int>());
    const double idcg = dcg(ideal, k);
    return {dcg(actual, k) / idcg, false};
}

MetricResult recall_at_k(const RankedList& ranking, const GradeMap& qrels, int k) {
    if (k < 1) throw std::invalid_argument("recall_at_k: k must be >= 1");

    std::unordered_set<std::string> positives;
    for (const auto& [item, g] : qrels)
        if (g > 0) positives.insert(item);
    if (positives.empty()) return {0.0, true};

    std::size_t hits = 0;
    const std::size_t depth = std::min<std::size_t>(ranking.order.size(), static_cast<std::size_t>(k));
    for (std::size_t pos = 0; pos < depth; ++pos)
        if (positives.count(ranking.order[pos])) ++hits;
    return {static_cast<double>(hits) / static_cast<double>(positives.size()), false};
}

int top1_agreement(const RankedList& ranking, const GradeMap& qrels) {
    if (ranking.order.empty()) throw std::invalid_argument("top1_agreement: empty ranking");
    int max_grade = 0;
    for (const auto& [item, g] : qrels) max_grade = std::max(max_grade, g);
    if (max_grade == 0) return 0;
    const auto it = qrels.find(ranking.order.front());
    return (it != qrels.end() && it->second == max_grade) ? 1 : 0;
}

MetricResult pairwise_accuracy(const std::vector<std::string>& pred,
                               const std::vector<std::string>& truth) {
    std::unordered_map<std::string, std::size_t> pred_pos;
    for (std::size_t i = 0; i < pred.size(); ++i) pred_pos.emplace(pred[i], i);

    // common items, kept in truth order
    std::vector<std::size_t> pred_positions;
    for (const auto& item : truth) {
        const auto it = pred_pos.find(item);
        if (it != pred_pos.end()) pred_positions.push_back(it->second);
    }
    const std::size_t n = pred_positions.size();
    if (n < 2) return {1.0, true};

    std::size_t agree = 0, total = 0;
    for (std::size_t i = 0; i < n; ++i)
        for (std::size_t j = i + 1; j < n; ++j) {
            ++total;
            if (pred_positions[i] < pred_positions[j]) ++agree;
        }
    return {static_cast<double>(agree) / static_cast<double>(total), false};
}

std::vector<std::string> truth_order(const RankingInstance& instance) {
    std::vector<std::size_t> idx(instance.candidates.size());
    for (std::size_t i = 0; i < idx.size(); ++i) idx[i] = i;
    std::stable_sort(idx.begin(), idx.end(), [&](std::size_t a, std::size_t b) {
        return instance.grade(instance.candidates[a].id) > instance.grade(instance.candidates[b].id);
    });
    std::vector<std::string> order;
    order.reserve(idx.size());
    for (const std::size_t i : idx) order.push_back(instance.candidates[i].id);
    return order;
}

std::string UtilityMetric::name() const {
    switch (kind) {
        case Kind::Ndcg: return "ndcg@" + std::to_string(k);
        case Kind::Recall: return "recall@" + std::to_string(k);
        case Kind::Top1: return "top1";
        case Kind::Pairwise: return "pwacc";
    }
    return "ndcg@" + std::to_string(k);
}

UtilityMetric UtilityMetric::parse(const std::string& name) {
    UtilityMetric m;
    if (name == "top1") {
        m.kind = Kind::Top1;
        return m;
    }
    if (name == "pwacc") {
        m.kind = Kind::Pairwise;
        return m;
    }
    const auto at = name.find('@');
    const std::string base = at == std::string::npos ? name : name.substr(0, at);
    if (base == "ndcg")
        m.kind = Kind::Ndcg;
    else if (base == "recall")
        m.kind = Kind::Recall;
    else
        throw std::invalid_argument("unknown utility metric: " + name);
    if (at != std::string::npos) m.k = std::stoi(name.substr(at + 1));
    if (m.k < 1) throw std::invalid_argument("utility metric depth must be >= 1: " + name);
    return m;
}

double UtilityMetric::evaluate(const RankingInstance& instance, const RankedList& ranking) const {
    switch (kind) {
        case Kind::Ndcg: return ndcg_at_k(ranking, instance.qrels, k).value;
        case Kind::Recall: return recall_at_k(ranking, instance.qrels, k).value;
        case Kind::Top1:
            return ranking.order.empty() ? 0.0
                                         : static_cast<double>(top1_agreement(ranking, instance.qrels));
        case Kind::Pairwise: return pairwise_accuracy(ranking.order, truth_order(instance)).value;
    }
    return 0.0;
}

}  // namespace rr
