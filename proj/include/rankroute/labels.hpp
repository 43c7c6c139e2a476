#pragma once
// Advantage labeling: per-instance utility gain of Think over Non-Think,
// discounted by the extra token cost, plus the combined trade-off score.

#include <string>
#include <vector>

#include "rankroute/metrics.hpp"
#include "rankroute/ranking.hpp"

namespace rr {

struct AdvantageLabel {
    std::string instance_id;
    double advantage = 0.0;      // delta_utility - lambda * delta_tokens
    double weight = 1.0;         // robustness weight in (0, 1]
    double delta_utility = 0.0;  // U_think - U_non
    double delta_tokens = 0.0;   // T_think - T_non
    std::vector<std::string> flags;
};

// Labels one dual-mode record. A missing/unparseable ranking in either mode
// scores utility 0.0 for that mode and the label carries a "parse-failure"
// flag, mirroring a failed generation; batch labeling never aborts.
AdvantageLabel advantage_label(const RankingInstance& instance, const DualModeRecord& record,
                               const UtilityMetric& utility, double lambda);

// Combined effectiveness-efficiency scalar: ndcg10 - 1e-4 * tokens.
double tradeoff_score(double ndcg10, double tokens);

}  // namespace rr
