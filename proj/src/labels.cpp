#include "rankroute/labels.hpp"

#include <stdexcept>

namespace rr {

namespace {

double mode_utility(const RankingInstance& instance, const ModeOutcome& outcome,
                    const UtilityMetric& utility, bool& parse_failed) {
    if (outcome.has_flag("parse-failure") || outcome.ranking.order.empty()) {
        parse_failed = true;
        return 0.0;
    }
    return utility.evaluate(instance, outcome.ranking);
}

}  // namespace

AdvantageLabel advantage_label(const RankingInstance& instance, const DualModeRecord& record,
                               const UtilityMetric& utility, double lambda) {
    if (lambda < 0.0) throw std::invalid_argument("advantage_label: lambda must be >= 0");
    if (record.instance_id != instance.id)
        throw std::invalid_argument("advantage_label: record/instance id mismatch (" +
                                    record.instance_id + " vs " + instance.id + ")");

    AdvantageLabel label;
    label.instance_id = instance.id;

    bool parse_failed = false;
    const double u_non = mode_utility(instance, record.non_think, utility, parse_failed);
    const double u_think = mode_utility(instance, record.think, utility, parse_failed);
    if (parse_failed) label.flags.push_back("parse-failure");

    label.delta_utility = u_think - u_non;
    label.delta_tokens =
        static_cast<double>(record.think.tokens) - static_cast<double>(record.non_think.tokens);
    label.advantage = label.delta_utility - lambda * label.delta_tokens;
    label.weight = 1.0;  // reweighting is a later pass (router training)
    return label;
}

double tradeoff_score(double ndcg10, double tokens) { return ndcg10 - 1e-4 * tokens; }

}  // namespace rr
