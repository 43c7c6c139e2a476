#include "rankroute/checklist.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace rr {

std::string direction_name(Direction d) {
    return d == Direction::FavorsThink ? "favors_think" : "favors_non_think";
}

Direction direction_from_name(const std::string& name) {
    if (name == "favors_think") return Direction::FavorsThink;
    if (name == "favors_non_think") return Direction::FavorsNonThink;
    throw std::invalid_argument("unknown checklist direction: " + name);
}

void validate_checklist(const Checklist& checklist) {
    std::map<std::string, std::vector<const ChecklistQuestion*>> by_pair;
    std::map<std::string, int> qid_count;
    for (const auto& q : checklist) {
        if (q.qid.empty() || q.text.empty() || q.pair_id.empty())
            throw std::invalid_argument("checklist question with empty qid/text/pair_id");
        by_pair[q.pair_id].push_back(&q);
        ++qid_count[q.qid];
    }
    for (const auto& [qid, count] : qid_count)
        if (count > 1) throw std::invalid_argument("duplicate checklist qid: " + qid);
    for (const auto& [pair_id, members] : by_pair) {
        if (members.size() != 2)
            throw std::invalid_argument("checklist pair " + pair_id + " must have exactly 2 questions");
        if (members[0]->direction == members[1]->direction)
            throw std::invalid_argument("checklist pair " + pair_id + " must have opposite directions");
    }
}

Checklist default_checklist() {
    Checklist list = {
        {"ctx_single_intent",
         "Is the query single-intent and unambiguous (no competing aspects)?",
         Direction::FavorsNonThink, "context_clarity"},
        {"ctx_multi_intent",
         "Is the query ambiguous or multi-intent requiring aspect disambiguation?",
         Direction::FavorsThink, "context_clarity"},
        {"cand_distinct",
         "Are the candidates clearly distinct from one another in topic and content?",
         Direction::FavorsNonThink, "candidate_ambiguity"},
        {"cand_overlapping",
         "Do many candidates overlap or cover near-identical content, making them hard to tell apart?",
         Direction::FavorsThink, "candidate_ambiguity"},
        {"rel_clear_leader",
         "Does one candidate stand out as clearly the most relevant to the request?",
         Direction::FavorsNonThink, "relevance_separability"},
        {"rel_near_ties",
         "Are several candidates nearly tied in relevance, requiring fine-grained comparison?",
         Direction::FavorsThink, "relevance_separability"},
        {"hist_stable",
         "Does the interaction history reflect a single stable preference?",
         Direction::FavorsNonThink, "history_stability"},
        {"hist_shifting",
         "Does the interaction history show shifting or diverse preferences over time?",
         Direction::FavorsThink, "history_stability"},
        {"answer_confident",
         "Can the correct ranking be produced directly, without working through intermediate steps?",
         Direction::FavorsNonThink, "answer_confidence"},
        {"answer_uncertain",
         "Would step-by-step reasoning materially change the ranking of these candidates?",
         Direction::FavorsThink, "answer_confidence"},
    };
    validate_checklist(list);
    return list;
}

double extract_yes_no(double yes_logit, double no_logit) {
    if (!std::isfinite(yes_logit) || !std::isfinite(no_logit))
        throw std::invalid_argument("extract_yes_no: non-finite logit");
    const double m = std::max(yes_logit, no_logit);
    const double ey = std::exp(yes_logit - m);
    const double en = std::exp(no_logit - m);
    return ey / (ey + en);
}

DifficultySignals aggregate_pairs(const ProbeResult& result, const Checklist& checklist) {
    validate_checklist(checklist);

    DifficultySignals out;
    out.instance_id = result.instance_id;

    std::vector<std::string> pair_order;
    std::map<std::string, const ChecklistQuestion*> think_q, non_think_q;
    for (const auto& q : checklist) {
        if (!think_q.count(q.pair_id) && !non_think_q.count(q.pair_id)) pair_order.push_back(q.pair_id);
        (q.direction == Direction::FavorsThink ? think_q : non_think_q)[q.pair_id] = &q;
    }

    for (const auto& pair_id : pair_order) {
        const auto* qt = think_q.at(pair_id);
        const auto* qn = non_think_q.at(pair_id);
        const auto pt = result.p_yes.find(qt->qid);
        if (pt == result.p_yes.end())
            throw std::invalid_argument("aggregate_pairs: missing probe result for qid " + qt->qid);
        const auto pn = result.p_yes.find(qn->qid);
        if (pn == result.p_yes.end())
            throw std::invalid_argument("aggregate_pairs: missing probe result for qid " + qn->qid);
        out.signals.emplace_back(pair_id, pt->second - pn->second);
    }
    return out;
}

}  // namespace rr
