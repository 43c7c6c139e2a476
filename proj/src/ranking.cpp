#include "rankroute/ranking.hpp"

#include <algorithm>
#include <stdexcept>
#include <unordered_set>

namespace rr {

std::string task_name(Task t) { return t == Task::IR ? "ir" : "rec"; }

Task task_from_name(const std::string& name) {
    if (name == "ir") return Task::IR;
    if (name == "rec") return Task::Rec;
    throw std::invalid_argument("unknown task: " + name);
}

std::string mode_name(Mode m) { return m == Mode::Think ? "think" : "non_think"; }

Mode mode_from_name(const std::string& name) {
    if (name == "think") return Mode::Think;
    if (name == "non_think") return Mode::NonThink;
    throw std::invalid_argument("unknown mode: " + name);
}

bool RankingInstance::has_candidate(const std::string& item_id) const {
    return std::any_of(candidates.begin(), candidates.end(),
                       [&](const Candidate& c) { return c.id == item_id; });
}

int RankingInstance::grade(const std::string& item_id) const {
    const auto it = qrels.find(item_id);
    return it == qrels.end() ? 0 : it->second;
}

void RankingInstance::validate() const {
    if (candidates.size() < 2)
        throw std::invalid_argument("instance " + id + ": needs at least 2 candidates");
    if (k < 1 || static_cast<std::size_t>(k) > candidates.size())
        throw std::invalid_argument("instance " + id + ": k out of range");
    std::unordered_set<std::string> ids;
    for (const auto& c : candidates) {
        if (!ids.insert(c.id).second)
            throw std::invalid_argument("instance " + id + ": duplicate candidate id " + c.id);
    }
    for (const auto& [item, g] : qrels) {
        if (!ids.count(item))
            throw std::invalid_argument("instance " + id + ": qrels id not in candidates: " + item);
        if (g < 0)
            throw std::invalid_argument("instance " + id + ": negative grade for " + item);
    }
}

bool ModeOutcome::has_flag(const std::string& f) const {
    return std::find(flags.begin(), flags.end(), f) != flags.end();
}

void DualModeRecord::validate() const {
    if (non_think.ranking.instance_id != instance_id || think.ranking.instance_id != instance_id)
        throw std::invalid_argument("dual-mode record " + instance_id +
                                    ": outcomes reference a different instance");
}

void validate_ranking(const RankedList& ranking, const RankingInstance& instance) {
    std::unordered_set<std::string> seen;
    for (const auto& item : ranking.order) {
        if (!seen.insert(item).second)
            throw std::invalid_argument("ranking for " + instance.id + ": duplicate id " + item);
        if (!instance.has_candidate(item))
            throw std::invalid_argument("ranking for " + instance.id + ": unknown id " + item);
    }
}

}  // namespace rr
