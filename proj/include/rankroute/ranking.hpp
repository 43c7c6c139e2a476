#pragma once
// Core domain types for listwise ranking instances and dual-mode inference logs.

#include <map>
#include <optional>
#include <string>
#include <vector>

namespace rr {

enum class Task { IR, Rec };

std::string task_name(Task t);
Task task_from_name(const std::string& name);

struct Candidate {
    std::string id;
    std::string text;
};

// One query/user context with its candidate pool, graded relevance and
// target depth K. For IR the context is a query string; for Rec it is an
// ordered interaction history.
struct RankingInstance {
    std::string id;
    Task task = Task::IR;
    std::string context;               // IR query; unused for Rec
    std::vector<std::string> history;  // Rec interaction history; empty for IR
    std::vector<Candidate> candidates;
    std::map<std::string, int> qrels;  // item_id -> relevance grade (>= 0)
    int k = 1;

    bool has_candidate(const std::string& item_id) const;
    int grade(const std::string& item_id) const;  // 0 when absent from qrels

    // Enforces: unique candidate ids, k <= |candidates|, |candidates| >= 2,
    // every qrels key present among candidates, non-negative grades.
    void validate() const;
};

struct RankedList {
    std::string instance_id;
    std::vector<std::string> order;  // item ids, best first
};

struct ModeOutcome {
    RankedList ranking;
    long long tokens = 0;  // generated-token count
    std::optional<std::string> raw_text;
    std::vector<std::string> flags;  // e.g. "parse-failure", "token-estimate"

    bool has_flag(const std::string& f) const;
};

struct DualModeRecord {
    std::string instance_id;
    ModeOutcome non_think;
    ModeOutcome think;

    void validate() const;  // both outcomes must reference instance_id
};

enum class Mode { NonThink, Think };

std::string mode_name(Mode m);
Mode mode_from_name(const std::string& name);

// Checks a ranked list against its instance: no duplicates, all ids drawn
// from the candidate set. Throws std::invalid_argument on violation.
void validate_ranking(const RankedList& ranking, const RankingInstance& instance);

}  // namespace rr
