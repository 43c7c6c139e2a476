#pragma once
// Diagnostic checklist: direction-balanced Yes/No probe questions, answer
// probability extraction, and paired aggregation into difficulty signals.

#include <map>
#include <string>
#include <utility>
#include <vector>

namespace rr {

enum class Direction { FavorsNonThink, FavorsThink };

std::string direction_name(Direction d);
Direction direction_from_name(const std::string& name);

struct ChecklistQuestion {
    std::string qid;
    std::string text;
    Direction direction = Direction::FavorsNonThink;
    std::string pair_id;
};

using Checklist = std::vector<ChecklistQuestion>;

// Every pair_id must map to exactly two questions with opposite directions.
void validate_checklist(const Checklist& checklist);

// Built-in checklist: 5 direction-balanced pairs covering context clarity,
// candidate ambiguity, relevance separability, history stability and answer
// confidence. Editable via the checklist file; this is only the default.
Checklist default_checklist();

struct ProbeResult {
    std::string instance_id;
    std::map<std::string, double> p_yes;                     // qid -> probability
    std::map<std::string, std::vector<std::string>> flags;   // qid -> probe flags
};

struct DifficultySignals {
    std::string instance_id;
    std::vector<std::pair<std::string, double>> signals;  // pair_id -> value in [-1, 1]
};

// Two-way softmax over {Yes, No} logits, max-subtracted so +-1e3 magnitudes
// do not overflow. Throws on non-finite input.
double extract_yes_no(double yes_logit, double no_logit);

// signal(pair) = p_yes(think-direction question) - p_yes(non-think-direction
// question); antisymmetric under swapping the pair's direction tags.
// Pairs appear in first-encounter checklist order. Throws, naming the qid,
// when a pair member is missing from the result.
DifficultySignals aggregate_pairs(const ProbeResult& result, const Checklist& checklist);

}  // namespace rr
