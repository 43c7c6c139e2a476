#include "rankroute/embedding.hpp"

#include <cmath>
#include <stdexcept>

namespace rr {

void EmbeddingDump::validate() const {
    if (dim <= 0) throw std::invalid_argument("dump " + instance_id + ": dim must be positive");
    if (context.empty() == history.empty())
        throw std::invalid_argument("dump " + instance_id +
                                    ": exactly one of context/history must be set");
    if (candidates.empty()) throw std::invalid_argument("dump " + instance_id + ": no candidates");

    auto check = [&](const std::vector<double>& v, const char* what) {
        if (v.size() != static_cast<std::size_t>(dim))
            throw std::invalid_argument("dump " + instance_id + ": " + what + " has wrong length");
        for (const double x : v)
            if (!std::isfinite(x))
                throw std::invalid_argument("dump " + instance_id + ": non-finite entry in " + what);
    };
    if (!context.empty()) check(context, "context");
    for (const auto& h : history) check(h, "history item");
    for (const auto& c : candidates) check(c, "candidate");
    if (prompt_tokens < 0)
        throw std::invalid_argument("dump " + instance_id + ": negative prompt_tokens");
}

std::vector<double> pool_segment(const HiddenStates& states, const std::vector<std::size_t>& segment,
                                 Pooling pooling) {
    (void)pooling;  // Mean is the only operator
    if (segment.empty()) throw std::invalid_argument("pool_segment: empty segment");

    std::vector<double> out(states.cols, 0.0);
    for (const std::size_t r : segment) {
        if (r >= states.rows) throw std::out_of_range("pool_segment: row index out of range");
        const double* src = states.row(r);
        for (std::size_t c = 0; c < states.cols; ++c) out[c] += src[c];
    }
    const double inv = 1.0 / static_cast<double>(segment.size());
    for (double& x : out) x *= inv;
    return out;
}

}  // namespace rr
