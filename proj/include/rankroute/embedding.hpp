#pragma once
// Externally produced embedding dumps and token-level hidden states.

#include <cstddef>
#include <string>
#include <vector>

namespace rr {

// Per-instance segment embeddings pooled from an LLM forward pass (or the
// synthetic generator). Exactly one of `context` / `history` is populated.
struct EmbeddingDump {
    std::string instance_id;
    int dim = 0;
    std::vector<double> context;                  // IR query embedding
    std::vector<std::vector<double>> history;     // Rec history-item embeddings
    std::vector<std::vector<double>> candidates;  // one per candidate
    long long prompt_tokens = 0;

    bool is_rec() const { return !history.empty(); }
    void validate() const;  // dims consistent, finite entries, >= 1 candidate
};

// Last-layer token states, row-major T x d. Segments are index sets into rows.
struct HiddenStates {
    std::size_t rows = 0;
    std::size_t cols = 0;
    std::vector<double> data;

    const double* row(std::size_t r) const { return data.data() + r * cols; }
};

enum class Pooling { Mean };

// Arithmetic mean of the selected rows. Throws on an empty segment or an
// out-of-range index.
std::vector<double> pool_segment(const HiddenStates& states, const std::vector<std::size_t>& segment,
                                 Pooling pooling = Pooling::Mean);

}  // namespace rr
