#pragma once
// Probe suffix layout and the block-diagonal causal attention mask that
// isolates each checklist question from the others.

#include <cstddef>
#include <string>
#include <vector>

namespace rr {

// Token positions are 0-based; blocks are half-open [begin, end).
struct ProbeBlock {
    std::string qid;
    std::size_t begin = 0;
    std::size_t end = 0;
    std::size_t answer_anchor = 0;  // last token of the block
};

struct ProbeLayout {
    std::size_t prefix_len = 0;
    std::vector<ProbeBlock> blocks;

    std::size_t total_tokens() const;
    // index of the block containing token i, or -1 for prefix tokens
    int block_of(std::size_t token) const;
    void validate() const;
};

// Packs question blocks consecutively after the shared prefix; each block's
// answer anchor is its final token. Question lengths must be >= 2 (question
// tokens plus the anchor).
ProbeLayout build_probe_layout(std::size_t prefix_len, const std::vector<std::size_t>& question_lengths,
                               const std::vector<std::string>& qids = {});

// Dense T x T boolean attention mask, row = attending token, column =
// attended token. allowed(i, j) iff j <= i and (j is prefix or i, j share a
// block). With no probes this is the plain causal lower triangle.
class BlockMask {
public:
    BlockMask(std::size_t tokens) : tokens_(tokens), allow_(tokens * tokens, 0) {}

    bool allowed(std::size_t i, std::size_t j) const { return allow_[i * tokens_ + j] != 0; }
    void set(std::size_t i, std::size_t j, bool v) { allow_[i * tokens_ + j] = v ? 1 : 0; }
    std::size_t tokens() const { return tokens_; }

private:
    std::size_t tokens_;
    std::vector<unsigned char> allow_;
};

BlockMask build_block_diagonal_mask(const ProbeLayout& layout);

// Compact run-length form: for each row, runs of allowed columns as
// (start, length) pairs. This is the interoperability export format.
struct MaskRle {
    std::size_t tokens = 0;
    std::vector<std::vector<std::pair<std::size_t, std::size_t>>> rows;
};

MaskRle mask_to_rle(const BlockMask& mask);
BlockMask mask_from_rle(const MaskRle& rle);

}  // namespace rr
