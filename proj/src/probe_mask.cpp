#include "rankroute/probe_mask.hpp"

#include <stdexcept>

namespace rr {

std::size_t ProbeLayout::total_tokens() const {
    return blocks.empty() ? prefix_len : blocks.back().end;
}

int ProbeLayout::block_of(std::size_t token) const {
    if (token < prefix_len) return -1;
    for (std::size_t b = 0; b < blocks.size(); ++b)
        if (token >= blocks[b].begin && token < blocks[b].end) return static_cast<int>(b);
    return -1;
}

void ProbeLayout::validate() const {
    if (prefix_len < 1) throw std::invalid_argument("probe layout: prefix must be non-empty");
    std::size_t cursor = prefix_len;
    for (const auto& block : blocks) {
        if (block.begin != cursor)
            throw std::invalid_argument("probe layout: blocks must be contiguous after the prefix");
        if (block.end <= block.begin)
            throw std::invalid_argument("probe layout: empty block " + block.qid);
        if (block.answer_anchor != block.end - 1)
            throw std::invalid_argument("probe layout: anchor must be the block's last token");
        cursor = block.end;
    }
}

ProbeLayout build_probe_layout(std::size_t prefix_len, const std::vector<std::size_t>& question_lengths,
                               const std::vector<std::string>& qids) {
    if (prefix_len < 1) throw std::invalid_argument("build_probe_layout: prefix_len must be >= 1");
    if (!qids.empty() && qids.size() != question_lengths.size())
        throw std::invalid_argument("build_probe_layout: qids/lengths size mismatch");

    ProbeLayout layout;
    layout.prefix_len = prefix_len;
    std::size_t cursor = prefix_len;
    for (std::size_t q = 0; q < question_lengths.size(); ++q) {
        const std::size_t len = question_lengths[q];
        if (len < 2)
            throw std::invalid_argument(
                "build_probe_layout: question needs >= 2 tokens (text plus answer anchor)");
        ProbeBlock block;
        block.qid = qids.empty() ? "q" + std::to_string(q) : qids[q];
        block.begin = cursor;
        block.end = cursor + len;
        block.answer_anchor = block.end - 1;
        layout.blocks.push_back(block);
        cursor = block.end;
    }
    layout.validate();
    return layout;
}

BlockMask build_block_diagonal_mask(const ProbeLayout& layout) {
    layout.validate();
    const std::size_t t = layout.total_tokens();
    BlockMask mask(t);

    // prefix rows are plain causal; probe rows see the prefix and their own
    // block only
    for (std::size_t i = 0; i < t; ++i) {
        const int bi = layout.block_of(i);
        for (std::size_t j = 0; j <= i; ++j) {
            if (j < layout.prefix_len) {
                mask.set(i, j, true);
            } else {
                mask.set(i, j, layout.block_of(j) == bi && bi >= 0);
            }
        }
    }
    return mask;
}

MaskRle mask_to_rle(const BlockMask& mask) {
    MaskRle rle;
    rle.tokens = mask.tokens();
    rle.rows.resize(mask.tokens());
    for (std::size_t i = 0; i < mask.tokens(); ++i) {
        std::size_t j = 0;
        while (j < mask.tokens()) {
            if (!mask.allowed(i, j)) {
                ++j;
                continue;
            }
            std::size_t start = j;
            while (j < mask.tokens() && mask.allowed(i, j)) ++j;
            rle.rows[i].emplace_back(start, j - start);
        }
    }
    return rle;
}

BlockMask mask_from_rle(const MaskRle& rle) {
    BlockMask mask(rle.tokens);
    if (rle.rows.size() != rle.tokens)
        throw std::invalid_argument("mask_from_rle: row count does not match token count");
    for (std::size_t i = 0; i < rle.rows.size(); ++i)
        for (const auto& [start, len] : rle.rows[i]) {
            if (start + len > rle.tokens) throw std::invalid_argument("mask_from_rle: run out of range");
            for (std::size_t j = start; j < start + len; ++j) mask.set(i, j, true);
        }
    return mask;
}

}  // namespace rr
