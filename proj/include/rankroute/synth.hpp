#pragma once
// Desk-scale synthetic corpus: instances, embedding dumps and dual-mode logs
// with a planted subpopulation where reasoning helps. The latent hardness
// drives candidate dispersion and context alignment in the embeddings, the
// wording of the texts, and the utility gap between the two modes, so a
// router trained on the extracted features can recover the signal.

#include <cstdint>
#include <vector>

#include "rankroute/embedding.hpp"
#include "rankroute/ranking.hpp"

namespace rr {

struct SynthConfig {
    std::uint64_t seed = 1;
    std::size_t n_instances = 200;
    int n_candidates = 50;  // one target plus sampled negatives
    int dim = 16;
    int history_len = 6;
    double rec_fraction = 0.5;
    double think_helps_fraction = 0.5;
    int k = 10;
    double think_gain = 0.45;      // quality bump on the think-helps side
    double think_harm = 0.12;      // over-reasoning dip on the complement
    double parse_failure_rate = 0.01;
    long long non_think_tokens_base = 40;
    long long think_tokens_base = 240;

    void validate() const;
};

struct SynthOutput {
    std::vector<RankingInstance> instances;
    std::vector<EmbeddingDump> dumps;
    std::vector<DualModeRecord> records;
    std::vector<bool> think_helps;  // planted assignment, index-aligned
};

SynthOutput synthesize(const SynthConfig& config);

}  // namespace rr
