#include "rankroute/synth.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include "rankroute/common.hpp"

namespace rr {

namespace {

const char* kTopics[] = {"jazz records",   "hiking gear",   "indie games",  "noir films",
                         "sourdough",      "astronomy",     "city travel",  "fountain pens",
                         "board games",    "houseplants",   "road cycling", "spy novels"};
constexpr std::size_t kTopicCount = sizeof(kTopics) / sizeof(kTopics[0]);

std::vector<double> random_unit(Rng& rng, int dim) {
    std::vector<double> v(static_cast<std::size_t>(dim));
    double norm2 = 0.0;
    for (auto& x : v) {
        x = rng.normal();
        norm2 += x * x;
    }
    const double inv = 1.0 / std::sqrt(std::max(norm2, 1e-12));
    for (auto& x : v) x *= inv;
    return v;
}

std::vector<double> jitter(Rng& rng, const std::vector<double>& base, double sigma) {
    std::vector<double> v = base;
    double norm2 = 0.0;
    for (auto& x : v) {
        x += sigma * rng.normal();
        norm2 += x * x;
    }
    const double inv = 1.0 / std::sqrt(std::max(norm2, 1e-12));
    for (auto& x : v) x *= inv;
    return v;
}

double lerp(double lo, double hi, double t) { return lo + (hi - lo) * t; }

// target rank implied by a quality score in [0, 1]; rank 1 is best
int rank_from_quality(double quality, int n, Rng& rng) {
    const int span = std::min(n, 30);
    const double noisy = std::clamp(quality + 0.03 * rng.normal(), 0.0, 1.0);
    const int pos = 1 + static_cast<int>(std::floor((1.0 - noisy) * static_cast<double>(span - 1)));
    return std::clamp(pos, 1, n);
}

RankedList make_ranking(const std::string& instance_id, const std::vector<std::string>& negatives,
                        const std::string& target, int target_rank, Rng& rng) {
    std::vector<std::string> order = negatives;
    rng.shuffle(order);
    const auto pos = static_cast<std::size_t>(target_rank - 1);
    order.insert(order.begin() + static_cast<std::ptrdiff_t>(std::min(pos, order.size())), target);
    RankedList list;
    list.instance_id = instance_id;
    list.order = std::move(order);
    return list;
}

}  // namespace

void SynthConfig::validate() const {
    if (n_instances < 2) throw std::invalid_argument("SynthConfig: need at least 2 instances");
    if (n_candidates < 2) throw std::invalid_argument("SynthConfig: need at least 2 candidates");
    if (dim < 2) throw std::invalid_argument("SynthConfig: dim must be >= 2");
    if (k < 1 || k > n_candidates) throw std::invalid_argument("SynthConfig: bad k");
    if (rec_fraction < 0.0 || rec_fraction > 1.0 || think_helps_fraction < 0.0 ||
        think_helps_fraction > 1.0 || parse_failure_rate < 0.0 || parse_failure_rate > 1.0)
        throw std::invalid_argument("SynthConfig: fractions must be in [0,1]");
}

SynthOutput synthesize(const SynthConfig& config) {
    config.validate();
    Rng rng(config.seed);
    SynthOutput out;
    out.instances.reserve(config.n_instances);
    out.dumps.reserve(config.n_instances);
    out.records.reserve(config.n_instances);
    out.think_helps.reserve(config.n_instances);

    for (std::size_t p = 0; p < config.n_instances; ++p) {
        const std::string id = "inst-" + std::to_string(p);
        const bool is_rec = rng.uniform() < config.rec_fraction;
        const bool helps = rng.uniform() < config.think_helps_fraction;
        // hardness drives everything; the two subpopulations barely overlap
        const double hardness = helps ? rng.uniform(0.6, 1.0) : rng.uniform(0.0, 0.4);
        const std::string topic = kTopics[rng.below(kTopicCount)];

        RankingInstance instance;
        instance.id = id;
        instance.task = is_rec ? Task::Rec : Task::IR;
        instance.k = config.k;

        const std::string tone = hardness > 0.5
                                     ? "ambiguous broad exploratory request spanning several aspects of "
                                     : "specific focused single-topic request about ";
        if (is_rec) {
            const char* phrasing = hardness > 0.5 ? "varied mixed picks around "
                                                  : "consistent focused picks around ";
            for (int t = 0; t < config.history_len; ++t)
                instance.history.push_back(std::string(phrasing) + topic + " #" +
                                           std::to_string(t + 1));
        } else {
            instance.context = tone + topic;
        }

        const std::string target_id = "c0";
        for (int c = 0; c < config.n_candidates; ++c) {
            Candidate cand;
            cand.id = "c" + std::to_string(c);
            cand.text = topic + " option " + std::to_string(c);
            instance.candidates.push_back(std::move(cand));
        }
        instance.qrels[target_id] = 1;
        instance.validate();

        // embedding geometry: hard instances drift, spread and misalign
        EmbeddingDump dump;
        dump.instance_id = id;
        dump.dim = config.dim;
        const std::vector<double> anchor = random_unit(rng, config.dim);
        const double hist_noise = lerp(0.10, 0.95, hardness);
        const double align_noise = lerp(0.15, 1.10, hardness);
        const double cand_spread = lerp(0.10, 0.90, hardness);
        const int n_clusters = 1 + static_cast<int>(std::floor(hardness * 4.0));

        if (is_rec) {
            std::vector<double> walk = anchor;
            for (int t = 0; t < config.history_len; ++t) {
                walk = jitter(rng, walk, hist_noise * 0.5);
                dump.history.push_back(walk);
            }
        } else {
            dump.context = jitter(rng, anchor, 0.05);
        }

        std::vector<std::vector<double>> centers;
        for (int c = 0; c < n_clusters; ++c) centers.push_back(random_unit(rng, config.dim));
        for (int c = 0; c < config.n_candidates; ++c) {
            if (c == 0) {
                dump.candidates.push_back(jitter(rng, anchor, align_noise));
            } else {
                const auto& center = centers[rng.below(static_cast<std::uint64_t>(n_clusters))];
                dump.candidates.push_back(jitter(rng, center, cand_spread));
            }
        }
        dump.prompt_tokens = 60 + 3 * config.n_candidates +
                             10 * static_cast<long long>(instance.history.size()) +
                             static_cast<long long>(rng.below(30));

        // mode outcomes: non-think quality falls with hardness; think adds a
        // gain on the planted side and a small over-reasoning dip elsewhere
        const double q_non = std::clamp(0.95 - 0.85 * hardness + 0.05 * rng.normal(), 0.02, 0.98);
        const double shift = helps ? config.think_gain * rng.uniform(0.7, 1.3)
                                   : -config.think_harm * rng.uniform(0.5, 1.5);
        const double q_think = std::clamp(q_non + shift, 0.02, 0.98);

        std::vector<std::string> negatives;
        for (int c = 1; c < config.n_candidates; ++c) negatives.push_back("c" + std::to_string(c));

        DualModeRecord record;
        record.instance_id = id;
        record.non_think.ranking = make_ranking(id, negatives, target_id,
                                                rank_from_quality(q_non, config.n_candidates, rng), rng);
        record.think.ranking = make_ranking(id, negatives, target_id,
                                            rank_from_quality(q_think, config.n_candidates, rng), rng);
        record.non_think.tokens =
            config.non_think_tokens_base + static_cast<long long>(rng.below(20));
        record.think.tokens = config.think_tokens_base + dump.prompt_tokens / 2 +
                              static_cast<long long>(rng.below(80));

        if (rng.uniform() < config.parse_failure_rate) {
            record.non_think.ranking.order.clear();
            record.non_think.flags.push_back("parse-failure");
        }
        record.validate();

        out.instances.push_back(std::move(instance));
        out.dumps.push_back(std::move(dump));
        out.records.push_back(std::move(record));
        out.think_helps.push_back(helps);
    }
    return out;
}

}  // namespace rr
