#pragma once
// Ranking-aware feature statistics over segment embeddings: context
// coherence/drift, candidate dispersion, context-candidate alignment, plus
// the estimated extra-cost feature and train-set standardization.

#include <cstdint>
#include <string>
#include <utility>
#include <vector>

#include "rankroute/common.hpp"
#include "rankroute/cost_model.hpp"
#include "rankroute/embedding.hpp"

namespace rr {

struct FeatureConfig {
    int kmeans_k_max = 5;        // clusters = min(k_max, n_candidates - 1)
    int kmeans_restarts = 10;
    int kmeans_max_iter = 100;
    std::uint64_t kmeans_seed = 17;
};

struct FeatureVector {
    std::string instance_id;
    std::vector<std::string> names;  // schema order
    std::vector<double> values;
    std::string schema_version;
    std::vector<std::string> flags;

    double at(const std::string& name) const;
    bool has(const std::string& name) const;
};

// Named feature block plus degenerate-input flags (zero-norm cosines).
struct FeatureBlock {
    std::vector<std::pair<std::string, double>> values;
    std::vector<std::string> flags;

    double at(const std::string& name) const;
};

// Cosine similarity; either vector with zero norm yields 0.0 and marks
// `flagged` instead of dividing by zero.
double safe_cosine(const std::vector<double>& a, const std::vector<double>& b, bool& flagged);

// Context/candidate complexity block:
//   ctx_drift_mean, ctx_coherence, cand_pairwise_cos_mean,
//   cand_pairwise_cos_std, cand_cluster_entropy, cand_spectral_entropy
FeatureBlock complexity_features(const EmbeddingDump& dump, const FeatureConfig& config = {});

// Context-candidate alignment block:
//   align_centroid_cos, align_max_cos, align_top_margin, align_cos_std,
//   align_softmax_entropy
FeatureBlock alignment_features(const EmbeddingDump& dump);

inline constexpr const char* kDeltaCostFeature = "delta_cost_est";
inline constexpr const char* kFeatureSchemaVersion = "fv1";

// Full per-instance vector: complexity block, alignment block, then
// delta_cost_est (always last). Deterministic given (dump, model, config).
FeatureVector extract_features(const EmbeddingDump& dump, const CostModel& cost_model,
                               const FeatureConfig& config = {});

std::vector<FeatureVector> extract_features_batch(const std::vector<EmbeddingDump>& dumps,
                                                  const CostModel& cost_model,
                                                  const FeatureConfig& config = {},
                                                  Exec exec = Exec::Parallel);

// Inserts checklist difficulty signals (named signal_<pair_id>) immediately
// before delta_cost_est, preserving the fixed schema order.
FeatureVector merge_difficulty_signals(const FeatureVector& base,
                                       const std::vector<std::pair<std::string, double>>& signals);

// Per-feature z-score transform fitted on a training set (population std).
// Near-constant features (std < 1e-12) are centered only and flagged.
class Standardizer {
public:
    static Standardizer fit(const std::vector<FeatureVector>& train);

    FeatureVector apply(const FeatureVector& fv) const;
    std::vector<FeatureVector> apply_all(const std::vector<FeatureVector>& fvs) const;

    const std::vector<std::string>& names() const { return names_; }
    const std::vector<double>& mean() const { return mean_; }
    const std::vector<double>& stddev() const { return stddev_; }
    const std::vector<bool>& constant() const { return constant_; }

private:
    std::vector<std::string> names_;
    std::vector<double> mean_;
    std::vector<double> stddev_;
    std::vector<bool> constant_;
};

}  // namespace rr
