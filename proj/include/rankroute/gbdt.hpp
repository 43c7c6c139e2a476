#pragma once
// Gradient-boosted regression trees with an optional monotone-decreasing
// constraint per feature, trained with a weighted squared loss. This is the
// advantage regressor behind the routing rule; the extra-cost feature is
// constrained so predicted advantage never rises with predicted cost.

#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include "rankroute/common.hpp"
#include "rankroute/features.hpp"
#include "rankroute/matrix.hpp"

namespace rr {

enum class Monotone { None, Decreasing };

struct TrainConfig {
    int n_rounds = 200;
    int max_depth = 3;
    double learning_rate = 0.05;
    int min_samples_leaf = 5;
    double subsample = 0.8;
    std::uint64_t seed = 7;
    bool reweight_tukey = false;  // warm-up fit -> bisquare weights -> refit

    void validate() const;
};

struct TreeNode {
    int feature = -1;  // -1 marks a leaf
    double threshold = 0.0;
    double value = 0.0;  // leaf output, already clamped to its bounds
    double gain = 0.0;   // SSE reduction achieved by this split
    int left = -1;
    int right = -1;

    bool is_leaf() const { return feature < 0; }
};

struct RegressionTree {
    std::vector<TreeNode> nodes;  // nodes[0] is the root

    double predict_row(const double* x) const;
};

class RouterModel {
public:
    RouterModel() = default;
    RouterModel(std::vector<std::string> schema, std::map<std::string, Monotone> monotone,
                double base_score, double learning_rate);

    double predict_row(const double* x) const;
    // Validates the vector's schema against the model's; the error lists any
    // missing features.
    double predict(const FeatureVector& fv) const;
    std::vector<double> predict_batch(const DataMatrix& x, Exec exec = Exec::Parallel) const;

    // total split gain per feature; `normalized` scales gains to sum to 1
    std::map<std::string, double> feature_importance(bool normalized = false) const;

    // Canonical, versioned text serialization (JSON). load() rejects version
    // or schema-hash mismatches and malformed payloads with structured errors.
    std::string save_text() const;
    static RouterModel load_text(const std::string& text);

    const std::vector<std::string>& schema() const { return schema_; }
    const std::string& schema_hash() const { return schema_hash_; }
    const std::map<std::string, Monotone>& monotone() const { return monotone_; }
    double base_score() const { return base_score_; }
    double learning_rate() const { return learning_rate_; }
    const std::vector<RegressionTree>& trees() const { return trees_; }

    struct Metadata {
        std::uint64_t seed = 0;
        int rounds = 0;
        int depth = 0;
    };
    Metadata metadata;

    void add_tree(RegressionTree tree) { trees_.push_back(std::move(tree)); }

    // fingerprint of the newline-joined schema, matching the schema-manifest
    // file fingerprint
    static std::string hash_schema(const std::vector<std::string>& schema);

private:
    std::vector<std::string> schema_;
    std::string schema_hash_;
    std::map<std::string, Monotone> monotone_;
    double base_score_ = 0.0;
    double learning_rate_ = 1.0;
    std::vector<RegressionTree> trees_;
};

struct TrainResult {
    RouterModel model;
    std::vector<double> round_losses;  // mean weighted SSE after each round
    std::vector<double> weights;       // final per-instance weights used
};

// Boosted training. Each round fits one depth-limited tree to the residuals
// by exhaustive split search minimizing weighted SSE; splits on a
// monotone-decreasing feature are admitted only when the left child value is
// >= the right child value, and children inherit [lo, hi] output bounds split
// at the midpoint of the two child values.
TrainResult train_router(const DataMatrix& x, const std::vector<double>& y,
                         const std::vector<double>& w, const std::vector<std::string>& schema,
                         const std::map<std::string, Monotone>& monotone, const TrainConfig& config,
                         Exec exec = Exec::Parallel);

// Tukey bisquare robustness weights from warm-up residuals, floored at 0.05;
// a zero MAD means the residuals carry no scale information and every weight
// stays 1.
std::vector<double> reweight_tukey(const std::vector<double>& residuals);

}  // namespace rr
