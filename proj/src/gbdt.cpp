#include "rankroute/gbdt.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <sstream>

#include <json.hpp>

#include "rankroute/errors.hpp"

namespace rr {

namespace {

using ojson = nlohmann::ordered_json;

constexpr double kMinGain = 1e-12;
constexpr double kInf = std::numeric_limits<double>::infinity();

struct SplitCandidate {
    double gain = -kInf;
    int feature = std::numeric_limits<int>::max();
    double threshold = kInf;
    double left_value = 0.0;   // clamped child values
    double right_value = 0.0;

    bool usable() const { return gain > kMinGain; }

    // higher gain wins; ties go to the lowest feature index, then the lowest
    // threshold, so parallel and serial searches agree exactly
    bool better_than(const SplitCandidate& other) const {
        if (gain != other.gain) return gain > other.gain;
        if (feature != other.feature) return feature < other.feature;
        return threshold < other.threshold;
    }
};

struct NodeStats {
    double w = 0.0;    // sum of weights
    double wy = 0.0;   // sum of weight * residual
    double wy2 = 0.0;  // sum of weight * residual^2

    double mean() const { return wy / w; }
    double sse_at(double v) const { return wy2 - 2.0 * v * wy + v * v * w; }
};

class TreeBuilder {
public:
    TreeBuilder(const DataMatrix& x, const std::vector<double>& residuals,
                const std::vector<double>& weights, const std::vector<Monotone>& monotone,
                const TrainConfig& config, Exec exec)
        : x_(x), residuals_(residuals), weights_(weights), monotone_(monotone), config_(config),
          exec_(exec) {}

    RegressionTree build(const std::vector<std::size_t>& samples) {
        tree_.nodes.clear();
        grow(samples, -kInf, kInf, 0);
        return std::move(tree_);
    }

private:
    NodeStats stats_of(const std::vector<std::size_t>& samples) const {
        NodeStats s;
        for (const std::size_t i : samples) {
            const double w = weights_[i];
            const double y = residuals_[i];
            s.w += w;
            s.wy += w * y;
            s.wy2 += w * y * y;
        }
        return s;
    }

    SplitCandidate best_split_for_feature(const std::vector<std::size_t>& samples, int feature,
                                          const NodeStats& total, double node_sse, double lo,
                                          double hi) const {
        const auto f = static_cast<std::size_t>(feature);
        std::vector<std::pair<double, std::size_t>> ordered;
        ordered.reserve(samples.size());
        for (const std::size_t i : samples) ordered.emplace_back(x_.at(i, f), i);
        std::sort(ordered.begin(), ordered.end());

        const bool decreasing = monotone_[f] == Monotone::Decreasing;
        const auto min_leaf = static_cast<std::size_t>(config_.min_samples_leaf);

        SplitCandidate best;
        NodeStats left;
        for (std::size_t k = 0; k + 1 < ordered.size(); ++k) {
            const std::size_t i = ordered[k].second;
            const double w = weights_[i];
            const double y = residuals_[i];
            left.w += w;
            left.wy += w * y;
            left.wy2 += w * y * y;

            if (ordered[k].first == ordered[k + 1].first) continue;  // not a boundary
            const std::size_t n_left = k + 1;
            const std::size_t n_right = ordered.size() - n_left;
            if (n_left < min_leaf || n_right < min_leaf) continue;

            NodeStats right;
            right.w = total.w - left.w;
            right.wy = total.wy - left.wy;
            right.wy2 = total.wy2 - left.wy2;

            const double v_left = std::clamp(left.mean(), lo, hi);
            const double v_right = std::clamp(right.mean(), lo, hi);
            if (decreasing && v_left < v_right) continue;  // inadmissible under the constraint

            const double gain = node_sse - (left.sse_at(v_left) + right.sse_at(v_right));
            SplitCandidate cand;
            cand.gain = gain;
            cand.feature = feature;
            cand.threshold = 0.5 * (ordered[k].first + ordered[k + 1].first);
            cand.left_value = v_left;
            cand.right_value = v_right;
            if (cand.usable() && cand.better_than(best)) best = cand;
        }
        return best;
    }

    int grow(const std::vector<std::size_t>& samples, double lo, double hi, int depth) {
        const NodeStats total = stats_of(samples);
        const double value = std::clamp(total.mean(), lo, hi);

        const int node_index = static_cast<int>(tree_.nodes.size());
        tree_.nodes.emplace_back();
        tree_.nodes[static_cast<std::size_t>(node_index)].value = value;

        if (depth >= config_.max_depth ||
            samples.size() < 2 * static_cast<std::size_t>(config_.min_samples_leaf))
            return node_index;

        const double node_sse = total.sse_at(value);

        // candidate features scanned in parallel; the reduction below is a
        // serial argmin so results do not depend on thread count
        const std::size_t n_features = x_.cols;
        std::vector<SplitCandidate> per_feature(n_features);
        for_each_index(exec_, n_features, [&](std::size_t f) {
            per_feature[f] =
                best_split_for_feature(samples, static_cast<int>(f), total, node_sse, lo, hi);
        });
        SplitCandidate best;
        for (const auto& cand : per_feature)
            if (cand.usable() && cand.better_than(best)) best = cand;

        if (!best.usable()) return node_index;  // constant-prediction fallback

        std::vector<std::size_t> left_samples, right_samples;
        for (const std::size_t i : samples)
            (x_.at(i, static_cast<std::size_t>(best.feature)) <= best.threshold ? left_samples
                                                                                : right_samples)
                .push_back(i);

        double left_lo = lo, left_hi = hi, right_lo = lo, right_hi = hi;
        if (monotone_[static_cast<std::size_t>(best.feature)] == Monotone::Decreasing) {
            // midpoint of the admissible child values floors the left subtree
            // and caps the right one, which keeps the whole tree monotone
            const double mid = 0.5 * (best.left_value + best.right_value);
            left_lo = mid;
            right_hi = mid;
        }

        const int left_index = grow(left_samples, left_lo, left_hi, depth + 1);
        const int right_index = grow(right_samples, right_lo, right_hi, depth + 1);

        TreeNode& node = tree_.nodes[static_cast<std::size_t>(node_index)];
        node.feature = best.feature;
        node.threshold = best.threshold;
        node.gain = best.gain;
        node.left = left_index;
        node.right = right_index;
        return node_index;
    }

    const DataMatrix& x_;
    const std::vector<double>& residuals_;
    const std::vector<double>& weights_;
    const std::vector<Monotone>& monotone_;
    const TrainConfig& config_;
    Exec exec_;
    RegressionTree tree_;
};

double median_of(std::vector<double> values) {
    if (values.empty()) return 0.0;
    std::sort(values.begin(), values.end());
    const std::size_t n = values.size();
    return n % 2 == 1 ? values[n / 2] : 0.5 * (values[n / 2 - 1] + values[n / 2]);
}

}  // namespace

void TrainConfig::validate() const {
    if (n_rounds < 1) throw std::invalid_argument("TrainConfig: n_rounds must be >= 1");
    if (max_depth < 1) throw std::invalid_argument("TrainConfig: max_depth must be >= 1");
    if (learning_rate <= 0.0 || learning_rate > 1.0)
        throw std::invalid_argument("TrainConfig: learning_rate must be in (0,1]");
    if (min_samples_leaf < 1) throw std::invalid_argument("TrainConfig: min_samples_leaf must be >= 1");
    if (subsample <= 0.0 || subsample > 1.0)
        throw std::invalid_argument("TrainConfig: subsample must be in (0,1]");
}

double RegressionTree::predict_row(const double* x) const {
    std::size_t cur = 0;
    while (!nodes[cur].is_leaf()) {
        const TreeNode& node = nodes[cur];
        cur = static_cast<std::size_t>(x[node.feature] <= node.threshold ? node.left : node.right);
    }
    return nodes[cur].value;
}

RouterModel::RouterModel(std::vector<std::string> schema, std::map<std::string, Monotone> monotone,
                         double base_score, double learning_rate)
    : schema_(std::move(schema)), monotone_(std::move(monotone)), base_score_(base_score),
      learning_rate_(learning_rate) {
    schema_hash_ = hash_schema(schema_);
    for (const auto& [name, _] : monotone_)
        if (std::find(schema_.begin(), schema_.end(), name) == schema_.end())
            throw std::invalid_argument("RouterModel: monotone feature not in schema: " + name);
}

std::string RouterModel::hash_schema(const std::vector<std::string>& schema) {
    std::string joined;
    for (const auto& name : schema) {
        joined += name;
        joined += '\n';
    }
    return fingerprint_hex(joined);
}

double RouterModel::predict_row(const double* x) const {
    double out = base_score_;
    for (const auto& tree : trees_) out += learning_rate_ * tree.predict_row(x);
    return out;
}

double RouterModel::predict(const FeatureVector& fv) const {
    if (fv.names != schema_) {
        std::string msg = "feature schema mismatch";
        std::string missing;
        for (const auto& name : schema_)
            if (!fv.has(name)) missing += " " + name;
        if (!missing.empty()) msg += "; missing features:" + missing;
        else msg += " (feature order or extras differ)";
        throw SchemaMismatchError(msg);
    }
    return predict_row(fv.values.data());
}

std::vector<double> RouterModel::predict_batch(const DataMatrix& x, Exec exec) const {
    if (x.cols != schema_.size()) throw SchemaMismatchError("predict_batch: column count mismatch");
    std::vector<double> out(x.rows);
    for_each_index(exec, x.rows, [&](std::size_t r) { out[r] = predict_row(x.row(r)); });
    return out;
}

std::map<std::string, double> RouterModel::feature_importance(bool normalized) const {
    std::map<std::string, double> gains;
    double total = 0.0;
    for (const auto& tree : trees_)
        for (const auto& node : tree.nodes) {
            if (node.is_leaf()) continue;
            gains[schema_[static_cast<std::size_t>(node.feature)]] += node.gain;
            total += node.gain;
        }
    if (normalized && total > 0.0)
        for (auto& [_, g] : gains) g /= total;
    return gains;
}

std::string RouterModel::save_text() const {
    ojson doc;
    doc["format"] = "rankroute-router";
    doc["version"] = 1;
    doc["schema"] = schema_;
    doc["schema_hash"] = schema_hash_;
    ojson mono = ojson::object();
    for (const auto& [name, m] : monotone_)
        mono[name] = m == Monotone::Decreasing ? "decreasing" : "none";
    doc["monotone"] = mono;
    doc["base_score"] = base_score_;
    doc["learning_rate"] = learning_rate_;
    doc["metadata"] = {{"seed", metadata.seed}, {"rounds", metadata.rounds}, {"depth", metadata.depth}};
    ojson trees = ojson::array();
    for (const auto& tree : trees_) {
        ojson nodes = ojson::array();
        for (const auto& node : tree.nodes)
            nodes.push_back({node.feature, node.threshold, node.value, node.gain, node.left, node.right});
        trees.push_back(std::move(nodes));
    }
    doc["trees"] = std::move(trees);
    return doc.dump();
}

RouterModel RouterModel::load_text(const std::string& text) {
    ojson doc;
    try {
        doc = ojson::parse(text);
    } catch (const nlohmann::json::exception& e) {
        throw ParseError(std::string("router model: malformed payload: ") + e.what());
    }
    try {
        if (doc.at("format").get<std::string>() != "rankroute-router")
            throw ParseError("router model: unrecognized format field");
        if (doc.at("version").get<int>() != 1)
            throw ParseError("router model: unsupported version " +
                             std::to_string(doc.at("version").get<int>()));

        std::map<std::string, Monotone> monotone;
        for (const auto& [name, value] : doc.at("monotone").items())
            monotone[name] =
                value.get<std::string>() == "decreasing" ? Monotone::Decreasing : Monotone::None;

        RouterModel model(doc.at("schema").get<std::vector<std::string>>(), std::move(monotone),
                          doc.at("base_score").get<double>(), doc.at("learning_rate").get<double>());
        if (doc.at("schema_hash").get<std::string>() != model.schema_hash())
            throw ParseError("router model: schema hash does not match the embedded schema");

        const auto& meta = doc.at("metadata");
        model.metadata.seed = meta.at("seed").get<std::uint64_t>();
        model.metadata.rounds = meta.at("rounds").get<int>();
        model.metadata.depth = meta.at("depth").get<int>();

        for (const auto& tree_json : doc.at("trees")) {
            RegressionTree tree;
            for (const auto& node_json : tree_json) {
                if (!node_json.is_array() || node_json.size() != 6)
                    throw ParseError("router model: malformed tree node");
                TreeNode node;
                node.feature = node_json[0].get<int>();
                node.threshold = node_json[1].get<double>();
                node.value = node_json[2].get<double>();
                node.gain = node_json[3].get<double>();
                node.left = node_json[4].get<int>();
                node.right = node_json[5].get<int>();
                if (node.feature >= static_cast<int>(model.schema().size()))
                    throw ParseError("router model: split feature out of schema range");
                if (!std::isfinite(node.value)) throw ParseError("router model: non-finite leaf value");
                tree.nodes.push_back(node);
            }
            for (const auto& node : tree.nodes) {
                if (node.is_leaf()) continue;
                const int n = static_cast<int>(tree.nodes.size());
                if (node.left < 0 || node.left >= n || node.right < 0 || node.right >= n)
                    throw ParseError("router model: dangling child index");
            }
            model.add_tree(std::move(tree));
        }
        return model;
    } catch (const nlohmann::json::exception& e) {
        throw ParseError(std::string("router model: missing or mistyped field: ") + e.what());
    }
}

TrainResult train_router(const DataMatrix& x, const std::vector<double>& y,
                         const std::vector<double>& w, const std::vector<std::string>& schema,
                         const std::map<std::string, Monotone>& monotone, const TrainConfig& config,
                         Exec exec) {
    config.validate();
    const std::size_t n = x.rows;
    if (n < 2) throw std::invalid_argument("train_router: need at least 2 samples");
    if (y.size() != n || w.size() != n) throw std::invalid_argument("train_router: X/y/w size mismatch");
    if (x.cols != schema.size()) throw std::invalid_argument("train_router: schema/column mismatch");
    for (const double wi : w)
        if (!(wi > 0.0)) throw std::invalid_argument("train_router: weights must be positive");
    for (const double v : x.data)
        if (!std::isfinite(v)) throw std::invalid_argument("train_router: non-finite feature value");
    for (const double v : y)
        if (!std::isfinite(v)) throw std::invalid_argument("train_router: non-finite target");

    auto fit_once = [&](const std::vector<double>& weights) {
        std::vector<Monotone> mono_by_col(x.cols, Monotone::None);
        for (std::size_t j = 0; j < schema.size(); ++j) {
            const auto it = monotone.find(schema[j]);
            if (it != monotone.end()) mono_by_col[j] = it->second;
        }

        double w_sum = 0.0, wy_sum = 0.0;
        for (std::size_t i = 0; i < n; ++i) {
            w_sum += weights[i];
            wy_sum += weights[i] * y[i];
        }
        const double base = wy_sum / w_sum;

        RouterModel model(schema, monotone, base, config.learning_rate);
        model.metadata.seed = config.seed;
        model.metadata.rounds = config.n_rounds;
        model.metadata.depth = config.max_depth;

        std::vector<double> prediction(n, base);
        std::vector<double> residual(n);
        std::vector<double> losses;
        losses.reserve(static_cast<std::size_t>(config.n_rounds));
        Rng rng(config.seed);

        const auto subsample_size =
            static_cast<std::size_t>(std::max(2.0, std::floor(config.subsample * static_cast<double>(n))));

        for (int round = 0; round < config.n_rounds; ++round) {
            for (std::size_t i = 0; i < n; ++i) residual[i] = y[i] - prediction[i];

            std::vector<std::size_t> samples(n);
            std::iota(samples.begin(), samples.end(), 0);
            if (subsample_size < n) {
                rng.shuffle(samples);
                samples.resize(subsample_size);
                std::sort(samples.begin(), samples.end());
            }

            TreeBuilder builder(x, residual, weights, mono_by_col, config, exec);
            RegressionTree tree = builder.build(samples);

            for_each_index(exec, n, [&](std::size_t i) {
                prediction[i] += config.learning_rate * tree.predict_row(x.row(i));
            });
            model.add_tree(std::move(tree));

            double loss = 0.0;
            for (std::size_t i = 0; i < n; ++i) {
                const double e = y[i] - prediction[i];
                loss += weights[i] * e * e;
            }
            losses.push_back(loss / static_cast<double>(n));
        }

        TrainResult result;
        result.model = std::move(model);
        result.round_losses = std::move(losses);
        result.weights = weights;
        return result;
    };

    if (!config.reweight_tukey) return fit_once(w);

    // warm-up pass, bisquare weights from its residuals, then the real fit
    TrainResult warmup = fit_once(w);
    std::vector<double> residuals(n);
    const std::vector<double> warm_pred = warmup.model.predict_batch(x, exec);
    for (std::size_t i = 0; i < n; ++i) residuals[i] = y[i] - warm_pred[i];
    const std::vector<double> tukey = reweight_tukey(residuals);
    std::vector<double> combined(n);
    for (std::size_t i = 0; i < n; ++i) combined[i] = w[i] * tukey[i];
    return fit_once(combined);
}

std::vector<double> reweight_tukey(const std::vector<double>& residuals) {
    const double med = median_of(residuals);
    std::vector<double> absdev;
    absdev.reserve(residuals.size());
    for (const double r : residuals) absdev.push_back(std::abs(r - med));
    const double mad = median_of(absdev);

    std::vector<double> weights(residuals.size(), 1.0);
    if (mad == 0.0) return weights;  // no scale information

    constexpr double kTukeyC = 4.685;
    constexpr double kFloor = 0.05;
    const double scale = 1.4826 * mad;
    for (std::size_t i = 0; i < residuals.size(); ++i) {
        const double u = residuals[i] / (kTukeyC * scale);
        if (std::abs(u) >= 1.0) {
            weights[i] = kFloor;
        } else {
            const double b = (1.0 - u * u) * (1.0 - u * u);
            weights[i] = std::max(b, kFloor);
        }
    }
    return weights;
}

}  // namespace rr
