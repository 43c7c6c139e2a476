#include "rankroute/features.hpp"

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <stdexcept>

namespace rr {

namespace {

constexpr double kZeroNormEps = 1e-300;

double dot(const std::vector<double>& a, const std::vector<double>& b) {
    double s = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) s += a[i] * b[i];
    return s;
}

double norm(const std::vector<double>& a) { return std::sqrt(dot(a, a)); }

std::vector<double> mean_vector(const std::vector<std::vector<double>>& vs) {
    std::vector<double> out(vs.front().size(), 0.0);
    for (const auto& v : vs)
        for (std::size_t i = 0; i < out.size(); ++i) out[i] += v[i];
    const double inv = 1.0 / static_cast<double>(vs.size());
    for (double& x : out) x *= inv;
    return out;
}

struct MeanStd {
    double mean = 0.0;
    double stddev = 0.0;  // population
};

MeanStd mean_std(const std::vector<double>& xs) {
    MeanStd out;
    if (xs.empty()) return out;
    out.mean = std::accumulate(xs.begin(), xs.end(), 0.0) / static_cast<double>(xs.size());
    double var = 0.0;
    for (const double x : xs) var += (x - out.mean) * (x - out.mean);
    out.stddev = std::sqrt(var / static_cast<double>(xs.size()));
    return out;
}

// entropy in nats of a discrete distribution given as non-negative masses
double entropy_of_masses(const std::vector<double>& masses) {
    double total = 0.0;
    for (const double m : masses) total += m;
    if (total <= 0.0) return 0.0;
    double h = 0.0;
    for (const double m : masses) {
        if (m <= 0.0) continue;
        const double p = m / total;
        h -= p * std::log(p);
    }
    return h;
}

double squared_distance(const std::vector<double>& a, const std::vector<double>& b) {
    double s = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) {
        const double d = a[i] - b[i];
        s += d * d;
    }
    return s;
}

struct KmeansRun {
    std::vector<int> assignment;
    std::vector<std::size_t> sizes;
    double sse = std::numeric_limits<double>::infinity();
};

// Plain Lloyd iterations, deterministic: seeded restarts, ties toward the
// lowest index, empty clusters re-seeded from the farthest point.
KmeansRun kmeans(const std::vector<std::vector<double>>& points, int k, const FeatureConfig& config) {
    const std::size_t n = points.size();
    KmeansRun best;
    Rng rng(config.kmeans_seed);

    for (int restart = 0; restart < config.kmeans_restarts; ++restart) {
        // sample k distinct starting points
        std::vector<std::size_t> idx(n);
        std::iota(idx.begin(), idx.end(), 0);
        rng.shuffle(idx);
        std::vector<std::vector<double>> centroids;
        centroids.reserve(static_cast<std::size_t>(k));
        for (int c = 0; c < k; ++c) centroids.push_back(points[idx[static_cast<std::size_t>(c)]]);

        std::vector<int> assignment(n, -1);
        for (int iter = 0; iter < config.kmeans_max_iter; ++iter) {
            bool changed = false;
            for (std::size_t i = 0; i < n; ++i) {
                int nearest = 0;
                double nearest_d = squared_distance(points[i], centroids[0]);
                for (int c = 1; c < k; ++c) {
                    const double d = squared_distance(points[i], centroids[static_cast<std::size_t>(c)]);
                    if (d < nearest_d) {
                        nearest_d = d;
                        nearest = c;
                    }
                }
                if (assignment[i] != nearest) {
                    assignment[i] = nearest;
                    changed = true;
                }
            }

            std::vector<std::vector<double>> sums(static_cast<std::size_t>(k),
                                                  std::vector<double>(points[0].size(), 0.0));
            std::vector<std::size_t> counts(static_cast<std::size_t>(k), 0);
            for (std::size_t i = 0; i < n; ++i) {
                const auto c = static_cast<std::size_t>(assignment[i]);
                ++counts[c];
                for (std::size_t d = 0; d < sums[c].size(); ++d) sums[c][d] += points[i][d];
            }
            for (int c = 0; c < k; ++c) {
                const auto cu = static_cast<std::size_t>(c);
                if (counts[cu] == 0) {
                    // move this centroid onto the point farthest from its own centroid
                    std::size_t far_i = 0;
                    double far_d = -1.0;
                    for (std::size_t i = 0; i < n; ++i) {
                        const double d =
                            squared_distance(points[i], centroids[static_cast<std::size_t>(assignment[i])]);
                        if (d > far_d) {
                            far_d = d;
                            far_i = i;
                        }
                    }
                    centroids[cu] = points[far_i];
                    changed = true;
                } else {
                    for (std::size_t d = 0; d < sums[cu].size(); ++d)
                        centroids[cu][d] = sums[cu][d] / static_cast<double>(counts[cu]);
                }
            }
            if (!changed) break;
        }

        KmeansRun run;
        run.assignment = assignment;
        run.sizes.assign(static_cast<std::size_t>(k), 0);
        run.sse = 0.0;
        for (std::size_t i = 0; i < n; ++i) {
            const auto c = static_cast<std::size_t>(assignment[i]);
            ++run.sizes[c];
            run.sse += squared_distance(points[i], centroids[c]);
        }
        if (run.sse < best.sse) best = std::move(run);
    }
    return best;
}

// entropy of the normalized covariance spectrum of the candidate cloud
double spectral_entropy(const std::vector<std::vector<double>>& points) {
    const auto n = static_cast<Eigen::Index>(points.size());
    const auto d = static_cast<Eigen::Index>(points.front().size());

    Eigen::MatrixXd x(n, d);
    for (Eigen::Index i = 0; i < n; ++i)
        for (Eigen::Index j = 0; j < d; ++j)
            x(i, j) = points[static_cast<std::size_t>(i)][static_cast<std::size_t>(j)];
    x.rowwise() -= x.colwise().mean();

    // the Gram and covariance matrices share their nonzero spectrum; work on
    // whichever is smaller
    Eigen::MatrixXd sym;
    if (n <= d)
        sym = (x * x.transpose()) / static_cast<double>(n);
    else
        sym = (x.transpose() * x) / static_cast<double>(n);

    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> solver(sym);
    std::vector<double> eigenvalues;
    eigenvalues.reserve(static_cast<std::size_t>(solver.eigenvalues().size()));
    for (Eigen::Index i = 0; i < solver.eigenvalues().size(); ++i)
        eigenvalues.push_back(std::max(0.0, solver.eigenvalues()[i]));
    return entropy_of_masses(eigenvalues);
}

}  // namespace

double FeatureVector::at(const std::string& name) const {
    for (std::size_t i = 0; i < names.size(); ++i)
        if (names[i] == name) return values[i];
    throw std::out_of_range("feature not present: " + name);
}

bool FeatureVector::has(const std::string& name) const {
    return std::find(names.begin(), names.end(), name) != names.end();
}

double FeatureBlock::at(const std::string& name) const {
    for (const auto& [n, v] : values)
        if (n == name) return v;
    throw std::out_of_range("feature not present: " + name);
}

double safe_cosine(const std::vector<double>& a, const std::vector<double>& b, bool& flagged) {
    const double na = norm(a), nb = norm(b);
    if (na < kZeroNormEps || nb < kZeroNormEps) {
        flagged = true;
        return 0.0;
    }
    return dot(a, b) / (na * nb);
}

FeatureBlock complexity_features(const EmbeddingDump& dump, const FeatureConfig& config) {
    dump.validate();
    const auto& cands = dump.candidates;
    const std::size_t n = cands.size();
    if (n < 2) throw std::invalid_argument("complexity_features: need at least 2 candidates");

    FeatureBlock block;
    bool zero_norm = false;

    // context drift and coherence over the history trajectory
    double drift_mean = 0.0;
    double coherence = 1.0;
    if (dump.history.size() >= 2) {
        std::vector<double> consecutive;
        for (std::size_t i = 0; i + 1 < dump.history.size(); ++i)
            consecutive.push_back(1.0 - safe_cosine(dump.history[i], dump.history[i + 1], zero_norm));
        drift_mean = mean_std(consecutive).mean;

        std::vector<double> pairwise;
        for (std::size_t i = 0; i < dump.history.size(); ++i)
            for (std::size_t j = i + 1; j < dump.history.size(); ++j)
                pairwise.push_back(safe_cosine(dump.history[i], dump.history[j], zero_norm));
        coherence = mean_std(pairwise).mean;
    }
    block.values.emplace_back("ctx_drift_mean", drift_mean);
    block.values.emplace_back("ctx_coherence", coherence);

    std::vector<double> cand_cos;
    cand_cos.reserve(n * (n - 1) / 2);
    for (std::size_t i = 0; i < n; ++i)
        for (std::size_t j = i + 1; j < n; ++j) cand_cos.push_back(safe_cosine(cands[i], cands[j], zero_norm));
    const MeanStd cos_stats = mean_std(cand_cos);
    block.values.emplace_back("cand_pairwise_cos_mean", cos_stats.mean);
    block.values.emplace_back("cand_pairwise_cos_std", cos_stats.stddev);

    const int k = std::min<int>(config.kmeans_k_max, static_cast<int>(n) - 1);
    double cluster_entropy = 0.0;
    if (k >= 2) {
        const KmeansRun run = kmeans(cands, k, config);
        std::vector<double> sizes(run.sizes.begin(), run.sizes.end());
        cluster_entropy = entropy_of_masses(sizes);
    }
    block.values.emplace_back("cand_cluster_entropy", cluster_entropy);
    block.values.emplace_back("cand_spectral_entropy", spectral_entropy(cands));

    if (zero_norm) block.flags.push_back("zero-norm-embedding");
    return block;
}

FeatureBlock alignment_features(const EmbeddingDump& dump) {
    dump.validate();
    FeatureBlock block;
    bool zero_norm = false;

    // Rec context = mean of history-item embeddings
    const std::vector<double> context = dump.is_rec() ? mean_vector(dump.history) : dump.context;

    std::vector<double> cosines;
    cosines.reserve(dump.candidates.size());
    for (const auto& cand : dump.candidates) cosines.push_back(safe_cosine(context, cand, zero_norm));

    block.values.emplace_back("align_centroid_cos",
                              safe_cosine(context, mean_vector(dump.candidates), zero_norm));

    std::vector<double> sorted = cosines;
    std::sort(sorted.begin(), sorted.end(), std::greater<double>());
    block.values.emplace_back("align_max_cos", sorted[0]);
    block.values.emplace_back("align_top_margin", sorted.size() >= 2 ? sorted[0] - sorted[1] : 0.0);
    block.values.emplace_back("align_cos_std", mean_std(cosines).stddev);

    // entropy of the softmax over candidate-context cosines, temperature 1
    const double max_cos = sorted[0];
    std::vector<double> weights;
    weights.reserve(cosines.size());
    for (const double c : cosines) weights.push_back(std::exp(c - max_cos));
    block.values.emplace_back("align_softmax_entropy", entropy_of_masses(weights));

    if (zero_norm) block.flags.push_back("zero-norm-embedding");
    return block;
}

FeatureVector extract_features(const EmbeddingDump& dump, const CostModel& cost_model,
                               const FeatureConfig& config) {
    FeatureVector fv;
    fv.instance_id = dump.instance_id;
    fv.schema_version = kFeatureSchemaVersion;

    const FeatureBlock complexity = complexity_features(dump, config);
    const FeatureBlock alignment = alignment_features(dump);
    for (const auto& [name, value] : complexity.values) {
        fv.names.push_back(name);
        fv.values.push_back(value);
    }
    for (const auto& [name, value] : alignment.values) {
        fv.names.push_back(name);
        fv.values.push_back(value);
    }
    fv.names.push_back(kDeltaCostFeature);
    fv.values.push_back(cost_model.estimate_extra_tokens(static_cast<double>(dump.prompt_tokens),
                                                         static_cast<double>(dump.candidates.size())));

    fv.flags = complexity.flags;
    for (const auto& f : alignment.flags)
        if (std::find(fv.flags.begin(), fv.flags.end(), f) == fv.flags.end()) fv.flags.push_back(f);
    return fv;
}

std::vector<FeatureVector> extract_features_batch(const std::vector<EmbeddingDump>& dumps,
                                                  const CostModel& cost_model,
                                                  const FeatureConfig& config, Exec exec) {
    std::vector<FeatureVector> out(dumps.size());
    for_each_index(exec, dumps.size(),
                   [&](std::size_t i) { out[i] = extract_features(dumps[i], cost_model, config); });
    return out;
}

FeatureVector merge_difficulty_signals(const FeatureVector& base,
                                       const std::vector<std::pair<std::string, double>>& signals) {
    if (base.names.empty() || base.names.back() != kDeltaCostFeature)
        throw std::invalid_argument("merge_difficulty_signals: base vector must end with " +
                                    std::string(kDeltaCostFeature));
    FeatureVector fv = base;
    fv.names.pop_back();
    const double delta_cost = fv.values.back();
    fv.values.pop_back();
    for (const auto& [pair_id, value] : signals) {
        fv.names.push_back("signal_" + pair_id);
        fv.values.push_back(value);
    }
    fv.names.push_back(kDeltaCostFeature);
    fv.values.push_back(delta_cost);
    return fv;
}

Standardizer Standardizer::fit(const std::vector<FeatureVector>& train) {
    if (train.size() < 2) throw std::invalid_argument("Standardizer: need at least 2 vectors");
    Standardizer s;
    s.names_ = train.front().names;
    const std::size_t f = s.names_.size();
    s.mean_.assign(f, 0.0);
    s.stddev_.assign(f, 0.0);
    s.constant_.assign(f, false);

    for (const auto& fv : train) {
        if (fv.names != s.names_)
            throw std::invalid_argument("Standardizer: inconsistent schema across training vectors");
        for (std::size_t j = 0; j < f; ++j) s.mean_[j] += fv.values[j];
    }
    const double inv_n = 1.0 / static_cast<double>(train.size());
    for (double& m : s.mean_) m *= inv_n;
    for (const auto& fv : train)
        for (std::size_t j = 0; j < f; ++j) {
            const double d = fv.values[j] - s.mean_[j];
            s.stddev_[j] += d * d;
        }
    for (std::size_t j = 0; j < f; ++j) {
        s.stddev_[j] = std::sqrt(s.stddev_[j] * inv_n);
        if (s.stddev_[j] < 1e-12) s.constant_[j] = true;
    }
    return s;
}

FeatureVector Standardizer::apply(const FeatureVector& fv) const {
    if (fv.names != names_) throw std::invalid_argument("Standardizer: schema mismatch");
    FeatureVector out = fv;
    for (std::size_t j = 0; j < names_.size(); ++j) {
        const double centered = fv.values[j] - mean_[j];
        out.values[j] = constant_[j] ? centered : centered / stddev_[j];
    }
    return out;
}

std::vector<FeatureVector> Standardizer::apply_all(const std::vector<FeatureVector>& fvs) const {
    std::vector<FeatureVector> out;
    out.reserve(fvs.size());
    for (const auto& fv : fvs) out.push_back(apply(fv));
    return out;
}

}  // namespace rr
