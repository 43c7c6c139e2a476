#pragma once
// Stage orchestration: each stage reads its input files, writes its output
// atomically with input fingerprints in the header, and is deterministic
// under a fixed seed.

#include <array>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "rankroute/gateway.hpp"
#include "rankroute/gbdt.hpp"
#include "rankroute/io.hpp"
#include "rankroute/policy.hpp"
#include "rankroute/selection.hpp"
#include "rankroute/synth.hpp"

namespace rr {

struct PipelinePaths {
    std::string instances;
    std::string dual_log;
    std::string dumps;
    std::string checklist;
    std::string probe_results;
    std::string labels;
    std::string features;
    std::string schema_manifest;
    std::string selection_report;
    std::string selected_manifest;
    std::string model;
    std::string training_log;
    std::string frontier;
    std::string policy;
    std::string decisions;
    std::string self_select_decisions;  // optional arm input
    std::string eval_report;
    std::string report_text;
    std::string report_json;
};

struct PipelineConfig {
    PipelinePaths paths;
    double lambda = 1e-4;
    std::string utility_metric = "ndcg@10";
    // cost model fits on these (train split); empty means the stage's own
    // dumps / dual log
    std::string cost_fit_dumps;
    std::string cost_fit_log;
    SelectionConfig selection;
    TrainConfig train;
    Anchor anchor = Anchor::UMax;
    double w_t = 1.0;
    double w_u = 1.0;
    double u_base = -1.0;  // < 0: use the always-NonThink validation utility
    double epsilon = 0.0;
    double random_arm_p = 0.5;
    std::uint64_t seed = 1;
    std::string backend = "stub";  // "stub" | "http"
    GatewayConfig gateway;

    static PipelineConfig load(const std::string& path);
    void apply_json(const nlohmann::ordered_json& j);
};

// --- stages -------------------------------------------------------------------

void stage_ingest(const PipelineConfig& config, const std::string& raw_instances_path);
void stage_label(const PipelineConfig& config);
void stage_features(const PipelineConfig& config);
void stage_probe(const PipelineConfig& config, Backend* backend_override = nullptr);
void stage_select(const PipelineConfig& config);
void stage_train(const PipelineConfig& config);
void stage_sweep(const PipelineConfig& config);
void stage_policy(const PipelineConfig& config);
void stage_route(const PipelineConfig& config);
void stage_eval(const PipelineConfig& config);
void stage_report(const PipelineConfig& config, const std::string& baseline_arm);

// --- synth and splits -----------------------------------------------------------

struct SplitPaths {
    std::string instances;
    std::string dumps;
    std::string dual_log;
};

struct SynthFiles {
    SplitPaths train, val, test;
    std::string checklist;
};

// Writes train/val/test splits (6:2:2 by instance order) plus the default
// checklist under `dir`.
SynthFiles write_synth_splits(const SynthOutput& output, const std::string& dir);

// --- evaluation and reporting -----------------------------------------------------

struct ArmStats {
    double utility = 0.0;  // configured metric
    double ndcg10 = 0.0;
    double recall = 0.0;
    double top1 = 0.0;
    double pwacc = 0.0;
    double tokens = 0.0;
    double think_fraction = 0.0;

    double tradeoff() const;  // ndcg10 - 1e-4 * tokens
};

struct EvalReport {
    std::string metric_name;
    std::vector<std::pair<std::string, ArmStats>> arms;

    const ArmStats& arm(const std::string& name) const;
    bool has_arm(const std::string& name) const;
};

// Arms: non_think, think, random (seeded coin), routed (from decisions),
// oracle (per-instance better mode, ties cheaper), and self_select when
// decisions for it are supplied.
EvalReport evaluate_arms(const std::vector<RankingInstance>& instances,
                         const std::vector<DualModeRecord>& records,
                         const std::vector<io::Decision>& routed,
                         const std::vector<io::Decision>* self_select, const UtilityMetric& metric,
                         std::uint64_t random_seed, double random_p);

// (ours - base) / base; empty when the baseline is zero.
std::optional<double> relative_delta(double ours, double base);

std::string render_report_text(const EvalReport& report, const std::string& baseline);
nlohmann::ordered_json render_report_json(const EvalReport& report, const std::string& baseline);

nlohmann::ordered_json eval_report_to_json(const EvalReport& report);
EvalReport eval_report_from_json(const nlohmann::ordered_json& j);

// ISO-8601 UTC timestamp; honors SOURCE_DATE_EPOCH for reproducible artifacts.
std::string artifact_timestamp();

}  // namespace rr
