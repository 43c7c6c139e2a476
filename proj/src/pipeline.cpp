#include "rankroute/pipeline.hpp"

#include <algorithm>
#include <cmath>
#include <cstdlib>
#include <ctime>
#include <filesystem>
#include <iostream>
#include <map>
#include <set>
#include <sstream>

#include "rankroute/errors.hpp"
#include "rankroute/labels.hpp"
#include "rankroute/metrics.hpp"

namespace rr {

namespace {

namespace fs = std::filesystem;
using ojson = nlohmann::ordered_json;

std::map<std::string, const DualModeRecord*> index_records(const std::vector<DualModeRecord>& records) {
    std::map<std::string, const DualModeRecord*> out;
    for (const auto& r : records) out[r.instance_id] = &r;
    return out;
}

std::map<std::string, const RankingInstance*> index_instances(
    const std::vector<RankingInstance>& instances) {
    std::map<std::string, const RankingInstance*> out;
    for (const auto& i : instances) out[i.id] = &i;
    return out;
}

// instances/records reordered to the feature file's instance order
std::vector<RankingInstance> align_instances(const std::vector<FeatureVector>& features,
                                             const std::vector<RankingInstance>& instances) {
    const auto by_id = index_instances(instances);
    std::vector<RankingInstance> out;
    out.reserve(features.size());
    for (const auto& fv : features) {
        const auto it = by_id.find(fv.instance_id);
        if (it == by_id.end())
            throw std::invalid_argument("no instance for feature row " + fv.instance_id);
        out.push_back(*it->second);
    }
    return out;
}

DataMatrix matrix_for_schema(const std::vector<FeatureVector>& features,
                             const std::vector<std::string>& schema) {
    DataMatrix x(features.size(), schema.size());
    for (std::size_t r = 0; r < features.size(); ++r)
        for (std::size_t c = 0; c < schema.size(); ++c) x.at(r, c) = features[r].at(schema[c]);
    return x;
}

std::vector<double> column_by_name(const std::vector<FeatureVector>& features,
                                   const std::string& name) {
    std::vector<double> out;
    out.reserve(features.size());
    for (const auto& fv : features) out.push_back(fv.at(name));
    return out;
}

struct SweepContext {
    std::vector<double> predictions;
    std::vector<double> delta_costs;
    ModeStats stats;
};

SweepContext build_sweep_context(const PipelineConfig& config, const RouterModel& model) {
    const auto features = io::read_features(config.paths.features);
    const auto instances = align_instances(features, io::read_instances(config.paths.instances));
    const auto records = io::read_dual_log(config.paths.dual_log);
    const UtilityMetric metric = UtilityMetric::parse(config.utility_metric);

    SweepContext ctx;
    ctx.predictions = model.predict_batch(matrix_for_schema(features, model.schema()));
    ctx.delta_costs = column_by_name(features, kDeltaCostFeature);
    ctx.stats = summarize_modes(instances, records, metric);
    return ctx;
}

bool dominated_by_any(const FrontierPoint& p, const std::vector<FrontierPoint>& all) {
    for (const auto& q : all) {
        const bool weak = q.mean_tokens <= p.mean_tokens && q.utility >= p.utility;
        const bool strict = q.mean_tokens < p.mean_tokens || q.utility > p.utility;
        if (weak && strict) return true;
    }
    return false;
}

struct PerModeMetrics {
    double utility = 0.0, ndcg10 = 0.0, recall = 0.0, top1 = 0.0, pwacc = 0.0, tokens = 0.0;
};

PerModeMetrics score_outcome(const UtilityMetric& metric, const RankingInstance& instance,
                             const ModeOutcome& outcome) {
    PerModeMetrics m;
    m.tokens = static_cast<double>(outcome.tokens);
    if (outcome.has_flag("parse-failure") || outcome.ranking.order.empty()) return m;  // all zero
    m.utility = metric.evaluate(instance, outcome.ranking);
    m.ndcg10 = ndcg_at_k(outcome.ranking, instance.qrels, 10).value;
    m.recall = recall_at_k(outcome.ranking, instance.qrels, metric.k).value;
    m.top1 = static_cast<double>(top1_agreement(outcome.ranking, instance.qrels));
    m.pwacc = pairwise_accuracy(outcome.ranking.order, truth_order(instance)).value;
    return m;
}

}  // namespace

// --- config ---------------------------------------------------------------------

void PipelineConfig::apply_json(const ojson& j) {
    if (j.contains("paths")) {
        const auto& p = j.at("paths");
        auto set = [&](const char* key, std::string& field) {
            if (p.contains(key)) field = p.at(key).get<std::string>();
        };
        set("instances", paths.instances);
        set("dual_log", paths.dual_log);
        set("dumps", paths.dumps);
        set("checklist", paths.checklist);
        set("probe_results", paths.probe_results);
        set("labels", paths.labels);
        set("features", paths.features);
        set("schema_manifest", paths.schema_manifest);
        set("selection_report", paths.selection_report);
        set("selected_manifest", paths.selected_manifest);
        set("model", paths.model);
        set("training_log", paths.training_log);
        set("frontier", paths.frontier);
        set("policy", paths.policy);
        set("decisions", paths.decisions);
        set("self_select_decisions", paths.self_select_decisions);
        set("eval_report", paths.eval_report);
        set("report_text", paths.report_text);
        set("report_json", paths.report_json);
    }
    if (j.contains("lambda")) lambda = j.at("lambda").get<double>();
    if (j.contains("utility_metric")) utility_metric = j.at("utility_metric").get<std::string>();
    if (j.contains("cost_fit_dumps")) cost_fit_dumps = j.at("cost_fit_dumps").get<std::string>();
    if (j.contains("cost_fit_log")) cost_fit_log = j.at("cost_fit_log").get<std::string>();
    if (j.contains("selection")) {
        const auto& s = j.at("selection");
        if (s.contains("alpha")) selection.alpha = s.at("alpha").get<double>();
        if (s.contains("tau")) selection.tau = s.at("tau").get<double>();
        if (s.contains("rho")) selection.redundancy.rho = s.at("rho").get<double>();
        if (s.contains("n_bins")) selection.redundancy.n_bins = s.at("n_bins").get<int>();
        if (s.contains("n_settings")) selection.n_settings = s.at("n_settings").get<int>();
        if (s.contains("pinned")) selection.pinned = s.at("pinned").get<std::vector<std::string>>();
    }
    if (j.contains("train")) {
        const auto& t = j.at("train");
        if (t.contains("n_rounds")) train.n_rounds = t.at("n_rounds").get<int>();
        if (t.contains("max_depth")) train.max_depth = t.at("max_depth").get<int>();
        if (t.contains("learning_rate")) train.learning_rate = t.at("learning_rate").get<double>();
        if (t.contains("min_samples_leaf"))
            train.min_samples_leaf = t.at("min_samples_leaf").get<int>();
        if (t.contains("subsample")) train.subsample = t.at("subsample").get<double>();
        if (t.contains("seed")) train.seed = t.at("seed").get<std::uint64_t>();
        if (t.contains("reweight")) train.reweight_tukey = t.at("reweight").get<std::string>() == "tukey";
    }
    if (j.contains("anchor")) anchor = anchor_from_name(j.at("anchor").get<std::string>());
    if (j.contains("w_t")) w_t = j.at("w_t").get<double>();
    if (j.contains("w_u")) w_u = j.at("w_u").get<double>();
    if (j.contains("u_base")) u_base = j.at("u_base").get<double>();
    if (j.contains("epsilon")) epsilon = j.at("epsilon").get<double>();
    if (j.contains("random_arm_p")) random_arm_p = j.at("random_arm_p").get<double>();
    if (j.contains("seed")) seed = j.at("seed").get<std::uint64_t>();
    if (j.contains("backend")) backend = j.at("backend").get<std::string>();
    if (j.contains("gateway")) {
        const auto& g = j.at("gateway");
        if (g.contains("base_url")) gateway.base_url = g.at("base_url").get<std::string>();
        if (g.contains("api_key_env")) gateway.api_key_env = g.at("api_key_env").get<std::string>();
        if (g.contains("model")) gateway.model = g.at("model").get<std::string>();
        if (g.contains("timeout_seconds"))
            gateway.timeout_seconds = g.at("timeout_seconds").get<double>();
        if (g.contains("max_retries")) gateway.max_retries = g.at("max_retries").get<int>();
        if (g.contains("max_concurrency"))
            gateway.max_concurrency = g.at("max_concurrency").get<int>();
        if (g.contains("temperature")) gateway.temperature = g.at("temperature").get<double>();
        if (g.contains("supports_logprobs"))
            gateway.supports_logprobs = g.at("supports_logprobs").get<bool>();
    }
}

PipelineConfig PipelineConfig::load(const std::string& path) {
    PipelineConfig config;
    ojson j;
    try {
        j = ojson::parse(io::read_text(path));
    } catch (const nlohmann::json::exception& e) {
        throw ParseError("pipeline config " + path + ": " + e.what());
    }
    config.apply_json(j);
    return config;
}

// --- stages ----------------------------------------------------------------------

void stage_ingest(const PipelineConfig& config, const std::string& raw_instances_path) {
    const auto instances = io::read_instances(raw_instances_path);  // validates each record
    std::set<std::string> ids;
    for (const auto& inst : instances)
        if (!ids.insert(inst.id).second)
            throw std::invalid_argument("ingest: duplicate instance id " + inst.id);
    io::write_instances(config.paths.instances, instances,
                        {{"raw_instances", fingerprint_file(raw_instances_path)}});
}

void stage_label(const PipelineConfig& config) {
    const auto instances = io::read_instances(config.paths.instances);
    const auto records = io::read_dual_log(config.paths.dual_log);
    const auto by_id = index_records(records);
    const UtilityMetric metric = UtilityMetric::parse(config.utility_metric);

    io::LabelsFile out;
    out.lambda = config.lambda;
    out.metric = metric.name();
    for (const auto& instance : instances) {
        const auto it = by_id.find(instance.id);
        if (it == by_id.end())
            throw std::invalid_argument("label: no dual-mode record for instance " + instance.id);
        out.labels.push_back(advantage_label(instance, *it->second, metric, config.lambda));
    }
    io::write_labels(config.paths.labels, out,
                     {{"instances", fingerprint_file(config.paths.instances)},
                      {"dual_log", fingerprint_file(config.paths.dual_log)}});
}

void stage_features(const PipelineConfig& config) {
    const auto dumps = io::read_dumps(config.paths.dumps);

    const std::string fit_dumps_path =
        config.cost_fit_dumps.empty() ? config.paths.dumps : config.cost_fit_dumps;
    const std::string fit_log_path =
        config.cost_fit_log.empty() ? config.paths.dual_log : config.cost_fit_log;
    const auto fit_dumps = io::read_dumps(fit_dumps_path);
    const auto fit_records = io::read_dual_log(fit_log_path);
    const auto fit_by_id = index_records(fit_records);

    std::vector<CostObservation> observations;
    for (const auto& dump : fit_dumps) {
        const auto it = fit_by_id.find(dump.instance_id);
        if (it == fit_by_id.end()) continue;  // cost fit uses the overlap only
        CostObservation obs;
        obs.prompt_tokens = static_cast<double>(dump.prompt_tokens);
        obs.n_candidates = static_cast<double>(dump.candidates.size());
        obs.delta_tokens = static_cast<double>(it->second->think.tokens) -
                           static_cast<double>(it->second->non_think.tokens);
        observations.push_back(obs);
    }
    const CostModel cost_model = CostModel::fit(observations);

    std::vector<FeatureVector> features = extract_features_batch(dumps, cost_model);

    std::map<std::string, std::string> inputs = {
        {"dumps", fingerprint_file(config.paths.dumps)},
        {"cost_fit_dumps", fingerprint_file(fit_dumps_path)},
        {"cost_fit_log", fingerprint_file(fit_log_path)}};

    if (!config.paths.probe_results.empty() && fs::exists(config.paths.probe_results)) {
        const Checklist checklist = io::read_checklist(config.paths.checklist);
        const auto probe_results = io::read_probe_results(config.paths.probe_results);
        std::map<std::string, const ProbeResult*> probe_by_id;
        for (const auto& r : probe_results) probe_by_id[r.instance_id] = &r;
        for (auto& fv : features) {
            const auto it = probe_by_id.find(fv.instance_id);
            if (it == probe_by_id.end())
                throw std::invalid_argument("features: no probe result for instance " +
                                            fv.instance_id);
            const DifficultySignals signals = aggregate_pairs(*it->second, checklist);
            fv = merge_difficulty_signals(fv, signals.signals);
        }
        inputs["probe_results"] = fingerprint_file(config.paths.probe_results);
        inputs["checklist"] = fingerprint_file(config.paths.checklist);
    }

    io::write_features(config.paths.features, features, inputs);
    io::write_schema_manifest(config.paths.schema_manifest, features.front().names);
}

void stage_probe(const PipelineConfig& config, Backend* backend_override) {
    const auto instances = io::read_instances(config.paths.instances);
    const Checklist checklist = io::read_checklist(config.paths.checklist);

    StubBackend stub;
    HttpBackend http(config.gateway);
    Backend* backend = backend_override ? backend_override
                       : config.backend == "stub" ? static_cast<Backend*>(&stub)
                                                  : static_cast<Backend*>(&http);

    std::vector<ProbeResult> results;
    results.reserve(instances.size());
    for (const auto& instance : instances)
        results.push_back(probe_checklist(instance, checklist, *backend, config.gateway));
    io::write_probe_results(config.paths.probe_results, results,
                            {{"instances", fingerprint_file(config.paths.instances)},
                             {"checklist", fingerprint_file(config.paths.checklist)}});
}

void stage_select(const PipelineConfig& config) {
    const auto features = io::read_features(config.paths.features);
    const auto labels = io::read_labels(config.paths.labels);
    std::map<std::string, double> advantage_by_id;
    for (const auto& label : labels.labels) advantage_by_id[label.instance_id] = label.advantage;

    std::vector<double> y;
    y.reserve(features.size());
    for (const auto& fv : features) {
        const auto it = advantage_by_id.find(fv.instance_id);
        if (it == advantage_by_id.end())
            throw std::invalid_argument("select: no label for instance " + fv.instance_id);
        y.push_back(it->second);
    }

    const Standardizer standardizer = Standardizer::fit(features);
    const FeatureTable table = FeatureTable::from_vectors(standardizer.apply_all(features));
    const SelectionReport report = run_selection(table.x, y, table.schema, config.selection);

    ojson doc;
    doc["format"] = "rankroute-selection";
    doc["version"] = 1;
    doc["inputs"] = {{"features", fingerprint_file(config.paths.features)},
                     {"labels", fingerprint_file(config.paths.labels)}};
    doc["alpha"] = report.alpha;
    doc["tau"] = report.tau;
    doc["rho"] = report.rho;
    doc["schema"] = report.schema;
    doc["per_setting_coefficients"] = report.per_setting_coefficients;
    doc["full_fit_coefficients"] = report.full_fit_coefficients;
    doc["kept"] = report.kept;
    ojson dropped = ojson::array();
    for (const auto& d : report.dropped) dropped.push_back({{"name", d.name}, {"reason", d.reason}});
    doc["dropped"] = std::move(dropped);
    doc["warnings"] = report.warnings;
    io::atomic_write(config.paths.selection_report, doc.dump(2) + "\n");
    io::write_schema_manifest(config.paths.selected_manifest, report.kept);
}

void stage_train(const PipelineConfig& config) {
    const auto features = io::read_features(config.paths.features);
    const auto labels = io::read_labels(config.paths.labels);
    const auto schema = io::read_schema_manifest(config.paths.selected_manifest);

    std::map<std::string, const AdvantageLabel*> label_by_id;
    for (const auto& label : labels.labels) label_by_id[label.instance_id] = &label;

    std::vector<double> y, w;
    for (const auto& fv : features) {
        const auto it = label_by_id.find(fv.instance_id);
        if (it == label_by_id.end())
            throw std::invalid_argument("train: no label for instance " + fv.instance_id);
        y.push_back(it->second->advantage);
        w.push_back(it->second->weight);
    }

    std::map<std::string, Monotone> monotone;
    if (std::find(schema.begin(), schema.end(), kDeltaCostFeature) != schema.end())
        monotone[kDeltaCostFeature] = Monotone::Decreasing;

    const DataMatrix x = matrix_for_schema(features, schema);
    const TrainResult result = train_router(x, y, w, schema, monotone, config.train);

    io::atomic_write(config.paths.model, result.model.save_text() + "\n");

    io::FileMeta meta;
    meta.kind = "training-log";
    meta.inputs = {{"features", fingerprint_file(config.paths.features)},
                   {"labels", fingerprint_file(config.paths.labels)},
                   {"selected_manifest", fingerprint_file(config.paths.selected_manifest)}};
    std::vector<ojson> rounds;
    for (std::size_t i = 0; i < result.round_losses.size(); ++i)
        rounds.push_back({{"record", "round"}, {"round", i}, {"loss", result.round_losses[i]}});
    io::atomic_write(config.paths.training_log, io::render_jsonl(meta, rounds));
}

void stage_sweep(const PipelineConfig& config) {
    const RouterModel model = RouterModel::load_text(io::read_text(config.paths.model));
    const SweepContext ctx = build_sweep_context(config, model);

    const SweepInputs inputs{ctx.predictions, ctx.delta_costs, ctx.stats};
    const std::vector<double> grid = default_eta_grid(ctx.predictions, ctx.delta_costs);
    std::vector<FrontierPoint> points = sweep_eta(inputs, grid);
    for (auto& p : points) p.nondominated = !dominated_by_any(p, points);

    io::write_frontier(config.paths.frontier, points,
                       {{"model", fingerprint_file(config.paths.model)},
                        {"features", fingerprint_file(config.paths.features)},
                        {"dual_log", fingerprint_file(config.paths.dual_log)}});
}

void stage_policy(const PipelineConfig& config) {
    const auto all_points = io::read_frontier(config.paths.frontier);
    const std::vector<FrontierPoint> frontier = pareto_filter(all_points);

    const RouterModel model = RouterModel::load_text(io::read_text(config.paths.model));
    const SweepContext ctx = build_sweep_context(config, model);
    const SweepInputs inputs{ctx.predictions, ctx.delta_costs, ctx.stats};

    AnchorChoice choice;
    PolicyArtifact artifact;
    switch (config.anchor) {
        case Anchor::Knee: choice = knee_point(frontier); break;
        case Anchor::Utopia:
            choice = utopia_point(frontier, config.w_t, config.w_u);
            artifact.w_t = config.w_t;
            artifact.w_u = config.w_u;
            break;
        case Anchor::Epsilon: {
            const double u_base =
                config.u_base >= 0.0 ? config.u_base : ctx.stats.mean_utility_non();
            choice = epsilon_point(frontier, u_base, config.epsilon);
            artifact.u_base = u_base;
            artifact.epsilon = config.epsilon;
            break;
        }
        case Anchor::UMax: choice = umax_point(frontier); break;
        case Anchor::Manual:
            throw std::invalid_argument("stage_policy: manual anchor has no solver; set eta directly");
    }

    const std::vector<double> grid = default_eta_grid(ctx.predictions, ctx.delta_costs);
    const double eta = calibrate_eta(choice.point.mean_tokens, inputs, grid);
    const FrontierPoint realized = evaluate_eta(inputs, eta);

    PolicyArtifact frozen =
        freeze_policy(config.anchor, eta, realized, fingerprint_file(config.paths.model),
                      fingerprint_file(config.paths.dual_log), artifact_timestamp());
    frozen.w_t = artifact.w_t;
    frozen.w_u = artifact.w_u;
    frozen.u_base = artifact.u_base;
    frozen.epsilon = artifact.epsilon;
    frozen.flags = choice.flags;
    io::atomic_write(config.paths.policy, frozen.save_text() + "\n");
}

void stage_route(const PipelineConfig& config) {
    const RouterModel model = RouterModel::load_text(io::read_text(config.paths.model));
    const PolicyArtifact artifact = PolicyArtifact::load_text(io::read_text(config.paths.policy));
    const auto features = io::read_features(config.paths.features);

    const std::string model_fp = fingerprint_file(config.paths.model);
    if (artifact.model_hash != model_fp)
        std::cerr << "warning: policy was frozen against model " << artifact.model_hash
                  << " but routing uses " << model_fp << "\n";

    const std::vector<double> preds = model.predict_batch(matrix_for_schema(features, model.schema()));
    const std::vector<double> dcosts = column_by_name(features, kDeltaCostFeature);

    std::vector<io::Decision> decisions;
    decisions.reserve(features.size());
    for (std::size_t i = 0; i < features.size(); ++i) {
        io::Decision d;
        d.instance_id = features[i].instance_id;
        d.a_hat = preds[i];
        d.delta_cost_est = dcosts[i];
        d.mode = artifact.route(preds[i], dcosts[i]);
        decisions.push_back(std::move(d));
    }
    std::map<std::string, std::string> inputs = {
        {"model", model_fp},
        {"policy", fingerprint_file(config.paths.policy)},
        {"features", fingerprint_file(config.paths.features)}};
    if (artifact.model_hash != model_fp) inputs["model_hash_mismatch"] = artifact.model_hash;
    io::write_decisions(config.paths.decisions, decisions, inputs);
}

void stage_eval(const PipelineConfig& config) {
    const auto instances = io::read_instances(config.paths.instances);
    const auto records = io::read_dual_log(config.paths.dual_log);
    const auto routed = io::read_decisions(config.paths.decisions);
    std::vector<io::Decision> self_select;
    const bool have_self = !config.paths.self_select_decisions.empty() &&
                           fs::exists(config.paths.self_select_decisions);
    if (have_self) self_select = io::read_decisions(config.paths.self_select_decisions);

    const UtilityMetric metric = UtilityMetric::parse(config.utility_metric);
    const EvalReport report = evaluate_arms(instances, records, routed,
                                            have_self ? &self_select : nullptr, metric,
                                            config.seed ^ 0x52414e44ULL, config.random_arm_p);

    ojson doc = eval_report_to_json(report);
    doc["inputs"] = {{"instances", fingerprint_file(config.paths.instances)},
                     {"dual_log", fingerprint_file(config.paths.dual_log)},
                     {"decisions", fingerprint_file(config.paths.decisions)}};
    io::atomic_write(config.paths.eval_report, doc.dump(2) + "\n");
}

void stage_report(const PipelineConfig& config, const std::string& baseline_arm) {
    ojson doc;
    try {
        doc = ojson::parse(io::read_text(config.paths.eval_report));
    } catch (const nlohmann::json::exception& e) {
        throw ParseError("eval report: " + std::string(e.what()));
    }
    const EvalReport report = eval_report_from_json(doc);
    if (!report.has_arm(baseline_arm))
        throw std::invalid_argument("report: baseline arm not present: " + baseline_arm);

    io::atomic_write(config.paths.report_text, render_report_text(report, baseline_arm));
    ojson out = render_report_json(report, baseline_arm);
    out["inputs"] = {{"eval_report", fingerprint_file(config.paths.eval_report)}};
    io::atomic_write(config.paths.report_json, out.dump(2) + "\n");
}

// --- synth splits -------------------------------------------------------------------

SynthFiles write_synth_splits(const SynthOutput& output, const std::string& dir) {
    fs::create_directories(dir);
    const std::size_t n = output.instances.size();
    const std::size_t train_end = n * 6 / 10;
    const std::size_t val_end = n * 8 / 10;

    auto slice_paths = [&](const char* name) {
        SplitPaths p;
        p.instances = (fs::path(dir) / (std::string(name) + "_instances.jsonl")).string();
        p.dumps = (fs::path(dir) / (std::string(name) + "_dumps.jsonl")).string();
        p.dual_log = (fs::path(dir) / (std::string(name) + "_dual.jsonl")).string();
        return p;
    };

    SynthFiles files;
    files.train = slice_paths("train");
    files.val = slice_paths("val");
    files.test = slice_paths("test");
    files.checklist = (fs::path(dir) / "checklist.jsonl").string();

    auto write_range = [&](const SplitPaths& paths, std::size_t begin, std::size_t end) {
        std::vector<RankingInstance> instances(output.instances.begin() + static_cast<std::ptrdiff_t>(begin),
                                               output.instances.begin() + static_cast<std::ptrdiff_t>(end));
        std::vector<EmbeddingDump> dumps(output.dumps.begin() + static_cast<std::ptrdiff_t>(begin),
                                         output.dumps.begin() + static_cast<std::ptrdiff_t>(end));
        std::vector<DualModeRecord> records(output.records.begin() + static_cast<std::ptrdiff_t>(begin),
                                            output.records.begin() + static_cast<std::ptrdiff_t>(end));
        io::write_instances(paths.instances, instances);
        io::write_dumps(paths.dumps, dumps);
        io::write_dual_log(paths.dual_log, records,
                           {{"instances", fingerprint_file(paths.instances)}});
    };
    write_range(files.train, 0, train_end);
    write_range(files.val, train_end, val_end);
    write_range(files.test, val_end, n);
    io::write_checklist(files.checklist, default_checklist());
    return files;
}

// --- evaluation -----------------------------------------------------------------------

double ArmStats::tradeoff() const { return tradeoff_score(ndcg10, tokens); }

const ArmStats& EvalReport::arm(const std::string& name) const {
    for (const auto& [arm_name, stats] : arms)
        if (arm_name == name) return stats;
    throw std::out_of_range("no such arm: " + name);
}

bool EvalReport::has_arm(const std::string& name) const {
    return std::any_of(arms.begin(), arms.end(), [&](const auto& a) { return a.first == name; });
}

EvalReport evaluate_arms(const std::vector<RankingInstance>& instances,
                         const std::vector<DualModeRecord>& records,
                         const std::vector<io::Decision>& routed,
                         const std::vector<io::Decision>* self_select, const UtilityMetric& metric,
                         std::uint64_t random_seed, double random_p) {
    const auto record_by_id = index_records(records);
    std::map<std::string, Mode> routed_by_id;
    for (const auto& d : routed) routed_by_id[d.instance_id] = d.mode;
    std::map<std::string, Mode> self_by_id;
    if (self_select)
        for (const auto& d : *self_select) self_by_id[d.instance_id] = d.mode;

    struct Row {
        PerModeMetrics non, think;
    };
    std::vector<Row> rows;
    rows.reserve(instances.size());
    std::vector<Mode> routed_choice, oracle_choice, random_choice, self_choice;

    Rng rng(random_seed);
    for (const auto& instance : instances) {
        const auto rec_it = record_by_id.find(instance.id);
        if (rec_it == record_by_id.end())
            throw std::invalid_argument("eval: no dual-mode record for instance " + instance.id);
        const DualModeRecord& rec = *rec_it->second;

        Row row;
        row.non = score_outcome(metric, instance, rec.non_think);
        row.think = score_outcome(metric, instance, rec.think);
        rows.push_back(row);

        const auto routed_it = routed_by_id.find(instance.id);
        if (routed_it == routed_by_id.end())
            throw std::invalid_argument("eval: no routing decision for instance " + instance.id);
        routed_choice.push_back(routed_it->second);

        // oracle: better utility, ties take the cheaper mode
        if (row.think.utility > row.non.utility)
            oracle_choice.push_back(Mode::Think);
        else if (row.think.utility < row.non.utility)
            oracle_choice.push_back(Mode::NonThink);
        else
            oracle_choice.push_back(row.think.tokens < row.non.tokens ? Mode::Think : Mode::NonThink);

        random_choice.push_back(rng.coin(random_p) ? Mode::Think : Mode::NonThink);

        if (self_select) {
            const auto self_it = self_by_id.find(instance.id);
            if (self_it == self_by_id.end())
                throw std::invalid_argument("eval: no self-select decision for instance " +
                                            instance.id);
            self_choice.push_back(self_it->second);
        }
    }

    auto collect = [&](auto mode_of) {
        ArmStats stats;
        const double n = static_cast<double>(rows.size());
        for (std::size_t i = 0; i < rows.size(); ++i) {
            const Mode m = mode_of(i);
            const PerModeMetrics& pm = m == Mode::Think ? rows[i].think : rows[i].non;
            stats.utility += pm.utility;
            stats.ndcg10 += pm.ndcg10;
            stats.recall += pm.recall;
            stats.top1 += pm.top1;
            stats.pwacc += pm.pwacc;
            stats.tokens += pm.tokens;
            if (m == Mode::Think) stats.think_fraction += 1.0;
        }
        stats.utility /= n;
        stats.ndcg10 /= n;
        stats.recall /= n;
        stats.top1 /= n;
        stats.pwacc /= n;
        stats.tokens /= n;
        stats.think_fraction /= n;
        return stats;
    };

    EvalReport report;
    report.metric_name = metric.name();
    report.arms.emplace_back("non_think", collect([](std::size_t) { return Mode::NonThink; }));
    report.arms.emplace_back("think", collect([](std::size_t) { return Mode::Think; }));
    report.arms.emplace_back("random", collect([&](std::size_t i) { return random_choice[i]; }));
    if (self_select)
        report.arms.emplace_back("self_select", collect([&](std::size_t i) { return self_choice[i]; }));
    report.arms.emplace_back("routed", collect([&](std::size_t i) { return routed_choice[i]; }));
    report.arms.emplace_back("oracle", collect([&](std::size_t i) { return oracle_choice[i]; }));
    return report;
}

std::optional<double> relative_delta(double ours, double base) {
    if (base == 0.0) return std::nullopt;
    return (ours - base) / base;
}

namespace {

ojson arm_to_json(const ArmStats& stats) {
    return {{"utility", stats.utility},   {"ndcg10", stats.ndcg10},
            {"recall", stats.recall},     {"top1", stats.top1},
            {"pwacc", stats.pwacc},       {"tokens", stats.tokens},
            {"think_fraction", stats.think_fraction}, {"tradeoff", stats.tradeoff()}};
}

ArmStats arm_from_json(const ojson& j) {
    ArmStats stats;
    stats.utility = j.at("utility").get<double>();
    stats.ndcg10 = j.at("ndcg10").get<double>();
    stats.recall = j.at("recall").get<double>();
    stats.top1 = j.at("top1").get<double>();
    stats.pwacc = j.at("pwacc").get<double>();
    stats.tokens = j.at("tokens").get<double>();
    stats.think_fraction = j.at("think_fraction").get<double>();
    return stats;
}

}  // namespace

ojson eval_report_to_json(const EvalReport& report) {
    ojson doc;
    doc["format"] = "rankroute-eval";
    doc["version"] = 1;
    doc["metric"] = report.metric_name;
    ojson arms = ojson::object();
    for (const auto& [name, stats] : report.arms) arms[name] = arm_to_json(stats);
    doc["arms"] = std::move(arms);
    return doc;
}

EvalReport eval_report_from_json(const ojson& j) {
    try {
        if (j.at("format").get<std::string>() != "rankroute-eval")
            throw ParseError("eval report: unrecognized format");
        EvalReport report;
        report.metric_name = j.at("metric").get<std::string>();
        for (const auto& [name, stats] : j.at("arms").items())
            report.arms.emplace_back(name, arm_from_json(stats));
        return report;
    } catch (const nlohmann::json::exception& e) {
        throw ParseError(std::string("eval report: ") + e.what());
    }
}

std::string render_report_text(const EvalReport& report, const std::string& baseline) {
    std::ostringstream out;
    out.setf(std::ios::fixed);
    out << "arm          utility  ndcg@10  recall   top1     pwacc    tokens    think%   tradeoff\n";
    for (const auto& [name, stats] : report.arms) {
        out << name;
        for (std::size_t pad = name.size(); pad < 13; ++pad) out << ' ';
        out.precision(4);
        out << stats.utility << "   " << stats.ndcg10 << "   " << stats.recall << "   " << stats.top1
            << "   " << stats.pwacc << "   ";
        out.precision(1);
        out << stats.tokens << "    ";
        out.precision(3);
        out << stats.think_fraction << "    ";
        out.precision(4);
        out << stats.tradeoff() << "\n";
    }

    const ArmStats& base = report.arm(baseline);
    out << "\nrelative to " << baseline << " (utility metric " << report.metric_name << "):\n";
    for (const auto& [name, stats] : report.arms) {
        if (name == baseline) continue;
        out << "  " << name << ": ";
        const auto du = relative_delta(stats.utility, base.utility);
        const auto dt = relative_delta(stats.tokens, base.tokens);
        out.precision(2);
        if (du)
            out << "utility " << (*du >= 0 ? "+" : "") << *du * 100.0 << "%";
        else
            out << "utility delta undefined (zero baseline)";
        out << ", ";
        if (dt)
            out << "tokens " << (*dt >= 0 ? "+" : "") << *dt * 100.0 << "%";
        else
            out << "tokens delta undefined (zero baseline)";
        out << "\n";
    }
    return out.str();
}

ojson render_report_json(const EvalReport& report, const std::string& baseline) {
    ojson doc;
    doc["format"] = "rankroute-report";
    doc["version"] = 1;
    doc["metric"] = report.metric_name;
    doc["baseline"] = baseline;
    ojson arms = ojson::object();
    for (const auto& [name, stats] : report.arms) arms[name] = arm_to_json(stats);
    doc["arms"] = std::move(arms);

    const ArmStats& base = report.arm(baseline);
    ojson deltas = ojson::object();
    for (const auto& [name, stats] : report.arms) {
        if (name == baseline) continue;
        ojson d = ojson::object();
        auto put = [&](const char* key, double ours, double b) {
            const auto delta = relative_delta(ours, b);
            if (delta)
                d[key] = *delta;
            else
                d[key] = nullptr;  // undefined against a zero baseline
        };
        put("utility", stats.utility, base.utility);
        put("ndcg10", stats.ndcg10, base.ndcg10);
        put("tokens", stats.tokens, base.tokens);
        put("tradeoff", stats.tradeoff(), base.tradeoff());
        deltas[name] = std::move(d);
    }
    doc["deltas"] = std::move(deltas);
    return doc;
}

std::string artifact_timestamp() {
    std::time_t t = std::time(nullptr);
    if (const char* epoch = std::getenv("SOURCE_DATE_EPOCH")) {
        char* end = nullptr;
        const long long v = std::strtoll(epoch, &end, 10);
        if (end && *end == '\0') t = static_cast<std::time_t>(v);
    }
    std::tm tm_utc{};
    gmtime_r(&t, &tm_utc);
    char buf[32];
    std::strftime(buf, sizeof(buf), "%Y-%m-%dT%H:%M:%SZ", &tm_utc);
    return buf;
}

}  // namespace rr
