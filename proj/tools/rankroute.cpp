// Command-line front end: one subcommand per pipeline stage.

#include <exception>
#include <filesystem>
#include <iostream>
#include <string>

#include <CLI11.hpp>

#include "rankroute/gateway.hpp"
#include "rankroute/io.hpp"
#include "rankroute/pipeline.hpp"
#include "rankroute/synth.hpp"

namespace {

namespace fs = std::filesystem;

struct CommonArgs {
    std::string config_path;
};

// applies --config first, then any explicit flag overrides
rr::PipelineConfig resolve_config(const CommonArgs& common, const rr::PipelineConfig& overrides,
                                  const std::vector<std::string>& overridden) {
    rr::PipelineConfig config;
    if (!common.config_path.empty()) config = rr::PipelineConfig::load(common.config_path);

    auto was_set = [&](const std::string& name) {
        return std::find(overridden.begin(), overridden.end(), name) != overridden.end();
    };
    auto pick = [&](const std::string& flag, std::string& dst, const std::string& src) {
        if (was_set(flag)) dst = src;
    };
    pick("--instances", config.paths.instances, overrides.paths.instances);
    pick("--dual-log", config.paths.dual_log, overrides.paths.dual_log);
    pick("--dumps", config.paths.dumps, overrides.paths.dumps);
    pick("--checklist", config.paths.checklist, overrides.paths.checklist);
    pick("--probe-results", config.paths.probe_results, overrides.paths.probe_results);
    pick("--labels", config.paths.labels, overrides.paths.labels);
    pick("--features", config.paths.features, overrides.paths.features);
    pick("--schema-manifest", config.paths.schema_manifest, overrides.paths.schema_manifest);
    pick("--selection-report", config.paths.selection_report, overrides.paths.selection_report);
    pick("--selected-manifest", config.paths.selected_manifest, overrides.paths.selected_manifest);
    pick("--model", config.paths.model, overrides.paths.model);
    pick("--training-log", config.paths.training_log, overrides.paths.training_log);
    pick("--frontier", config.paths.frontier, overrides.paths.frontier);
    pick("--policy", config.paths.policy, overrides.paths.policy);
    pick("--decisions", config.paths.decisions, overrides.paths.decisions);
    pick("--self-select-decisions", config.paths.self_select_decisions,
         overrides.paths.self_select_decisions);
    pick("--eval-report", config.paths.eval_report, overrides.paths.eval_report);
    pick("--report-text", config.paths.report_text, overrides.paths.report_text);
    pick("--report-json", config.paths.report_json, overrides.paths.report_json);
    pick("--cost-fit-dumps", config.cost_fit_dumps, overrides.cost_fit_dumps);
    pick("--cost-fit-log", config.cost_fit_log, overrides.cost_fit_log);

    if (was_set("--lambda")) config.lambda = overrides.lambda;
    if (was_set("--metric")) config.utility_metric = overrides.utility_metric;
    if (was_set("--anchor")) config.anchor = overrides.anchor;
    if (was_set("--w-t")) config.w_t = overrides.w_t;
    if (was_set("--w-u")) config.w_u = overrides.w_u;
    if (was_set("--u-base")) config.u_base = overrides.u_base;
    if (was_set("--epsilon")) config.epsilon = overrides.epsilon;
    if (was_set("--seed")) config.seed = overrides.seed;
    if (was_set("--backend")) config.backend = overrides.backend;
    if (was_set("--base-url")) config.gateway.base_url = overrides.gateway.base_url;
    if (was_set("--gw-model")) config.gateway.model = overrides.gateway.model;
    return config;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"rankroute: cost-aware reasoning routing for LLM-based ranking"};
    app.require_subcommand(1);

    CommonArgs common;
    rr::PipelineConfig flags;
    std::vector<std::string> overridden;
    std::string anchor_name_flag = "umax";

    auto add_stage_options = [&](CLI::App* cmd) {
        cmd->add_option("--config", common.config_path, "pipeline config JSON");
        auto track = [&](CLI::Option* opt) {
            opt->each([&overridden, opt](const std::string&) { overridden.push_back(opt->get_name()); });
        };
        track(cmd->add_option("--instances", flags.paths.instances));
        track(cmd->add_option("--dual-log", flags.paths.dual_log));
        track(cmd->add_option("--dumps", flags.paths.dumps));
        track(cmd->add_option("--checklist", flags.paths.checklist));
        track(cmd->add_option("--probe-results", flags.paths.probe_results));
        track(cmd->add_option("--labels", flags.paths.labels));
        track(cmd->add_option("--features", flags.paths.features));
        track(cmd->add_option("--schema-manifest", flags.paths.schema_manifest));
        track(cmd->add_option("--selection-report", flags.paths.selection_report));
        track(cmd->add_option("--selected-manifest", flags.paths.selected_manifest));
        track(cmd->add_option("--model", flags.paths.model));
        track(cmd->add_option("--training-log", flags.paths.training_log));
        track(cmd->add_option("--frontier", flags.paths.frontier));
        track(cmd->add_option("--policy", flags.paths.policy));
        track(cmd->add_option("--decisions", flags.paths.decisions));
        track(cmd->add_option("--self-select-decisions", flags.paths.self_select_decisions));
        track(cmd->add_option("--eval-report", flags.paths.eval_report));
        track(cmd->add_option("--report-text", flags.paths.report_text));
        track(cmd->add_option("--report-json", flags.paths.report_json));
        track(cmd->add_option("--cost-fit-dumps", flags.cost_fit_dumps));
        track(cmd->add_option("--cost-fit-log", flags.cost_fit_log));
        track(cmd->add_option("--lambda", flags.lambda));
        track(cmd->add_option("--metric", flags.utility_metric));
        track(cmd->add_option("--w-t", flags.w_t));
        track(cmd->add_option("--w-u", flags.w_u));
        track(cmd->add_option("--u-base", flags.u_base));
        track(cmd->add_option("--epsilon", flags.epsilon));
        track(cmd->add_option("--seed", flags.seed));
        track(cmd->add_option("--backend", flags.backend)->check(CLI::IsMember({"stub", "http"})));
        track(cmd->add_option("--base-url", flags.gateway.base_url));
        track(cmd->add_option("--gw-model", flags.gateway.model));
        auto* anchor_opt = cmd->add_option("--anchor", anchor_name_flag)
                               ->check(CLI::IsMember({"knee", "utopia", "epsilon", "umax"}));
        anchor_opt->each([&](const std::string& value) {
            flags.anchor = rr::anchor_from_name(value);
            overridden.push_back("--anchor");
        });
        return cmd;
    };

    // synth
    auto* synth = app.add_subcommand("synth", "generate a synthetic corpus with planted signal");
    rr::SynthConfig synth_config;
    std::string synth_out = "data";
    synth->add_option("--out", synth_out, "output directory");
    synth->add_option("--seed", synth_config.seed);
    synth->add_option("--n", synth_config.n_instances);
    synth->add_option("--candidates", synth_config.n_candidates);
    synth->add_option("--dim", synth_config.dim);
    synth->add_option("--history", synth_config.history_len);
    synth->add_option("--rec-fraction", synth_config.rec_fraction);
    synth->add_option("--think-helps-fraction", synth_config.think_helps_fraction);
    synth->add_option("--k", synth_config.k);

    // ingest
    auto* ingest = add_stage_options(app.add_subcommand("ingest", "validate and canonicalize instances"));
    std::string raw_path;
    ingest->add_option("--raw", raw_path, "external instances file")->required();

    auto* label = add_stage_options(app.add_subcommand("label", "compute advantage labels"));
    auto* features = add_stage_options(app.add_subcommand("features", "extract feature vectors"));
    auto* probe = add_stage_options(app.add_subcommand("probe", "run checklist probes"));
    std::string mask_export;
    probe->add_option("--export-mask", mask_export,
                      "also write the block-diagonal mask (RLE JSON) for a sample layout");
    auto* select = add_stage_options(app.add_subcommand("select", "two-stage feature selection"));
    auto* train = add_stage_options(app.add_subcommand("train", "train the monotone router"));
    auto* sweep = add_stage_options(app.add_subcommand("sweep", "trace the eta frontier"));
    auto* policy = add_stage_options(app.add_subcommand("policy", "solve an anchor and freeze"));
    auto* route = add_stage_options(app.add_subcommand("route", "route instances with a frozen policy"));
    auto* eval = add_stage_options(app.add_subcommand("eval", "evaluate arms on logged outcomes"));
    auto* report = add_stage_options(app.add_subcommand("report", "render report with relative deltas"));
    std::string baseline = "think";
    report->add_option("--baseline", baseline, "baseline arm for relative deltas");

    auto* collect = add_stage_options(
        app.add_subcommand("collect", "collect dual-mode logs from the gateway"));
    std::string collect_out;
    collect->add_option("--out", collect_out, "dual-mode log path (appended, resumable)");

    CLI11_PARSE(app, argc, argv);

    try {
        if (synth->parsed()) {
            const rr::SynthOutput output = rr::synthesize(synth_config);
            const rr::SynthFiles files = rr::write_synth_splits(output, synth_out);
            std::cout << "wrote splits under " << synth_out << " (train/val/test + checklist)\n";
            return 0;
        }
        const rr::PipelineConfig config = resolve_config(common, flags, overridden);
        if (ingest->parsed()) rr::stage_ingest(config, raw_path);
        if (label->parsed()) rr::stage_label(config);
        if (features->parsed()) rr::stage_features(config);
        if (probe->parsed()) {
            rr::stage_probe(config);
            if (!mask_export.empty()) {
                const rr::Checklist checklist = rr::io::read_checklist(config.paths.checklist);
                std::vector<std::size_t> lengths(checklist.size(), 12);
                std::vector<std::string> qids;
                for (const auto& q : checklist) qids.push_back(q.qid);
                const rr::ProbeLayout layout = rr::build_probe_layout(32, lengths, qids);
                const rr::MaskRle rle = rr::mask_to_rle(rr::build_block_diagonal_mask(layout));
                rr::io::atomic_write(mask_export, rr::io::encode_mask_rle(rle).dump() + "\n");
            }
        }
        if (select->parsed()) rr::stage_select(config);
        if (train->parsed()) rr::stage_train(config);
        if (sweep->parsed()) rr::stage_sweep(config);
        if (policy->parsed()) rr::stage_policy(config);
        if (route->parsed()) rr::stage_route(config);
        if (eval->parsed()) rr::stage_eval(config);
        if (report->parsed()) {
            rr::stage_report(config, baseline);
            std::cout << rr::io::read_text(config.paths.report_text);
        }
        if (collect->parsed()) {
            const auto instances = rr::io::read_instances(config.paths.instances);
            const std::string out_path = collect_out.empty() ? config.paths.dual_log : collect_out;
            rr::StubBackend stub;
            rr::HttpBackend http(config.gateway);
            rr::Backend& backend = config.backend == "stub" ? static_cast<rr::Backend&>(stub)
                                                            : static_cast<rr::Backend&>(http);
            const rr::CollectSummary summary =
                rr::collect_dual_mode(instances, backend, config.gateway, out_path);
            std::cout << "collected " << summary.completed << ", skipped " << summary.skipped
                      << ", failed " << summary.failed << "\n";
            if (summary.failed > 0) return 2;
        }
        return 0;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
}
