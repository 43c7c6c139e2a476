#include <doctest.h>

#include <cstdlib>
#include <filesystem>

#include "rankroute/io.hpp"
#include "rankroute/labels.hpp"
#include "rankroute/pipeline.hpp"

using namespace rr;
namespace fs = std::filesystem;

namespace {

struct TempDir {
    fs::path dir;
    explicit TempDir(const std::string& name) : dir(fs::temp_directory_path() / name) {
        fs::remove_all(dir);
        fs::create_directories(dir);
    }
    ~TempDir() { fs::remove_all(dir); }
    std::string path(const std::string& file) const { return (dir / file).string(); }
};

PipelineConfig config_for(const TempDir& tmp, const SplitPaths& split, const std::string& checklist) {
    PipelineConfig config;
    config.paths.instances = split.instances;
    config.paths.dumps = split.dumps;
    config.paths.dual_log = split.dual_log;
    config.paths.checklist = checklist;
    config.paths.probe_results = tmp.path("probe.jsonl");
    config.paths.labels = tmp.path("labels.jsonl");
    config.paths.features = tmp.path("features.jsonl");
    config.paths.schema_manifest = tmp.path("schema.txt");
    config.paths.selection_report = tmp.path("selection.json");
    config.paths.selected_manifest = tmp.path("selected.txt");
    config.paths.model = tmp.path("model.json");
    config.paths.training_log = tmp.path("training_log.jsonl");
    config.paths.frontier = tmp.path("frontier.jsonl");
    config.paths.policy = tmp.path("policy.json");
    config.paths.decisions = tmp.path("decisions.jsonl");
    config.paths.eval_report = tmp.path("eval.json");
    config.paths.report_text = tmp.path("report.txt");
    config.paths.report_json = tmp.path("report.json");
    config.train.n_rounds = 40;
    config.train.seed = 7;
    return config;
}

}  // namespace

TEST_CASE("synth: determinism and planted subpopulations") {
    SynthConfig config;
    config.n_instances = 120;
    config.seed = 21;
    const SynthOutput a = synthesize(config);
    const SynthOutput b = synthesize(config);

    REQUIRE(a.instances.size() == 120);
    CHECK(a.records[17].think.tokens == b.records[17].think.tokens);
    CHECK(a.dumps[33].candidates == b.dumps[33].candidates);
    CHECK(a.think_helps == b.think_helps);

    // default pool size is 50
    CHECK(a.instances[0].candidates.size() == 50);

    // the generator honors its own planted split
    const UtilityMetric metric = UtilityMetric::parse("ndcg@10");
    double helps_gap = 0.0, rest_gap = 0.0;
    int helps_n = 0, rest_n = 0;
    for (std::size_t i = 0; i < a.instances.size(); ++i) {
        const double gap = metric.evaluate(a.instances[i], a.records[i].think.ranking) -
                           metric.evaluate(a.instances[i], a.records[i].non_think.ranking);
        if (a.think_helps[i]) {
            helps_gap += gap;
            ++helps_n;
        } else {
            rest_gap += gap;
            ++rest_n;
        }
    }
    REQUIRE(helps_n > 0);
    REQUIRE(rest_n > 0);
    CHECK(helps_gap / helps_n > 0.0);
    CHECK(rest_gap / rest_n <= 0.0);
}

TEST_CASE("synth writes byte-identical split files per seed") {
    TempDir run1("rankroute_pl_synth1"), run2("rankroute_pl_synth2");
    SynthConfig config;
    config.n_instances = 30;
    config.seed = 8;
    const SynthFiles f1 = write_synth_splits(synthesize(config), run1.dir.string());
    const SynthFiles f2 = write_synth_splits(synthesize(config), run2.dir.string());
    CHECK(io::read_text(f1.train.instances) == io::read_text(f2.train.instances));
    CHECK(io::read_text(f1.val.dual_log) == io::read_text(f2.val.dual_log));
    CHECK(io::read_text(f1.test.dumps) == io::read_text(f2.test.dumps));
}

TEST_CASE("full pipeline end to end on a small synthetic corpus") {
    TempDir tmp("rankroute_pl_e2e");
    SynthConfig synth_config;
    synth_config.n_instances = 150;
    synth_config.seed = 33;
    const SynthOutput data = synthesize(synth_config);
    const SynthFiles files = write_synth_splits(data, tmp.dir.string());

    // train-split stages
    PipelineConfig train_config = config_for(tmp, files.train, files.checklist);
    stage_label(train_config);
    stage_probe(train_config);
    stage_features(train_config);
    stage_select(train_config);
    stage_train(train_config);

    const io::LabelsFile labels = io::read_labels(train_config.paths.labels);
    CHECK(labels.lambda == train_config.lambda);
    CHECK(labels.labels.size() == 90);  // 60% of 150

    // training log losses are non-increasing
    const auto log = io::read_jsonl(train_config.paths.training_log, "training-log", true);
    REQUIRE(log.records.size() == 40);
    double prev = std::numeric_limits<double>::infinity();
    for (const auto& rec : log.records) {
        const double loss = rec.at("loss").get<double>();
        CHECK(loss <= prev + 1e-12);
        prev = loss;
    }

    // validation-split stages reuse the train cost model and artifacts
    PipelineConfig val_config = config_for(tmp, files.val, files.checklist);
    val_config.paths.probe_results = tmp.path("probe_val.jsonl");
    val_config.paths.features = tmp.path("features_val.jsonl");
    val_config.paths.schema_manifest = tmp.path("schema_val.txt");
    val_config.paths.labels = train_config.paths.labels;  // unused downstream
    val_config.paths.model = train_config.paths.model;
    val_config.paths.selected_manifest = train_config.paths.selected_manifest;
    val_config.cost_fit_dumps = files.train.dumps;
    val_config.cost_fit_log = files.train.dual_log;
    stage_probe(val_config);
    stage_features(val_config);
    stage_sweep(val_config);
    stage_policy(val_config);

    const auto frontier = io::read_frontier(val_config.paths.frontier);
    CHECK(frontier.size() >= 3);
    double prev_fraction = 1.0 + 1e-12;
    for (const auto& p : frontier) {
        CHECK(p.think_fraction <= prev_fraction + 1e-12);
        prev_fraction = p.think_fraction;
    }
    const PolicyArtifact artifact = PolicyArtifact::load_text(io::read_text(val_config.paths.policy));
    CHECK(artifact.anchor == Anchor::UMax);
    CHECK(artifact.eta_frozen >= 0.0);
    CHECK(artifact.model_hash == fingerprint_file(train_config.paths.model));

    // the other anchors freeze through the same stage
    PipelineConfig knee_config = val_config;
    knee_config.anchor = Anchor::Knee;
    knee_config.paths.policy = tmp.path("policy_knee.json");
    stage_policy(knee_config);
    const PolicyArtifact knee = PolicyArtifact::load_text(io::read_text(knee_config.paths.policy));
    CHECK(knee.anchor == Anchor::Knee);
    CHECK(knee.expected_mean_tokens <= artifact.expected_mean_tokens + 1e-9);

    PipelineConfig eps_config = val_config;
    eps_config.anchor = Anchor::Epsilon;
    eps_config.epsilon = 0.0;  // target: at least the always-NonThink utility
    eps_config.paths.policy = tmp.path("policy_eps.json");
    stage_policy(eps_config);
    const PolicyArtifact eps = PolicyArtifact::load_text(io::read_text(eps_config.paths.policy));
    CHECK(eps.anchor == Anchor::Epsilon);
    CHECK(eps.u_base.has_value());

    PipelineConfig utopia_config = val_config;
    utopia_config.anchor = Anchor::Utopia;
    utopia_config.paths.policy = tmp.path("policy_utopia.json");
    stage_policy(utopia_config);
    CHECK(PolicyArtifact::load_text(io::read_text(utopia_config.paths.policy)).w_t.has_value());

    // test-split routing and evaluation
    PipelineConfig test_config = config_for(tmp, files.test, files.checklist);
    test_config.paths.probe_results = tmp.path("probe_test.jsonl");
    test_config.paths.features = tmp.path("features_test.jsonl");
    test_config.paths.schema_manifest = tmp.path("schema_test.txt");
    test_config.paths.model = train_config.paths.model;
    test_config.paths.policy = val_config.paths.policy;
    test_config.cost_fit_dumps = files.train.dumps;
    test_config.cost_fit_log = files.train.dual_log;
    stage_probe(test_config);
    stage_features(test_config);
    stage_route(test_config);
    stage_eval(test_config);
    stage_report(test_config, "think");

    const auto decisions = io::read_decisions(test_config.paths.decisions);
    CHECK(decisions.size() == 30);  // 20% of 150

    const EvalReport report = eval_report_from_json(
        nlohmann::ordered_json::parse(io::read_text(test_config.paths.eval_report)));
    CHECK(report.has_arm("non_think"));
    CHECK(report.has_arm("think"));
    CHECK(report.has_arm("random"));
    CHECK(report.has_arm("routed"));
    CHECK(report.has_arm("oracle"));

    // oracle utility bounds every arm; oracle tokens stay under always-think
    const ArmStats& oracle = report.arm("oracle");
    for (const auto& [name, stats] : report.arms) CHECK(oracle.utility >= stats.utility - 1e-12);
    CHECK(oracle.tokens <= report.arm("think").tokens + 1e-9);

    // the rendered report exists and carries deltas
    const std::string text = io::read_text(test_config.paths.report_text);
    CHECK(text.find("relative to think") != std::string::npos);

    // provenance chain: embedded input hashes match the actual files
    const auto features_file = io::read_jsonl(test_config.paths.features, "features", true);
    CHECK(features_file.meta.inputs.at("dumps") == fingerprint_file(test_config.paths.dumps));
    CHECK(features_file.meta.inputs.at("cost_fit_log") == fingerprint_file(files.train.dual_log));
    const auto decisions_file = io::read_jsonl(test_config.paths.decisions, "decisions", true);
    CHECK(decisions_file.meta.inputs.at("model") == fingerprint_file(test_config.paths.model));
    CHECK(decisions_file.meta.inputs.at("policy") == fingerprint_file(test_config.paths.policy));
    CHECK_FALSE(decisions_file.meta.inputs.count("model_hash_mismatch"));

    // routing against a different model file flags the hash mismatch
    PipelineConfig retrain_config = train_config;
    retrain_config.paths.model = tmp.path("model_alt.json");
    retrain_config.paths.training_log = tmp.path("tlog_alt.jsonl");
    retrain_config.train.seed = 999;
    retrain_config.train.n_rounds = 5;
    stage_train(retrain_config);
    PipelineConfig mismatch_config = test_config;
    mismatch_config.paths.model = retrain_config.paths.model;
    mismatch_config.paths.decisions = tmp.path("decisions_alt.jsonl");
    stage_route(mismatch_config);
    const auto alt = io::read_jsonl(mismatch_config.paths.decisions, "decisions", true);
    CHECK(alt.meta.inputs.count("model_hash_mismatch"));
}

TEST_CASE("self-select arm joins the report when decisions are supplied") {
    SynthConfig synth_config;
    synth_config.n_instances = 60;
    synth_config.seed = 77;
    const SynthOutput data = synthesize(synth_config);
    const UtilityMetric metric = UtilityMetric::parse("ndcg@10");

    std::vector<io::Decision> routed, self_select;
    Rng rng(5);
    for (const auto& inst : data.instances) {
        routed.push_back({inst.id, Mode::Think, 0.1, 100.0});
        self_select.push_back({inst.id, rng.coin(0.3) ? Mode::Think : Mode::NonThink, 0.0, 1.0});
    }
    const EvalReport report =
        evaluate_arms(data.instances, data.records, routed, &self_select, metric, 9, 0.5);
    CHECK(report.has_arm("self_select"));
    const double fraction = report.arm("self_select").think_fraction;
    CHECK(fraction > 0.0);
    CHECK(fraction < 1.0);
    CHECK(report.arm("routed").think_fraction == 1.0);

    // missing self-select coverage is an error
    std::vector<io::Decision> partial(self_select.begin(), self_select.end() - 1);
    CHECK_THROWS_AS(evaluate_arms(data.instances, data.records, routed, &partial, metric, 9, 0.5),
                    std::invalid_argument);
}

TEST_CASE("random arm lands near the fair-coin midpoint") {
    SynthConfig synth_config;
    synth_config.n_instances = 400;
    synth_config.seed = 44;
    const SynthOutput data = synthesize(synth_config);

    std::vector<io::Decision> routed;
    for (const auto& inst : data.instances) routed.push_back({inst.id, Mode::NonThink, 0.0, 1.0});

    const UtilityMetric metric = UtilityMetric::parse("ndcg@10");
    const EvalReport report =
        evaluate_arms(data.instances, data.records, routed, nullptr, metric, 99, 0.5);

    const double t_non = report.arm("non_think").tokens;
    const double t_think = report.arm("think").tokens;
    const double midpoint = 0.5 * (t_non + t_think);
    // 3 sigma of a fair-coin mixture of per-instance token gaps
    double var = 0.0;
    for (std::size_t i = 0; i < data.records.size(); ++i) {
        const double gap = static_cast<double>(data.records[i].think.tokens -
                                               data.records[i].non_think.tokens);
        var += gap * gap / 4.0;
    }
    const double sigma = std::sqrt(var) / static_cast<double>(data.records.size());
    CHECK(std::abs(report.arm("random").tokens - midpoint) <= 3.0 * sigma);
}

TEST_CASE("routed arm with advantage labels at eta 0 matches the oracle arm") {
    SynthConfig synth_config;
    synth_config.n_instances = 100;
    synth_config.seed = 55;
    synth_config.parse_failure_rate = 0.0;
    const SynthOutput data = synthesize(synth_config);
    const UtilityMetric metric = UtilityMetric::parse("ndcg@10");

    // perfect predictor: the label itself, with lambda breaking utility ties
    // toward the cheaper mode exactly like the oracle does
    std::vector<io::Decision> routed;
    for (std::size_t i = 0; i < data.instances.size(); ++i) {
        const AdvantageLabel label =
            advantage_label(data.instances[i], data.records[i], metric, 1e-6);
        io::Decision d;
        d.instance_id = data.instances[i].id;
        d.a_hat = label.advantage;
        d.delta_cost_est = std::max(1.0, label.delta_tokens);
        d.mode = route(label.advantage, d.delta_cost_est, 0.0);
        routed.push_back(d);
    }
    const EvalReport report =
        evaluate_arms(data.instances, data.records, routed, nullptr, metric, 1, 0.5);
    CHECK(report.arm("routed").utility == doctest::Approx(report.arm("oracle").utility));
    CHECK(report.arm("routed").tokens == doctest::Approx(report.arm("oracle").tokens));
}

TEST_CASE("relative deltas: paper fixture arithmetic and zero baselines") {
    const auto ndcg_delta = relative_delta(20.22, 19.02);
    REQUIRE(ndcg_delta.has_value());
    CHECK(*ndcg_delta * 100.0 == doctest::Approx(6.31).epsilon(0.008));

    const auto token_delta = relative_delta(194.0, 384.0);
    REQUIRE(token_delta.has_value());
    CHECK(*token_delta * 100.0 == doctest::Approx(-49.48).epsilon(0.001));

    CHECK_FALSE(relative_delta(1.0, 0.0).has_value());
    CHECK(*relative_delta(1.0, 1.0) == 0.0);
}

TEST_CASE("pipeline config loads and overrides") {
    TempDir tmp("rankroute_pl_cfg");
    const std::string path = tmp.path("config.json");
    io::atomic_write(path, R"({
      "lambda": 0.0002,
      "utility_metric": "recall@5",
      "anchor": "epsilon",
      "epsilon": 0.02,
      "train": {"n_rounds": 17, "reweight": "tukey"},
      "selection": {"tau": 0.7},
      "paths": {"instances": "a.jsonl"}
    })");
    const PipelineConfig config = PipelineConfig::load(path);
    CHECK(config.lambda == 0.0002);
    CHECK(config.utility_metric == "recall@5");
    CHECK(config.anchor == Anchor::Epsilon);
    CHECK(config.epsilon == 0.02);
    CHECK(config.train.n_rounds == 17);
    CHECK(config.train.reweight_tukey);
    CHECK(config.selection.tau == 0.7);
    CHECK(config.paths.instances == "a.jsonl");
}
