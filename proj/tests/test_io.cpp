#include <doctest.h>

#include <filesystem>
#include <fstream>

#include "rankroute/errors.hpp"
#include "rankroute/gbdt.hpp"
#include "rankroute/io.hpp"
#include "rankroute/synth.hpp"

using namespace rr;
namespace fs = std::filesystem;

namespace {

std::string temp_path(const std::string& name) {
    return (fs::temp_directory_path() / ("rankroute_io_" + name)).string();
}

}  // namespace

TEST_CASE("instances round trip, validation on read") {
    SynthConfig config;
    config.n_instances = 5;
    config.seed = 3;
    const SynthOutput data = synthesize(config);

    const std::string path = temp_path("instances.jsonl");
    io::write_instances(path, data.instances, {{"source", "cafe"}});
    const auto back = io::read_instances(path);
    REQUIRE(back.size() == data.instances.size());
    for (std::size_t i = 0; i < back.size(); ++i) {
        CHECK(back[i].id == data.instances[i].id);
        CHECK(back[i].qrels == data.instances[i].qrels);
        CHECK(back[i].candidates.size() == data.instances[i].candidates.size());
        CHECK(back[i].k == data.instances[i].k);
    }

    // kind mismatch is a structured error
    CHECK_THROWS_AS(io::read_dual_log(path), ParseError);
    fs::remove(path);
}

TEST_CASE("dual log and labels round trip with header extras") {
    SynthConfig config;
    config.n_instances = 4;
    config.seed = 5;
    const SynthOutput data = synthesize(config);

    const std::string dual_path = temp_path("dual.jsonl");
    io::write_dual_log(dual_path, data.records);
    const auto records = io::read_dual_log(dual_path);
    REQUIRE(records.size() == 4);
    CHECK(records[0].non_think.tokens == data.records[0].non_think.tokens);
    CHECK(records[2].think.ranking.order == data.records[2].think.ranking.order);

    io::LabelsFile labels;
    labels.lambda = 1e-4;
    labels.metric = "ndcg@10";
    labels.labels.push_back({"inst-0", 0.15, 1.0, 0.185, 350.0, {}});
    const std::string labels_path = temp_path("labels.jsonl");
    io::write_labels(labels_path, labels, {{"dual_log", fingerprint_file(dual_path)}});
    const io::LabelsFile back = io::read_labels(labels_path);
    CHECK(back.lambda == 1e-4);
    CHECK(back.metric == "ndcg@10");
    REQUIRE(back.labels.size() == 1);
    CHECK(back.labels[0].advantage == 0.15);
    fs::remove(dual_path);
    fs::remove(labels_path);
}

TEST_CASE("features keep schema order through serialization") {
    FeatureVector fv;
    fv.instance_id = "x";
    fv.schema_version = "fv1";
    fv.names = {"zeta", "alpha", "delta_cost_est"};  // deliberately not alphabetical
    fv.values = {1.0, -2.0, 300.0};

    const std::string path = temp_path("features.jsonl");
    io::write_features(path, {fv});
    const auto back = io::read_features(path);
    REQUIRE(back.size() == 1);
    CHECK(back[0].names == fv.names);
    CHECK(back[0].values == fv.values);
    fs::remove(path);
}

TEST_CASE("probe results and frontier round trips") {
    ProbeResult result;
    result.instance_id = "p";
    result.p_yes = {{"q1", 0.25}, {"q2", 0.75}};
    result.flags = {{"q2", {"hard-probe"}}};
    const std::string probe_path = temp_path("probe.jsonl");
    io::write_probe_results(probe_path, {result});
    const auto probes = io::read_probe_results(probe_path);
    REQUIRE(probes.size() == 1);
    CHECK(probes[0].p_yes.at("q1") == 0.25);
    CHECK(probes[0].flags.at("q2") == std::vector<std::string>{"hard-probe"});
    fs::remove(probe_path);

    FrontierPoint p;
    p.eta = 0.001;
    p.mean_tokens = 123.5;
    p.utility = 0.61;
    p.think_fraction = 0.4;
    p.nondominated = true;
    const std::string frontier_path = temp_path("frontier.jsonl");
    io::write_frontier(frontier_path, {p});
    const auto points = io::read_frontier(frontier_path);
    REQUIRE(points.size() == 1);
    CHECK(points[0].eta == 0.001);
    CHECK(points[0].nondominated);
    fs::remove(frontier_path);
}

TEST_CASE("checklist file round trip") {
    const std::string path = temp_path("checklist.jsonl");
    io::write_checklist(path, default_checklist());
    const Checklist back = io::read_checklist(path);
    CHECK(back.size() == 10);
    CHECK(back[0].text == default_checklist()[0].text);
    fs::remove(path);
}

TEST_CASE("external instance files without a header still parse") {
    const std::string path = temp_path("raw.jsonl");
    {
        std::ofstream out(path);
        out << R"({"record":"instance","id":"x1","task":"ir","context":"q",)"
            << R"("candidates":[{"id":"a","text":""},{"id":"b","text":""}],)"
            << R"("qrels":{"a":1},"k":2})" << "\n";
    }
    const auto instances = io::read_instances(path);
    REQUIRE(instances.size() == 1);
    CHECK(instances[0].id == "x1");
    fs::remove(path);
}

TEST_CASE("corrupted files fail loudly, never partially") {
    const std::string path = temp_path("corrupt.jsonl");
    {
        std::ofstream out(path);
        out << R"({"record":"header","format":"rankroute/labels","version":1,"inputs":{},"lambda":0.0001,"utility_metric":"ndcg@10"})"
            << "\n";
        out << "{\"record\":\"label\",\"instance_id\":\"a\",\"advantage\":0.1,"
               "\"weight\":1.0,\"delta_utility\":0.2,\"delta_tokens\":350}\n";
        out << "this line is not JSON\n";
    }
    CHECK_THROWS_AS(io::read_labels(path), ParseError);

    {
        std::ofstream out(path, std::ios::trunc);
        out << R"({"record":"header","format":"rankroute/labels","version":9,"inputs":{}})" << "\n";
    }
    CHECK_THROWS_AS(io::read_labels(path), ParseError);  // version mismatch

    {
        std::ofstream out(path, std::ios::trunc);
        out << "{\"record\":\"label\"}\n";  // headerless where a header is required
    }
    CHECK_THROWS_AS(io::read_labels(path), ParseError);
    fs::remove(path);
}

TEST_CASE("atomic_write leaves no temp file behind and replaces content") {
    const std::string path = temp_path("atomic.txt");
    io::atomic_write(path, "first\n");
    io::atomic_write(path, "second\n");
    CHECK(io::read_text(path) == "second\n");
    CHECK_FALSE(fs::exists(path + ".tmp"));
    fs::remove(path);
}

TEST_CASE("decisions round trip") {
    const std::string path = temp_path("decisions.jsonl");
    io::write_decisions(path, {{"a", Mode::Think, 0.2, 310.0}, {"b", Mode::NonThink, -0.1, 250.0}});
    const auto decisions = io::read_decisions(path);
    REQUIRE(decisions.size() == 2);
    CHECK(decisions[0].mode == Mode::Think);
    CHECK(decisions[1].mode == Mode::NonThink);
    CHECK(decisions[0].a_hat == 0.2);
    fs::remove(path);
}

TEST_CASE("schema manifest matches the model hash convention") {
    const std::string path = temp_path("schema.txt");
    const std::vector<std::string> names = {"a", "b", "delta_cost_est"};
    io::write_schema_manifest(path, names);
    CHECK(io::read_schema_manifest(path) == names);
    // the file fingerprint equals the model's embedded schema hash
    CHECK(fingerprint_file(path) == RouterModel::hash_schema(names));
    fs::remove(path);
}
