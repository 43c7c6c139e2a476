#include <doctest.h>

#include <algorithm>
#include <atomic>
#include <filesystem>
#include <set>
#include <thread>

#include <httplib.h>
#include <json.hpp>

#include "rankroute/errors.hpp"
#include "rankroute/gateway.hpp"
#include "rankroute/io.hpp"

using namespace rr;
namespace fs = std::filesystem;

namespace {

RankingInstance sample_instance(const std::string& id = "i0", int n = 3) {
    RankingInstance inst;
    inst.id = id;
    inst.task = Task::IR;
    inst.context = "a specific focused single-topic request about jazz records";
    for (int c = 0; c < n; ++c)
        inst.candidates.push_back({std::to_string(c + 1), "jazz records option " + std::to_string(c)});
    inst.qrels = {{"1", 1}};
    inst.k = std::min(2, n);
    return inst;
}

std::string temp_path(const std::string& name) {
    return (fs::temp_directory_path() / ("rankroute_gw_" + name)).string();
}

}  // namespace

TEST_CASE("parse_ranking grammar") {
    const std::vector<std::string> ids = {"1", "2", "3"};
    CHECK(parse_ranking("<output>Ranking result: [3, 1, 2]</output>", ids).order ==
          std::vector<std::string>{"3", "1", "2"});
    // reasoning block ignored, last output block wins
    CHECK(parse_ranking("<thought>blah 2 beats 1</thought><output>Ranking result: [2, 1]</output>",
                        ids)
              .order == std::vector<std::string>{"2", "1"});
    CHECK(parse_ranking("<output>[1]</output> then <output>Ranking result: [2, 3]</output>", ids)
              .order == std::vector<std::string>{"2", "3"});

    // unknown ids dropped with a flag, duplicates keep the first occurrence
    std::vector<std::string> flags;
    const RankedList parsed = parse_ranking("<output>[2, 9, 2, 1]</output>", ids, &flags);
    CHECK(parsed.order == std::vector<std::string>{"2", "1"});
    CHECK(std::find(flags.begin(), flags.end(), "unknown-ids-dropped") != flags.end());

    CHECK_THROWS_AS(parse_ranking("no brackets here", ids), ParseError);
    CHECK_THROWS_AS(parse_ranking("<output>no list</output>", ids), ParseError);
    CHECK_THROWS_AS(parse_ranking("<output>[1, 2", ids), ParseError);
}

TEST_CASE("both modes share one prompt; only the prefix differs") {
    const RankingInstance inst = sample_instance();
    const PromptBundle non = render_prompt(inst, InferenceMode::NonThink);
    const PromptBundle think = render_prompt(inst, InferenceMode::Think);
    const PromptBundle self = render_prompt(inst, InferenceMode::SelfSelect);

    CHECK(non.prompt == think.prompt);  // byte-identical
    CHECK(non.prompt == self.prompt);
    CHECK(non.mode_prefix == "<output>");
    CHECK(think.mode_prefix == "<thought>");
    CHECK(self.mode_prefix.empty());

    // the template carries the self-select instructions and the format spec
    CHECK(non.prompt.find("directly output the result without reasoning") != std::string::npos);
    CHECK(non.prompt.find("<output>Ranking result: [ITEM IDS IN ORDER, SEPARATED BY COMMA]</output>") !=
          std::string::npos);
}

TEST_CASE("stub backend ranks candidates in listed order with fixed token counts") {
    const RankingInstance inst = sample_instance();
    StubBackend stub;
    GatewayConfig config;

    const ModeOutcome non = rank(inst, InferenceMode::NonThink, stub, config);
    CHECK(non.ranking.order == std::vector<std::string>{"1", "2", "3"});
    CHECK(non.tokens == 50);
    CHECK(non.flags.empty());

    const ModeOutcome think = rank(inst, InferenceMode::Think, stub, config);
    CHECK(think.ranking.order == std::vector<std::string>{"1", "2", "3"});
    CHECK(think.tokens == 350);
    REQUIRE(think.raw_text.has_value());
    CHECK(think.raw_text->rfind("<thought>", 0) == 0);  // prefill carried into the transcript
}

TEST_CASE("missing usage falls back to an estimated token count") {
    StubBackend::Behavior behavior;
    behavior.report_usage = false;
    StubBackend stub(behavior);
    GatewayConfig config;
    const ModeOutcome outcome = rank(sample_instance(), InferenceMode::NonThink, stub, config);
    CHECK(outcome.has_flag("token-estimate"));
    CHECK(outcome.tokens > 0);
}

TEST_CASE("probe_checklist: logprob path, hard path, completeness") {
    const RankingInstance inst = sample_instance();
    const Checklist checklist = default_checklist();
    GatewayConfig config;

    StubBackend stub;
    const ProbeResult soft = probe_checklist(inst, checklist, stub, config);
    CHECK(soft.p_yes.size() == 10);
    for (const auto& [qid, p] : soft.p_yes) {
        CHECK(p >= 0.0);
        CHECK(p <= 1.0);
    }

    config.supports_logprobs = false;
    StubBackend::Behavior hard_behavior;
    hard_behavior.logprobs = false;
    StubBackend hard(hard_behavior);
    const ProbeResult hard_result = probe_checklist(inst, checklist, hard, config);
    CHECK(hard_result.p_yes.size() == 10);
    for (const auto& [qid, p] : hard_result.p_yes) CHECK((p == 0.0 || p == 0.5 || p == 1.0));
    for (const auto& [qid, flags] : hard_result.flags)
        CHECK(std::find(flags.begin(), flags.end(), "hard-probe") != flags.end());
}

TEST_CASE("stub probes favor the think direction on hard wording") {
    RankingInstance hard = sample_instance();
    hard.context = "ambiguous broad exploratory request spanning several aspects of jazz records";
    RankingInstance easy = sample_instance();

    StubBackend stub;
    GatewayConfig config;
    const Checklist checklist = default_checklist();
    const DifficultySignals hard_signals =
        aggregate_pairs(probe_checklist(hard, checklist, stub, config), checklist);
    const DifficultySignals easy_signals =
        aggregate_pairs(probe_checklist(easy, checklist, stub, config), checklist);
    double hard_sum = 0.0, easy_sum = 0.0;
    for (const auto& [_, s] : hard_signals.signals) hard_sum += s;
    for (const auto& [_, s] : easy_signals.signals) easy_sum += s;
    CHECK(hard_sum > easy_sum);
}

TEST_CASE("collect_dual_mode writes records and resumes by id") {
    const std::string path = temp_path("collect.jsonl");
    fs::remove(path);

    std::vector<RankingInstance> instances;
    for (int i = 0; i < 3; ++i) instances.push_back(sample_instance("inst-" + std::to_string(i)));

    StubBackend stub;
    GatewayConfig config;
    config.max_concurrency = 1;
    const CollectSummary first = collect_dual_mode(instances, stub, config, path);
    CHECK(first.completed == 3);
    CHECK(first.skipped == 0);

    auto records = io::read_dual_log(path);
    CHECK(records.size() == 3);
    std::set<std::string> ids;
    for (const auto& r : records) ids.insert(r.instance_id);
    CHECK(ids == std::set<std::string>{"inst-0", "inst-1", "inst-2"});

    // a rerun with one extra instance only runs the new one
    instances.push_back(sample_instance("inst-3"));
    const CollectSummary second = collect_dual_mode(instances, stub, config, path);
    CHECK(second.completed == 1);
    CHECK(second.skipped == 3);
    CHECK(io::read_dual_log(path).size() == 4);
    fs::remove(path);
}

TEST_CASE("http backend against a local server: prefill, usage, retries") {
    httplib::Server server;
    std::atomic<int> hits{0};
    server.Post("/v1/chat/completions", [&](const httplib::Request& req, httplib::Response& res) {
        const int n = ++hits;
        if (n == 1) {  // first attempt gets a retryable failure
            res.status = 503;
            res.set_content("overloaded", "text/plain");
            return;
        }
        const auto body = nlohmann::json::parse(req.body);
        std::string prefix;
        if (body.at("messages").size() > 1)
            prefix = body.at("messages").at(1).at("content").get<std::string>();
        nlohmann::json reply = {
            {"choices",
             {{{"message", {{"role", "assistant"},
                            {"content", "Ranking result: [2, 1, 3]</output>"}}}}}},
            {"usage", {{"completion_tokens", 17}}}};
        (void)prefix;
        res.set_content(reply.dump(), "application/json");
    });

    const int port = server.bind_to_any_port("127.0.0.1");
    std::thread server_thread([&] { server.listen_after_bind(); });
    server.wait_until_ready();

    GatewayConfig config;
    config.base_url = "http://127.0.0.1:" + std::to_string(port);
    config.max_retries = 2;
    config.timeout_seconds = 5.0;
    HttpBackend backend(config);

    const ModeOutcome outcome = rank(sample_instance(), InferenceMode::NonThink, backend, config);
    CHECK(outcome.ranking.order == std::vector<std::string>{"2", "1", "3"});
    CHECK(outcome.tokens == 17);
    CHECK(hits == 2);  // one retry after the 503

    server.stop();
    server_thread.join();
}

TEST_CASE("transport failure after retries raises") {
    GatewayConfig config;
    config.base_url = "http://127.0.0.1:9";  // nothing listens on the discard port
    config.max_retries = 1;
    config.timeout_seconds = 1.0;
    HttpBackend backend(config);
    CHECK_THROWS_AS(rank(sample_instance(), InferenceMode::Think, backend, config), TransportError);
}
