#pragma once
// Client for an OpenAI-compatible chat-completion endpoint. The inference
// mode is forced purely through an assistant prefill token, so both modes
// share byte-identical prompts. A deterministic stub backend stands in for
// the real service in offline runs and tests.

#include <map>
#include <memory>
#include <string>
#include <vector>

#include "rankroute/checklist.hpp"
#include "rankroute/ranking.hpp"

namespace rr {

struct GatewayConfig {
    std::string base_url = "http://127.0.0.1:8080";
    std::string api_key_env = "RANKROUTE_API_KEY";  // name of the env var, never the key itself
    std::string model = "qwen3-4b";
    double timeout_seconds = 60.0;
    int max_retries = 2;
    int max_concurrency = 4;
    double temperature = 0.0;
    bool supports_logprobs = true;

    void validate() const;
};

enum class InferenceMode { NonThink, Think, SelfSelect };

inline constexpr const char* kThinkPrefix = "<thought>";
inline constexpr const char* kNonThinkPrefix = "<output>";

std::string inference_mode_name(InferenceMode m);

struct PromptBundle {
    std::string prompt;       // identical across modes for one instance
    std::string mode_prefix;  // kThinkPrefix / kNonThinkPrefix / "" (SelfSelect)
};

PromptBundle render_prompt(const RankingInstance& instance, InferenceMode mode);
std::string render_probe_prompt(const RankingInstance& instance, const ChecklistQuestion& question);

// --- backend abstraction -----------------------------------------------------

struct CompletionRequest {
    std::string prompt;
    std::string assistant_prefix;  // prefill; empty for SelfSelect
    int max_tokens = -1;           // -1: provider default
    double temperature = 0.0;
    bool want_logprobs = false;
    int top_logprobs = 5;
};

struct TokenLogprob {
    std::string token;
    double logprob = 0.0;
};

struct CompletionResponse {
    std::string text;                  // continuation only, without the prefill
    long long completion_tokens = -1;  // -1 when the provider omits usage
    std::vector<TokenLogprob> top_logprobs;  // first generated position
};

class Backend {
public:
    virtual ~Backend() = default;
    virtual CompletionResponse complete(const CompletionRequest& request) = 0;
};

// Blocking HTTP client with bounded retries; reads the API key from the
// configured environment variable at request time.
class HttpBackend : public Backend {
public:
    explicit HttpBackend(GatewayConfig config);
    CompletionResponse complete(const CompletionRequest& request) override;

private:
    GatewayConfig config_;
};

// Offline stand-in. Ranking prompts echo the candidates in listed order;
// probe prompts answer from a tiny difficulty lexicon so synthetic signals
// stay informative. Fully deterministic.
class StubBackend : public Backend {
public:
    struct Behavior {
        long long non_think_tokens = 50;
        long long think_tokens = 350;
        bool report_usage = true;
        bool logprobs = true;
        double yes_bias = 0.4;          // systematic lean toward "Yes"
        double difficulty_gain = 2.0;   // scales lexicon evidence into logits
        bool self_select_always_thinks = false;
    };

    StubBackend() = default;
    explicit StubBackend(Behavior behavior) : behavior_(behavior) {}

    CompletionResponse complete(const CompletionRequest& request) override;

    int requests_served() const { return requests_served_; }

private:
    Behavior behavior_;
    int requests_served_ = 0;
};

// --- gateway operations ------------------------------------------------------

// One ranked-list generation. Transport failures (after retries) propagate;
// unparseable outputs come back as an empty ranking flagged "parse-failure".
ModeOutcome rank(const RankingInstance& instance, InferenceMode mode, Backend& backend,
                 const GatewayConfig& config);

// Extracts the id list from the last <output>...</output> block. Unknown ids
// are dropped (flagged); duplicates keep their first occurrence. Throws
// ParseError when no well-formed block/list exists.
RankedList parse_ranking(const std::string& raw, const std::vector<std::string>& valid_ids,
                         std::vector<std::string>* flags = nullptr);

// Yes/No probability per checklist question via one short completion each.
// Without logprob support, falls back to temperature-0 single-token sampling
// mapped to {0,1} and flags every entry "hard-probe".
ProbeResult probe_checklist(const RankingInstance& instance, const Checklist& checklist,
                            Backend& backend, const GatewayConfig& config);

struct CollectSummary {
    std::size_t completed = 0;
    std::size_t skipped = 0;  // already present in the log
    std::size_t failed = 0;
};

// Runs both modes for every instance and appends one record per instance to
// the log at `path`. Resumable: ids already in the log are skipped; per-
// instance failures are recorded inline and do not abort the run.
CollectSummary collect_dual_mode(const std::vector<RankingInstance>& instances, Backend& backend,
                                 const GatewayConfig& config, const std::string& path);

}  // namespace rr
