#include "rankroute/gateway.hpp"

#include <algorithm>
#include <cctype>
#include <cstdlib>
#include <fstream>
#include <mutex>
#include <set>
#include <sstream>
#include <thread>

#include <httplib.h>
#include <json.hpp>

#include "rankroute/common.hpp"
#include "rankroute/errors.hpp"
#include "rankroute/io.hpp"

namespace rr {

namespace {

using ojson = nlohmann::ordered_json;

std::string trim(const std::string& s) {
    std::size_t begin = 0, end = s.size();
    while (begin < end && std::isspace(static_cast<unsigned char>(s[begin]))) ++begin;
    while (end > begin && std::isspace(static_cast<unsigned char>(s[end - 1]))) --end;
    return s.substr(begin, end - begin);
}

std::string lower_trim(const std::string& s) {
    std::string out = trim(s);
    std::transform(out.begin(), out.end(), out.begin(),
                   [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
    return out;
}

long long whitespace_token_estimate(const std::string& text) {
    long long count = 0;
    bool in_word = false;
    for (const char c : text) {
        const bool space = std::isspace(static_cast<unsigned char>(c)) != 0;
        if (!space && !in_word) ++count;
        in_word = !space;
    }
    return count;
}

std::string task_header(const RankingInstance& instance) {
    if (instance.task == Task::IR)
        return "You are a ranking assistant. Your task is to rank the candidate documents by "
               "relevance to the query, from most to least relevant.";
    return "You are a ranking assistant. Your task is to rank the candidate items by how well "
           "they match the user's interaction history, from best to worst match.";
}

std::string context_section(const RankingInstance& instance) {
    std::string out;
    if (instance.task == Task::IR) {
        out += "## Query\n";
        out += instance.context;
        out += "\n";
    } else {
        out += "## Interaction History\n";
        for (std::size_t i = 0; i < instance.history.size(); ++i)
            out += std::to_string(i + 1) + ". " + instance.history[i] + "\n";
    }
    out += "\n## Candidates\n";
    for (const auto& c : instance.candidates) out += "[" + c.id + "] " + c.text + "\n";
    return out;
}

}  // namespace

void GatewayConfig::validate() const {
    if (timeout_seconds <= 0.0) throw std::invalid_argument("GatewayConfig: timeout must be > 0");
    if (max_retries < 0) throw std::invalid_argument("GatewayConfig: retries must be >= 0");
    if (max_concurrency < 1) throw std::invalid_argument("GatewayConfig: concurrency must be >= 1");
}

std::string inference_mode_name(InferenceMode m) {
    switch (m) {
        case InferenceMode::NonThink: return "non_think";
        case InferenceMode::Think: return "think";
        case InferenceMode::SelfSelect: return "self_select";
    }
    return "non_think";
}

PromptBundle render_prompt(const RankingInstance& instance, InferenceMode mode) {
    std::string prompt = task_header(instance);
    prompt += "\n\n";
    prompt += context_section(instance);
    prompt += "\nWhen generating the ranking:\n";
    prompt += "- Use only the candidate ids listed above, each at most once.\n";
    prompt += "- Rank all candidates; the top " + std::to_string(instance.k) +
              " positions matter most.\n";
    prompt += "\nDepending on the complexity of the ranking task, you may choose whether to "
              "include a reasoning process:\n";
    prompt += "- If the case is simple and straightforward, directly output the result without "
              "reasoning.\n";
    prompt += "- If the case is ambiguous or difficult, include a reasoning process to justify "
              "your ranking. The reasoning must be wrapped inside <thought> </thought> tags.\n";
    prompt += "\nYour final output must strictly follow the required format.\n";
    prompt += "\n## Output Format\n";
    prompt += "<output>Ranking result: [ITEM IDS IN ORDER, SEPARATED BY COMMA]</output>\n";

    PromptBundle bundle;
    bundle.prompt = std::move(prompt);
    switch (mode) {
        case InferenceMode::NonThink: bundle.mode_prefix = kNonThinkPrefix; break;
        case InferenceMode::Think: bundle.mode_prefix = kThinkPrefix; break;
        case InferenceMode::SelfSelect: bundle.mode_prefix.clear(); break;
    }
    return bundle;
}

std::string render_probe_prompt(const RankingInstance& instance, const ChecklistQuestion& question) {
    std::string prompt = task_header(instance);
    prompt += "\n\n";
    prompt += context_section(instance);
    prompt += "\n## Diagnostic\n";
    prompt += "Answer the following question about the ranking task above with Yes or No.\n";
    prompt += question.text;
    prompt += "\nAnswer:";
    return prompt;
}

// --- HTTP backend --------------------------------------------------------------

HttpBackend::HttpBackend(GatewayConfig config) : config_(std::move(config)) {
    config_.validate();
}

CompletionResponse HttpBackend::complete(const CompletionRequest& request) {
    ojson body;
    body["model"] = config_.model;
    ojson messages = ojson::array();
    messages.push_back({{"role", "user"}, {"content", request.prompt}});
    if (!request.assistant_prefix.empty())
        messages.push_back({{"role", "assistant"}, {"content", request.assistant_prefix}});
    body["messages"] = std::move(messages);
    body["temperature"] = request.temperature;
    if (request.max_tokens > 0) body["max_tokens"] = request.max_tokens;
    if (request.want_logprobs) {
        body["logprobs"] = true;
        body["top_logprobs"] = request.top_logprobs;
    }

    httplib::Headers headers;
    const char* key = std::getenv(config_.api_key_env.c_str());
    if (key && *key) headers.emplace("Authorization", std::string("Bearer ") + key);

    std::string last_error;
    for (int attempt = 0; attempt <= config_.max_retries; ++attempt) {
        httplib::Client client(config_.base_url);
        client.set_connection_timeout(static_cast<time_t>(config_.timeout_seconds), 0);
        client.set_read_timeout(static_cast<time_t>(config_.timeout_seconds), 0);

        auto res = client.Post("/v1/chat/completions", headers, body.dump(), "application/json");
        if (!res) {
            last_error = "transport error: " + httplib::to_string(res.error());
            continue;
        }
        if (res->status == 429 || res->status >= 500) {
            last_error = "server status " + std::to_string(res->status);
            continue;
        }
        if (res->status != 200)
            throw TransportError("gateway: status " + std::to_string(res->status) + ": " + res->body);

        ojson doc;
        try {
            doc = ojson::parse(res->body);
        } catch (const nlohmann::json::exception& e) {
            throw ParseError(std::string("gateway: malformed response body: ") + e.what());
        }
        try {
            CompletionResponse out;
            const auto& choice = doc.at("choices").at(0);
            out.text = choice.at("message").at("content").get<std::string>();
            if (doc.contains("usage") && doc.at("usage").contains("completion_tokens"))
                out.completion_tokens = doc.at("usage").at("completion_tokens").get<long long>();
            if (choice.contains("logprobs") && !choice.at("logprobs").is_null()) {
                const auto& content = choice.at("logprobs").at("content");
                if (!content.empty())
                    for (const auto& t : content.at(0).at("top_logprobs"))
                        out.top_logprobs.push_back(
                            {t.at("token").get<std::string>(), t.at("logprob").get<double>()});
            }
            return out;
        } catch (const nlohmann::json::exception& e) {
            throw ParseError(std::string("gateway: unexpected response shape: ") + e.what());
        }
    }
    throw TransportError("gateway: request failed after " + std::to_string(config_.max_retries + 1) +
                         " attempts (" + last_error + ")");
}

// --- stub backend ---------------------------------------------------------------

namespace {

std::vector<std::string> candidate_ids_from_prompt(const std::string& prompt) {
    std::vector<std::string> ids;
    const std::string marker = "## Candidates\n";
    const auto start = prompt.find(marker);
    if (start == std::string::npos) return ids;
    std::istringstream lines(prompt.substr(start + marker.size()));
    std::string line;
    while (std::getline(lines, line)) {
        if (line.empty()) break;
        if (line.front() != '[') break;
        const auto close = line.find(']');
        if (close == std::string::npos) break;
        ids.push_back(line.substr(1, close - 1));
    }
    return ids;
}

std::string joined_ids(const std::vector<std::string>& ids) {
    std::string out;
    for (std::size_t i = 0; i < ids.size(); ++i) {
        if (i) out += ", ";
        out += ids[i];
    }
    return out;
}

int count_markers(const std::string& text, const std::vector<std::string>& words) {
    int count = 0;
    for (const auto& w : words) {
        std::size_t pos = 0;
        while ((pos = text.find(w, pos)) != std::string::npos) {
            ++count;
            pos += w.size();
        }
    }
    return count;
}

// crude lexical difficulty read of the prompt body, in [-1, 1]
double prompt_difficulty(const std::string& prompt) {
    static const std::vector<std::string> hard = {"ambiguous", "broad",  "exploratory",
                                                  "varied",    "mixed",  "diverse",
                                                  "unclear",   "several"};
    static const std::vector<std::string> easy = {"specific", "focused", "single",
                                                  "clear",    "precise", "consistent"};
    const int h = count_markers(prompt, hard);
    const int e = count_markers(prompt, easy);
    if (h + e == 0) return 0.0;
    return static_cast<double>(h - e) / static_cast<double>(h + e);
}

// does the question ask about hardness (Yes favors Think) or easiness?
double question_polarity(const std::string& question) {
    static const std::vector<std::string> hard = {"ambiguous", "multi",    "overlap", "tied",
                                                  "shifting",  "diverse",  "change",  "uncertain",
                                                  "step-by-step"};
    std::string lowered = question;
    std::transform(lowered.begin(), lowered.end(), lowered.begin(),
                   [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
    return count_markers(lowered, hard) > 0 ? 1.0 : -1.0;
}

}  // namespace

CompletionResponse StubBackend::complete(const CompletionRequest& request) {
    ++requests_served_;
    CompletionResponse out;

    const bool is_probe = request.prompt.find("## Diagnostic") != std::string::npos;
    if (is_probe) {
        const auto q_begin = request.prompt.find("## Diagnostic");
        const std::string question = request.prompt.substr(q_begin);
        const double evidence =
            question_polarity(question) * prompt_difficulty(request.prompt) * behavior_.difficulty_gain;
        const double yes_logit = behavior_.yes_bias + evidence;
        const double no_logit = -evidence;
        if (behavior_.logprobs) {
            // renormalized two-way logprobs, shaped like a provider response
            const double m = std::max(yes_logit, no_logit);
            const double z = std::exp(yes_logit - m) + std::exp(no_logit - m);
            out.top_logprobs.push_back({"Yes", yes_logit - m - std::log(z)});
            out.top_logprobs.push_back({"No", no_logit - m - std::log(z)});
            out.text = yes_logit >= no_logit ? " Yes" : " No";
        } else {
            out.text = yes_logit >= no_logit ? " Yes" : " No";
        }
        out.completion_tokens = behavior_.report_usage ? 1 : -1;
        return out;
    }

    const std::vector<std::string> ids = candidate_ids_from_prompt(request.prompt);
    const bool think = request.assistant_prefix == kThinkPrefix ||
                       (request.assistant_prefix.empty() &&
                        (behavior_.self_select_always_thinks || prompt_difficulty(request.prompt) > 0.0));

    std::string text;
    if (request.assistant_prefix.empty() && think) text += kThinkPrefix;
    if (think)
        text += " The candidates are compared against the request in their listed order. "
                "</thought>\n<output>Ranking result: [" + joined_ids(ids) + "]</output>";
    else {
        if (request.assistant_prefix.empty()) text += kNonThinkPrefix;
        text += "Ranking result: [" + joined_ids(ids) + "]</output>";
    }
    out.text = std::move(text);
    out.completion_tokens =
        behavior_.report_usage ? (think ? behavior_.think_tokens : behavior_.non_think_tokens) : -1;
    return out;
}

// --- gateway operations --------------------------------------------------------

RankedList parse_ranking(const std::string& raw, const std::vector<std::string>& valid_ids,
                         std::vector<std::string>* flags) {
    const auto open = raw.rfind("<output>");
    if (open == std::string::npos) throw ParseError("parse_ranking: no <output> block");
    const auto close = raw.find("</output>", open);
    if (close == std::string::npos) throw ParseError("parse_ranking: unterminated <output> block");
    const std::string block = raw.substr(open, close - open);

    const auto lb = block.find('[');
    if (lb == std::string::npos) throw ParseError("parse_ranking: no bracketed id list");
    const auto rb = block.find(']', lb);
    if (rb == std::string::npos) throw ParseError("parse_ranking: unterminated id list");

    const std::set<std::string> valid(valid_ids.begin(), valid_ids.end());
    RankedList ranking;
    std::set<std::string> seen;
    bool dropped_unknown = false;

    std::istringstream items(block.substr(lb + 1, rb - lb - 1));
    std::string item;
    while (std::getline(items, item, ',')) {
        const std::string id = trim(item);
        if (id.empty()) continue;
        if (!valid.count(id)) {
            dropped_unknown = true;
            continue;
        }
        if (seen.insert(id).second) ranking.order.push_back(id);
    }
    if (dropped_unknown && flags) flags->push_back("unknown-ids-dropped");
    return ranking;
}

ModeOutcome rank(const RankingInstance& instance, InferenceMode mode, Backend& backend,
                 const GatewayConfig& config) {
    const PromptBundle bundle = render_prompt(instance, mode);

    CompletionRequest request;
    request.prompt = bundle.prompt;
    request.assistant_prefix = bundle.mode_prefix;
    request.temperature = config.temperature;
    const CompletionResponse response = backend.complete(request);

    ModeOutcome outcome;
    outcome.ranking.instance_id = instance.id;
    const std::string full_text = bundle.mode_prefix + response.text;
    outcome.raw_text = full_text;

    if (response.completion_tokens >= 0) {
        outcome.tokens = response.completion_tokens;
    } else {
        outcome.tokens = whitespace_token_estimate(response.text);
        outcome.flags.push_back("token-estimate");
    }

    std::vector<std::string> valid;
    valid.reserve(instance.candidates.size());
    for (const auto& c : instance.candidates) valid.push_back(c.id);
    try {
        RankedList parsed = parse_ranking(full_text, valid, &outcome.flags);
        parsed.instance_id = instance.id;
        outcome.ranking = std::move(parsed);
    } catch (const ParseError&) {
        outcome.ranking.order.clear();
        outcome.flags.push_back("parse-failure");
    }
    return outcome;
}

ProbeResult probe_checklist(const RankingInstance& instance, const Checklist& checklist,
                            Backend& backend, const GatewayConfig& config) {
    if (checklist.empty()) throw std::invalid_argument("probe_checklist: empty checklist");
    validate_checklist(checklist);

    ProbeResult result;
    result.instance_id = instance.id;

    for (const auto& question : checklist) {
        CompletionRequest request;
        request.prompt = render_probe_prompt(instance, question);
        request.max_tokens = 1;
        request.temperature = 0.0;
        request.want_logprobs = config.supports_logprobs;
        const CompletionResponse response = backend.complete(request);

        double p_yes = 0.5;
        std::vector<std::string> flags;
        if (config.supports_logprobs && !response.top_logprobs.empty()) {
            bool have_yes = false, have_no = false;
            double yes_lp = 0.0, no_lp = 0.0, min_lp = 0.0;
            bool first = true;
            for (const auto& t : response.top_logprobs) {
                const std::string norm = lower_trim(t.token);
                if (first || t.logprob < min_lp) min_lp = t.logprob;
                first = false;
                if (norm == "yes" && (!have_yes || t.logprob > yes_lp)) {
                    have_yes = true;
                    yes_lp = t.logprob;
                } else if (norm == "no" && (!have_no || t.logprob > no_lp)) {
                    have_no = true;
                    no_lp = t.logprob;
                }
            }
            if (have_yes && have_no) {
                p_yes = extract_yes_no(yes_lp, no_lp);
            } else if (have_yes || have_no) {
                // bound the absent answer by the weakest returned token
                p_yes = have_yes ? extract_yes_no(yes_lp, min_lp) : extract_yes_no(min_lp, no_lp);
                flags.push_back("one-sided-probe");
            } else {
                flags.push_back("uninformative");
            }
        } else {
            // hard decision only: map the sampled token to {0, 1}
            const std::string norm = lower_trim(response.text);
            if (norm.rfind("yes", 0) == 0)
                p_yes = 1.0;
            else if (norm.rfind("no", 0) == 0)
                p_yes = 0.0;
            else
                flags.push_back("uninformative");
            flags.push_back("hard-probe");
        }
        result.p_yes[question.qid] = p_yes;
        if (!flags.empty()) result.flags[question.qid] = flags;
    }
    return result;
}

CollectSummary collect_dual_mode(const std::vector<RankingInstance>& instances, Backend& backend,
                                 const GatewayConfig& config, const std::string& path) {
    config.validate();
    CollectSummary summary;

    std::set<std::string> done;
    bool file_exists = false;
    {
        std::ifstream probe(path);
        file_exists = probe.good();
    }
    if (file_exists) {
        const io::JsonlFile existing = io::read_jsonl(path, "dual-log", true);
        for (const auto& record : existing.records)
            if (record.value("record", "") == "dual")
                done.insert(record.at("instance_id").get<std::string>());
    } else {
        io::FileMeta meta;
        meta.kind = "dual-log";
        io::atomic_write(path, io::render_jsonl(meta, {}));
    }

    std::vector<const RankingInstance*> pending;
    for (const auto& instance : instances) {
        if (done.count(instance.id))
            ++summary.skipped;
        else
            pending.push_back(&instance);
    }

    std::ofstream log(path, std::ios::app);
    if (!log) throw std::runtime_error("cannot append to " + path);
    std::mutex log_mutex;
    std::mutex work_mutex;
    std::size_t next = 0;

    auto worker = [&] {
        for (;;) {
            const RankingInstance* instance = nullptr;
            {
                std::lock_guard<std::mutex> lock(work_mutex);
                if (next >= pending.size()) return;
                instance = pending[next++];
            }
            try {
                DualModeRecord record;
                record.instance_id = instance->id;
                record.non_think = rank(*instance, InferenceMode::NonThink, backend, config);
                record.think = rank(*instance, InferenceMode::Think, backend, config);
                const std::string line = io::encode_dual_record(record).dump();
                std::lock_guard<std::mutex> lock(log_mutex);
                log << line << '\n';
                log.flush();
                ++summary.completed;
            } catch (const std::exception& e) {
                io::ojson err;
                err["record"] = "error";
                err["instance_id"] = instance->id;
                err["error"] = e.what();
                std::lock_guard<std::mutex> lock(log_mutex);
                log << err.dump() << '\n';
                log.flush();
                ++summary.failed;
            }
        }
    };

    const int n_threads = std::min<int>(config.max_concurrency, static_cast<int>(pending.size()));
    if (n_threads <= 1) {
        worker();
    } else {
        std::vector<std::thread> threads;
        threads.reserve(static_cast<std::size_t>(n_threads));
        for (int t = 0; t < n_threads; ++t) threads.emplace_back(worker);
        for (auto& t : threads) t.join();
    }
    return summary;
}

}  // namespace rr
