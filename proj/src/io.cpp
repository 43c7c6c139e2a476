#include "rankroute/io.hpp"

#include <cstdio>
#include <fstream>
#include <sstream>

#include "rankroute/errors.hpp"

namespace rr::io {

namespace {

constexpr int kFormatVersion = 1;

std::string format_of(const std::string& kind) { return "rankroute/" + kind; }

ojson parse_line(const std::string& line, const std::string& path, std::size_t lineno) {
    try {
        return ojson::parse(line);
    } catch (const nlohmann::json::exception& e) {
        throw ParseError(path + ":" + std::to_string(lineno) + ": malformed JSON record: " + e.what());
    }
}

template <typename Fn>
auto guarded(const char* what, Fn&& fn) {
    try {
        return fn();
    } catch (const nlohmann::json::exception& e) {
        throw ParseError(std::string(what) + ": missing or mistyped field: " + e.what());
    }
}

}  // namespace

void atomic_write(const std::string& path, const std::string& content) {
    const std::string tmp = path + ".tmp";
    {
        std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
        if (!out) throw std::runtime_error("cannot open for write: " + tmp);
        out << content;
        out.flush();
        if (!out) throw std::runtime_error("write failed: " + tmp);
    }
    if (std::rename(tmp.c_str(), path.c_str()) != 0)
        throw std::runtime_error("atomic rename failed: " + tmp + " -> " + path);
}

std::string read_text(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw std::runtime_error("cannot open: " + path);
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

std::string render_jsonl(const FileMeta& meta, const std::vector<ojson>& records) {
    ojson header;
    header["record"] = "header";
    header["format"] = format_of(meta.kind);
    header["version"] = kFormatVersion;
    ojson inputs = ojson::object();
    for (const auto& [role, fp] : meta.inputs) inputs[role] = fp;
    header["inputs"] = inputs;
    for (const auto& [key, value] : meta.extras.items()) header[key] = value;

    std::string out = header.dump();
    out += '\n';
    for (const auto& rec : records) {
        out += rec.dump();
        out += '\n';
    }
    return out;
}

JsonlFile read_jsonl(const std::string& path, const std::string& expect_kind, bool header_required) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw std::runtime_error("cannot open: " + path);

    JsonlFile file;
    std::string line;
    std::size_t lineno = 0;
    bool first = true;
    while (std::getline(in, line)) {
        ++lineno;
        if (line.empty()) continue;
        ojson j = parse_line(line, path, lineno);
        if (first) {
            first = false;
            if (j.is_object() && j.value("record", "") == "header") {
                file.had_header = true;
                const std::string format = guarded("header", [&] { return j.at("format").get<std::string>(); });
                if (!expect_kind.empty() && format != format_of(expect_kind))
                    throw ParseError(path + ": expected format " + format_of(expect_kind) + ", found " +
                                     format);
                const int version = guarded("header", [&] { return j.at("version").get<int>(); });
                if (version != kFormatVersion)
                    throw ParseError(path + ": unsupported format version " + std::to_string(version));
                file.meta.kind = format.substr(std::string("rankroute/").size());
                if (j.contains("inputs"))
                    for (const auto& [role, fp] : j.at("inputs").items())
                        file.meta.inputs[role] = fp.get<std::string>();
                for (const auto& [key, value] : j.items())
                    if (key != "record" && key != "format" && key != "version" && key != "inputs")
                        file.meta.extras[key] = value;
                continue;
            }
            if (header_required) throw ParseError(path + ": missing header record");
        }
        file.records.push_back(std::move(j));
    }
    return file;
}

// --- codecs ------------------------------------------------------------------

ojson encode_instance(const RankingInstance& inst) {
    ojson j;
    j["record"] = "instance";
    j["id"] = inst.id;
    j["task"] = task_name(inst.task);
    if (inst.task == Task::IR)
        j["context"] = inst.context;
    else
        j["history"] = inst.history;
    ojson cands = ojson::array();
    for (const auto& c : inst.candidates) cands.push_back({{"id", c.id}, {"text", c.text}});
    j["candidates"] = std::move(cands);
    ojson qrels = ojson::object();
    for (const auto& [item, g] : inst.qrels) qrels[item] = g;
    j["qrels"] = std::move(qrels);
    j["k"] = inst.k;
    return j;
}

RankingInstance decode_instance(const ojson& j) {
    return guarded("instance", [&] {
        RankingInstance inst;
        inst.id = j.at("id").get<std::string>();
        inst.task = task_from_name(j.at("task").get<std::string>());
        if (j.contains("context")) inst.context = j.at("context").get<std::string>();
        if (j.contains("history")) inst.history = j.at("history").get<std::vector<std::string>>();
        for (const auto& c : j.at("candidates"))
            inst.candidates.push_back({c.at("id").get<std::string>(), c.value("text", "")});
        for (const auto& [item, g] : j.at("qrels").items()) inst.qrels[item] = g.get<int>();
        inst.k = j.at("k").get<int>();
        inst.validate();
        return inst;
    });
}

namespace {

ojson encode_outcome(const ModeOutcome& o) {
    ojson j;
    j["order"] = o.ranking.order;
    j["tokens"] = o.tokens;
    if (o.raw_text) j["raw_text"] = *o.raw_text;
    if (!o.flags.empty()) j["flags"] = o.flags;
    return j;
}

ModeOutcome decode_outcome(const ojson& j, const std::string& instance_id) {
    ModeOutcome o;
    o.ranking.instance_id = instance_id;
    o.ranking.order = j.at("order").get<std::vector<std::string>>();
    o.tokens = j.at("tokens").get<long long>();
    if (o.tokens < 0) throw ParseError("dual record " + instance_id + ": negative token count");
    if (j.contains("raw_text")) o.raw_text = j.at("raw_text").get<std::string>();
    if (j.contains("flags")) o.flags = j.at("flags").get<std::vector<std::string>>();
    return o;
}

}  // namespace

ojson encode_dual_record(const DualModeRecord& rec) {
    ojson j;
    j["record"] = "dual";
    j["instance_id"] = rec.instance_id;
    j["non_think"] = encode_outcome(rec.non_think);
    j["think"] = encode_outcome(rec.think);
    return j;
}

DualModeRecord decode_dual_record(const ojson& j) {
    return guarded("dual record", [&] {
        DualModeRecord rec;
        rec.instance_id = j.at("instance_id").get<std::string>();
        rec.non_think = decode_outcome(j.at("non_think"), rec.instance_id);
        rec.think = decode_outcome(j.at("think"), rec.instance_id);
        rec.validate();
        return rec;
    });
}

ojson encode_label(const AdvantageLabel& label) {
    ojson j;
    j["record"] = "label";
    j["instance_id"] = label.instance_id;
    j["advantage"] = label.advantage;
    j["weight"] = label.weight;
    j["delta_utility"] = label.delta_utility;
    j["delta_tokens"] = label.delta_tokens;
    if (!label.flags.empty()) j["flags"] = label.flags;
    return j;
}

AdvantageLabel decode_label(const ojson& j) {
    return guarded("label", [&] {
        AdvantageLabel label;
        label.instance_id = j.at("instance_id").get<std::string>();
        label.advantage = j.at("advantage").get<double>();
        label.weight = j.at("weight").get<double>();
        label.delta_utility = j.at("delta_utility").get<double>();
        label.delta_tokens = j.at("delta_tokens").get<double>();
        if (j.contains("flags")) label.flags = j.at("flags").get<std::vector<std::string>>();
        if (!(label.weight > 0.0) || label.weight > 1.0)
            throw ParseError("label " + label.instance_id + ": weight must be in (0,1]");
        return label;
    });
}

ojson encode_dump(const EmbeddingDump& dump) {
    ojson j;
    j["record"] = "dump";
    j["instance_id"] = dump.instance_id;
    j["dim"] = dump.dim;
    if (!dump.context.empty()) j["context"] = dump.context;
    if (!dump.history.empty()) j["history"] = dump.history;
    j["candidates"] = dump.candidates;
    j["prompt_tokens"] = dump.prompt_tokens;
    return j;
}

EmbeddingDump decode_dump(const ojson& j) {
    return guarded("embedding dump", [&] {
        EmbeddingDump dump;
        dump.instance_id = j.at("instance_id").get<std::string>();
        dump.dim = j.at("dim").get<int>();
        if (j.contains("context")) dump.context = j.at("context").get<std::vector<double>>();
        if (j.contains("history"))
            dump.history = j.at("history").get<std::vector<std::vector<double>>>();
        dump.candidates = j.at("candidates").get<std::vector<std::vector<double>>>();
        dump.prompt_tokens = j.at("prompt_tokens").get<long long>();
        dump.validate();
        return dump;
    });
}

ojson encode_features(const FeatureVector& fv) {
    ojson j;
    j["record"] = "features";
    j["instance_id"] = fv.instance_id;
    j["schema_version"] = fv.schema_version;
    ojson values = ojson::object();  // ordered_json preserves insertion order
    for (std::size_t i = 0; i < fv.names.size(); ++i) values[fv.names[i]] = fv.values[i];
    j["values"] = std::move(values);
    if (!fv.flags.empty()) j["flags"] = fv.flags;
    return j;
}

FeatureVector decode_features(const ojson& j) {
    return guarded("feature vector", [&] {
        FeatureVector fv;
        fv.instance_id = j.at("instance_id").get<std::string>();
        fv.schema_version = j.at("schema_version").get<std::string>();
        for (const auto& [name, value] : j.at("values").items()) {
            fv.names.push_back(name);
            fv.values.push_back(value.get<double>());
        }
        if (j.contains("flags")) fv.flags = j.at("flags").get<std::vector<std::string>>();
        return fv;
    });
}

ojson encode_question(const ChecklistQuestion& q) {
    ojson j;
    j["record"] = "question";
    j["qid"] = q.qid;
    j["pair_id"] = q.pair_id;
    j["direction"] = direction_name(q.direction);
    j["text"] = q.text;
    return j;
}

ChecklistQuestion decode_question(const ojson& j) {
    return guarded("checklist question", [&] {
        ChecklistQuestion q;
        q.qid = j.at("qid").get<std::string>();
        q.pair_id = j.at("pair_id").get<std::string>();
        q.direction = direction_from_name(j.at("direction").get<std::string>());
        q.text = j.at("text").get<std::string>();
        return q;
    });
}

ojson encode_probe_result(const ProbeResult& r) {
    ojson j;
    j["record"] = "probe";
    j["instance_id"] = r.instance_id;
    ojson p = ojson::object();
    for (const auto& [qid, prob] : r.p_yes) p[qid] = prob;
    j["p_yes"] = std::move(p);
    if (!r.flags.empty()) {
        ojson flags = ojson::object();
        for (const auto& [qid, fs] : r.flags) flags[qid] = fs;
        j["flags"] = std::move(flags);
    }
    return j;
}

ProbeResult decode_probe_result(const ojson& j) {
    return guarded("probe result", [&] {
        ProbeResult r;
        r.instance_id = j.at("instance_id").get<std::string>();
        for (const auto& [qid, prob] : j.at("p_yes").items()) {
            const double p = prob.get<double>();
            if (p < 0.0 || p > 1.0)
                throw ParseError("probe result " + r.instance_id + ": probability out of [0,1]");
            r.p_yes[qid] = p;
        }
        if (j.contains("flags"))
            for (const auto& [qid, fs] : j.at("flags").items())
                r.flags[qid] = fs.get<std::vector<std::string>>();
        return r;
    });
}

ojson encode_frontier_point(const FrontierPoint& p) {
    ojson j;
    j["record"] = "frontier_point";
    j["eta"] = p.eta;
    j["mean_tokens"] = p.mean_tokens;
    j["utility"] = p.utility;
    j["think_fraction"] = p.think_fraction;
    j["nondominated"] = p.nondominated;
    return j;
}

FrontierPoint decode_frontier_point(const ojson& j) {
    return guarded("frontier point", [&] {
        FrontierPoint p;
        p.eta = j.at("eta").get<double>();
        p.mean_tokens = j.at("mean_tokens").get<double>();
        p.utility = j.at("utility").get<double>();
        p.think_fraction = j.at("think_fraction").get<double>();
        p.nondominated = j.at("nondominated").get<bool>();
        return p;
    });
}

ojson encode_mask_rle(const MaskRle& rle) {
    ojson rows = ojson::array();
    for (const auto& row : rle.rows) {
        ojson runs = ojson::array();
        for (const auto& [start, len] : row) runs.push_back({start, len});
        rows.push_back(std::move(runs));
    }
    ojson j;
    j["tokens"] = rle.tokens;
    j["rows"] = std::move(rows);
    return j;
}

MaskRle decode_mask_rle(const ojson& j) {
    return guarded("mask rle", [&] {
        MaskRle rle;
        rle.tokens = j.at("tokens").get<std::size_t>();
        for (const auto& row : j.at("rows")) {
            std::vector<std::pair<std::size_t, std::size_t>> runs;
            for (const auto& run : row)
                runs.emplace_back(run.at(0).get<std::size_t>(), run.at(1).get<std::size_t>());
            rle.rows.push_back(std::move(runs));
        }
        return rle;
    });
}

// --- typed file helpers -------------------------------------------------------

namespace {

template <typename T, typename Encode>
void write_records(const std::string& path, const std::string& kind, const std::vector<T>& items,
                   const std::map<std::string, std::string>& inputs, Encode&& encode,
                   ojson extras = ojson::object()) {
    FileMeta meta;
    meta.kind = kind;
    meta.inputs = inputs;
    meta.extras = std::move(extras);
    std::vector<ojson> records;
    records.reserve(items.size());
    for (const auto& item : items) records.push_back(encode(item));
    atomic_write(path, render_jsonl(meta, records));
}

}  // namespace

void write_instances(const std::string& path, const std::vector<RankingInstance>& instances,
                     const std::map<std::string, std::string>& inputs) {
    write_records(path, "instances", instances, inputs, encode_instance);
}

std::vector<RankingInstance> read_instances(const std::string& path) {
    const JsonlFile file = read_jsonl(path, "instances", false);
    std::vector<RankingInstance> out;
    out.reserve(file.records.size());
    for (const auto& j : file.records) out.push_back(decode_instance(j));
    return out;
}

void write_dual_log(const std::string& path, const std::vector<DualModeRecord>& records,
                    const std::map<std::string, std::string>& inputs) {
    write_records(path, "dual-log", records, inputs, encode_dual_record);
}

std::vector<DualModeRecord> read_dual_log(const std::string& path) {
    const JsonlFile file = read_jsonl(path, "dual-log", true);
    std::vector<DualModeRecord> out;
    out.reserve(file.records.size());
    // collection may interleave per-instance error records; skip them here
    for (const auto& j : file.records)
        if (j.value("record", "dual") == "dual") out.push_back(decode_dual_record(j));
    return out;
}

void write_labels(const std::string& path, const LabelsFile& file,
                  const std::map<std::string, std::string>& inputs) {
    ojson extras;
    extras["lambda"] = file.lambda;
    extras["utility_metric"] = file.metric;
    write_records(path, "labels", file.labels, inputs, encode_label, std::move(extras));
}

LabelsFile read_labels(const std::string& path) {
    const JsonlFile file = read_jsonl(path, "labels", true);
    LabelsFile out;
    out.lambda = guarded("labels header",
                         [&] { return file.meta.extras.at("lambda").get<double>(); });
    out.metric = guarded("labels header",
                         [&] { return file.meta.extras.at("utility_metric").get<std::string>(); });
    for (const auto& j : file.records) out.labels.push_back(decode_label(j));
    return out;
}

void write_dumps(const std::string& path, const std::vector<EmbeddingDump>& dumps,
                 const std::map<std::string, std::string>& inputs) {
    write_records(path, "embedding-dumps", dumps, inputs, encode_dump);
}

std::vector<EmbeddingDump> read_dumps(const std::string& path) {
    const JsonlFile file = read_jsonl(path, "embedding-dumps", true);
    std::vector<EmbeddingDump> out;
    out.reserve(file.records.size());
    for (const auto& j : file.records) out.push_back(decode_dump(j));
    return out;
}

void write_features(const std::string& path, const std::vector<FeatureVector>& features,
                    const std::map<std::string, std::string>& inputs) {
    ojson extras;
    if (!features.empty()) extras["schema"] = features.front().names;
    write_records(path, "features", features, inputs, encode_features, std::move(extras));
}

std::vector<FeatureVector> read_features(const std::string& path) {
    const JsonlFile file = read_jsonl(path, "features", true);
    std::vector<FeatureVector> out;
    out.reserve(file.records.size());
    for (const auto& j : file.records) out.push_back(decode_features(j));
    for (std::size_t i = 1; i < out.size(); ++i)
        if (out[i].names != out[0].names)
            throw ParseError(path + ": feature schema differs across records");
    return out;
}

void write_schema_manifest(const std::string& path, const std::vector<std::string>& names) {
    std::string content;
    for (const auto& name : names) {
        content += name;
        content += '\n';
    }
    atomic_write(path, content);
}

std::vector<std::string> read_schema_manifest(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot open: " + path);
    std::vector<std::string> names;
    std::string line;
    while (std::getline(in, line))
        if (!line.empty()) names.push_back(line);
    return names;
}

void write_checklist(const std::string& path, const Checklist& checklist) {
    validate_checklist(checklist);
    write_records(path, "checklist", checklist, {}, encode_question);
}

Checklist read_checklist(const std::string& path) {
    const JsonlFile file = read_jsonl(path, "checklist", false);
    Checklist out;
    for (const auto& j : file.records) out.push_back(decode_question(j));
    validate_checklist(out);
    return out;
}

void write_probe_results(const std::string& path, const std::vector<ProbeResult>& results,
                         const std::map<std::string, std::string>& inputs) {
    write_records(path, "probe-results", results, inputs, encode_probe_result);
}

std::vector<ProbeResult> read_probe_results(const std::string& path) {
    const JsonlFile file = read_jsonl(path, "probe-results", true);
    std::vector<ProbeResult> out;
    out.reserve(file.records.size());
    for (const auto& j : file.records) out.push_back(decode_probe_result(j));
    return out;
}

void write_frontier(const std::string& path, const std::vector<FrontierPoint>& points,
                    const std::map<std::string, std::string>& inputs) {
    write_records(path, "frontier", points, inputs, encode_frontier_point);
}

std::vector<FrontierPoint> read_frontier(const std::string& path) {
    const JsonlFile file = read_jsonl(path, "frontier", true);
    std::vector<FrontierPoint> out;
    out.reserve(file.records.size());
    for (const auto& j : file.records) out.push_back(decode_frontier_point(j));
    return out;
}

void write_decisions(const std::string& path, const std::vector<Decision>& decisions,
                     const std::map<std::string, std::string>& inputs) {
    write_records(path, "decisions", decisions, inputs, [](const Decision& d) {
        ojson j;
        j["record"] = "decision";
        j["instance_id"] = d.instance_id;
        j["mode"] = mode_name(d.mode);
        j["a_hat"] = d.a_hat;
        j["delta_cost_est"] = d.delta_cost_est;
        return j;
    });
}

std::vector<Decision> read_decisions(const std::string& path) {
    const JsonlFile file = read_jsonl(path, "decisions", true);
    std::vector<Decision> out;
    for (const auto& j : file.records)
        out.push_back(guarded("decision", [&] {
            Decision d;
            d.instance_id = j.at("instance_id").get<std::string>();
            d.mode = mode_from_name(j.at("mode").get<std::string>());
            d.a_hat = j.value("a_hat", 0.0);
            d.delta_cost_est = j.value("delta_cost_est", 1.0);
            return d;
        }));
    return out;
}

}  // namespace rr::io
