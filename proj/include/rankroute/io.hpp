#pragma once
// Line-delimited record files: every artifact is JSONL with a leading header
// record carrying format, version and input fingerprints. Writes are atomic
// (write-then-rename) so partial stage output is never observable.

#include <map>
#include <string>
#include <vector>

#include <json.hpp>

#include "rankroute/checklist.hpp"
#include "rankroute/embedding.hpp"
#include "rankroute/features.hpp"
#include "rankroute/labels.hpp"
#include "rankroute/policy.hpp"
#include "rankroute/probe_mask.hpp"
#include "rankroute/ranking.hpp"

namespace rr::io {

using ojson = nlohmann::ordered_json;

struct FileMeta {
    std::string kind;
    std::map<std::string, std::string> inputs;  // role -> file fingerprint
    ojson extras = ojson::object();
};

void atomic_write(const std::string& path, const std::string& content);
std::string read_text(const std::string& path);

std::string render_jsonl(const FileMeta& meta, const std::vector<ojson>& records);

struct JsonlFile {
    FileMeta meta;
    std::vector<ojson> records;
    bool had_header = false;
};

// `expect_kind` empty means any kind is accepted. When `header_required`,
// a missing header is an error; otherwise the first line may already be a
// record (external files).
JsonlFile read_jsonl(const std::string& path, const std::string& expect_kind, bool header_required);

// --- record codecs ----------------------------------------------------------

ojson encode_instance(const RankingInstance& inst);
RankingInstance decode_instance(const ojson& j);

ojson encode_dual_record(const DualModeRecord& rec);
DualModeRecord decode_dual_record(const ojson& j);

ojson encode_label(const AdvantageLabel& label);
AdvantageLabel decode_label(const ojson& j);

ojson encode_dump(const EmbeddingDump& dump);
EmbeddingDump decode_dump(const ojson& j);

ojson encode_features(const FeatureVector& fv);
FeatureVector decode_features(const ojson& j);

ojson encode_question(const ChecklistQuestion& q);
ChecklistQuestion decode_question(const ojson& j);

ojson encode_probe_result(const ProbeResult& r);
ProbeResult decode_probe_result(const ojson& j);

ojson encode_frontier_point(const FrontierPoint& p);
FrontierPoint decode_frontier_point(const ojson& j);

ojson encode_mask_rle(const MaskRle& rle);
MaskRle decode_mask_rle(const ojson& j);

// --- typed file helpers -----------------------------------------------------

void write_instances(const std::string& path, const std::vector<RankingInstance>& instances,
                     const std::map<std::string, std::string>& inputs = {});
std::vector<RankingInstance> read_instances(const std::string& path);

void write_dual_log(const std::string& path, const std::vector<DualModeRecord>& records,
                    const std::map<std::string, std::string>& inputs = {});
std::vector<DualModeRecord> read_dual_log(const std::string& path);

struct LabelsFile {
    double lambda = 0.0;
    std::string metric;
    std::vector<AdvantageLabel> labels;
};
void write_labels(const std::string& path, const LabelsFile& file,
                  const std::map<std::string, std::string>& inputs = {});
LabelsFile read_labels(const std::string& path);

void write_dumps(const std::string& path, const std::vector<EmbeddingDump>& dumps,
                 const std::map<std::string, std::string>& inputs = {});
std::vector<EmbeddingDump> read_dumps(const std::string& path);

void write_features(const std::string& path, const std::vector<FeatureVector>& features,
                    const std::map<std::string, std::string>& inputs = {});
std::vector<FeatureVector> read_features(const std::string& path);

void write_schema_manifest(const std::string& path, const std::vector<std::string>& names);
std::vector<std::string> read_schema_manifest(const std::string& path);

void write_checklist(const std::string& path, const Checklist& checklist);
Checklist read_checklist(const std::string& path);

void write_probe_results(const std::string& path, const std::vector<ProbeResult>& results,
                         const std::map<std::string, std::string>& inputs = {});
std::vector<ProbeResult> read_probe_results(const std::string& path);

void write_frontier(const std::string& path, const std::vector<FrontierPoint>& points,
                    const std::map<std::string, std::string>& inputs = {});
std::vector<FrontierPoint> read_frontier(const std::string& path);

struct Decision {
    std::string instance_id;
    Mode mode = Mode::NonThink;
    double a_hat = 0.0;
    double delta_cost_est = 1.0;
};
void write_decisions(const std::string& path, const std::vector<Decision>& decisions,
                     const std::map<std::string, std::string>& inputs = {});
std::vector<Decision> read_decisions(const std::string& path);

}  // namespace rr::io
