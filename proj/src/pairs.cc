#include "augtriever/pairs.h"

#include <array>

#include "augtriever/common.h"

namespace augtriever::augment {

using nlohmann::json;
using nlohmann::ordered_json;

namespace {
constexpr std::array<std::pair<Strategy, std::string_view>, 11> kNames{{
    {Strategy::randomcrop, "randomcrop"},
    {Strategy::doc_title, "doc-title"},
    {Strategy::doc_anchor, "doc-anchor"},
    {Strategy::qext_bm25, "qext-bm25"},
    {Strategy::qext_plm, "qext-plm"},
    {Strategy::qext_self, "qext-self"},
    {Strategy::tqgen_topic, "tqgen-topic"},
    {Strategy::tqgen_title, "tqgen-title"},
    {Strategy::tqgen_absum, "tqgen-absum"},
    {Strategy::tqgen_exsum, "tqgen-exsum"},
    {Strategy::external, "external"},
}};
}  // namespace

std::string_view to_string(Strategy s) {
    for (const auto& [k, v] : kNames) {
        if (k == s) return v;
    }
    return "external";
}

Strategy strategy_from_string(std::string_view s) {
    for (const auto& [k, v] : kNames) {
        if (v == s) return k;
    }
    throw Error(ErrorCode::BadSpec, "unknown strategy '" + std::string(s) + "'");
}

std::string make_qid(Strategy s, std::string_view doc_id) {
    return std::string(to_string(s)) + ":" + std::string(doc_id);
}

ordered_json to_json(const TrainingPair& p) {
    ordered_json j;
    j["qid"] = p.qid;
    j["query"] = p.query;
    j["doc_id"] = p.doc_id;
    j["doc"] = p.doc_text;
    j["strategy"] = to_string(p.strategy);
    if (p.hard_negative) {
        j["neg_doc_id"] = p.hard_negative->doc_id;
        j["neg_doc"] = p.hard_negative->doc_text;
    }
    if (p.query_span) j["query_span"] = {p.query_span->start, p.query_span->len};
    if (p.doc_span) j["doc_span"] = {p.doc_span->start, p.doc_span->len};
    return j;
}

TrainingPair pair_from_json(const json& j) {
    for (const char* key : {"query", "doc_id", "doc"}) {
        if (!j.contains(key)) throw Error(ErrorCode::Format, std::string("pair record lacks '") + key + "'");
    }
    TrainingPair p;
    p.query = j.at("query").get<std::string>();
    p.doc_id = j.at("doc_id").get<std::string>();
    p.doc_text = j.at("doc").get<std::string>();
    p.strategy = j.contains("strategy") ? strategy_from_string(j.at("strategy").get<std::string>()) : Strategy::external;
    p.qid = j.contains("qid") ? j.at("qid").get<std::string>() : make_qid(p.strategy, p.doc_id);
    if (j.contains("neg_doc") && !j.at("neg_doc").is_null()) {
        HardNegative neg;
        neg.doc_text = j.at("neg_doc").get<std::string>();
        neg.doc_id = j.value("neg_doc_id", std::string());
        p.hard_negative = std::move(neg);
    }
    auto read_span = [&](const char* key) -> std::optional<WordSpan> {
        if (!j.contains(key) || !j.at(key).is_array() || j.at(key).size() != 2) return std::nullopt;
        return WordSpan{j.at(key)[0].get<std::size_t>(), j.at(key)[1].get<std::size_t>()};
    };
    p.query_span = read_span("query_span");
    p.doc_span = read_span("doc_span");
    return p;
}

std::vector<TrainingPair> read_pairs(const std::string& path) {
    std::vector<TrainingPair> pairs;
    for (const auto& line : read_lines(path)) {
        json j = json::parse(line);
        if (j.contains("_meta")) continue;
        pairs.push_back(pair_from_json(j));
    }
    return pairs;
}

std::string serialize_pairs(const std::vector<TrainingPair>& pairs, const ordered_json& meta) {
    std::string out;
    if (!meta.is_null()) out += ordered_json{{"_meta", meta}}.dump() + "\n";
    for (const auto& p : pairs) out += to_json(p).dump() + "\n";
    return out;
}

void write_pairs(const std::string& path, const std::vector<TrainingPair>& pairs, const ordered_json& meta) {
    write_text_file(path, serialize_pairs(pairs, meta));
}

}  // namespace augtriever::augment
