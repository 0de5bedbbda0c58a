#pragma once

#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include <json.hpp>

namespace augtriever::augment {

enum class Strategy {
    randomcrop,
    doc_title,
    doc_anchor,
    qext_bm25,
    qext_plm,
    qext_self,
    tqgen_topic,
    tqgen_title,
    tqgen_absum,
    tqgen_exsum,
    external,
};

/// Wire names: "randomcrop", "doc-title", "qext-bm25", "tqgen-topic", ...
std::string_view to_string(Strategy s);
Strategy strategy_from_string(std::string_view s);

struct WordSpan {
    std::size_t start = 0;
    std::size_t len = 0;

    bool operator==(const WordSpan&) const = default;
};

struct HardNegative {
    std::string doc_id;
    std::string doc_text;

    bool operator==(const HardNegative&) const = default;
};

struct TrainingPair {
    std::string qid;
    std::string query;
    std::string doc_id;
    std::string doc_text;
    Strategy strategy = Strategy::external;
    std::optional<HardNegative> hard_negative;
    // Word offsets into the source document for RandomCrop pairs.
    std::optional<WordSpan> query_span;
    std::optional<WordSpan> doc_span;

    bool operator==(const TrainingPair&) const = default;
};

std::string make_qid(Strategy s, std::string_view doc_id);

nlohmann::ordered_json to_json(const TrainingPair& p);
TrainingPair pair_from_json(const nlohmann::json& j);

/// Reads a pair file; a missing "strategy" field means "external".
std::vector<TrainingPair> read_pairs(const std::string& path);
void write_pairs(const std::string& path, const std::vector<TrainingPair>& pairs, const nlohmann::ordered_json& meta);
std::string serialize_pairs(const std::vector<TrainingPair>& pairs, const nlohmann::ordered_json& meta);

}  // namespace augtriever::augment
