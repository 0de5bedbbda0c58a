#pragma once

#include <cstdint>
#include <string>
#include <unordered_map>
#include <utility>
#include <vector>

#include <json.hpp>

#include "augtriever/corpus.h"

namespace augtriever::lexical {

struct Bm25Params {
    double k1 = 1.2;
    double b = 0.75;
};

struct Posting {
    std::uint32_t doc = 0;  // internal index, ascending doc-id order
    std::uint32_t tf = 0;

    bool operator==(const Posting&) const = default;
};

struct SearchHit {
    std::string doc_id;
    double score = 0.0;
};

/// Inverted index over surface terms. Documents are stored sorted by id so the
/// internal index order coincides with ascending doc-id order.
class Bm25Index {
public:
    static Bm25Index build(const std::vector<corpus::Document>& docs, Bm25Params params = {}, int threads = 1);

    std::size_t n_docs() const { return doc_ids_.size(); }
    double avg_len() const { return avg_len_; }
    const Bm25Params& params() const { return params_; }
    std::uint32_t df(const std::string& term) const;
    const std::vector<Posting>* postings(const std::string& term) const;
    std::uint32_t doc_len(std::size_t internal) const { return doc_len_[internal]; }
    const std::string& doc_id(std::size_t internal) const { return doc_ids_[internal]; }
    /// Internal index of a doc-id; throws UnknownDoc.
    std::uint32_t internal_index(const std::string& doc_id) const;
    std::size_t n_terms() const { return terms_.size(); }
    std::uint32_t tf(const std::string& term, std::uint32_t internal) const;

    /// ln(1 + (N - df + 0.5) / (df + 0.5)); df = 0 for unindexed terms.
    double idf(const std::string& term) const;

    nlohmann::ordered_json& metadata() { return metadata_; }
    const nlohmann::ordered_json& metadata() const { return metadata_; }

    void save(const std::string& path) const;
    static Bm25Index load(const std::string& path);

    bool operator==(const Bm25Index& other) const;

private:
    Bm25Params params_;
    std::vector<std::string> doc_ids_;
    std::vector<std::uint32_t> doc_len_;
    std::unordered_map<std::string, std::uint32_t> doc_lookup_;
    std::unordered_map<std::string, std::vector<Posting>> terms_;
    double avg_len_ = 0.0;
    nlohmann::ordered_json metadata_;
};

double bm25_score(const Bm25Index& index, const corpus::TokenSeq& query, const std::string& doc_id);

/// Scores a query against arbitrary text using the index's corpus statistics
/// (IDF, average length) and the text's own term frequencies and length.
double bm25_score_text(const Bm25Index& index, const corpus::TokenSeq& query, const corpus::TokenSeq& doc);

std::vector<SearchHit> bm25_search(const Bm25Index& index, const corpus::TokenSeq& query, std::size_t k);

}  // namespace augtriever::lexical
