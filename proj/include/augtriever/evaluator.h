#pragma once

#include <map>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "augtriever/common.h"
#include "augtriever/corpus.h"
#include "augtriever/encoder.h"
#include "augtriever/lexical.h"

namespace augtriever::evaluator {

/// query-id -> (doc-id -> grade)
using Qrels = std::map<std::string, std::map<std::string, int>>;

struct Hit {
    std::string doc_id;
    double score = 0.0;
};

/// Scores non-increasing; equal scores ordered by ascending doc-id.
struct RankedList {
    std::string query_id;
    std::vector<Hit> hits;
};

struct Query {
    std::string qid;
    std::string text;
    std::vector<std::string> answers;
};

/// Exhaustive inner-product search over the rows of doc_matrix.
RankedList exact_search(const Matrix& doc_matrix, const std::vector<std::string>& doc_ids,
                        const std::vector<double>& query_vec, std::size_t k);

/// DCG uses gain 2^rel - 1 and discount log2(rank + 1).
double ndcg_at_k(const RankedList& ranking, const Qrels& qrels, std::size_t k);
double recall_at_k(const RankedList& ranking, const Qrels& qrels, std::size_t k);

/// Lowercase, strip punctuation, collapse whitespace.
std::string normalize_answer(std::string_view text);
/// 1 if any of the first k passages contains any answer on token boundaries.
int answer_recall_at_k(const std::vector<std::string>& ranked_passages, const std::vector<std::string>& answers,
                       std::size_t k);

class Retriever {
public:
    virtual ~Retriever() = default;
    virtual RankedList search(const Query& q, std::size_t k) const = 0;
    virtual nlohmann::ordered_json describe() const = 0;
};

/// Encodes the corpus once at construction.
class DenseRetriever final : public Retriever {
public:
    DenseRetriever(const encoder::Model& model, const std::vector<corpus::Document>& docs, int threads = 1,
                   bool cosine = false);
    RankedList search(const Query& q, std::size_t k) const override;
    nlohmann::ordered_json describe() const override;

private:
    const encoder::Model& model_;
    std::vector<std::string> ids_;
    Matrix matrix_;
    bool cosine_;
};

class Bm25Retriever final : public Retriever {
public:
    explicit Bm25Retriever(const lexical::Bm25Index& index) : index_(index) {}
    RankedList search(const Query& q, std::size_t k) const override;
    nlohmann::ordered_json describe() const override;

private:
    const lexical::Bm25Index& index_;
};

struct MetricSpec {
    enum class Kind { ndcg, recall, answer_recall } kind;
    std::size_t k;

    std::string name() const;
    static MetricSpec parse(const std::string& text);  // "ndcg@10", "recall@20", "answer_recall@20"
};

struct EvalReport {
    std::map<std::string, double> metrics;
    std::map<std::string, std::map<std::string, double>> per_query;
    std::size_t evaluated = 0;
    std::size_t skipped = 0;
    nlohmann::ordered_json config;

    nlohmann::ordered_json to_json() const;
};

/// Runs every query and macro-averages each metric. Queries without any
/// positive grade (or without answers, for answer recall) are skipped.
EvalReport evaluate_run(const Retriever& system, const std::vector<corpus::Document>& corpus,
                        const std::vector<Query>& queries, const Qrels& qrels, const std::vector<MetricSpec>& metrics,
                        int threads = 1);

std::vector<Query> read_queries(const std::string& path);
/// TREC format "qid 0 docid grade".
Qrels read_qrels(const std::string& path);
Qrels parse_qrels(const std::string& text);

}  // namespace augtriever::evaluator
