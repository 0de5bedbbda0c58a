#include "augtriever/evaluator.h"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <numeric>
#include <sstream>
#include <unordered_map>

namespace augtriever::evaluator {

using nlohmann::json;
using nlohmann::ordered_json;

RankedList exact_search(const Matrix& doc_matrix, const std::vector<std::string>& doc_ids,
                        const std::vector<double>& query_vec, std::size_t k) {
    if (k < 1) throw Error(ErrorCode::InvalidArgument, "k must be >= 1");
    if (doc_matrix.rows < 1) throw Error(ErrorCode::EmptyCorpus, "no documents to search");
    if (doc_ids.size() != doc_matrix.rows) throw Error(ErrorCode::DimMismatch, "doc ids and matrix rows differ");
    if (query_vec.size() != doc_matrix.cols) throw Error(ErrorCode::DimMismatch, "query and document dims differ");
    std::vector<double> scores(doc_matrix.rows);
    for (std::size_t r = 0; r < doc_matrix.rows; ++r) {
        const double* row = doc_matrix.row(r);
        double s = 0.0;
        for (std::size_t d = 0; d < doc_matrix.cols; ++d) s += row[d] * query_vec[d];
        scores[r] = s;
    }
    std::vector<std::size_t> order(doc_matrix.rows);
    std::iota(order.begin(), order.end(), 0);
    std::size_t take = std::min(k, order.size());
    std::partial_sort(order.begin(), order.begin() + static_cast<std::ptrdiff_t>(take), order.end(),
                      [&](std::size_t a, std::size_t b) {
                          if (scores[a] != scores[b]) return scores[a] > scores[b];
                          return doc_ids[a] < doc_ids[b];
                      });
    RankedList out;
    out.hits.reserve(take);
    for (std::size_t i = 0; i < take; ++i) out.hits.push_back({doc_ids[order[i]], scores[order[i]]});
    return out;
}

namespace {
const std::map<std::string, int>& judged(const RankedList& ranking, const Qrels& qrels) {
    auto it = qrels.find(ranking.query_id);
    if (it == qrels.end()) throw Error(ErrorCode::NoRelevanceInfo, "no qrels for query '" + ranking.query_id + "'");
    bool any = std::any_of(it->second.begin(), it->second.end(), [](const auto& kv) { return kv.second > 0; });
    if (!any) throw Error(ErrorCode::NoRelevanceInfo, "query '" + ranking.query_id + "' has no positive grade");
    return it->second;
}

int grade_of(const std::map<std::string, int>& grades, const std::string& doc_id) {
    auto it = grades.find(doc_id);
    return it == grades.end() ? 0 : std::max(0, it->second);
}
}  // namespace

double ndcg_at_k(const RankedList& ranking, const Qrels& qrels, std::size_t k) {
    const auto& grades = judged(ranking, qrels);
    double dcg = 0.0;
    for (std::size_t i = 0; i < std::min(k, ranking.hits.size()); ++i) {
        int g = grade_of(grades, ranking.hits[i].doc_id);
        dcg += (std::pow(2.0, g) - 1.0) / std::log2(static_cast<double>(i) + 2.0);
    }
    std::vector<int> ideal;
    for (const auto& [doc, g] : grades) {
        if (g > 0) ideal.push_back(g);
    }
    std::sort(ideal.rbegin(), ideal.rend());
    double idcg = 0.0;
    for (std::size_t i = 0; i < std::min(k, ideal.size()); ++i) {
        idcg += (std::pow(2.0, ideal[i]) - 1.0) / std::log2(static_cast<double>(i) + 2.0);
    }
    return idcg > 0.0 ? dcg / idcg : 0.0;
}

double recall_at_k(const RankedList& ranking, const Qrels& qrels, std::size_t k) {
    const auto& grades = judged(ranking, qrels);
    std::size_t relevant = 0;
    for (const auto& [doc, g] : grades) relevant += g > 0;
    std::size_t found = 0;
    for (std::size_t i = 0; i < std::min(k, ranking.hits.size()); ++i) found += grade_of(grades, ranking.hits[i].doc_id) > 0;
    return static_cast<double>(found) / static_cast<double>(relevant);
}

std::string normalize_answer(std::string_view text) {
    std::string cleaned;
    cleaned.reserve(text.size());
    for (unsigned char c : text) {
        if (std::ispunct(c)) {
            cleaned.push_back(' ');
        } else {
            cleaned.push_back(static_cast<char>(std::tolower(c)));
        }
    }
    return collapse_whitespace(cleaned);
}

int answer_recall_at_k(const std::vector<std::string>& ranked_passages, const std::vector<std::string>& answers,
                       std::size_t k) {
    std::vector<std::string> normalized;
    for (const auto& a : answers) {
        auto n = normalize_answer(a);
        if (!n.empty()) normalized.push_back(" " + n + " ");
    }
    if (normalized.empty()) throw Error(ErrorCode::NoRelevanceInfo, "no answers given");
    for (std::size_t i = 0; i < std::min(k, ranked_passages.size()); ++i) {
        std::string p = " " + normalize_answer(ranked_passages[i]) + " ";
        for (const auto& a : normalized) {
            if (p.find(a) != std::string::npos) return 1;
        }
    }
    return 0;
}

DenseRetriever::DenseRetriever(const encoder::Model& model, const std::vector<corpus::Document>& docs, int threads,
                               bool cosine)
    : model_(model), matrix_(docs.size(), model.params.dim), cosine_(cosine) {
    ids_.reserve(docs.size());
    for (const auto& d : docs) ids_.push_back(d.id);
    parallel_for(docs.size(), threads, [&](std::size_t i) {
        auto v = model_.encode_text(docs[i].text);
        if (cosine_) {
            double n = std::sqrt(encoder::similarity(v, v));
            if (n > 0) {
                for (auto& x : v) x /= n;
            }
        }
        std::copy(v.begin(), v.end(), matrix_.row(i));
    });
}

RankedList DenseRetriever::search(const Query& q, std::size_t k) const {
    auto v = model_.encode_text(q.text);
    auto out = exact_search(matrix_, ids_, v, k);
    out.query_id = q.qid;
    return out;
}

ordered_json DenseRetriever::describe() const {
    ordered_json j;
    j["system"] = "dense";
    j["model"] = model_.metadata;
    j["cosine"] = cosine_;
    return j;
}

RankedList Bm25Retriever::search(const Query& q, std::size_t k) const {
    RankedList out;
    out.query_id = q.qid;
    for (auto& h : lexical::bm25_search(index_, corpus::tokenize(q.text), k)) out.hits.push_back({h.doc_id, h.score});
    return out;
}

ordered_json Bm25Retriever::describe() const {
    ordered_json j;
    j["system"] = "bm25";
    j["k1"] = index_.params().k1;
    j["b"] = index_.params().b;
    j["index"] = index_.metadata();
    return j;
}

std::string MetricSpec::name() const {
    switch (kind) {
        case Kind::ndcg: return "ndcg@" + std::to_string(k);
        case Kind::recall: return "recall@" + std::to_string(k);
        case Kind::answer_recall: return "answer_recall@" + std::to_string(k);
    }
    return "";
}

MetricSpec MetricSpec::parse(const std::string& text) {
    auto at = text.find('@');
    if (at == std::string::npos) throw Error(ErrorCode::InvalidArgument, "metric '" + text + "' needs @k");
    std::string kind = text.substr(0, at);
    std::size_t k = 0;
    try {
        k = std::stoul(text.substr(at + 1));
    } catch (const std::exception&) {
        throw Error(ErrorCode::InvalidArgument, "bad k in metric '" + text + "'");
    }
    if (k < 1) throw Error(ErrorCode::InvalidArgument, "k must be >= 1");
    if (kind == "ndcg") return {Kind::ndcg, k};
    if (kind == "recall") return {Kind::recall, k};
    if (kind == "answer_recall") return {Kind::answer_recall, k};
    throw Error(ErrorCode::InvalidArgument, "unknown metric '" + kind + "'");
}

ordered_json EvalReport::to_json() const {
    ordered_json j;
    j["metrics"] = ordered_json::object();
    for (const auto& [k, v] : metrics) j["metrics"][k] = v;
    j["per_query"] = ordered_json::object();
    for (const auto& [q, m] : per_query) {
        for (const auto& [k, v] : m) j["per_query"][q][k] = v;
    }
    j["evaluated"] = evaluated;
    j["skipped"] = skipped;
    j["config"] = config;
    return j;
}

EvalReport evaluate_run(const Retriever& system, const std::vector<corpus::Document>& corpus,
                        const std::vector<Query>& queries, const Qrels& qrels, const std::vector<MetricSpec>& metrics,
                        int threads) {
    std::size_t depth = 1;
    for (const auto& m : metrics) depth = std::max(depth, m.k);
    std::unordered_map<std::string, const corpus::Document*> by_id;
    for (const auto& d : corpus) by_id.emplace(d.id, &d);

    struct Slot {
        std::map<std::string, double> values;
        bool skipped = false;
    };
    std::vector<Slot> slots(queries.size());
    parallel_for(queries.size(), threads, [&](std::size_t i) {
        const Query& q = queries[i];
        RankedList ranking = system.search(q, depth);
        ranking.query_id = q.qid;
        for (const auto& m : metrics) {
            if (m.kind == MetricSpec::Kind::answer_recall) {
                if (q.answers.empty()) {
                    slots[i].skipped = true;
                    return;
                }
                std::vector<std::string> passages;
                for (const auto& h : ranking.hits) {
                    auto it = by_id.find(h.doc_id);
                    passages.push_back(it == by_id.end() ? std::string() : it->second->text);
                }
                slots[i].values[m.name()] = answer_recall_at_k(passages, q.answers, m.k);
            } else {
                try {
                    slots[i].values[m.name()] = m.kind == MetricSpec::Kind::ndcg ? ndcg_at_k(ranking, qrels, m.k)
                                                                                 : recall_at_k(ranking, qrels, m.k);
                } catch (const Error& e) {
                    if (e.code() != ErrorCode::NoRelevanceInfo) throw;
                    slots[i].skipped = true;
                    return;
                }
            }
        }
    });

    EvalReport report;
    for (const auto& m : metrics) report.metrics[m.name()] = 0.0;
    for (std::size_t i = 0; i < queries.size(); ++i) {
        if (slots[i].skipped) {
            ++report.skipped;
            continue;
        }
        ++report.evaluated;
        for (const auto& [name, v] : slots[i].values) report.metrics[name] += v;
        report.per_query[queries[i].qid] = slots[i].values;
    }
    if (report.evaluated > 0) {
        for (auto& [name, v] : report.metrics) v /= static_cast<double>(report.evaluated);
    }
    ordered_json cfg = system.describe();
    std::vector<std::string> names;
    for (const auto& m : metrics) names.push_back(m.name());
    cfg["metrics"] = names;
    cfg["gain"] = "2^rel-1";
    cfg["discount"] = "log2(rank+1)";
    report.config = std::move(cfg);
    return report;
}

std::vector<Query> read_queries(const std::string& path) {
    std::vector<Query> out;
    for (const auto& line : read_lines(path)) {
        json j = json::parse(line);
        if (j.contains("_meta")) continue;
        Query q;
        q.qid = j.at("qid").get<std::string>();
        q.text = j.at("text").get<std::string>();
        if (j.contains("answers") && j.at("answers").is_array()) q.answers = j.at("answers").get<std::vector<std::string>>();
        out.push_back(std::move(q));
    }
    return out;
}

Qrels parse_qrels(const std::string& text) {
    Qrels qrels;
    std::istringstream in(text);
    std::string line;
    std::size_t lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        auto fields = split_words(line);
        if (fields.empty()) continue;
        if (fields.size() != 4) throw Error(ErrorCode::Format, "qrels line " + std::to_string(lineno) + " needs 4 columns");
        int grade = 0;
        try {
            grade = std::stoi(fields[3]);
        } catch (const std::exception&) {
            throw Error(ErrorCode::Format, "qrels line " + std::to_string(lineno) + " has a bad grade");
        }
        if (grade < 0) throw Error(ErrorCode::Format, "negative grade on qrels line " + std::to_string(lineno));
        qrels[fields[0]][fields[2]] = grade;
    }
    return qrels;
}

Qrels read_qrels(const std::string& path) { return parse_qrels(read_text_file(path)); }

}  // namespace augtriever::evaluator
