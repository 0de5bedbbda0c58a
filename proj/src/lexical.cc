#include "augtriever/lexical.h"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <map>
#include <numeric>

#include "augtriever/common.h"

namespace augtriever::lexical {

namespace {
constexpr char kMagic[4] = {'A', 'B', 'I', 'X'};
constexpr std::uint32_t kVersion = 1;

double term_weight(double idf, double tf, double dl, double avg_len, const Bm25Params& p) {
    if (tf <= 0.0) return 0.0;
    double norm = avg_len > 0.0 ? dl / avg_len : 0.0;
    return idf * tf * (p.k1 + 1.0) / (tf + p.k1 * (1.0 - p.b + p.b * norm));
}
}  // namespace

Bm25Index Bm25Index::build(const std::vector<corpus::Document>& docs, Bm25Params params, int threads) {
    if (docs.empty()) throw Error(ErrorCode::EmptyCorpus, "cannot index an empty corpus");
    if (params.k1 < 0.0 || params.b < 0.0 || params.b > 1.0) {
        throw Error(ErrorCode::InvalidArgument, "bm25 parameters out of range");
    }
    std::vector<std::size_t> order(docs.size());
    std::iota(order.begin(), order.end(), 0);
    std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return docs[a].id < docs[b].id; });
    for (std::size_t i = 1; i < order.size(); ++i) {
        if (docs[order[i]].id == docs[order[i - 1]].id) {
            throw Error(ErrorCode::DuplicateDocId, "duplicate doc id '" + docs[order[i]].id + "'");
        }
    }

    Bm25Index index;
    index.params_ = params;
    index.doc_ids_.resize(docs.size());
    index.doc_len_.resize(docs.size());

    // Per-document term counts, then a sequential merge so postings come out
    // sorted by internal index regardless of thread count.
    std::vector<std::map<std::string, std::uint32_t>> counts(docs.size());
    parallel_for(docs.size(), threads, [&](std::size_t i) {
        const auto& doc = docs[order[i]];
        auto terms = corpus::tokenize_surface(doc.text);
        index.doc_ids_[i] = doc.id;
        index.doc_len_[i] = static_cast<std::uint32_t>(terms.size());
        for (auto& t : terms) ++counts[i][t];
    });
    std::uint64_t total = 0;
    for (std::size_t i = 0; i < docs.size(); ++i) {
        total += index.doc_len_[i];
        index.doc_lookup_.emplace(index.doc_ids_[i], static_cast<std::uint32_t>(i));
        for (const auto& [t, c] : counts[i]) index.terms_[t].push_back({static_cast<std::uint32_t>(i), c});
    }
    index.avg_len_ = static_cast<double>(total) / static_cast<double>(docs.size());
    return index;
}

std::uint32_t Bm25Index::df(const std::string& term) const {
    auto it = terms_.find(term);
    return it == terms_.end() ? 0 : static_cast<std::uint32_t>(it->second.size());
}

const std::vector<Posting>* Bm25Index::postings(const std::string& term) const {
    auto it = terms_.find(term);
    return it == terms_.end() ? nullptr : &it->second;
}

std::uint32_t Bm25Index::internal_index(const std::string& doc_id) const {
    auto it = doc_lookup_.find(doc_id);
    if (it == doc_lookup_.end()) throw Error(ErrorCode::UnknownDoc, "doc '" + doc_id + "' not in index");
    return it->second;
}

std::uint32_t Bm25Index::tf(const std::string& term, std::uint32_t internal) const {
    const auto* list = postings(term);
    if (!list) return 0;
    auto it = std::lower_bound(list->begin(), list->end(), internal,
                               [](const Posting& p, std::uint32_t d) { return p.doc < d; });
    return (it != list->end() && it->doc == internal) ? it->tf : 0;
}

double Bm25Index::idf(const std::string& term) const {
    double n = static_cast<double>(n_docs());
    double d = static_cast<double>(df(term));
    return std::log(1.0 + (n - d + 0.5) / (d + 0.5));
}

double bm25_score(const Bm25Index& index, const corpus::TokenSeq& query, const std::string& doc_id) {
    std::uint32_t internal = index.internal_index(doc_id);
    double dl = index.doc_len(internal);
    double score = 0.0;
    for (const auto& term : query.surface) {
        score += term_weight(index.idf(term), index.tf(term, internal), dl, index.avg_len(), index.params());
    }
    return score;
}

double bm25_score_text(const Bm25Index& index, const corpus::TokenSeq& query, const corpus::TokenSeq& doc) {
    std::unordered_map<std::string, std::uint32_t> tf;
    for (const auto& t : doc.surface) ++tf[t];
    double dl = static_cast<double>(doc.surface.size());
    double score = 0.0;
    for (const auto& term : query.surface) {
        auto it = tf.find(term);
        if (it == tf.end()) continue;
        score += term_weight(index.idf(term), it->second, dl, index.avg_len(), index.params());
    }
    return score;
}

std::vector<SearchHit> bm25_search(const Bm25Index& index, const corpus::TokenSeq& query, std::size_t k) {
    if (k < 1) throw Error(ErrorCode::InvalidArgument, "k must be >= 1");
    std::vector<double> scores(index.n_docs(), 0.0);
    // Term-at-a-time in query order: each document's sum is accumulated in the
    // same order as bm25_score, so scores agree bit-for-bit.
    for (const auto& term : query.surface) {
        const auto* list = index.postings(term);
        if (!list) continue;
        double idf = index.idf(term);
        for (const auto& p : *list) {
            scores[p.doc] += term_weight(idf, p.tf, index.doc_len(p.doc), index.avg_len(), index.params());
        }
    }
    std::vector<std::uint32_t> order(index.n_docs());
    std::iota(order.begin(), order.end(), 0u);
    std::size_t take = std::min(k, order.size());
    std::partial_sort(order.begin(), order.begin() + static_cast<std::ptrdiff_t>(take), order.end(),
                      [&](std::uint32_t a, std::uint32_t b) {
                          if (scores[a] != scores[b]) return scores[a] > scores[b];
                          return a < b;
                      });
    std::vector<SearchHit> hits;
    hits.reserve(take);
    for (std::size_t i = 0; i < take; ++i) hits.push_back({index.doc_id(order[i]), scores[order[i]]});
    return hits;
}

bool Bm25Index::operator==(const Bm25Index& o) const {
    return params_.k1 == o.params_.k1 && params_.b == o.params_.b && doc_ids_ == o.doc_ids_ &&
           doc_len_ == o.doc_len_ && terms_ == o.terms_ && avg_len_ == o.avg_len_;
}

void Bm25Index::save(const std::string& path) const {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw Error(ErrorCode::Io, "cannot write " + path);
    out.write(kMagic, 4);
    binio::write_u32(out, kVersion);
    binio::write_string(out, metadata_.is_null() ? std::string("{}") : metadata_.dump());
    binio::write_f64(out, params_.k1);
    binio::write_f64(out, params_.b);
    binio::write_u64(out, doc_ids_.size());
    for (std::size_t i = 0; i < doc_ids_.size(); ++i) {
        binio::write_string(out, doc_ids_[i]);
        binio::write_u32(out, doc_len_[i]);
    }
    std::vector<const std::string*> sorted_terms;
    sorted_terms.reserve(terms_.size());
    for (const auto& [t, _] : terms_) sorted_terms.push_back(&t);
    std::sort(sorted_terms.begin(), sorted_terms.end(), [](auto* a, auto* b) { return *a < *b; });
    binio::write_u64(out, sorted_terms.size());
    for (const auto* t : sorted_terms) {
        const auto& list = terms_.at(*t);
        binio::write_string(out, *t);
        binio::write_u32(out, static_cast<std::uint32_t>(list.size()));
        for (const auto& p : list) {
            binio::write_u32(out, p.doc);
            binio::write_u32(out, p.tf);
        }
    }
    if (!out) throw Error(ErrorCode::Io, "write failed for " + path);
}

Bm25Index Bm25Index::load(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw Error(ErrorCode::Io, "cannot open " + path);
    char magic[4];
    in.read(magic, 4);
    if (!in || !std::equal(magic, magic + 4, kMagic)) throw Error(ErrorCode::Format, path + " is not a bm25 index");
    std::uint32_t version = binio::read_u32(in);
    if (version != kVersion) throw Error(ErrorCode::Format, "unsupported index version " + std::to_string(version));
    Bm25Index index;
    index.metadata_ = nlohmann::ordered_json::parse(binio::read_string(in));
    index.params_.k1 = binio::read_f64(in);
    index.params_.b = binio::read_f64(in);
    std::uint64_t n = binio::read_u64(in);
    if (n == 0) throw Error(ErrorCode::Format, "index has no documents");
    index.doc_ids_.resize(n);
    index.doc_len_.resize(n);
    std::uint64_t total = 0;
    for (std::uint64_t i = 0; i < n; ++i) {
        index.doc_ids_[i] = binio::read_string(in);
        index.doc_len_[i] = binio::read_u32(in);
        total += index.doc_len_[i];
        index.doc_lookup_.emplace(index.doc_ids_[i], static_cast<std::uint32_t>(i));
    }
    index.avg_len_ = static_cast<double>(total) / static_cast<double>(n);
    std::uint64_t terms = binio::read_u64(in);
    for (std::uint64_t i = 0; i < terms; ++i) {
        std::string t = binio::read_string(in);
        std::uint32_t df = binio::read_u32(in);
        auto& list = index.terms_[t];
        list.resize(df);
        for (auto& p : list) {
            p.doc = binio::read_u32(in);
            p.tf = binio::read_u32(in);
            if (p.doc >= n) throw Error(ErrorCode::Format, "posting references unknown document");
        }
    }
    return index;
}

}  // namespace augtriever::lexical
