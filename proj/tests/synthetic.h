#pragma once

// Synthetic retrieval task used by the learning-signal checks. Every document
// plants five topic words among noise; queries use a disjoint query vocabulary
// related to the topic words by a fixed bijection, so a model can only score
// above chance by learning the mapping.

#include <algorithm>
#include <random>
#include <string>
#include <vector>

#include "augtriever/corpus.h"
#include "augtriever/encoder.h"
#include "augtriever/evaluator.h"
#include "augtriever/pairs.h"

namespace synthetic {

struct Options {
    std::size_t n_docs = 200;
    std::size_t doc_len = 100;
    std::size_t topics_per_doc = 5;
    std::size_t topic_pool = 100;
    std::size_t noise_pool = 400;
    double topic_prob = 0.5;
    std::size_t query_words = 3;
    std::size_t train_queries_per_doc = 2;
    // When false, queries use the doc-side topic words directly.
    bool mapped_queries = true;
};

struct Domain {
    std::vector<augtriever::corpus::Document> docs;
    std::vector<std::vector<std::size_t>> topics;
    std::vector<augtriever::augment::TrainingPair> train_pairs;
    std::vector<augtriever::evaluator::Query> heldout;
    augtriever::evaluator::Qrels qrels;
};

inline std::string doc_word(const std::string& dom, std::size_t i) { return dom + "doc" + std::to_string(i); }
inline std::string query_word(const std::string& dom, std::size_t i) { return dom + "qry" + std::to_string(i); }
inline std::string noise_word(const std::string& dom, std::size_t i) { return dom + "noise" + std::to_string(i); }

inline std::vector<std::size_t> pick_subset(const std::vector<std::size_t>& from, std::size_t k, std::mt19937_64& rng) {
    std::vector<std::size_t> v = from;
    std::shuffle(v.begin(), v.end(), rng);
    v.resize(std::min(k, v.size()));
    std::sort(v.begin(), v.end());
    return v;
}

inline Domain make_domain(const std::string& dom, std::uint64_t seed, const Options& o = {}) {
    std::mt19937_64 rng(seed);
    Domain d;
    std::vector<std::size_t> pool(o.topic_pool);
    for (std::size_t i = 0; i < pool.size(); ++i) pool[i] = i;
    std::uniform_real_distribution<double> coin(0.0, 1.0);
    std::uniform_int_distribution<std::size_t> noise(0, o.noise_pool - 1);
    std::uniform_int_distribution<std::size_t> slot(0, o.topics_per_doc - 1);
    auto query_text = [&](const std::vector<std::size_t>& words) {
        std::string q;
        for (auto w : words) {
            if (!q.empty()) q += ' ';
            q += o.mapped_queries ? query_word(dom, w) : doc_word(dom, w);
        }
        return q;
    };
    for (std::size_t i = 0; i < o.n_docs; ++i) {
        auto topics = pick_subset(pool, o.topics_per_doc, rng);
        std::string text;
        for (std::size_t t = 0; t < o.doc_len; ++t) {
            if (!text.empty()) text += ' ';
            text += coin(rng) < o.topic_prob ? doc_word(dom, topics[slot(rng)]) : noise_word(dom, noise(rng));
        }
        augtriever::corpus::Document doc;
        doc.id = dom + "-" + std::to_string(i);
        doc.text = text;
        // Held-out query first, then training queries with different subsets.
        auto held = pick_subset(topics, o.query_words, rng);
        std::vector<std::vector<std::size_t>> seen{held};
        for (std::size_t k = 0; k < o.train_queries_per_doc; ++k) {
            std::vector<std::size_t> sub;
            for (int attempt = 0; attempt < 64; ++attempt) {
                sub = pick_subset(topics, o.query_words, rng);
                if (std::find(seen.begin(), seen.end(), sub) == seen.end()) break;
            }
            seen.push_back(sub);
            augtriever::augment::TrainingPair p;
            p.qid = "train:" + doc.id + ":" + std::to_string(k);
            p.query = query_text(sub);
            p.doc_id = doc.id;
            p.doc_text = doc.text;
            d.train_pairs.push_back(std::move(p));
        }
        augtriever::evaluator::Query q;
        q.qid = "heldout:" + doc.id;
        q.text = query_text(held);
        d.qrels[q.qid][doc.id] = 1;
        d.heldout.push_back(std::move(q));
        d.topics.push_back(std::move(topics));
        d.docs.push_back(std::move(doc));
    }
    std::shuffle(d.train_pairs.begin(), d.train_pairs.end(), rng);
    return d;
}

inline double recall_at(const augtriever::encoder::Model& model, const Domain& d, std::size_t k = 5) {
    augtriever::evaluator::DenseRetriever retriever(model, d.docs);
    double total = 0.0;
    for (const auto& q : d.heldout) total += augtriever::evaluator::recall_at_k(retriever.search(q, k), d.qrels, k);
    return total / static_cast<double>(d.heldout.size());
}

}  // namespace synthetic
