#pragma once

#include <cstdint>
#include <map>
#include <memory>
#include <string>
#include <unordered_map>
#include <utility>
#include <vector>

#include "augtriever/corpus.h"
#include "augtriever/encoder.h"
#include "augtriever/lexical.h"
#include "augtriever/pairs.h"
#include "augtriever/tqgen.h"

namespace augtriever::augment {

struct SpanCandidate {
    std::size_t start = 0;
    std::size_t len = 0;
    std::string text;

    bool operator==(const SpanCandidate&) const = default;
};

enum class Polarity { higher_is_better, lower_is_better };

struct ScoredSpan {
    SpanCandidate span;
    double score = 0.0;
    Polarity polarity = Polarity::higher_is_better;
};

struct SpanSampling {
    std::size_t n = 16;
    std::size_t min_len = 4;
    std::size_t max_len = 16;
};

/// Up to n random word spans, duplicates (same start and length) removed.
/// Documents shorter than min_len yield the whole document as one span.
std::vector<SpanCandidate> sample_spans(const corpus::Document& doc, std::uint64_t seed, SpanSampling cfg = {});

enum class CropPositive { span, document };

/// Two independently drawn spans; each length is uniform in
/// [max(4, ceil(T/10)), min(128, ceil(T/2))] for a T-word document.
TrainingPair random_crop_pair(const corpus::Document& doc, std::uint64_t seed,
                              CropPositive positive = CropPositive::span);

struct LmWeights {
    double bigram_doc = 0.4;
    double unigram_doc = 0.3;
    double unigram_corpus = 0.2;
    double uniform = 0.1;
};

/// Document-conditioned interpolated bigram model. Corpus statistics are
/// fixed at build time; document statistics are computed per query.
class NgramLm {
public:
    static NgramLm build(const std::vector<corpus::Document>& docs, LmWeights weights = {});

    const LmWeights& weights() const { return weights_; }
    /// Distinct corpus types plus one out-of-vocabulary bucket.
    std::size_t vocab_size() const { return counts_.size() + 1; }
    double corpus_prob(const std::string& term) const;

private:
    std::unordered_map<std::string, std::uint64_t> counts_;
    std::uint64_t total_ = 0;
    LmWeights weights_;
};

/// Sum over span words of -ln p(w_i | w_{i-1}, doc); no length normalisation.
double lm_span_nll(const NgramLm& lm, const corpus::Document& doc, const std::string& span_text);

class SpanScorer {
public:
    virtual ~SpanScorer() = default;
    virtual Polarity polarity() const = 0;
    virtual std::vector<double> score(const corpus::Document& doc, const std::vector<SpanCandidate>& spans) const = 0;
};

/// Span as query against its own document, corpus-level IDF.
class Bm25SpanScorer final : public SpanScorer {
public:
    explicit Bm25SpanScorer(const lexical::Bm25Index& index) : index_(index) {}
    Polarity polarity() const override { return Polarity::higher_is_better; }
    std::vector<double> score(const corpus::Document& doc, const std::vector<SpanCandidate>& spans) const override;

private:
    const lexical::Bm25Index& index_;
};

class LmSpanScorer final : public SpanScorer {
public:
    explicit LmSpanScorer(const NgramLm& lm) : lm_(lm) {}
    Polarity polarity() const override { return Polarity::lower_is_better; }
    std::vector<double> score(const corpus::Document& doc, const std::vector<SpanCandidate>& spans) const override;

private:
    const NgramLm& lm_;
};

/// Negative log-likelihood from an external scoring service.
class ExternalLmScorer final : public SpanScorer {
public:
    explicit ExternalLmScorer(const tqgen::HttpScoreClient& client) : client_(client) {}
    Polarity polarity() const override { return Polarity::lower_is_better; }
    std::vector<double> score(const corpus::Document& doc, const std::vector<SpanCandidate>& spans) const override;

private:
    const tqgen::HttpScoreClient& client_;
};

/// Inner product of encoder(span) and encoder(doc) under a parameter snapshot.
class SelfSpanScorer final : public SpanScorer {
public:
    SelfSpanScorer(const corpus::Vocab& vocab, const encoder::EncoderParams& params) : vocab_(vocab), params_(params) {}
    Polarity polarity() const override { return Polarity::higher_is_better; }
    std::vector<double> score(const corpus::Document& doc, const std::vector<SpanCandidate>& spans) const override;

private:
    const corpus::Vocab& vocab_;
    const encoder::EncoderParams& params_;
};

std::vector<ScoredSpan> score_spans(const SpanScorer& scorer, const corpus::Document& doc,
                                    const std::vector<SpanCandidate>& spans);

/// Best span under the shared polarity; ties go to the smallest start, then
/// the smallest length.
SpanCandidate select_query(const std::vector<ScoredSpan>& scored);

/// Sample, score and select; doc_text is the whitespace-normalised document,
/// which contains the selected span verbatim.
TrainingPair qext_pair(const SpanScorer& scorer, Strategy strategy, const corpus::Document& doc, std::uint64_t seed,
                       SpanSampling cfg = {});

TrainingPair title_query(const corpus::Document& doc);
TrainingPair anchor_query(const corpus::Document& doc, std::uint64_t seed);

struct MixSpec {
    std::vector<std::pair<Strategy, double>> entries;

    void validate() const;
    /// Strategy whose cumulative-proportion bucket contains u in [0, 1).
    Strategy pick(double u) const;

    static MixSpec single(Strategy s);
    static MixSpec mix50(Strategy s);
    static MixSpec hybrid_all();
    static MixSpec hybrid_tqgen();
    /// "hybrid-all", "hybrid-tqgen", "mix50:<strategy>", "<strategy>", or
    /// "s1=p1,s2=p2,...".
    static MixSpec parse(const std::string& text);
};

Strategy assign_strategy(const MixSpec& spec, std::uint64_t seed, const std::string& doc_id);

struct Backends {
    const SpanScorer* bm25 = nullptr;
    const SpanScorer* plm = nullptr;
    const SpanScorer* self = nullptr;
    tqgen::QueryGenerator* generator = nullptr;
    tqgen::SamplingParams sampling;
    CropPositive crop_positive = CropPositive::span;
    SpanSampling spans;
};

struct MixResult {
    std::vector<TrainingPair> pairs;
    std::map<std::string, std::size_t> produced;  // by strategy
    std::map<std::string, std::size_t> skipped;   // by error code
};

/// One strategy per document by hashing (seed, doc.id); recoverable
/// per-document failures are skipped and counted. Pairs are ordered by doc id.
MixResult mix_strategies(const std::vector<corpus::Document>& docs, const MixSpec& spec, std::uint64_t seed,
                         const Backends& backends, int threads = 1);

/// Single-strategy application used by mix_strategies.
TrainingPair apply_strategy(Strategy s, const corpus::Document& doc, std::uint64_t seed, const Backends& backends);

}  // namespace augtriever::augment
