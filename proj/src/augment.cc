#include "augtriever/augment.h"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>
#include <set>
#include <sstream>

#include "augtriever/common.h"

namespace augtriever::augment {

using corpus::Document;

std::vector<SpanCandidate> sample_spans(const Document& doc, std::uint64_t seed, SpanSampling cfg) {
    if (cfg.min_len < 1 || cfg.max_len < cfg.min_len) throw Error(ErrorCode::InvalidArgument, "bad span length range");
    auto words = split_words(doc.text);
    if (words.empty()) throw Error(ErrorCode::EmptyDocument, "document '" + doc.id + "' has no words");
    const std::size_t total = words.size();
    if (total < cfg.min_len) return {SpanCandidate{0, total, join_words(words, 0, total)}};

    std::mt19937_64 rng(derive_seed(seed, doc.id, "spans"));
    std::uniform_int_distribution<std::size_t> len_dist(cfg.min_len, cfg.max_len);
    std::set<std::pair<std::size_t, std::size_t>> seen;
    std::vector<SpanCandidate> out;
    for (std::size_t i = 0; i < cfg.n; ++i) {
        std::size_t len = std::min(len_dist(rng), total);
        std::uniform_int_distribution<std::size_t> start_dist(0, total - len);
        std::size_t start = start_dist(rng);
        if (!seen.emplace(start, len).second) continue;
        out.push_back({start, len, join_words(words, start, start + len)});
    }
    return out;
}

TrainingPair random_crop_pair(const Document& doc, std::uint64_t seed, CropPositive positive) {
    auto words = split_words(doc.text);
    const std::size_t total = words.size();
    if (total < 8) throw Error(ErrorCode::TooShort, "document '" + doc.id + "' has fewer than 8 words");
    std::size_t lo = std::max<std::size_t>(4, (total + 9) / 10);
    std::size_t hi = std::min<std::size_t>(128, (total + 1) / 2);
    lo = std::min(lo, hi);

    std::mt19937_64 rng(derive_seed(seed, doc.id, "randomcrop"));
    auto draw = [&]() {
        std::size_t len = std::uniform_int_distribution<std::size_t>(lo, hi)(rng);
        std::size_t start = std::uniform_int_distribution<std::size_t>(0, total - len)(rng);
        return WordSpan{start, len};
    };
    WordSpan q = draw();
    WordSpan d = draw();

    TrainingPair p;
    p.strategy = Strategy::randomcrop;
    p.qid = make_qid(p.strategy, doc.id);
    p.query = join_words(words, q.start, q.start + q.len);
    p.doc_id = doc.id;
    p.doc_text = positive == CropPositive::span ? join_words(words, d.start, d.start + d.len)
                                                : join_words(words, 0, total);
    p.query_span = q;
    p.doc_span = d;
    return p;
}

NgramLm NgramLm::build(const std::vector<Document>& docs, LmWeights weights) {
    double sum = weights.bigram_doc + weights.unigram_doc + weights.unigram_corpus + weights.uniform;
    if (weights.bigram_doc < 0 || weights.unigram_doc < 0 || weights.unigram_corpus < 0 || weights.uniform < 0 ||
        std::abs(sum - 1.0) > 1e-9) {
        throw Error(ErrorCode::InvalidArgument, "lm interpolation weights must be non-negative and sum to 1");
    }
    NgramLm lm;
    lm.weights_ = weights;
    for (const auto& d : docs) {
        for (auto& t : corpus::tokenize_surface(d.text)) {
            ++lm.counts_[t];
            ++lm.total_;
        }
    }
    return lm;
}

double NgramLm::corpus_prob(const std::string& term) const {
    if (total_ == 0) return 0.0;
    auto it = counts_.find(term);
    return it == counts_.end() ? 0.0 : static_cast<double>(it->second) / static_cast<double>(total_);
}

double lm_span_nll(const NgramLm& lm, const Document& doc, const std::string& span_text) {
    auto span = corpus::tokenize_surface(span_text);
    if (span.empty()) throw Error(ErrorCode::EmptySpan, "span has no tokens");
    auto doc_terms = corpus::tokenize_surface(doc.text);

    std::unordered_map<std::string, std::uint64_t> uni;
    std::map<std::pair<std::string, std::string>, std::uint64_t> bi;
    std::unordered_map<std::string, std::uint64_t> history;
    for (std::size_t i = 0; i < doc_terms.size(); ++i) {
        ++uni[doc_terms[i]];
        if (i + 1 < doc_terms.size()) {
            ++bi[{doc_terms[i], doc_terms[i + 1]}];
            ++history[doc_terms[i]];
        }
    }
    const double doc_len = static_cast<double>(doc_terms.size());
    const auto& w = lm.weights();
    const double uniform = 1.0 / static_cast<double>(lm.vocab_size());

    double nll = 0.0;
    for (std::size_t i = 0; i < span.size(); ++i) {
        const std::string& term = span[i];
        auto u = uni.find(term);
        double p_uni_doc = (u == uni.end() || doc_len == 0) ? 0.0 : static_cast<double>(u->second) / doc_len;
        double p_bi_doc = p_uni_doc;  // no usable history: back off to the document unigram
        if (i > 0) {
            auto h = history.find(span[i - 1]);
            if (h != history.end()) {
                auto b = bi.find({span[i - 1], term});
                p_bi_doc = b == bi.end() ? 0.0 : static_cast<double>(b->second) / static_cast<double>(h->second);
            }
        }
        double p = w.bigram_doc * p_bi_doc + w.unigram_doc * p_uni_doc + w.unigram_corpus * lm.corpus_prob(term) +
                   w.uniform * uniform;
        if (!(p > 0.0)) throw Error(ErrorCode::NonFinite, "zero probability under lm with no uniform floor");
        nll -= std::log(p);
    }
    return nll;
}

std::vector<double> Bm25SpanScorer::score(const Document& doc, const std::vector<SpanCandidate>& spans) const {
    auto doc_tokens = corpus::tokenize(doc.text);
    std::vector<double> out;
    out.reserve(spans.size());
    for (const auto& s : spans) out.push_back(lexical::bm25_score_text(index_, corpus::tokenize(s.text), doc_tokens));
    return out;
}

std::vector<double> LmSpanScorer::score(const Document& doc, const std::vector<SpanCandidate>& spans) const {
    std::vector<double> out;
    out.reserve(spans.size());
    for (const auto& s : spans) out.push_back(lm_span_nll(lm_, doc, s.text));
    return out;
}

std::vector<double> ExternalLmScorer::score(const Document& doc, const std::vector<SpanCandidate>& spans) const {
    std::vector<double> out;
    out.reserve(spans.size());
    for (const auto& s : spans) out.push_back(client_.score(doc.text, s.text));
    return out;
}

std::vector<double> SelfSpanScorer::score(const Document& doc, const std::vector<SpanCandidate>& spans) const {
    auto embed = [&](const std::string& text) {
        auto seq = corpus::tokenize(text, vocab_);
        return seq.empty() ? encoder::EmbeddingVec(params_.dim, 0.0) : encoder::encode(params_, seq.tokens);
    };
    auto d = embed(doc.text);
    std::vector<double> out;
    out.reserve(spans.size());
    for (const auto& s : spans) out.push_back(encoder::similarity(embed(s.text), d));
    return out;
}

std::vector<ScoredSpan> score_spans(const SpanScorer& scorer, const Document& doc,
                                    const std::vector<SpanCandidate>& spans) {
    if (spans.empty()) throw Error(ErrorCode::EmptyInput, "no spans to score");
    auto scores = scorer.score(doc, spans);
    std::vector<ScoredSpan> out;
    out.reserve(spans.size());
    for (std::size_t i = 0; i < spans.size(); ++i) out.push_back({spans[i], scores[i], scorer.polarity()});
    return out;
}

SpanCandidate select_query(const std::vector<ScoredSpan>& scored) {
    if (scored.empty()) throw Error(ErrorCode::EmptyInput, "no scored spans");
    const Polarity pol = scored.front().polarity;
    const ScoredSpan* best = &scored.front();
    for (const auto& s : scored) {
        if (s.polarity != pol) throw Error(ErrorCode::InvalidArgument, "mixed score polarities");
        if (!std::isfinite(s.score)) throw Error(ErrorCode::NonFinite, "non-finite span score");
        bool better = pol == Polarity::higher_is_better ? s.score > best->score : s.score < best->score;
        bool tie = s.score == best->score &&
                   (s.span.start < best->span.start || (s.span.start == best->span.start && s.span.len < best->span.len));
        if (better || tie) best = &s;
    }
    return best->span;
}

TrainingPair qext_pair(const SpanScorer& scorer, Strategy strategy, const Document& doc, std::uint64_t seed,
                       SpanSampling cfg) {
    auto spans = sample_spans(doc, seed, cfg);
    auto chosen = select_query(score_spans(scorer, doc, spans));
    TrainingPair p;
    p.strategy = strategy;
    p.qid = make_qid(strategy, doc.id);
    p.query = chosen.text;
    p.doc_id = doc.id;
    p.doc_text = collapse_whitespace(doc.text);
    return p;
}

TrainingPair title_query(const Document& doc) {
    if (!doc.title || trim(*doc.title).empty()) throw Error(ErrorCode::NoTitle, "document '" + doc.id + "' has no title");
    TrainingPair p;
    p.strategy = Strategy::doc_title;
    p.qid = make_qid(p.strategy, doc.id);
    p.query = *doc.title;
    p.doc_id = doc.id;
    p.doc_text = doc.text;
    return p;
}

TrainingPair anchor_query(const Document& doc, std::uint64_t seed) {
    if (doc.anchors.empty()) throw Error(ErrorCode::NoAnchor, "document '" + doc.id + "' has no anchors");
    std::mt19937_64 rng(derive_seed(seed, doc.id, "anchor"));
    std::size_t pick = std::uniform_int_distribution<std::size_t>(0, doc.anchors.size() - 1)(rng);
    TrainingPair p;
    p.strategy = Strategy::doc_anchor;
    p.qid = make_qid(p.strategy, doc.id);
    p.query = doc.anchors[pick];
    p.doc_id = doc.id;
    p.doc_text = doc.text;
    return p;
}

void MixSpec::validate() const {
    if (entries.empty()) throw Error(ErrorCode::BadSpec, "empty mix");
    double sum = 0.0;
    std::set<Strategy> seen;
    for (const auto& [s, p] : entries) {
        if (!(p >= 0.0 && p <= 1.0)) throw Error(ErrorCode::BadSpec, "proportion outside [0, 1]");
        if (!seen.insert(s).second) throw Error(ErrorCode::BadSpec, "strategy listed twice");
        sum += p;
    }
    if (std::abs(sum - 1.0) > 1e-9) throw Error(ErrorCode::BadSpec, "proportions sum to " + std::to_string(sum));
}

Strategy MixSpec::pick(double u) const {
    double cum = 0.0;
    for (const auto& [s, p] : entries) {
        cum += p;
        if (u < cum) return s;
    }
    return entries.back().first;
}

MixSpec MixSpec::single(Strategy s) { return MixSpec{{{s, 1.0}}}; }

MixSpec MixSpec::mix50(Strategy s) {
    if (s == Strategy::randomcrop) return single(s);
    return MixSpec{{{Strategy::randomcrop, 0.5}, {s, 0.5}}};
}

MixSpec MixSpec::hybrid_all() {
    return MixSpec{{{Strategy::randomcrop, 0.2},
                    {Strategy::qext_plm, 0.1},
                    {Strategy::doc_title, 0.14},
                    {Strategy::tqgen_topic, 0.14},
                    {Strategy::tqgen_title, 0.14},
                    {Strategy::tqgen_absum, 0.14},
                    {Strategy::tqgen_exsum, 0.14}}};
}

MixSpec MixSpec::hybrid_tqgen() {
    return MixSpec{{{Strategy::randomcrop, 0.2},
                    {Strategy::tqgen_topic, 0.2},
                    {Strategy::tqgen_title, 0.2},
                    {Strategy::tqgen_absum, 0.2},
                    {Strategy::tqgen_exsum, 0.2}}};
}

MixSpec MixSpec::parse(const std::string& text) {
    MixSpec spec;
    if (text == "hybrid-all") {
        spec = hybrid_all();
    } else if (text == "hybrid-tqgen") {
        spec = hybrid_tqgen();
    } else if (text.rfind("mix50:", 0) == 0) {
        spec = mix50(strategy_from_string(text.substr(6)));
    } else if (text.find('=') == std::string::npos) {
        spec = single(strategy_from_string(text));
    } else {
        std::stringstream ss(text);
        std::string item;
        while (std::getline(ss, item, ',')) {
            auto eq = item.find('=');
            if (eq == std::string::npos) throw Error(ErrorCode::BadSpec, "mix entry '" + item + "' lacks '='");
            double p = 0.0;
            try {
                p = std::stod(item.substr(eq + 1));
            } catch (const std::exception&) {
                throw Error(ErrorCode::BadSpec, "bad proportion in '" + item + "'");
            }
            spec.entries.emplace_back(strategy_from_string(trim(item.substr(0, eq))), p);
        }
    }
    spec.validate();
    return spec;
}

Strategy assign_strategy(const MixSpec& spec, std::uint64_t seed, const std::string& doc_id) {
    return spec.pick(unit_interval(derive_seed(seed, doc_id, "mix")));
}

namespace {

const SpanScorer& require(const SpanScorer* s, Strategy strategy) {
    if (!s) throw Error(ErrorCode::MissingBackend, "no backend for " + std::string(to_string(strategy)));
    return *s;
}

std::optional<tqgen::GenTask> task_of(Strategy s) {
    switch (s) {
        case Strategy::tqgen_topic: return tqgen::GenTask::topic;
        case Strategy::tqgen_title: return tqgen::GenTask::title;
        case Strategy::tqgen_absum: return tqgen::GenTask::absum;
        case Strategy::tqgen_exsum: return tqgen::GenTask::exsum;
        default: return std::nullopt;
    }
}

bool skippable(ErrorCode c) {
    switch (c) {
        case ErrorCode::NoTitle:
        case ErrorCode::NoAnchor:
        case ErrorCode::TooShort:
        case ErrorCode::EmptySpan:
        case ErrorCode::EmptyInput:
        case ErrorCode::EmptyDocument:
        case ErrorCode::EmptyGeneration:
        case ErrorCode::GenUnavailable:
            return true;
        default:
            return false;
    }
}

void check_backends(const MixSpec& spec, const Backends& b) {
    for (const auto& [s, p] : spec.entries) {
        if (p <= 0.0) continue;
        bool ok = true;
        switch (s) {
            case Strategy::qext_bm25: ok = b.bm25 != nullptr; break;
            case Strategy::qext_plm: ok = b.plm != nullptr; break;
            case Strategy::qext_self: ok = b.self != nullptr; break;
            case Strategy::external: ok = false; break;
            default: ok = !task_of(s) || b.generator != nullptr; break;
        }
        if (!ok) throw Error(ErrorCode::MissingBackend, "no backend for strategy " + std::string(to_string(s)));
    }
}

}  // namespace

TrainingPair apply_strategy(Strategy s, const Document& doc, std::uint64_t seed, const Backends& b) {
    switch (s) {
        case Strategy::randomcrop: return random_crop_pair(doc, seed, b.crop_positive);
        case Strategy::doc_title: return title_query(doc);
        case Strategy::doc_anchor: return anchor_query(doc, seed);
        case Strategy::qext_bm25: return qext_pair(require(b.bm25, s), s, doc, seed, b.spans);
        case Strategy::qext_plm: return qext_pair(require(b.plm, s), s, doc, seed, b.spans);
        case Strategy::qext_self: return qext_pair(require(b.self, s), s, doc, seed, b.spans);
        case Strategy::external: throw Error(ErrorCode::MissingBackend, "external pairs are ingested, not produced");
        default: break;
    }
    auto task = task_of(s);
    if (!b.generator) throw Error(ErrorCode::MissingBackend, "no query generator configured");
    return tqgen::generate_query(*b.generator, doc, *task, b.sampling, seed);
}

MixResult mix_strategies(const std::vector<Document>& docs, const MixSpec& spec, std::uint64_t seed,
                         const Backends& backends, int threads) {
    spec.validate();
    check_backends(spec, backends);

    std::vector<std::size_t> order(docs.size());
    std::iota(order.begin(), order.end(), 0);
    std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return docs[a].id < docs[b].id; });

    struct Slot {
        std::optional<TrainingPair> pair;
        std::optional<ErrorCode> error;
    };
    std::vector<Slot> slots(order.size());
    parallel_for(order.size(), threads, [&](std::size_t i) {
        const Document& doc = docs[order[i]];
        Strategy s = assign_strategy(spec, seed, doc.id);
        try {
            slots[i].pair = apply_strategy(s, doc, seed, backends);
        } catch (const Error& e) {
            if (!skippable(e.code())) throw;
            slots[i].error = e.code();
        }
    });

    MixResult result;
    for (auto& slot : slots) {
        if (slot.pair) {
            ++result.produced[std::string(to_string(slot.pair->strategy))];
            result.pairs.push_back(std::move(*slot.pair));
        } else if (slot.error) {
            ++result.skipped[std::string(augtriever::to_string(*slot.error))];
        }
    }
    return result;
}

}  // namespace augtriever::augment
