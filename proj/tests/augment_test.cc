#include "augtriever/augment.h"

#include <gtest/gtest.h>

#include <cmath>
#include <set>

#include "augtriever/common.h"

using namespace augtriever;
using namespace augtriever::augment;
using corpus::Document;

namespace {

Document doc_with_words(const std::string& id, std::size_t n) {
    std::string text;
    for (std::size_t i = 0; i < n; ++i) text += (i ? " w" : "w") + std::to_string(i);
    return {id, std::nullopt, text, {}, {}};
}

bool is_contiguous_subsequence(const std::string& needle, const std::string& hay) {
    return (" " + hay + " ").find(" " + needle + " ") != std::string::npos;
}

ScoredSpan scored(std::size_t start, std::size_t len, double s, Polarity p = Polarity::higher_is_better) {
    return {{start, len, "s" + std::to_string(start)}, s, p};
}

}  // namespace

TEST(SampleSpansTest, DefaultsOnLongDocument) {
    auto doc = doc_with_words("d", 200);
    auto spans = sample_spans(doc, 11);
    EXPECT_EQ(spans.size(), 16u);
    auto words = split_words(doc.text);
    std::set<std::pair<std::size_t, std::size_t>> seen;
    for (const auto& s : spans) {
        EXPECT_GE(s.len, 4u);
        EXPECT_LE(s.len, 16u);
        EXPECT_LE(s.start + s.len, words.size());
        EXPECT_EQ(s.text, join_words(words, s.start, s.start + s.len));
        EXPECT_TRUE(seen.insert({s.start, s.len}).second);
    }
}

TEST(SampleSpansTest, ShortDocumentFallsBackToWholeDocument) {
    Document doc{"d", std::nullopt, "one two three", {}, {}};
    auto spans = sample_spans(doc, 1);
    ASSERT_EQ(spans.size(), 1u);
    EXPECT_EQ(spans[0].start, 0u);
    EXPECT_EQ(spans[0].len, 3u);
    EXPECT_EQ(spans[0].text, "one two three");
}

TEST(SampleSpansTest, DeterministicPerSeedAndDoc) {
    auto doc = doc_with_words("d", 120);
    EXPECT_EQ(sample_spans(doc, 5), sample_spans(doc, 5));
    EXPECT_NE(sample_spans(doc, 5), sample_spans(doc, 6));
}

TEST(RandomCropTest, TooShort) {
    try {
        random_crop_pair(doc_with_words("d", 7), 1);
        FAIL();
    } catch (const Error& e) {
        EXPECT_EQ(e.code(), ErrorCode::TooShort);
    }
    EXPECT_NO_THROW(random_crop_pair(doc_with_words("d", 8), 1));
}

TEST(RandomCropTest, SpansAreContiguousWithinBounds) {
    auto doc = doc_with_words("d", 100);
    for (std::uint64_t seed = 0; seed < 200; ++seed) {
        auto p = random_crop_pair(doc, seed);
        ASSERT_TRUE(p.query_span && p.doc_span);
        for (auto span : {*p.query_span, *p.doc_span}) {
            EXPECT_GE(span.len, 10u);
            EXPECT_LE(span.len, 50u);
            EXPECT_LE(span.start + span.len, 100u);
        }
        EXPECT_TRUE(is_contiguous_subsequence(p.query, doc.text));
        EXPECT_TRUE(is_contiguous_subsequence(p.doc_text, doc.text));
        EXPECT_EQ(p.strategy, Strategy::randomcrop);
    }
}

TEST(RandomCropTest, SameSeedSamePairAndDocumentPositive) {
    auto doc = doc_with_words("d", 64);
    EXPECT_EQ(random_crop_pair(doc, 3), random_crop_pair(doc, 3));
    auto full = random_crop_pair(doc, 3, CropPositive::document);
    EXPECT_EQ(full.doc_text, doc.text);
    EXPECT_EQ(full.query, random_crop_pair(doc, 3).query);
}

TEST(RandomCropTest, VeryLongDocumentClampsRange) {
    auto doc = doc_with_words("d", 3000);
    auto p = random_crop_pair(doc, 9);
    EXPECT_EQ(p.query_span->len, 128u);
    EXPECT_EQ(p.doc_span->len, 128u);
}

TEST(NgramLmTest, UnseenWordsOnlyKeepUniformMass) {
    Document doc{"d", std::nullopt, "alpha beta gamma", {}, {}};
    auto lm = NgramLm::build({doc});
    double v = static_cast<double>(lm.vocab_size());
    EXPECT_EQ(lm.vocab_size(), 4u);
    EXPECT_NEAR(lm_span_nll(lm, doc, "zulu yankee"), 2.0 * -std::log(0.1 / v), 1e-12);
}

TEST(NgramLmTest, PureUniformWeights) {
    Document doc{"d", std::nullopt, "alpha beta gamma alpha", {}, {}};
    auto lm = NgramLm::build({doc}, {0.0, 0.0, 0.0, 1.0});
    EXPECT_NEAR(lm_span_nll(lm, doc, "alpha beta"), 2.0 * std::log(4.0), 1e-12);
    EXPECT_NEAR(lm_span_nll(lm, doc, "x y z"), 3.0 * std::log(4.0), 1e-12);
}

TEST(NgramLmTest, HandComputedMixture) {
    // Document "a b a c": unigram a=2/4, bigram (a -> b) = 1/2.
    Document doc{"d", std::nullopt, "a b a c", {}, {}};
    Document other{"o", std::nullopt, "a d", {}, {}};
    auto lm = NgramLm::build({doc, other});
    const double v = 5.0;  // a b c d + OOV bucket
    double p_a = 0.4 * (2.0 / 4.0) + 0.3 * (2.0 / 4.0) + 0.2 * (3.0 / 6.0) + 0.1 / v;
    double p_b = 0.4 * (1.0 / 2.0) + 0.3 * (1.0 / 4.0) + 0.2 * (1.0 / 6.0) + 0.1 / v;
    EXPECT_NEAR(lm_span_nll(lm, doc, "a b"), -std::log(p_a) - std::log(p_b), 1e-12);
}

TEST(NgramLmTest, RepeatedSpanBeatsRareShuffle) {
    std::string repeated = "the quick brown fox jumps";
    std::string text;
    for (int i = 0; i < 5; ++i) text += repeated + " filler" + std::to_string(i) + " ";
    text += "zeta omega kappa lambda sigma";
    Document doc{"d", std::nullopt, text, {}, {}};
    auto lm = NgramLm::build({doc, {"o", std::nullopt, "the the the quick", {}, {}}});
    EXPECT_LT(lm_span_nll(lm, doc, repeated), lm_span_nll(lm, doc, "sigma kappa zeta lambda omega"));
}

TEST(SpanScorerTest, Bm25ZeroOverlapScoresZero) {
    std::vector<Document> docs{{"d", std::nullopt, "alpha beta gamma", {}, {}}, {"e", std::nullopt, "delta", {}, {}}};
    auto idx = lexical::Bm25Index::build(docs);
    Bm25SpanScorer scorer(idx);
    auto s = scorer.score(docs[0], {{0, 1, "delta"}, {0, 1, "alpha"}});
    EXPECT_EQ(s[0], 0.0);
    EXPECT_GT(s[1], 0.0);
    EXPECT_EQ(scorer.polarity(), Polarity::higher_is_better);
}

TEST(SpanScorerTest, SelfScorerHandArithmetic) {
    auto vocab = corpus::Vocab::from_terms({"a", "b"}, 1);
    encoder::EncoderParams p(3, 2);
    p.embed = {0, 0, 1, 0, 0, 1};  // unk, a, b
    p.proj = {1, 0, 0, 1};
    SelfSpanScorer scorer(vocab, p);
    Document doc{"d", std::nullopt, "a a b", {}, {}};
    auto s = scorer.score(doc, {{0, 1, "a"}, {2, 1, "b"}, {1, 2, "a b"}});
    // doc vector (2/3, 1/3)
    EXPECT_NEAR(s[0], 2.0 / 3.0, 1e-6);
    EXPECT_NEAR(s[1], 1.0 / 3.0, 1e-6);
    EXPECT_NEAR(s[2], 0.5, 1e-6);
}

TEST(SelectQueryTest, Basics) {
    EXPECT_EQ(select_query({scored(3, 4, 1.0)}).start, 3u);
    EXPECT_EQ(select_query({scored(0, 4, 3.0), scored(5, 4, 7.5), scored(9, 4, 1.2)}).start, 5u);
    EXPECT_EQ(select_query({scored(8, 4, 2.0), scored(2, 5, 2.0), scored(2, 4, 2.0)}).len, 4u);
    EXPECT_EQ(select_query({scored(8, 4, 2.0), scored(2, 5, 2.0)}).start, 2u);
    auto low = select_query({scored(0, 4, 3.0, Polarity::lower_is_better), scored(5, 4, 1.0, Polarity::lower_is_better)});
    EXPECT_EQ(low.start, 5u);
    EXPECT_THROW(select_query({}), Error);
    EXPECT_THROW(select_query({scored(0, 4, 1.0), scored(1, 4, 1.0, Polarity::lower_is_better)}), Error);
}

TEST(QextTest, SelectedSpanAppearsInDocument) {
    std::vector<Document> docs{doc_with_words("d1", 80), doc_with_words("d2", 40)};
    docs[1].text = "  messy\n whitespace " + docs[1].text;
    auto idx = lexical::Bm25Index::build(docs);
    Bm25SpanScorer scorer(idx);
    for (const auto& d : docs) {
        auto p = qext_pair(scorer, Strategy::qext_bm25, d, 4);
        EXPECT_EQ(p.strategy, Strategy::qext_bm25);
        EXPECT_EQ(p.doc_text, collapse_whitespace(d.text));
        EXPECT_TRUE(is_contiguous_subsequence(p.query, p.doc_text));
    }
}

TEST(TitleAnchorTest, Contracts) {
    Document d{"d", std::string("A Title"), "body text", {"only anchor"}, corpus::Source::wiki};
    auto t = title_query(d);
    EXPECT_EQ(t.query, "A Title");
    EXPECT_EQ(t.doc_text, "body text");
    auto a = anchor_query(d, 1);
    EXPECT_EQ(a.query, "only anchor");

    Document bare{"b", std::nullopt, "text", {}, {}};
    try {
        title_query(bare);
        FAIL();
    } catch (const Error& e) {
        EXPECT_EQ(e.code(), ErrorCode::NoTitle);
    }
    try {
        anchor_query(bare, 1);
        FAIL();
    } catch (const Error& e) {
        EXPECT_EQ(e.code(), ErrorCode::NoAnchor);
    }
    Document many{"m", std::nullopt, "t", {"a1", "a2", "a3", "a4"}, {}};
    EXPECT_EQ(anchor_query(many, 5).query, anchor_query(many, 5).query);
}

TEST(MixSpecTest, ParseAndValidate) {
    EXPECT_EQ(MixSpec::parse("randomcrop").entries.size(), 1u);
    auto h = MixSpec::parse("hybrid-all");
    ASSERT_EQ(h.entries.size(), 7u);
    EXPECT_DOUBLE_EQ(h.entries[0].second, 0.2);
    EXPECT_DOUBLE_EQ(h.entries[1].second, 0.1);
    EXPECT_EQ(MixSpec::parse("hybrid-tqgen").entries.size(), 5u);
    auto m = MixSpec::parse("mix50:qext-bm25");
    ASSERT_EQ(m.entries.size(), 2u);
    EXPECT_EQ(m.entries[0].first, Strategy::randomcrop);
    auto custom = MixSpec::parse("randomcrop=0.25,doc-title=0.75");
    EXPECT_EQ(custom.pick(0.3), Strategy::doc_title);
    EXPECT_EQ(custom.pick(0.1), Strategy::randomcrop);
    EXPECT_THROW(MixSpec::parse("randomcrop=0.5,doc-title=0.2"), Error);
    EXPECT_THROW(MixSpec::parse("bogus"), Error);
    EXPECT_THROW(MixSpec::parse("randomcrop=0.5,randomcrop=0.5"), Error);
}

TEST(MixTest, SingleStrategyAndSkips) {
    std::vector<Document> docs{doc_with_words("c", 30), doc_with_words("a", 30), doc_with_words("b", 5)};
    auto r = mix_strategies(docs, MixSpec::single(Strategy::randomcrop), 1, {});
    ASSERT_EQ(r.pairs.size(), 2u);
    EXPECT_EQ(r.pairs[0].doc_id, "a");
    EXPECT_EQ(r.pairs[1].doc_id, "c");
    for (const auto& p : r.pairs) EXPECT_EQ(p.strategy, Strategy::randomcrop);
    EXPECT_EQ(r.skipped.at("TooShort"), 1u);
    EXPECT_EQ(r.produced.at("randomcrop"), 2u);
}

TEST(MixTest, MissingBackendIsReportedUpFront) {
    std::vector<Document> docs{doc_with_words("a", 30)};
    try {
        mix_strategies(docs, MixSpec::single(Strategy::qext_bm25), 1, {});
        FAIL();
    } catch (const Error& e) {
        EXPECT_EQ(e.code(), ErrorCode::MissingBackend);
    }
}

TEST(MixTest, FiftyFiftyMix) {
    std::size_t n = 20000, crops = 0;
    auto spec = MixSpec::mix50(Strategy::doc_title);
    for (std::size_t i = 0; i < n; ++i) crops += assign_strategy(spec, 3, "doc" + std::to_string(i)) == Strategy::randomcrop;
    EXPECT_NEAR(static_cast<double>(crops) / static_cast<double>(n), 0.5, 0.02);
}

TEST(MixTest, IdenticalAcrossThreadCounts) {
    std::vector<Document> docs;
    for (int i = 0; i < 50; ++i) docs.push_back(doc_with_words("d" + std::to_string(i), 20 + i));
    auto idx = lexical::Bm25Index::build(docs);
    Bm25SpanScorer scorer(idx);
    Backends b;
    b.bm25 = &scorer;
    auto spec = MixSpec::mix50(Strategy::qext_bm25);
    auto one = mix_strategies(docs, spec, 9, b, 1);
    auto many = mix_strategies(docs, spec, 9, b, 8);
    EXPECT_EQ(one.pairs, many.pairs);
    EXPECT_EQ(serialize_pairs(one.pairs, {}), serialize_pairs(many.pairs, {}));
}

TEST(PairsTest, JsonRoundTripAndExternalDefault) {
    TrainingPair p{"q1", "query", "d1", "doc", Strategy::randomcrop, HardNegative{"n1", "neg"}, WordSpan{1, 2}, WordSpan{3, 4}};
    EXPECT_EQ(pair_from_json(nlohmann::json::parse(to_json(p).dump())), p);
    auto ext = pair_from_json(nlohmann::json::parse(R"({"qid":"x","query":"q","doc_id":"d","doc":"t"})"));
    EXPECT_EQ(ext.strategy, Strategy::external);
    EXPECT_FALSE(ext.hard_negative);
}
