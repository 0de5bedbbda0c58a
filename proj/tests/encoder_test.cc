#include "augtriever/encoder.h"

#include <gtest/gtest.h>

#include <filesystem>
#include <random>

#include "gradcheck.h"
#include "oracles.h"

using namespace augtriever;
using namespace augtriever::encoder;

namespace {

std::vector<std::vector<double>> rows(const std::vector<double>& flat, std::size_t r, std::size_t c) {
    std::vector<std::vector<double>> out(r, std::vector<double>(c));
    for (std::size_t i = 0; i < r; ++i) {
        for (std::size_t j = 0; j < c; ++j) out[i][j] = flat[i * c + j];
    }
    return out;
}

}  // namespace

TEST(EncodeTest, IdentityProjectionMean) {
    BasicEncoderParams<double> p(3, 2);
    p.embed = {0, 0, 1, 0, 0, 1};
    p.proj = {1, 0, 0, 1};
    auto v = encode(p, std::vector<TokenId>{1, 2});
    EXPECT_DOUBLE_EQ(v[0], 0.5);
    EXPECT_DOUBLE_EQ(v[1], 0.5);
}

TEST(EncodeTest, SingleTokenIsAffineImage) {
    std::mt19937_64 rng(1);
    auto p = gradcheck::random_params(5, 3, rng);
    auto v = encode(p, std::vector<TokenId>{4});
    for (std::size_t i = 0; i < 3; ++i) {
        double expect = p.bias[i];
        for (std::size_t j = 0; j < 3; ++j) expect += p.proj[i * 3 + j] * p.embed[4 * 3 + j];
        EXPECT_NEAR(v[i], expect, 1e-15);
    }
}

TEST(EncodeTest, MatchesIndependentForwardOracle) {
    std::mt19937_64 rng(2);
    for (int trial = 0; trial < 50; ++trial) {
        const std::size_t v = 9, h = 7;
        auto p = gradcheck::random_params(v, h, rng);
        auto tokens = gradcheck::random_tokens(v, rng, 12);
        auto got = encode(p, tokens);
        std::vector<std::size_t> toks(tokens.begin(), tokens.end());
        auto want = oracle::forward(rows(p.embed, v, h), rows(p.proj, h, h), p.bias, toks);
        for (std::size_t i = 0; i < h; ++i) EXPECT_NEAR(got[i], want[i], 1e-12);
    }
}

TEST(EncodeTest, EmptyInputThrows) {
    BasicEncoderParams<double> p(2, 2);
    try {
        encode(p, std::vector<TokenId>{});
        FAIL();
    } catch (const Error& e) {
        EXPECT_EQ(e.code(), ErrorCode::EmptyInput);
    }
}

TEST(SimilarityTest, DotProduct) {
    EXPECT_DOUBLE_EQ(similarity({1, 2}, {3, 4}), 11.0);
    EXPECT_DOUBLE_EQ(similarity({1, 2}, {0, 0}), 0.0);
    try {
        similarity({1}, {1, 2});
        FAIL();
    } catch (const Error& e) {
        EXPECT_EQ(e.code(), ErrorCode::DimMismatch);
    }
}

TEST(BackwardTest, ZeroUpstreamGivesZeroGradients) {
    std::mt19937_64 rng(3);
    auto p = gradcheck::random_params(4, 3, rng);
    auto g = encode_backward(p, {1, 2, 2}, {0, 0, 0});
    for (double x : gradcheck::flatten(g, 4)) EXPECT_EQ(x, 0.0);
}

TEST(BackwardTest, SingleTokenIdentityProjection) {
    BasicEncoderParams<double> p(3, 2);
    p.proj = {1, 0, 0, 1};
    auto g = encode_backward(p, {2}, {0.3, -0.7});
    ASSERT_EQ(g.d_embed.size(), 1u);
    EXPECT_DOUBLE_EQ(g.d_embed.at(2)[0], 0.3);
    EXPECT_DOUBLE_EQ(g.d_embed.at(2)[1], -0.7);
}

TEST(BackwardTest, MatchesCentralFiniteDifferences) {
    std::mt19937_64 rng(4);
    for (int trial = 0; trial < 20; ++trial) {
        const std::size_t v = 6, h = 4;
        auto p = gradcheck::random_params(v, h, rng);
        auto tokens = gradcheck::random_tokens(v, rng);
        std::vector<double> up(h);
        for (auto& x : up) x = std::uniform_real_distribution<double>(-1, 1)(rng);
        auto analytic = gradcheck::flatten(encode_backward(p, tokens, up), v);
        auto numeric = gradcheck::numeric(p, [&](const gradcheck::Params& q) { return similarity(up, encode(q, tokens)); });
        EXPECT_LT(gradcheck::relative_error(analytic, numeric), 1e-6);
    }
}

TEST(GradientSetTest, AccumulateAndScale) {
    GradientSet a(2), b(2);
    a.d_embed[1] = {1, 2};
    b.d_embed[1] = {1, 1};
    b.d_embed[3] = {5, 5};
    b.d_bias = {1, -1};
    a.accumulate(b);
    a.scale(0.5);
    EXPECT_DOUBLE_EQ(a.d_embed.at(1)[1], 1.5);
    EXPECT_DOUBLE_EQ(a.d_embed.at(3)[0], 2.5);
    EXPECT_DOUBLE_EQ(a.d_bias[1], -0.5);
}

TEST(InitTest, DistributionAndGrowth) {
    auto p = init_params<double>(50, 16, 9);
    EXPECT_EQ(p, init_params<double>(50, 16, 9));
    for (double x : p.embed) EXPECT_LE(std::abs(x), 0.25);
    for (std::size_t i = 0; i < 16; ++i) EXPECT_NEAR(p.proj[i * 16 + i], 1.0, 0.01);
    for (double x : p.bias) EXPECT_EQ(x, 0.0);
    auto grown = p;
    grow_vocab(grown, 60, 1);
    EXPECT_EQ(grown.vocab_size, 60u);
    EXPECT_TRUE(std::equal(p.embed.begin(), p.embed.end(), grown.embed.begin()));
    EXPECT_EQ(grown.embed.size(), 60u * 16u);
}

TEST(ModelFileTest, RoundTripIsBitExact) {
    Model m;
    m.vocab = corpus::build_vocab({"alpha beta beta gamma"}, 1);
    m.params = init_params<float>(m.vocab.size(), 8, 5);
    m.metadata = {{"mode", "pretrain"}, {"config", {{"steps", 3}}}};
    auto path = (std::filesystem::temp_directory_path() / "augtriever_encoder.model").string();
    save_model(path, m);
    auto back = load_model(path);
    EXPECT_EQ(back.vocab, m.vocab);
    EXPECT_EQ(back.params, m.params);
    EXPECT_EQ(back.metadata, m.metadata);
    auto v = back.encode_text("Beta gamma unknownword");
    EXPECT_EQ(v, m.encode_text("beta gamma unknownword"));
    EXPECT_EQ(m.encode_text("!!!"), EmbeddingVec(8, 0.0));
    write_text_file(path, "AUGTbroken");
    EXPECT_THROW(load_model(path), Error);
}
