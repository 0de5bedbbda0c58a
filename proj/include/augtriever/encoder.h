#pragma once

#include <cmath>
#include <cstdint>
#include <map>
#include <random>
#include <string>
#include <vector>

#include <json.hpp>

#include "augtriever/common.h"
#include "augtriever/corpus.h"

namespace augtriever::encoder {

using corpus::TokenId;
using EmbeddingVec = std::vector<double>;

/// Compact bi-encoder: v = proj * mean(embed[tokens]) + bias. One parameter set
/// serves both the query and the document side.
template <typename T>
struct BasicEncoderParams {
    std::size_t vocab_size = 0;
    std::size_t dim = 0;
    std::vector<T> embed;  // vocab_size x dim, row-major
    std::vector<T> proj;   // dim x dim, row-major: out = proj * in
    std::vector<T> bias;   // dim

    BasicEncoderParams() = default;
    BasicEncoderParams(std::size_t v, std::size_t h)
        : vocab_size(v), dim(h), embed(v * h, T(0)), proj(h * h, T(0)), bias(h, T(0)) {}

    T* embed_row(TokenId t) { return embed.data() + static_cast<std::size_t>(t) * dim; }
    const T* embed_row(TokenId t) const { return embed.data() + static_cast<std::size_t>(t) * dim; }

    template <typename U>
    BasicEncoderParams<U> cast() const {
        BasicEncoderParams<U> out;
        out.vocab_size = vocab_size;
        out.dim = dim;
        out.embed.assign(embed.begin(), embed.end());
        out.proj.assign(proj.begin(), proj.end());
        out.bias.assign(bias.begin(), bias.end());
        return out;
    }

    bool operator==(const BasicEncoderParams&) const = default;
};

using EncoderParams = BasicEncoderParams<float>;

/// Gradients with the embedding table kept sparse by touched row.
struct GradientSet {
    std::size_t dim = 0;
    std::map<TokenId, std::vector<double>> d_embed;
    std::vector<double> d_proj;
    std::vector<double> d_bias;

    explicit GradientSet(std::size_t h = 0) : dim(h), d_proj(h * h, 0.0), d_bias(h, 0.0) {}

    void accumulate(const GradientSet& other);
    void scale(double factor);
};

/// embed ~ U(-1/sqrt(H), 1/sqrt(H)), proj = I + U(-0.01, 0.01), bias = 0.
template <typename T>
BasicEncoderParams<T> init_params(std::size_t vocab_size, std::size_t dim, std::uint64_t seed) {
    if (vocab_size < 1 || dim < 1) throw Error(ErrorCode::InvalidArgument, "encoder needs V >= 1 and H >= 1");
    BasicEncoderParams<T> p(vocab_size, dim);
    std::mt19937_64 rng(seed);
    double a = 1.0 / std::sqrt(static_cast<double>(dim));
    std::uniform_real_distribution<double> emb(-a, a);
    for (auto& x : p.embed) x = static_cast<T>(emb(rng));
    std::uniform_real_distribution<double> jitter(-0.01, 0.01);
    for (std::size_t i = 0; i < dim; ++i) {
        for (std::size_t j = 0; j < dim; ++j) p.proj[i * dim + j] = static_cast<T>((i == j ? 1.0 : 0.0) + jitter(rng));
    }
    return p;
}

/// Appends freshly initialised embedding rows (same distribution as init_params).
template <typename T>
void grow_vocab(BasicEncoderParams<T>& p, std::size_t new_vocab_size, std::uint64_t seed) {
    if (new_vocab_size <= p.vocab_size) return;
    std::mt19937_64 rng(seed);
    double a = 1.0 / std::sqrt(static_cast<double>(p.dim));
    std::uniform_real_distribution<double> emb(-a, a);
    p.embed.reserve(new_vocab_size * p.dim);
    for (std::size_t i = p.vocab_size * p.dim; i < new_vocab_size * p.dim; ++i) p.embed.push_back(static_cast<T>(emb(rng)));
    p.vocab_size = new_vocab_size;
}

template <typename T>
std::vector<double> mean_embedding(const BasicEncoderParams<T>& p, const std::vector<TokenId>& tokens) {
    if (tokens.empty()) throw Error(ErrorCode::EmptyInput, "cannot encode an empty token sequence");
    std::vector<double> mean(p.dim, 0.0);
    for (TokenId t : tokens) {
        if (t >= p.vocab_size) throw Error(ErrorCode::InvalidArgument, "token id out of range");
        const T* row = p.embed_row(t);
        for (std::size_t j = 0; j < p.dim; ++j) mean[j] += static_cast<double>(row[j]);
    }
    double inv = 1.0 / static_cast<double>(tokens.size());
    for (auto& x : mean) x *= inv;
    return mean;
}

template <typename T>
EmbeddingVec encode(const BasicEncoderParams<T>& p, const std::vector<TokenId>& tokens) {
    auto mean = mean_embedding(p, tokens);
    EmbeddingVec v(p.dim);
    for (std::size_t i = 0; i < p.dim; ++i) {
        double acc = static_cast<double>(p.bias[i]);
        const T* prow = p.proj.data() + i * p.dim;
        for (std::size_t j = 0; j < p.dim; ++j) acc += static_cast<double>(prow[j]) * mean[j];
        v[i] = acc;
    }
    return v;
}

template <typename T>
EmbeddingVec encode(const BasicEncoderParams<T>& p, const corpus::TokenSeq& seq) {
    return encode(p, seq.tokens);
}

double similarity(const EmbeddingVec& u, const EmbeddingVec& v);

/// Gradient of upstream . encode(params, tokens) with respect to every parameter.
template <typename T>
GradientSet encode_backward(const BasicEncoderParams<T>& p, const std::vector<TokenId>& tokens,
                            const std::vector<double>& upstream) {
    if (upstream.size() != p.dim) throw Error(ErrorCode::DimMismatch, "upstream gradient has wrong size");
    auto mean = mean_embedding(p, tokens);
    GradientSet g(p.dim);
    g.d_bias = upstream;
    for (std::size_t i = 0; i < p.dim; ++i) {
        for (std::size_t j = 0; j < p.dim; ++j) g.d_proj[i * p.dim + j] = upstream[i] * mean[j];
    }
    std::vector<double> back(p.dim, 0.0);  // proj^T * upstream / len
    for (std::size_t i = 0; i < p.dim; ++i) {
        const T* prow = p.proj.data() + i * p.dim;
        for (std::size_t j = 0; j < p.dim; ++j) back[j] += static_cast<double>(prow[j]) * upstream[i];
    }
    double inv = 1.0 / static_cast<double>(tokens.size());
    for (auto& x : back) x *= inv;
    for (TokenId t : tokens) {
        auto [it, inserted] = g.d_embed.try_emplace(t, p.dim, 0.0);
        for (std::size_t j = 0; j < p.dim; ++j) it->second[j] += back[j];
    }
    return g;
}

/// Vocabulary plus parameters plus the producing configuration.
struct Model {
    corpus::Vocab vocab;
    EncoderParams params;
    nlohmann::ordered_json metadata = nlohmann::ordered_json::object();

    EmbeddingVec encode_text(const std::string& text) const;
};

/// Binary model file: "AUGT", version, H, V, vocab table, f32 embed/proj/bias,
/// then the metadata record as a length-prefixed JSON string.
void save_model(const std::string& path, const Model& model);
Model load_model(const std::string& path);

}  // namespace augtriever::encoder
