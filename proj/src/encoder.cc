#include "augtriever/encoder.h"

#include <fstream>

namespace augtriever::encoder {

namespace {
constexpr char kMagic[4] = {'A', 'U', 'G', 'T'};
constexpr std::uint32_t kVersion = 1;
}  // namespace

void GradientSet::accumulate(const GradientSet& other) {
    if (other.dim != dim) throw Error(ErrorCode::DimMismatch, "gradient sets differ in dimension");
    for (std::size_t i = 0; i < d_proj.size(); ++i) d_proj[i] += other.d_proj[i];
    for (std::size_t i = 0; i < d_bias.size(); ++i) d_bias[i] += other.d_bias[i];
    for (const auto& [t, row] : other.d_embed) {
        auto [it, inserted] = d_embed.try_emplace(t, dim, 0.0);
        for (std::size_t j = 0; j < dim; ++j) it->second[j] += row[j];
    }
}

void GradientSet::scale(double factor) {
    for (auto& x : d_proj) x *= factor;
    for (auto& x : d_bias) x *= factor;
    for (auto& [t, row] : d_embed) {
        for (auto& x : row) x *= factor;
    }
}

double similarity(const EmbeddingVec& u, const EmbeddingVec& v) {
    if (u.size() != v.size()) throw Error(ErrorCode::DimMismatch, "vectors differ in dimension");
    double s = 0.0;
    for (std::size_t i = 0; i < u.size(); ++i) s += u[i] * v[i];
    return s;
}

EmbeddingVec Model::encode_text(const std::string& text) const {
    auto seq = corpus::tokenize(text, vocab);
    if (seq.empty()) return EmbeddingVec(params.dim, 0.0);
    return encode(params, seq.tokens);
}

void save_model(const std::string& path, const Model& model) {
    const auto& p = model.params;
    if (p.vocab_size != model.vocab.size()) throw Error(ErrorCode::DimMismatch, "vocab and embedding table disagree");
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw Error(ErrorCode::Io, "cannot write " + path);
    out.write(kMagic, 4);
    binio::write_u32(out, kVersion);
    binio::write_u32(out, static_cast<std::uint32_t>(p.dim));
    binio::write_u32(out, static_cast<std::uint32_t>(p.vocab_size));
    binio::write_u32(out, static_cast<std::uint32_t>(model.vocab.min_freq()));
    for (std::size_t i = 0; i < model.vocab.size(); ++i) binio::write_string(out, model.vocab.term(static_cast<TokenId>(i)));
    for (float x : p.embed) binio::write_f32(out, x);
    for (float x : p.proj) binio::write_f32(out, x);
    for (float x : p.bias) binio::write_f32(out, x);
    binio::write_string(out, model.metadata.dump());
    if (!out) throw Error(ErrorCode::Io, "write failed for " + path);
}

Model load_model(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw Error(ErrorCode::Io, "cannot open " + path);
    char magic[4];
    in.read(magic, 4);
    if (!in || !std::equal(magic, magic + 4, kMagic)) throw Error(ErrorCode::Format, path + " is not a model file");
    std::uint32_t version = binio::read_u32(in);
    if (version != kVersion) throw Error(ErrorCode::Format, "unsupported model version " + std::to_string(version));
    std::size_t h = binio::read_u32(in);
    std::size_t v = binio::read_u32(in);
    int min_freq = static_cast<int>(binio::read_u32(in));
    if (h == 0 || v == 0) throw Error(ErrorCode::Format, "model has empty dimensions");
    std::vector<std::string> terms;
    terms.reserve(v);
    for (std::size_t i = 0; i < v; ++i) terms.push_back(binio::read_string(in));
    Model m;
    m.vocab = corpus::Vocab::from_terms(std::vector<std::string>(terms.begin() + 1, terms.end()), min_freq);
    if (m.vocab.size() != v) throw Error(ErrorCode::Format, "model vocab has duplicate terms");
    m.params = EncoderParams(v, h);
    for (auto& x : m.params.embed) x = binio::read_f32(in);
    for (auto& x : m.params.proj) x = binio::read_f32(in);
    for (auto& x : m.params.bias) x = binio::read_f32(in);
    m.metadata = nlohmann::ordered_json::parse(binio::read_string(in));
    return m;
}

}  // namespace augtriever::encoder
