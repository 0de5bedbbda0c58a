#include "augtriever/trainer.h"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>

namespace augtriever::trainer {

using encoder::EmbeddingVec;
using nlohmann::ordered_json;

std::string_view to_string(Arch a) { return a == Arch::moco ? "moco" : "inbatch"; }

Arch arch_from_string(std::string_view s) {
    if (s == "inbatch") return Arch::inbatch;
    if (s == "moco") return Arch::moco;
    throw Error(ErrorCode::InvalidArgument, "unknown arch '" + std::string(s) + "'");
}

std::string_view to_string(LossDirection d) { return d == LossDirection::bidirectional ? "bidirectional" : "q2d"; }

LossDirection loss_direction_from_string(std::string_view s) {
    if (s == "q2d") return LossDirection::q2d;
    if (s == "bidirectional") return LossDirection::bidirectional;
    throw Error(ErrorCode::InvalidArgument, "unknown loss direction '" + std::string(s) + "'");
}

void TrainConfig::validate() const {
    auto fail = [](const std::string& m) { throw Error(ErrorCode::InvalidArgument, m); };
    if (steps < 0) fail("steps must be >= 0");
    if (warmup_steps < 0 || warmup_steps > steps) fail("warmup_steps must be in [0, steps]");
    if (batch_size < 1) fail("batch_size must be >= 1");
    if (!(temperature > 0.0)) fail("temperature must be > 0");
    if (!(lr >= 0.0)) fail("lr must be >= 0");
    if (queue_size < 1 || (queue_size & (queue_size - 1)) != 0) fail("queue_size must be a power of two");
    if (!(momentum >= 0.0 && momentum <= 1.0)) fail("momentum must be in [0, 1]");
    if (arch == Arch::moco && batch_size > queue_size) fail("batch_size exceeds queue_size");
    if (arch == Arch::moco && loss_direction == LossDirection::bidirectional) fail("moco supports q2d only");
    if (dim < 1) fail("dim must be >= 1");
    if (min_freq < 1) fail("min_freq must be >= 1");
    if (max_tokens < 1) fail("max_tokens must be >= 1");
}

std::vector<std::string> TrainConfig::warnings() const {
    std::vector<std::string> w;
    if (arch == Arch::moco && queue_size > kLargestTestedQueueSize) {
        w.push_back("queue_size " + std::to_string(queue_size) +
                    " exceeds 16384; larger queues have been observed to hurt retrieval quality");
    }
    return w;
}

ordered_json TrainConfig::to_json() const {
    ordered_json j;
    j["arch"] = to_string(arch);
    j["steps"] = steps;
    j["batch_size"] = batch_size;
    j["lr"] = lr;
    j["warmup_steps"] = warmup_steps;
    j["temperature"] = temperature;
    j["queue_size"] = queue_size;
    j["momentum"] = momentum;
    j["seed"] = seed;
    j["dim"] = dim;
    j["loss_direction"] = to_string(loss_direction);
    j["min_freq"] = min_freq;
    j["max_tokens"] = max_tokens;
    j["cosine"] = cosine;
    j["online_qext_self"] = online_qext_self;
    return j;
}

// ---------------------------------------------------------------------------

namespace {
void require_finite(const Matrix& m, const char* what) {
    for (double x : m.data) {
        if (!std::isfinite(x)) throw Error(ErrorCode::NonFinite, std::string(what) + " contains non-finite values");
    }
}
}  // namespace

LossResult contrastive_loss(const Matrix& scores, double temperature) {
    const std::size_t b = scores.rows, c = scores.cols;
    if (b < 1 || c < b) throw Error(ErrorCode::DimMismatch, "score matrix must be B x C with C >= B >= 1");
    if (!(temperature > 0.0)) throw Error(ErrorCode::InvalidArgument, "temperature must be > 0");
    require_finite(scores, "score matrix");

    LossResult r;
    r.d_scores = Matrix(b, c);
    const double scale = 1.0 / (static_cast<double>(b) * temperature);
    std::vector<double> z(c);
    for (std::size_t i = 0; i < b; ++i) {
        double mx = -std::numeric_limits<double>::infinity();
        for (std::size_t j = 0; j < c; ++j) {
            z[j] = scores(i, j) / temperature;
            mx = std::max(mx, z[j]);
        }
        double sum = 0.0;
        for (std::size_t j = 0; j < c; ++j) sum += std::exp(z[j] - mx);
        const double log_sum = std::log(sum);
        const double lse = mx + log_sum;
        r.loss += log_sum - (z[i] - mx);
        for (std::size_t j = 0; j < c; ++j) {
            double p = std::exp(z[j] - lse);
            r.d_scores(i, j) = (p - (i == j ? 1.0 : 0.0)) * scale;
        }
    }
    r.loss /= static_cast<double>(b);
    return r;
}

LossResult inbatch_loss(const Matrix& scores, double temperature) {
    if (scores.rows != scores.cols) throw Error(ErrorCode::DimMismatch, "inbatch score matrix must be square");
    return contrastive_loss(scores, temperature);
}

MocoLossResult moco_loss(const Matrix& q, const Matrix& k_pos, const Matrix& queue, std::size_t filled,
                         double temperature) {
    const std::size_t b = q.rows, h = q.cols;
    if (k_pos.rows != b || k_pos.cols != h) throw Error(ErrorCode::DimMismatch, "q and k+ shapes differ");
    if (filled > queue.rows || (filled > 0 && queue.cols != h)) throw Error(ErrorCode::DimMismatch, "bad queue view");
    if (!(temperature > 0.0)) throw Error(ErrorCode::InvalidArgument, "temperature must be > 0");
    if (b < 1) throw Error(ErrorCode::EmptyInput, "empty batch");
    require_finite(q, "queries");
    require_finite(k_pos, "keys");

    MocoLossResult r;
    r.d_q = Matrix(b, h);
    r.d_kpos = Matrix(b, h);
    const double scale = 1.0 / (static_cast<double>(b) * temperature);
    std::vector<double> logits(filled + 1);
    for (std::size_t i = 0; i < b; ++i) {
        const double* qi = q.row(i);
        auto dot = [&](const double* v) {
            double s = 0.0;
            for (std::size_t d = 0; d < h; ++d) s += qi[d] * v[d];
            return s;
        };
        logits[0] = dot(k_pos.row(i)) / temperature;
        for (std::size_t j = 0; j < filled; ++j) logits[j + 1] = dot(queue.row(j)) / temperature;
        double mx = *std::max_element(logits.begin(), logits.end());
        double sum = 0.0;
        for (double l : logits) sum += std::exp(l - mx);
        const double lse = mx + std::log(sum);
        if (!std::isfinite(lse)) throw Error(ErrorCode::NonFinite, "non-finite moco logits");
        r.loss += std::log(sum) - (logits[0] - mx);
        double* gi = r.d_q.row(i);
        double p0 = std::exp(logits[0] - lse);
        for (std::size_t d = 0; d < h; ++d) gi[d] += (p0 - 1.0) * k_pos(i, d) * scale;
        for (std::size_t j = 0; j < filled; ++j) {
            double p = std::exp(logits[j + 1] - lse);
            const double* n = queue.row(j);
            for (std::size_t d = 0; d < h; ++d) gi[d] += p * n[d] * scale;
        }
    }
    r.loss /= static_cast<double>(b);
    return r;
}

template <typename T>
void momentum_update(BasicEncoderParams<T>& momentum, const BasicEncoderParams<T>& online, double m) {
    if (momentum.dim != online.dim || momentum.vocab_size != online.vocab_size) {
        throw Error(ErrorCode::DimMismatch, "momentum and online encoders differ in shape");
    }
    if (!(m >= 0.0 && m <= 1.0)) throw Error(ErrorCode::InvalidArgument, "momentum must be in [0, 1]");
    auto blend = [m](std::vector<T>& k, const std::vector<T>& q) {
        if (m == 1.0) return;
        for (std::size_t i = 0; i < k.size(); ++i) {
            k[i] = static_cast<T>(m * static_cast<double>(k[i]) + (1.0 - m) * static_cast<double>(q[i]));
        }
    };
    blend(momentum.embed, online.embed);
    blend(momentum.proj, online.proj);
    blend(momentum.bias, online.bias);
}

void queue_push(Matrix& queue, std::size_t& ptr, std::size_t& filled, const Matrix& keys) {
    const std::size_t k = queue.rows;
    if (keys.rows > k) throw Error(ErrorCode::BatchExceedsQueue, "batch of " + std::to_string(keys.rows) +
                                                                    " keys exceeds queue capacity " + std::to_string(k));
    if (keys.rows > 0 && keys.cols != queue.cols) throw Error(ErrorCode::DimMismatch, "key dimension differs from queue");
    for (std::size_t r = 0; r < keys.rows; ++r) {
        std::copy(keys.row(r), keys.row(r) + keys.cols, queue.row(ptr));
        ptr = (ptr + 1) % k;
    }
    filled = std::min(filled + keys.rows, k);
}

double lr_at(int step, const TrainConfig& cfg) {
    if (step < 0 || step > cfg.steps) throw Error(ErrorCode::InvalidArgument, "step outside [0, steps]");
    if (cfg.warmup_steps > 0 && step < cfg.warmup_steps) {
        return cfg.lr * static_cast<double>(step) / static_cast<double>(cfg.warmup_steps);
    }
    if (cfg.steps == cfg.warmup_steps) return cfg.lr;
    return cfg.lr * static_cast<double>(cfg.steps - step) / static_cast<double>(cfg.steps - cfg.warmup_steps);
}

void AdamState::resize(std::size_t vocab_size, std::size_t dim) {
    m_embed.resize(vocab_size * dim, 0.0);
    v_embed.resize(vocab_size * dim, 0.0);
    m_proj.resize(dim * dim, 0.0);
    v_proj.resize(dim * dim, 0.0);
    m_bias.resize(dim, 0.0);
    v_bias.resize(dim, 0.0);
}

template <typename T>
void adam_step(BasicEncoderParams<T>& params, const GradientSet& grads, AdamState& state, double lr) {
    if (grads.dim != params.dim) throw Error(ErrorCode::DimMismatch, "gradient and parameter dims differ");
    auto finite = [](const std::vector<double>& v) {
        return std::all_of(v.begin(), v.end(), [](double x) { return std::isfinite(x); });
    };
    if (!finite(grads.d_proj) || !finite(grads.d_bias)) throw Error(ErrorCode::NonFinite, "non-finite gradient");
    for (const auto& [t, row] : grads.d_embed) {
        if (t >= params.vocab_size) throw Error(ErrorCode::DimMismatch, "gradient row outside vocabulary");
        if (!finite(row)) throw Error(ErrorCode::NonFinite, "non-finite embedding gradient");
    }
    state.resize(params.vocab_size, params.dim);
    state.t += 1;
    const double bc1 = 1.0 - std::pow(state.beta1, static_cast<double>(state.t));
    const double bc2 = 1.0 - std::pow(state.beta2, static_cast<double>(state.t));
    auto update = [&](T& p, double g, double& m, double& v) {
        m = state.beta1 * m + (1.0 - state.beta1) * g;
        v = state.beta2 * v + (1.0 - state.beta2) * g * g;
        double step = lr * (m / bc1) / (std::sqrt(v / bc2) + state.eps);
        p = static_cast<T>(static_cast<double>(p) - step);
    };
    for (std::size_t i = 0; i < params.proj.size(); ++i) update(params.proj[i], grads.d_proj[i], state.m_proj[i], state.v_proj[i]);
    for (std::size_t i = 0; i < params.bias.size(); ++i) update(params.bias[i], grads.d_bias[i], state.m_bias[i], state.v_bias[i]);
    for (const auto& [t, row] : grads.d_embed) {
        std::size_t base = static_cast<std::size_t>(t) * params.dim;
        for (std::size_t j = 0; j < params.dim; ++j) {
            update(params.embed[base + j], row[j], state.m_embed[base + j], state.v_embed[base + j]);
        }
    }
}

// ---------------------------------------------------------------------------

namespace {

struct Encoded {
    EmbeddingVec raw;
    EmbeddingVec out;  // raw or raw / |raw|
    double norm = 0.0;
};

template <typename T>
Encoded encode_item(const BasicEncoderParams<T>& params, const TokenIds& tokens, bool cosine) {
    Encoded e;
    e.raw = encoder::encode(params, tokens);
    e.out = e.raw;
    if (cosine) {
        double n2 = 0.0;
        for (double x : e.raw) n2 += x * x;
        e.norm = std::sqrt(n2);
        if (e.norm > 0.0) {
            for (auto& x : e.out) x /= e.norm;
        }
    }
    return e;
}

/// Maps a gradient on the (possibly normalised) output back to the raw output.
std::vector<double> to_raw_upstream(const Encoded& e, std::vector<double> up, bool cosine) {
    if (!cosine) return up;
    if (e.norm == 0.0) return std::vector<double>(up.size(), 0.0);
    double proj = 0.0;
    for (std::size_t i = 0; i < up.size(); ++i) proj += up[i] * e.out[i];
    for (std::size_t i = 0; i < up.size(); ++i) up[i] = (up[i] - proj * e.out[i]) / e.norm;
    return up;
}

GradientSet reduce_in_order(std::vector<GradientSet>& parts, std::size_t dim) {
    GradientSet total(dim);
    for (const auto& g : parts) total.accumulate(g);
    return total;
}

}  // namespace

template <typename T>
EmbeddingVec embed_tokens(const BasicEncoderParams<T>& params, const TokenIds& tokens, bool cosine) {
    return encode_item(params, tokens, cosine).out;
}

template <typename T>
BatchResult inbatch_batch(const BasicEncoderParams<T>& params, const std::vector<TokenIds>& queries,
                          const std::vector<TokenIds>& candidates, const BatchOptions& opts) {
    const std::size_t b = queries.size(), c = candidates.size();
    if (b < 1 || c < b) throw Error(ErrorCode::DimMismatch, "need at least one candidate per query");
    const std::size_t h = params.dim;

    std::vector<Encoded> enc(b + c);
    parallel_for(b + c, opts.threads, [&](std::size_t i) {
        enc[i] = encode_item(params, i < b ? queries[i] : candidates[i - b], opts.cosine);
    });
    Matrix scores(b, c);
    for (std::size_t i = 0; i < b; ++i) {
        for (std::size_t j = 0; j < c; ++j) scores(i, j) = encoder::similarity(enc[i].out, enc[b + j].out);
    }

    LossResult lr = contrastive_loss(scores, opts.temperature);
    double loss = lr.loss;
    Matrix ds = lr.d_scores;
    if (opts.direction == LossDirection::bidirectional) {
        if (c != b) throw Error(ErrorCode::InvalidArgument, "bidirectional loss needs a square score matrix");
        Matrix st(c, b);
        for (std::size_t i = 0; i < b; ++i) {
            for (std::size_t j = 0; j < c; ++j) st(j, i) = scores(i, j);
        }
        LossResult rev = contrastive_loss(st, opts.temperature);
        loss = 0.5 * (lr.loss + rev.loss);
        for (std::size_t i = 0; i < b; ++i) {
            for (std::size_t j = 0; j < c; ++j) ds(i, j) = 0.5 * (lr.d_scores(i, j) + rev.d_scores(j, i));
        }
    }

    std::vector<GradientSet> parts(b + c);
    parallel_for(b + c, opts.threads, [&](std::size_t n) {
        std::vector<double> up(h, 0.0);
        if (n < b) {
            for (std::size_t j = 0; j < c; ++j) {
                const double w = ds(n, j);
                for (std::size_t d = 0; d < h; ++d) up[d] += w * enc[b + j].out[d];
            }
            parts[n] = encoder::encode_backward(params, queries[n], to_raw_upstream(enc[n], std::move(up), opts.cosine));
        } else {
            const std::size_t j = n - b;
            for (std::size_t i = 0; i < b; ++i) {
                const double w = ds(i, j);
                for (std::size_t d = 0; d < h; ++d) up[d] += w * enc[i].out[d];
            }
            parts[n] = encoder::encode_backward(params, candidates[j], to_raw_upstream(enc[n], std::move(up), opts.cosine));
        }
    });
    return {loss, reduce_in_order(parts, h)};
}

template <typename T>
BatchResult moco_batch(const BasicEncoderParams<T>& params, const std::vector<TokenIds>& queries, const Matrix& keys,
                       const Matrix& queue, std::size_t filled, const BatchOptions& opts) {
    const std::size_t b = queries.size(), h = params.dim;
    std::vector<Encoded> enc(b);
    parallel_for(b, opts.threads, [&](std::size_t i) { enc[i] = encode_item(params, queries[i], opts.cosine); });
    Matrix q(b, h);
    for (std::size_t i = 0; i < b; ++i) std::copy(enc[i].out.begin(), enc[i].out.end(), q.row(i));
    MocoLossResult r = moco_loss(q, keys, queue, filled, opts.temperature);
    std::vector<GradientSet> parts(b);
    parallel_for(b, opts.threads, [&](std::size_t i) {
        std::vector<double> up(r.d_q.row(i), r.d_q.row(i) + h);
        parts[i] = encoder::encode_backward(params, queries[i], to_raw_upstream(enc[i], std::move(up), opts.cosine));
    });
    return {r.loss, reduce_in_order(parts, h)};
}

template void momentum_update<float>(BasicEncoderParams<float>&, const BasicEncoderParams<float>&, double);
template void momentum_update<double>(BasicEncoderParams<double>&, const BasicEncoderParams<double>&, double);
template void adam_step<float>(BasicEncoderParams<float>&, const GradientSet&, AdamState&, double);
template void adam_step<double>(BasicEncoderParams<double>&, const GradientSet&, AdamState&, double);
template EmbeddingVec embed_tokens<float>(const BasicEncoderParams<float>&, const TokenIds&, bool);
template EmbeddingVec embed_tokens<double>(const BasicEncoderParams<double>&, const TokenIds&, bool);
template BatchResult inbatch_batch<float>(const BasicEncoderParams<float>&, const std::vector<TokenIds>&,
                                          const std::vector<TokenIds>&, const BatchOptions&);
template BatchResult inbatch_batch<double>(const BasicEncoderParams<double>&, const std::vector<TokenIds>&,
                                           const std::vector<TokenIds>&, const BatchOptions&);
template BatchResult moco_batch<float>(const BasicEncoderParams<float>&, const std::vector<TokenIds>&, const Matrix&,
                                       const Matrix&, std::size_t, const BatchOptions&);
template BatchResult moco_batch<double>(const BasicEncoderParams<double>&, const std::vector<TokenIds>&, const Matrix&,
                                        const Matrix&, std::size_t, const BatchOptions&);

// ---------------------------------------------------------------------------

namespace {

enum class Mode { pretrain, finetune, adapt };

std::string_view mode_name(Mode m) {
    switch (m) {
        case Mode::pretrain: return "pretrain";
        case Mode::finetune: return "finetune";
        case Mode::adapt: return "adapt";
    }
    return "pretrain";
}

struct Example {
    const augment::TrainingPair* pair = nullptr;
    TokenIds query;
    TokenIds doc;
    TokenIds negative;
};

TokenIds truncated(const corpus::TokenSeq& seq, std::size_t max_tokens) {
    TokenIds t = seq.tokens;
    if (t.size() > max_tokens) t.resize(max_tokens);
    return t;
}

/// Epoch-wise shuffled stream of example indices.
class Batcher {
public:
    Batcher(std::size_t n, std::uint64_t seed) : n_(n), seed_(seed) { reshuffle(); }

    std::vector<std::size_t> next(std::size_t b) {
        std::vector<std::size_t> out;
        out.reserve(b);
        while (out.size() < b) {
            if (pos_ == order_.size()) {
                ++epoch_;
                reshuffle();
            }
            out.push_back(order_[pos_++]);
        }
        return out;
    }

private:
    void reshuffle() {
        order_.resize(n_);
        std::iota(order_.begin(), order_.end(), 0);
        std::mt19937_64 rng(derive_seed(seed_, "epoch-" + std::to_string(epoch_), "shuffle"));
        std::shuffle(order_.begin(), order_.end(), rng);
        pos_ = 0;
    }

    std::size_t n_;
    std::uint64_t seed_;
    std::uint64_t epoch_ = 0;
    std::size_t pos_ = 0;
    std::vector<std::size_t> order_;
};

TrainResult run_training(const TrainConfig& cfg, const std::vector<augment::TrainingPair>& pairs,
                         const encoder::Model* init, Mode mode) {
    cfg.validate();
    // Without hard negatives a single-pair InBatch batch has nothing to contrast.
    if (mode != Mode::finetune && cfg.arch == Arch::inbatch && cfg.batch_size < 2) {
        throw Error(ErrorCode::InvalidArgument, "inbatch needs batch_size >= 2");
    }
    const int threads = resolve_threads(cfg.threads);
    TrainResult result;
    result.warnings = cfg.warnings();

    std::vector<std::string> texts;
    texts.reserve(pairs.size() * 2);
    for (const auto& p : pairs) {
        texts.push_back(p.query);
        texts.push_back(p.doc_text);
        if (p.hard_negative) texts.push_back(p.hard_negative->doc_text);
    }
    corpus::Vocab pair_vocab = corpus::build_vocab(texts, cfg.min_freq, threads);

    encoder::Model& model = result.model;
    if (init) {
        model = *init;
        if (model.params.dim != cfg.dim) {
            result.warnings.push_back("dim taken from the initial model (" + std::to_string(model.params.dim) + ")");
        }
        // Without steps the new rows would stay untrained, so the model is left as is.
        std::vector<std::string> new_terms;
        if (cfg.steps > 0) {
            for (std::size_t i = 1; i < pair_vocab.size(); ++i) new_terms.push_back(pair_vocab.term(static_cast<corpus::TokenId>(i)));
        }
        if (!new_terms.empty() && model.vocab.extend(new_terms) > 0) {
            encoder::grow_vocab(model.params, model.vocab.size(), derive_seed(cfg.seed, "grow", "encoder"));
        }
    } else {
        model.vocab = std::move(pair_vocab);
        model.params = encoder::init_params<float>(model.vocab.size(), cfg.dim, derive_seed(cfg.seed, "init", "encoder"));
    }

    std::vector<Example> examples;
    for (const auto& p : pairs) {
        if (mode == Mode::finetune && !p.hard_negative) {
            throw Error(ErrorCode::MissingHardNegative, "pair '" + p.qid + "' has no hard negative");
        }
        Example ex;
        ex.pair = &p;
        ex.query = corpus::tokenize(p.query, model.vocab).tokens;
        ex.doc = truncated(corpus::tokenize(p.doc_text, model.vocab), cfg.max_tokens);
        if (p.hard_negative) ex.negative = truncated(corpus::tokenize(p.hard_negative->doc_text, model.vocab), cfg.max_tokens);
        if (ex.query.empty() || ex.doc.empty() || (mode == Mode::finetune && ex.negative.empty())) {
            ++result.dropped_pairs;
            continue;
        }
        examples.push_back(std::move(ex));
    }
    if (cfg.steps > 0 && examples.empty()) throw Error(ErrorCode::EmptyInput, "no usable training pairs");
    const bool needs_two = mode != Mode::finetune && cfg.arch == Arch::inbatch;
    if (cfg.steps > 0 && needs_two && examples.size() < 2) throw Error(ErrorCode::EmptyInput, "inbatch needs at least 2 pairs");
    const std::size_t b = std::min<std::size_t>(static_cast<std::size_t>(cfg.batch_size), examples.size());

    const Arch arch = mode == Mode::finetune ? Arch::inbatch : cfg.arch;
    BatchOptions opts{cfg.temperature, mode == Mode::finetune ? LossDirection::q2d : cfg.loss_direction, cfg.cosine, threads};
    AdamState adam;
    adam.resize(model.params.vocab_size, model.params.dim);
    MoCoState<float> moco;
    if (arch == Arch::moco) moco = MoCoState<float>(model.params, static_cast<std::size_t>(cfg.queue_size));

    Batcher batcher(examples.size(), cfg.seed);
    for (int step = 1; step <= cfg.steps; ++step) {
        auto idx = batcher.next(b);
        const double lr = lr_at(step, cfg);

        std::vector<TokenIds> queries(b), docs(b);
        for (std::size_t i = 0; i < b; ++i) {
            const Example& ex = examples[idx[i]];
            queries[i] = ex.query;
            docs[i] = ex.doc;
            if (cfg.online_qext_self && ex.pair->strategy == augment::Strategy::qext_self) {
                corpus::Document d{ex.pair->doc_id, std::nullopt, ex.pair->doc_text, {}, corpus::Source::generic};
                augment::SelfSpanScorer scorer(model.vocab, model.params);
                auto span = augment::select_query(
                    augment::score_spans(scorer, d, augment::sample_spans(d, derive_seed(cfg.seed, std::to_string(step), "online"))));
                auto fresh = corpus::tokenize(span.text, model.vocab).tokens;
                if (!fresh.empty()) queries[i] = std::move(fresh);
            }
        }

        BatchResult br;
        Matrix keys;
        if (arch == Arch::moco) {
            keys = Matrix(b, model.params.dim);
            parallel_for(b, threads, [&](std::size_t i) {
                auto k = embed_tokens(moco.momentum_params, docs[i], cfg.cosine);
                std::copy(k.begin(), k.end(), keys.row(i));
            });
            br = moco_batch(model.params, queries, keys, moco.queue, moco.filled, opts);
        } else {
            if (mode == Mode::finetune) {
                for (std::size_t i = 0; i < b; ++i) docs.push_back(examples[idx[i]].negative);
            }
            br = inbatch_batch(model.params, queries, docs, opts);
        }
        adam_step(model.params, br.grads, adam, lr);
        if (arch == Arch::moco) {
            momentum_update(moco.momentum_params, model.params, cfg.momentum);
            queue_push(moco, keys);
        }
        result.log.push_back({step, br.loss, lr});
    }

    ordered_json meta;
    meta["mode"] = mode_name(mode);
    TrainConfig recorded = cfg;
    recorded.dim = model.params.dim;
    meta["config"] = recorded.to_json();
    meta["pairs_used"] = examples.size();
    meta["pairs_dropped"] = result.dropped_pairs;
    if (init) meta["parent"] = init->metadata;
    model.metadata = std::move(meta);
    return result;
}

}  // namespace

TrainResult run_pretrain(const TrainConfig& cfg, const std::vector<augment::TrainingPair>& pairs,
                         const encoder::Model* init) {
    return run_training(cfg, pairs, init, Mode::pretrain);
}

TrainResult run_pretrain_from_docs(const TrainConfig& cfg, const std::vector<corpus::Document>& docs,
                                   const augment::MixSpec& mix, const augment::Backends& backends,
                                   const encoder::Model* init) {
    auto augmented = augment::mix_strategies(docs, mix, cfg.seed, backends, resolve_threads(cfg.threads));
    return run_training(cfg, augmented.pairs, init, Mode::pretrain);
}

TrainResult run_finetune(const TrainConfig& cfg, const encoder::Model& model,
                         const std::vector<augment::TrainingPair>& pairs) {
    return run_training(cfg, pairs, &model, Mode::finetune);
}

AdaptResult run_adapt(const TrainConfig& cfg, const encoder::Model& model, const std::vector<corpus::Document>& docs,
                      tqgen::QueryGenerator& generator, const tqgen::SamplingParams& sampling) {
    augment::Backends backends;
    backends.generator = &generator;
    backends.sampling = sampling;
    AdaptResult out;
    auto augmented = augment::mix_strategies(docs, augment::MixSpec::single(augment::Strategy::tqgen_topic), cfg.seed,
                                             backends, resolve_threads(cfg.threads));
    out.pairs = std::move(augmented.pairs);
    out.train = run_training(cfg, out.pairs, &model, Mode::adapt);
    if (cfg.steps > 2000) out.train.warnings.push_back("adaptation is normally limited to 2000 steps");
    return out;
}

TrainConfig adapt_defaults() {
    TrainConfig c;
    c.steps = 2000;
    c.lr = 1e-5;
    c.warmup_steps = 0;
    c.batch_size = 32;
    return c;
}

TrainConfig finetune_defaults() {
    TrainConfig c;
    c.steps = 1000;
    c.lr = 1e-5;
    c.warmup_steps = 100;
    c.batch_size = 32;
    return c;
}

std::string serialize_log(const std::vector<LogRecord>& log) {
    std::string out;
    for (const auto& r : log) {
        ordered_json j;
        j["step"] = r.step;
        j["loss"] = r.loss;
        j["lr"] = r.lr;
        out += j.dump() + "\n";
    }
    return out;
}

}  // namespace augtriever::trainer
