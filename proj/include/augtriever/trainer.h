#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include <json.hpp>

#include "augtriever/augment.h"
#include "augtriever/common.h"
#include "augtriever/encoder.h"

namespace augtriever::trainer {

using encoder::BasicEncoderParams;
using encoder::GradientSet;
using TokenIds = std::vector<corpus::TokenId>;

enum class Arch { inbatch, moco };
enum class LossDirection { q2d, bidirectional };

std::string_view to_string(Arch a);
Arch arch_from_string(std::string_view s);
std::string_view to_string(LossDirection d);
LossDirection loss_direction_from_string(std::string_view s);

inline constexpr int kLargestTestedQueueSize = 1 << 14;

struct TrainConfig {
    Arch arch = Arch::inbatch;
    int steps = 1000;
    int batch_size = 32;
    double lr = 5e-5;
    int warmup_steps = 100;
    double temperature = 0.05;
    int queue_size = 1 << 10;
    double momentum = 0.999;
    std::uint64_t seed = 0;
    std::size_t dim = 64;
    LossDirection loss_direction = LossDirection::q2d;
    int min_freq = 1;
    std::size_t max_tokens = 256;
    bool cosine = false;
    bool online_qext_self = false;
    int threads = 1;  // not part of the recorded config: results do not depend on it

    void validate() const;
    /// Warnings that do not block training (e.g. queue above 2^14).
    std::vector<std::string> warnings() const;
    nlohmann::ordered_json to_json() const;
};

// ---------------------------------------------------------------------------
// Objectives. Rows of the score matrix are queries; the positive for row i is
// column i. Both return the mean cross-entropy and its exact gradient.

struct LossResult {
    double loss = 0.0;
    Matrix d_scores;
};

/// Softmax cross-entropy over a B x C score matrix (C >= B) with targets on
/// the diagonal of the leading B x B block.
LossResult contrastive_loss(const Matrix& scores, double temperature);
/// Square-matrix InBatch objective.
LossResult inbatch_loss(const Matrix& scores, double temperature);

struct MocoLossResult {
    double loss = 0.0;
    Matrix d_q;
    Matrix d_kpos;  // always zero: keys are detached
};

/// Logits [q.k+, q.n_1, ..., q.n_filled] / tau, cross-entropy against index 0.
MocoLossResult moco_loss(const Matrix& q, const Matrix& k_pos, const Matrix& queue, std::size_t filled,
                         double temperature);

// ---------------------------------------------------------------------------
// MoCo state.

template <typename T>
struct MoCoState {
    BasicEncoderParams<T> momentum_params;
    Matrix queue;  // K x H ring buffer
    std::size_t ptr = 0;
    std::size_t filled = 0;

    MoCoState() = default;
    MoCoState(BasicEncoderParams<T> params, std::size_t capacity)
        : momentum_params(std::move(params)), queue(capacity, momentum_params.dim) {}

    std::size_t capacity() const { return queue.rows; }
};

/// theta_k <- m * theta_k + (1 - m) * theta_q, elementwise.
template <typename T>
void momentum_update(BasicEncoderParams<T>& momentum, const BasicEncoderParams<T>& online, double m);

/// Writes keys at ptr with wraparound; the oldest keys are overwritten first.
void queue_push(Matrix& queue, std::size_t& ptr, std::size_t& filled, const Matrix& keys);

template <typename T>
void queue_push(MoCoState<T>& state, const Matrix& keys) {
    queue_push(state.queue, state.ptr, state.filled, keys);
}

// ---------------------------------------------------------------------------
// Optimisation.

/// Linear warmup 0 -> lr over warmup_steps, then linear decay to 0 at steps.
double lr_at(int step, const TrainConfig& cfg);

struct AdamState {
    double beta1 = 0.9;
    double beta2 = 0.999;
    double eps = 1e-8;
    std::uint64_t t = 0;
    std::vector<double> m_embed, v_embed, m_proj, v_proj, m_bias, v_bias;

    void resize(std::size_t vocab_size, std::size_t dim);
};

/// Bias-corrected Adam. Embedding rows absent from the gradient keep their
/// moments and values (lazy update).
template <typename T>
void adam_step(BasicEncoderParams<T>& params, const GradientSet& grads, AdamState& state, double lr);

// ---------------------------------------------------------------------------
// Batch objectives composed with the encoder (exposed for gradient checks).

struct BatchResult {
    double loss = 0.0;
    GradientSet grads;
};

struct BatchOptions {
    double temperature = 0.05;
    LossDirection direction = LossDirection::q2d;
    bool cosine = false;
    int threads = 1;
};

/// InBatch over queries[i] vs candidates[j]; candidates[0..B) are the
/// positives, any further candidates are extra negatives (hard negatives).
template <typename T>
BatchResult inbatch_batch(const BasicEncoderParams<T>& params, const std::vector<TokenIds>& queries,
                          const std::vector<TokenIds>& candidates, const BatchOptions& opts);

/// MoCo query-side objective; keys and queue come from the momentum encoder
/// and carry no gradient.
template <typename T>
BatchResult moco_batch(const BasicEncoderParams<T>& params, const std::vector<TokenIds>& queries, const Matrix& keys,
                       const Matrix& queue, std::size_t filled, const BatchOptions& opts);

/// Encoder output, optionally L2-normalised.
template <typename T>
encoder::EmbeddingVec embed_tokens(const BasicEncoderParams<T>& params, const TokenIds& tokens, bool cosine);

// ---------------------------------------------------------------------------
// Runs.

struct LogRecord {
    int step = 0;
    double loss = 0.0;
    double lr = 0.0;
};

struct TrainResult {
    encoder::Model model;
    std::vector<LogRecord> log;
    std::size_t dropped_pairs = 0;
    std::vector<std::string> warnings;
};

/// Trains from pairs, starting from `init` when given (its vocabulary is
/// extended with unseen terms) or from a fresh seeded initialisation.
TrainResult run_pretrain(const TrainConfig& cfg, const std::vector<augment::TrainingPair>& pairs,
                         const encoder::Model* init = nullptr);

/// Augments documents in-process with the given mix, then trains.
TrainResult run_pretrain_from_docs(const TrainConfig& cfg, const std::vector<corpus::Document>& docs,
                                   const augment::MixSpec& mix, const augment::Backends& backends,
                                   const encoder::Model* init = nullptr);

/// InBatch over positives plus every in-batch hard negative: a batch of B
/// queries sees 2B - 1 negatives each.
TrainResult run_finetune(const TrainConfig& cfg, const encoder::Model& model,
                         const std::vector<augment::TrainingPair>& pairs);

struct AdaptResult {
    TrainResult train;
    std::vector<augment::TrainingPair> pairs;
};

/// tqgen-topic pseudo pairs over the target documents, then continued training.
AdaptResult run_adapt(const TrainConfig& cfg, const encoder::Model& model, const std::vector<corpus::Document>& docs,
                      tqgen::QueryGenerator& generator, const tqgen::SamplingParams& sampling = {});

/// Defaults for the adapt and finetune modes.
TrainConfig adapt_defaults();
TrainConfig finetune_defaults();

std::string serialize_log(const std::vector<LogRecord>& log);

}  // namespace augtriever::trainer
