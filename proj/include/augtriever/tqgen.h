#pragma once

#include <chrono>
#include <cstdint>
#include <memory>
#include <semaphore>
#include <string>
#include <string_view>

#include <json.hpp>

#include "augtriever/corpus.h"
#include "augtriever/lexical.h"
#include "augtriever/pairs.h"

namespace augtriever::tqgen {

enum class GenTask { topic, title, absum, exsum };

std::string_view to_string(GenTask t);
GenTask task_from_string(std::string_view s);
std::string_view prompt_text(GenTask t);
augment::Strategy strategy_for(GenTask t);

struct SamplingParams {
    double top_p = 0.9;
    int top_k = 0;
    int max_new_tokens = 64;
    double temperature = 1.0;

    void validate() const;
};

struct GenRequest {
    std::string prompt;
    SamplingParams sampling;
    std::uint64_t seed = 0;
};

struct GenResponse {
    std::string text;
    std::string model_id;
};

nlohmann::ordered_json to_json(const GenRequest& r);
GenRequest request_from_json(const nlohmann::json& j);
GenResponse response_from_json(const nlohmann::json& j);

inline constexpr std::size_t kMaxPromptWords = 512;

/// Document (first max_words words) + blank line + task instruction.
std::string build_prompt(const corpus::Document& doc, GenTask task, std::size_t max_words = kMaxPromptWords);

/// Deterministic extractive surrogate for an instruction-tuned generator.
/// With an index, topic words are ranked by corpus IDF; without one, by
/// ascending within-document frequency.
std::string stub_generate(const corpus::Document& doc, GenTask task, std::uint64_t seed,
                          const lexical::Bm25Index* idf = nullptr);

class QueryGenerator {
public:
    virtual ~QueryGenerator() = default;
    virtual std::string generate(const corpus::Document& doc, GenTask task, const SamplingParams& sampling,
                                 std::uint64_t seed) = 0;
    virtual std::string model_id() const = 0;
};

class StubGenerator final : public QueryGenerator {
public:
    explicit StubGenerator(const lexical::Bm25Index* idf = nullptr) : idf_(idf) {}

    std::string generate(const corpus::Document& doc, GenTask task, const SamplingParams&, std::uint64_t seed) override {
        return stub_generate(doc, task, seed, idf_);
    }
    std::string model_id() const override { return "stub"; }

private:
    const lexical::Bm25Index* idf_;
};

struct HttpOptions {
    int attempts = 3;
    int max_in_flight = 8;
    std::chrono::milliseconds backoff{50};
    std::chrono::seconds timeout{120};
    std::size_t max_prompt_words = kMaxPromptWords;
};

/// Client for POST /generate. Transport failures and 503 are retried up to
/// `attempts` times in total (GenUnavailable afterwards); 400 is fatal.
class HttpGenerator final : public QueryGenerator {
public:
    explicit HttpGenerator(std::string endpoint, HttpOptions options = {});

    std::string generate(const corpus::Document& doc, GenTask task, const SamplingParams& sampling,
                         std::uint64_t seed) override;
    GenResponse send(const GenRequest& request);
    std::string model_id() const override;

private:
    std::string endpoint_;
    HttpOptions options_;
    std::unique_ptr<std::counting_semaphore<1024>> in_flight_;
};

/// Client for POST /score: {"context","continuation"} -> {"nll"}.
class HttpScoreClient {
public:
    explicit HttpScoreClient(std::string endpoint, HttpOptions options = {});
    double score(const std::string& context, const std::string& continuation) const;

private:
    std::string endpoint_;
    HttpOptions options_;
};

/// One pseudo query per document; strategy tqgen-<task>. Throws EmptyGeneration
/// when the generated text is blank after trimming.
augment::TrainingPair generate_query(QueryGenerator& gen, const corpus::Document& doc, GenTask task,
                                     const SamplingParams& sampling, std::uint64_t seed);

}  // namespace augtriever::tqgen
