#include "augtriever/tqgen.h"

#include <algorithm>
#include <array>
#include <thread>
#include <unordered_map>
#include <unordered_set>

#include <httplib.h>

#include "augtriever/common.h"

namespace augtriever::tqgen {

using nlohmann::json;
using nlohmann::ordered_json;

std::string_view to_string(GenTask t) {
    switch (t) {
        case GenTask::topic: return "topic";
        case GenTask::title: return "title";
        case GenTask::absum: return "absum";
        case GenTask::exsum: return "exsum";
    }
    return "topic";
}

GenTask task_from_string(std::string_view s) {
    if (s == "topic") return GenTask::topic;
    if (s == "title") return GenTask::title;
    if (s == "absum") return GenTask::absum;
    if (s == "exsum") return GenTask::exsum;
    throw Error(ErrorCode::InvalidArgument, "unknown generation task '" + std::string(s) + "'");
}

std::string_view prompt_text(GenTask t) {
    switch (t) {
        case GenTask::topic: return "What is the main topic of the text above?";
        case GenTask::title: return "Please write a title of the text above";
        case GenTask::absum: return "Please write a short summary of the text above";
        case GenTask::exsum: return "Please use a sentence from the above text to summarize its content";
    }
    return "";
}

augment::Strategy strategy_for(GenTask t) {
    switch (t) {
        case GenTask::topic: return augment::Strategy::tqgen_topic;
        case GenTask::title: return augment::Strategy::tqgen_title;
        case GenTask::absum: return augment::Strategy::tqgen_absum;
        case GenTask::exsum: return augment::Strategy::tqgen_exsum;
    }
    return augment::Strategy::tqgen_topic;
}

void SamplingParams::validate() const {
    if (!(top_p > 0.0 && top_p <= 1.0)) throw Error(ErrorCode::InvalidArgument, "top_p must be in (0, 1]");
    if (top_k < 0) throw Error(ErrorCode::InvalidArgument, "top_k must be >= 0");
    if (max_new_tokens < 1) throw Error(ErrorCode::InvalidArgument, "max_new_tokens must be >= 1");
    if (!(temperature > 0.0)) throw Error(ErrorCode::InvalidArgument, "temperature must be > 0");
}

ordered_json to_json(const GenRequest& r) {
    ordered_json j;
    j["prompt"] = r.prompt;
    j["top_p"] = r.sampling.top_p;
    j["top_k"] = r.sampling.top_k;
    j["temperature"] = r.sampling.temperature;
    j["max_new_tokens"] = r.sampling.max_new_tokens;
    j["seed"] = r.seed;
    return j;
}

GenRequest request_from_json(const json& j) {
    GenRequest r;
    r.prompt = j.at("prompt").get<std::string>();
    r.sampling.top_p = j.at("top_p").get<double>();
    r.sampling.top_k = j.at("top_k").get<int>();
    r.sampling.temperature = j.at("temperature").get<double>();
    r.sampling.max_new_tokens = j.at("max_new_tokens").get<int>();
    r.seed = j.at("seed").get<std::uint64_t>();
    return r;
}

GenResponse response_from_json(const json& j) {
    if (!j.is_object() || !j.contains("text") || !j.at("text").is_string()) {
        throw Error(ErrorCode::Format, "generation response lacks 'text'");
    }
    return {j.at("text").get<std::string>(), j.value("model_id", std::string())};
}

std::string build_prompt(const corpus::Document& doc, GenTask task, std::size_t max_words) {
    auto words = split_words(doc.text);
    if (words.empty()) throw Error(ErrorCode::EmptyDocument, "cannot prompt with an empty document");
    return join_words(words, 0, std::min(words.size(), max_words)) + "\n\n" + std::string(prompt_text(task));
}

namespace {

const std::unordered_set<std::string>& stopwords() {
    static const std::unordered_set<std::string> words{
        "a",     "about", "above", "after", "again", "all",   "also",  "am",    "an",    "and",   "any",
        "are",   "as",    "at",    "be",    "been",  "before", "being", "below", "between", "both", "but",
        "by",    "can",   "could", "did",   "do",    "does",  "doing", "down",  "during", "each", "few",
        "for",   "from",  "further", "had", "has",   "have",  "having", "he",   "her",   "here",  "hers",
        "him",   "his",   "how",   "i",     "if",    "in",    "into",  "is",    "it",    "its",   "itself",
        "just",  "may",   "me",    "more",  "most",  "my",    "no",    "nor",   "not",   "now",   "of",
        "off",   "on",    "once",  "only",  "or",    "other", "our",   "out",   "over",  "own",   "same",
        "she",   "should", "so",   "some",  "such",  "than",  "that",  "the",   "their", "them",  "then",
        "there", "these", "they",  "this",  "those", "through", "to",  "too",   "under", "until", "up",
        "very",  "was",   "we",    "were",  "what",  "when",  "where", "which", "while", "who",   "whom",
        "why",   "will",  "with",  "would", "you",   "your",  "s",     "t"};
    return words;
}

std::string topic_words(const corpus::Document& doc, const lexical::Bm25Index* idf) {
    auto words = split_words(doc.text);
    std::string head = join_words(words, 0, std::min<std::size_t>(words.size(), 100));
    auto terms = corpus::tokenize_surface(head);
    std::vector<std::string> distinct;
    std::unordered_map<std::string, std::size_t> freq;
    for (const auto& t : terms) {
        if (stopwords().count(t)) continue;
        if (freq[t]++ == 0) distinct.push_back(t);
    }
    if (distinct.empty()) {
        // Only stopwords: fall back to the first two terms.
        for (const auto& t : terms) {
            if (std::find(distinct.begin(), distinct.end(), t) == distinct.end()) distinct.push_back(t);
        }
    }
    std::vector<std::size_t> order(distinct.size());
    for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
    if (idf) {
        std::vector<double> w(distinct.size());
        for (std::size_t i = 0; i < distinct.size(); ++i) w[i] = idf->idf(distinct[i]);
        std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return w[a] > w[b]; });
    } else {
        std::stable_sort(order.begin(), order.end(),
                         [&](std::size_t a, std::size_t b) { return freq[distinct[a]] < freq[distinct[b]]; });
    }
    std::string out;
    for (std::size_t i = 0; i < std::min<std::size_t>(2, order.size()); ++i) {
        if (i) out.push_back(' ');
        out += distinct[order[i]];
    }
    return out;
}

std::string first_sentence(const std::vector<std::string>& words) {
    std::size_t end = std::min<std::size_t>(words.size(), 40);
    for (std::size_t i = 0; i < end; ++i) {
        if (words[i].back() == '.') {
            end = i + 1;
            break;
        }
    }
    return join_words(words, 0, end);
}

}  // namespace

std::string stub_generate(const corpus::Document& doc, GenTask task, std::uint64_t /*seed*/,
                          const lexical::Bm25Index* idf) {
    auto words = split_words(doc.text);
    if (words.empty()) throw Error(ErrorCode::EmptyDocument, "cannot generate from an empty document");
    switch (task) {
        case GenTask::topic: return topic_words(doc, idf);
        case GenTask::title: return join_words(words, 0, std::min<std::size_t>(words.size(), 8));
        case GenTask::absum: return join_words(words, 0, std::min<std::size_t>(words.size(), 25));
        case GenTask::exsum: return first_sentence(words);
    }
    return {};
}

HttpGenerator::HttpGenerator(std::string endpoint, HttpOptions options)
    : endpoint_(std::move(endpoint)),
      options_(options),
      in_flight_(std::make_unique<std::counting_semaphore<1024>>(std::clamp(options.max_in_flight, 1, 1024))) {
    if (options_.attempts < 1) throw Error(ErrorCode::InvalidArgument, "attempts must be >= 1");
}

std::string HttpGenerator::model_id() const {
    return "http:" + endpoint_;
}

namespace {

template <typename Parse>
auto post_with_retry(const std::string& endpoint, const HttpOptions& options, const std::string& path,
                     const std::string& body, Parse parse) {
    std::string last_error;
    for (int attempt = 1; attempt <= options.attempts; ++attempt) {
        httplib::Client client(endpoint);
        client.set_connection_timeout(options.timeout);
        client.set_read_timeout(options.timeout);
        auto res = client.Post(path, body, "application/json");
        if (!res) {
            last_error = "transport error: " + httplib::to_string(res.error());
        } else if (res->status == 200) {
            return parse(json::parse(res->body));
        } else if (res->status == 503) {
            last_error = "service busy (503)";
        } else {
            throw Error(ErrorCode::GenRejected, path + " returned " + std::to_string(res->status) + ": " + res->body);
        }
        if (attempt < options.attempts) std::this_thread::sleep_for(options.backoff * attempt);
    }
    throw Error(ErrorCode::GenUnavailable,
                path + " failed after " + std::to_string(options.attempts) + " attempts (" + last_error + ")");
}

}  // namespace

GenResponse HttpGenerator::send(const GenRequest& request) {
    request.sampling.validate();
    in_flight_->acquire();
    struct Release {
        std::counting_semaphore<1024>& s;
        ~Release() { s.release(); }
    } release{*in_flight_};
    return post_with_retry(endpoint_, options_, "/generate", to_json(request).dump(),
                           [](const json& j) { return response_from_json(j); });
}

std::string HttpGenerator::generate(const corpus::Document& doc, GenTask task, const SamplingParams& sampling,
                                    std::uint64_t seed) {
    GenRequest req{build_prompt(doc, task, options_.max_prompt_words), sampling, seed};
    auto resp = send(req);
    return resp.text;
}

HttpScoreClient::HttpScoreClient(std::string endpoint, HttpOptions options)
    : endpoint_(std::move(endpoint)), options_(options) {}

double HttpScoreClient::score(const std::string& context, const std::string& continuation) const {
    ordered_json body{{"context", context}, {"continuation", continuation}};
    return post_with_retry(endpoint_, options_, "/score", body.dump(), [](const json& j) {
        if (!j.contains("nll") || !j.at("nll").is_number()) throw Error(ErrorCode::Format, "score response lacks 'nll'");
        return j.at("nll").get<double>();
    });
}

augment::TrainingPair generate_query(QueryGenerator& gen, const corpus::Document& doc, GenTask task,
                                     const SamplingParams& sampling, std::uint64_t seed) {
    std::uint64_t request_seed = derive_seed(seed, doc.id, to_string(task)) & 0x7fffffffULL;
    std::string text = trim(gen.generate(doc, task, sampling, request_seed));
    if (text.empty()) throw Error(ErrorCode::EmptyGeneration, "empty generation for '" + doc.id + "'");
    augment::TrainingPair p;
    p.strategy = strategy_for(task);
    p.qid = augment::make_qid(p.strategy, doc.id);
    p.query = std::move(text);
    p.doc_id = doc.id;
    p.doc_text = doc.text;
    return p;
}

}  // namespace augtriever::tqgen
