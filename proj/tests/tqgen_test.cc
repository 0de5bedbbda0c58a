#include "augtriever/tqgen.h"

#include <gtest/gtest.h>

#include <chrono>
#include <thread>

#include "augtriever/augment.h"
#include "augtriever/common.h"
#include "mock_service.h"

using namespace augtriever;
using namespace augtriever::tqgen;
using corpus::Document;
using nlohmann::json;

namespace {

const Document kAwsDoc{"aws", std::nullopt, "Amazon Web Services hosts a cuneiform archive of Sumerian tablets.", {}, {}};

std::string fixture(const std::string& name) { return read_text_file(std::string(AUGTRIEVER_FIXTURES) + "/" + name); }

HttpOptions fast_options(int attempts = 3) {
    HttpOptions o;
    o.attempts = attempts;
    o.backoff = std::chrono::milliseconds(1);
    o.timeout = std::chrono::seconds(5);
    return o;
}

void reply_json(httplib::Response& res, const std::string& body) { res.set_content(body, "application/json"); }

}  // namespace

TEST(PromptTest, InstructionsAreVerbatim) {
    EXPECT_EQ(prompt_text(GenTask::topic), "What is the main topic of the text above?");
    EXPECT_EQ(prompt_text(GenTask::title), "Please write a title of the text above");
    EXPECT_EQ(prompt_text(GenTask::absum), "Please write a short summary of the text above");
    EXPECT_EQ(prompt_text(GenTask::exsum), "Please use a sentence from the above text to summarize its content");
}

TEST(PromptTest, DocumentThenBlankLineThenInstruction) {
    Document d{"x", std::nullopt, "X", {}, {}};
    EXPECT_EQ(build_prompt(d, GenTask::topic), "X\n\nWhat is the main topic of the text above?");
    auto title = build_prompt(d, GenTask::title);
    EXPECT_EQ(title.substr(title.size() - 38), "Please write a title of the text above");
}

TEST(PromptTest, DocumentPortionTruncatedTo512Words) {
    std::string text;
    for (int i = 0; i < 600; ++i) text += "w" + std::to_string(i) + " ";
    auto prompt = build_prompt({"long", std::nullopt, text, {}, {}}, GenTask::absum);
    auto doc_part = prompt.substr(0, prompt.find("\n\n"));
    EXPECT_EQ(split_words(doc_part).size(), 512u);
    EXPECT_EQ(split_words(doc_part).back(), "w511");
}

TEST(StubTest, ExtractiveRules) {
    Document d{"s", std::nullopt, "Alpha beta gamma. More text follows here for the stub title rule.", {}, {}};
    EXPECT_EQ(stub_generate(d, GenTask::exsum, 1), "Alpha beta gamma.");
    EXPECT_EQ(stub_generate(d, GenTask::title, 1), "Alpha beta gamma. More text follows here for");
    EXPECT_EQ(stub_generate(d, GenTask::title, 1), stub_generate(d, GenTask::title, 1));
    EXPECT_EQ(stub_generate(d, GenTask::topic, 7), stub_generate(d, GenTask::topic, 7));
    EXPECT_EQ(split_words(stub_generate(d, GenTask::absum, 1)).size(), 12u);
}

TEST(StubTest, TopicPrefersHighIdfNonStopwords) {
    std::vector<Document> docs{{"a", std::nullopt, "the common common rare1 word", {}, {}},
                               {"b", std::nullopt, "common word", {}, {}},
                               {"c", std::nullopt, "common thing", {}, {}}};
    auto idx = lexical::Bm25Index::build(docs);
    auto topic = stub_generate(docs[0], GenTask::topic, 0, &idx);
    EXPECT_EQ(topic, "rare1 word");
}

TEST(SamplingTest, Validation) {
    SamplingParams s;
    EXPECT_NO_THROW(s.validate());
    EXPECT_DOUBLE_EQ(s.top_p, 0.9);
    EXPECT_EQ(s.top_k, 0);
    s.top_p = 0.0;
    EXPECT_THROW(s.validate(), Error);
    s = {};
    s.max_new_tokens = 0;
    EXPECT_THROW(s.validate(), Error);
}

TEST(GenerateQueryTest, StubModeMatchesStubOutput) {
    StubGenerator gen;
    auto p = generate_query(gen, kAwsDoc, GenTask::title, {}, 3);
    EXPECT_EQ(p.query, stub_generate(kAwsDoc, GenTask::title, 0));
    EXPECT_EQ(p.strategy, augment::Strategy::tqgen_title);
    EXPECT_EQ(p.doc_id, "aws");
    EXPECT_EQ(p.qid, "tqgen-title:aws");
}

TEST(GenerateQueryTest, BlankGenerationIsAnError) {
    class Blank final : public QueryGenerator {
    public:
        std::string generate(const Document&, GenTask, const SamplingParams&, std::uint64_t) override { return "  \n"; }
        std::string model_id() const override { return "blank"; }
    } gen;
    try {
        generate_query(gen, kAwsDoc, GenTask::topic, {}, 1);
        FAIL();
    } catch (const Error& e) {
        EXPECT_EQ(e.code(), ErrorCode::EmptyGeneration);
    }
}

TEST(ProtocolTest, GenerateRequestMatchesGoldenFixture) {
    MockService svc;
    svc.on_generate([](const httplib::Request&, httplib::Response& res) { reply_json(res, fixture("generate_response.json")); });
    HttpGenerator gen(svc.endpoint(), fast_options());
    GenRequest req{build_prompt(kAwsDoc, GenTask::topic), {}, 1234};
    auto resp = gen.send(req);

    auto golden = json::parse(fixture("generate_request.json"));
    auto sent = json::parse(svc.last_body());
    EXPECT_EQ(sent, golden);
    // Field order of the wire format is part of the contract.
    std::vector<std::string> keys;
    auto ordered = nlohmann::ordered_json::parse(svc.last_body());
    for (auto it = ordered.begin(); it != ordered.end(); ++it) keys.push_back(it.key());
    EXPECT_EQ(keys, (std::vector<std::string>{"prompt", "top_p", "top_k", "temperature", "max_new_tokens", "seed"}));
    EXPECT_EQ(resp.text, "Sumerian");
    EXPECT_EQ(resp.model_id, "mock-t0");
    EXPECT_EQ(request_from_json(golden).seed, 1234u);
}

TEST(ProtocolTest, TopicQueryFromService) {
    MockService svc;
    svc.on_generate([](const httplib::Request& req, httplib::Response& res) {
        auto body = json::parse(req.body);
        bool topic = body.at("prompt").get<std::string>().find("main topic") != std::string::npos;
        reply_json(res, topic ? R"({"text":" Sumerian\n","model_id":"m"})" : R"({"text":"other","model_id":"m"})");
    });
    HttpGenerator gen(svc.endpoint(), fast_options());
    auto p = generate_query(gen, kAwsDoc, GenTask::topic, {}, 5);
    EXPECT_EQ(p.query, "Sumerian");
    EXPECT_EQ(p.strategy, augment::Strategy::tqgen_topic);
    // The per-request seed is derived from (seed, doc, task) and fits in 31 bits.
    auto seed = json::parse(svc.last_body()).at("seed").get<std::uint64_t>();
    EXPECT_EQ(seed, derive_seed(5, "aws", "topic") & 0x7fffffffULL);
}

TEST(RetryTest, Transient503IsRetried) {
    MockService svc;
    svc.on_generate([](const httplib::Request&, httplib::Response& res) { reply_json(res, R"({"text":"ok","model_id":"m"})"); });
    svc.script({503, 503});
    HttpGenerator gen(svc.endpoint(), fast_options(3));
    EXPECT_EQ(gen.generate(kAwsDoc, GenTask::title, {}, 1), "ok");
    EXPECT_EQ(svc.calls(), 3);
}

TEST(RetryTest, UnavailableAfterAllAttempts) {
    MockService svc;
    svc.script({503, 503, 503, 503});
    HttpGenerator gen(svc.endpoint(), fast_options(3));
    try {
        gen.generate(kAwsDoc, GenTask::title, {}, 1);
        FAIL();
    } catch (const Error& e) {
        EXPECT_EQ(e.code(), ErrorCode::GenUnavailable);
    }
    EXPECT_EQ(svc.calls(), 3);
}

TEST(RetryTest, BadRequestIsFatal) {
    MockService svc;
    svc.script({400});
    HttpGenerator gen(svc.endpoint(), fast_options(3));
    try {
        gen.generate(kAwsDoc, GenTask::title, {}, 1);
        FAIL();
    } catch (const Error& e) {
        EXPECT_EQ(e.code(), ErrorCode::GenRejected);
    }
    EXPECT_EQ(svc.calls(), 1);
}

TEST(RetryTest, ServiceDownIsUnavailable) {
    // Nothing listens on port 1; connections are refused immediately.
    HttpGenerator gen("http://127.0.0.1:1", fast_options(3));
    try {
        gen.generate(kAwsDoc, GenTask::topic, {}, 1);
        FAIL();
    } catch (const Error& e) {
        EXPECT_EQ(e.code(), ErrorCode::GenUnavailable);
    }
}

TEST(ConcurrencyTest, InFlightRequestsAreBounded) {
    MockService svc;
    svc.on_generate([](const httplib::Request&, httplib::Response& res) {
        std::this_thread::sleep_for(std::chrono::milliseconds(30));
        reply_json(res, R"({"text":"ok","model_id":"m"})");
    });
    auto opts = fast_options();
    opts.max_in_flight = 2;
    HttpGenerator gen(svc.endpoint(), opts);
    std::vector<std::thread> workers;
    for (int i = 0; i < 6; ++i) workers.emplace_back([&] { gen.generate(kAwsDoc, GenTask::title, {}, 1); });
    for (auto& w : workers) w.join();
    EXPECT_EQ(svc.calls(), 6);
    EXPECT_LE(svc.max_concurrent(), 2);
}

TEST(ScoreTest, RequestMatchesGoldenFixtureAndFeedsSpanScorer) {
    MockService svc;
    svc.on_score([](const httplib::Request& req, httplib::Response& res) {
        auto body = json::parse(req.body);
        if (body.at("continuation").get<std::string>().empty()) {
            res.status = 400;
            return;
        }
        reply_json(res, body.at("continuation") == "jumps over" ? fixture("score_response.json")
                                                                : R"({"nll": )" + std::to_string(body.at("continuation").get<std::string>().size()) + "}");
    });
    HttpScoreClient client(svc.endpoint(), fast_options());
    EXPECT_DOUBLE_EQ(client.score("the quick brown fox", "jumps over"), 3.25);
    EXPECT_EQ(json::parse(svc.last_body()), json::parse(fixture("score_request.json")));
    EXPECT_THROW(client.score("ctx", ""), Error);

    augment::ExternalLmScorer scorer(client);
    EXPECT_EQ(scorer.polarity(), augment::Polarity::lower_is_better);
    Document d{"d", std::nullopt, "aa bbbb c", {}, {}};
    auto s = scorer.score(d, {{0, 1, "aa"}, {1, 1, "bbbb"}});
    EXPECT_DOUBLE_EQ(s[0], 2.0);
    EXPECT_DOUBLE_EQ(s[1], 4.0);
    auto pick = augment::select_query(augment::score_spans(scorer, d, {{0, 1, "aa"}, {1, 1, "bbbb"}}));
    EXPECT_EQ(pick.text, "aa");
}

TEST(ScoreTest, MalformedResponseIsAFormatError) {
    MockService svc;
    svc.on_score([](const httplib::Request&, httplib::Response& res) { reply_json(res, R"({"loss": 1})"); });
    HttpScoreClient client(svc.endpoint(), fast_options());
    try {
        client.score("a", "b");
        FAIL();
    } catch (const Error& e) {
        EXPECT_EQ(e.code(), ErrorCode::Format);
    }
}
