#include "augtriever/cli.h"

#include <algorithm>
#include <cctype>
#include <fstream>
#include <iostream>
#include <memory>
#include <sstream>

#include <CLI11.hpp>

#include "augtriever/augment.h"
#include "augtriever/corpus.h"
#include "augtriever/encoder.h"
#include "augtriever/evaluator.h"
#include "augtriever/lexical.h"
#include "augtriever/tqgen.h"
#include "augtriever/trainer.h"

namespace augtriever::cli {

using nlohmann::ordered_json;

std::vector<std::pair<std::string, std::string>> parse_config_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw Error(ErrorCode::Io, "cannot open config " + path);
    std::vector<std::pair<std::string, std::string>> out;
    std::string line;
    std::size_t lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        auto hash = line.find('#');
        if (hash != std::string::npos) line.resize(hash);
        auto t = trim(line);
        if (t.empty()) continue;
        auto eq = t.find('=');
        if (eq == std::string::npos) {
            throw Error(ErrorCode::InvalidArgument, path + ":" + std::to_string(lineno) + ": expected key = value");
        }
        std::string key = trim(t.substr(0, eq));
        std::string value = trim(t.substr(eq + 1));
        if (value.size() >= 2 && value.front() == '"' && value.back() == '"') value = value.substr(1, value.size() - 2);
        while (key.rfind("--", 0) == 0) key = key.substr(2);
        std::replace(key.begin(), key.end(), '_', '-');
        out.emplace_back(std::move(key), std::move(value));
    }
    return out;
}

namespace {

struct GenFlags {
    bool stub = false;
    std::string endpoint;
    int attempts = 3;
    int max_in_flight = 8;
    tqgen::SamplingParams sampling;
};

void add_gen_flags(CLI::App* app, GenFlags& g) {
    app->add_flag("--gen-stub", g.stub, "Use the deterministic offline query generator");
    app->add_option("--gen-endpoint", g.endpoint, "Base URL of a generation service (POST /generate, /score)");
    app->add_option("--gen-attempts", g.attempts, "Attempts per request before a document is skipped")->capture_default_str();
    app->add_option("--max-in-flight", g.max_in_flight, "Concurrent generation requests")->capture_default_str();
    app->add_option("--top-p", g.sampling.top_p, "Nucleus sampling mass")->capture_default_str();
    app->add_option("--top-k", g.sampling.top_k, "Top-k cutoff (0 disables)")->capture_default_str();
    app->add_option("--temperature-gen", g.sampling.temperature, "Generation temperature")->capture_default_str();
    app->add_option("--max-new-tokens", g.sampling.max_new_tokens, "Generation length limit")->capture_default_str();
}

std::unique_ptr<tqgen::QueryGenerator> make_generator(const GenFlags& g, const lexical::Bm25Index* idf) {
    if (g.stub && !g.endpoint.empty()) throw Error(ErrorCode::InvalidArgument, "--gen-stub and --gen-endpoint are exclusive");
    if (g.stub) return std::make_unique<tqgen::StubGenerator>(idf);
    if (!g.endpoint.empty()) {
        tqgen::HttpOptions opts;
        opts.attempts = g.attempts;
        opts.max_in_flight = g.max_in_flight;
        return std::make_unique<tqgen::HttpGenerator>(g.endpoint, opts);
    }
    return nullptr;
}

ordered_json gen_meta(const GenFlags& g) {
    ordered_json j;
    j["backend"] = g.stub ? "stub" : (g.endpoint.empty() ? "none" : "service");
    if (!g.endpoint.empty()) j["endpoint"] = g.endpoint;
    j["top_p"] = g.sampling.top_p;
    j["top_k"] = g.sampling.top_k;
    j["temperature"] = g.sampling.temperature;
    j["max_new_tokens"] = g.sampling.max_new_tokens;
    return j;
}

struct TrainFlags {
    trainer::TrainConfig cfg;
    std::string arch = "inbatch";
    std::string direction = "q2d";
    std::string log_path;
};

void add_train_flags(CLI::App* app, TrainFlags& f) {
    auto& c = f.cfg;
    f.arch = std::string(trainer::to_string(c.arch));
    app->add_option("--arch", f.arch, "inbatch | moco")->check(CLI::IsMember({"inbatch", "moco"}))->capture_default_str();
    app->add_option("--steps", c.steps, "Optimisation steps")->capture_default_str();
    app->add_option("--batch-size", c.batch_size, "Pairs per batch")->capture_default_str();
    app->add_option("--lr", c.lr, "Peak learning rate")->capture_default_str();
    app->add_option("--warmup-steps", c.warmup_steps, "Linear warmup steps")->capture_default_str();
    app->add_option("--temperature", c.temperature, "Softmax temperature")->capture_default_str();
    app->add_option("--queue-size", c.queue_size, "MoCo queue capacity (power of two)")->capture_default_str();
    app->add_option("--momentum", c.momentum, "MoCo momentum coefficient")->capture_default_str();
    app->add_option("--dim", c.dim, "Embedding dimension")->capture_default_str();
    app->add_option("--loss-direction", f.direction, "q2d | bidirectional")
        ->check(CLI::IsMember({"q2d", "bidirectional"}))
        ->capture_default_str();
    app->add_option("--min-freq", c.min_freq, "Vocabulary frequency threshold")->capture_default_str();
    app->add_option("--max-tokens", c.max_tokens, "Document truncation in tokens")->capture_default_str();
    app->add_flag("--cosine", c.cosine, "L2-normalise embeddings");
    app->add_flag("--online-qext-self", c.online_qext_self, "Re-select qext-self spans with current parameters");
    app->add_option("--log", f.log_path, "Run log output (newline-delimited JSON)");
}

void finish_train_flags(TrainFlags& f, std::uint64_t seed, int threads) {
    f.cfg.arch = trainer::arch_from_string(f.arch);
    f.cfg.loss_direction = trainer::loss_direction_from_string(f.direction);
    f.cfg.seed = seed;
    f.cfg.threads = threads;
}

void write_train_outputs(const trainer::TrainResult& r, const std::string& model_path, const std::string& log_path,
                         std::ostream& err) {
    for (const auto& w : r.warnings) err << "warning: " << w << "\n";
    if (r.dropped_pairs) err << "dropped " << r.dropped_pairs << " pairs with empty token sequences\n";
    encoder::save_model(model_path, r.model);
    if (!log_path.empty()) write_text_file(log_path, trainer::serialize_log(r.log));
    if (!r.log.empty()) err << "final loss " << r.log.back().loss << " after " << r.log.size() << " steps\n";
}

bool mix_uses(const augment::MixSpec& spec, augment::Strategy s) {
    return std::any_of(spec.entries.begin(), spec.entries.end(), [&](const auto& e) { return e.first == s && e.second > 0; });
}

bool mix_uses_generator(const augment::MixSpec& spec) {
    using augment::Strategy;
    return mix_uses(spec, Strategy::tqgen_topic) || mix_uses(spec, Strategy::tqgen_title) ||
           mix_uses(spec, Strategy::tqgen_absum) || mix_uses(spec, Strategy::tqgen_exsum);
}

/// Everything an augmentation run needs, owned in one place.
struct AugmentSetup {
    std::string strategy = "randomcrop";
    std::string index_path;
    std::string plm_backend = "ngram";
    std::string self_model_path;
    std::string crop_positive = "span";
    std::vector<double> lm_weights{0.4, 0.3, 0.2, 0.1};
    std::size_t span_count = 16, span_min = 4, span_max = 16;
    GenFlags gen;

    std::optional<lexical::Bm25Index> index;
    std::optional<augment::NgramLm> lm;
    std::optional<encoder::Model> self_model;
    std::unique_ptr<tqgen::QueryGenerator> generator;
    std::unique_ptr<tqgen::HttpScoreClient> score_client;
    std::unique_ptr<augment::SpanScorer> bm25_scorer, plm_scorer, self_scorer;

    void add_flags(CLI::App* app) {
        app->add_option("--strategy", strategy,
                        "Strategy or mix: randomcrop, doc-title, doc-anchor, qext-bm25, qext-plm, qext-self, "
                        "tqgen-{topic,title,absum,exsum}, mix50:<s>, hybrid-all, hybrid-tqgen, s1=p1,s2=p2")
            ->capture_default_str();
        app->add_option("--index", index_path, "BM25 index file (built from the corpus when omitted)");
        app->add_option("--plm-backend", plm_backend, "ngram | service")->check(CLI::IsMember({"ngram", "service"}))->capture_default_str();
        app->add_option("--lm-weights", lm_weights, "Interpolation weights: bigram_doc unigram_doc unigram_corpus uniform")
            ->expected(4);
        app->add_option("--self-model", self_model_path, "Encoder snapshot for qext-self");
        app->add_option("--crop-positive", crop_positive, "span | document")->check(CLI::IsMember({"span", "document"}))->capture_default_str();
        app->add_option("--span-count", span_count, "Candidate spans per document")->capture_default_str();
        app->add_option("--span-min", span_min, "Minimum span length in words")->capture_default_str();
        app->add_option("--span-max", span_max, "Maximum span length in words")->capture_default_str();
        add_gen_flags(app, gen);
    }

    augment::Backends prepare(const std::vector<corpus::Document>& docs, const augment::MixSpec& spec, int threads) {
        using augment::Strategy;
        augment::Backends b;
        const bool need_gen = mix_uses_generator(spec);
        if (mix_uses(spec, Strategy::qext_bm25) || (need_gen && gen.stub)) {
            index = index_path.empty() ? lexical::Bm25Index::build(docs, {}, threads) : lexical::Bm25Index::load(index_path);
        }
        if (mix_uses(spec, Strategy::qext_bm25)) {
            bm25_scorer = std::make_unique<augment::Bm25SpanScorer>(*index);
            b.bm25 = bm25_scorer.get();
        }
        if (mix_uses(spec, Strategy::qext_plm)) {
            if (plm_backend == "service") {
                if (gen.endpoint.empty()) throw Error(ErrorCode::InvalidArgument, "--plm-backend service needs --gen-endpoint");
                tqgen::HttpOptions opts;
                opts.attempts = gen.attempts;
                score_client = std::make_unique<tqgen::HttpScoreClient>(gen.endpoint, opts);
                plm_scorer = std::make_unique<augment::ExternalLmScorer>(*score_client);
            } else {
                if (lm_weights.size() != 4) throw Error(ErrorCode::InvalidArgument, "--lm-weights needs 4 values");
                lm = augment::NgramLm::build(docs, {lm_weights[0], lm_weights[1], lm_weights[2], lm_weights[3]});
                plm_scorer = std::make_unique<augment::LmSpanScorer>(*lm);
            }
            b.plm = plm_scorer.get();
        }
        if (mix_uses(spec, Strategy::qext_self)) {
            if (self_model_path.empty()) throw Error(ErrorCode::InvalidArgument, "qext-self needs --self-model");
            self_model = encoder::load_model(self_model_path);
            self_scorer = std::make_unique<augment::SelfSpanScorer>(self_model->vocab, self_model->params);
            b.self = self_scorer.get();
        }
        if (need_gen) {
            generator = make_generator(gen, index ? &*index : nullptr);
            if (!generator) throw Error(ErrorCode::InvalidArgument, "tqgen strategies need --gen-stub or --gen-endpoint");
            b.generator = generator.get();
        }
        b.sampling = gen.sampling;
        b.sampling.validate();
        b.crop_positive = crop_positive == "document" ? augment::CropPositive::document : augment::CropPositive::span;
        b.spans = {span_count, span_min, span_max};
        return b;
    }

    ordered_json meta(const augment::MixSpec& spec) const {
        ordered_json j;
        j["strategy"] = strategy;
        ordered_json mix = ordered_json::array();
        for (const auto& [s, p] : spec.entries) mix.push_back({std::string(augment::to_string(s)), p});
        j["mix"] = mix;
        j["crop_positive"] = crop_positive;
        j["spans"] = {span_count, span_min, span_max};
        if (mix_uses(spec, augment::Strategy::qext_plm)) {
            j["plm_backend"] = plm_backend;
            j["lm_weights"] = lm_weights;
        }
        if (self_model) j["self_model"] = self_model->metadata;
        if (mix_uses_generator(spec)) j["generator"] = gen_meta(gen);
        return j;
    }
};

void report_mix(const augment::MixResult& r, std::ostream& err) {
    for (const auto& [s, n] : r.produced) err << "produced " << n << " " << s << " pairs\n";
    for (const auto& [c, n] : r.skipped) err << "skipped " << n << " documents (" << c << ")\n";
}

}  // namespace

int dispatch(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
    CLI::App app{"Annotation-free dense retrieval training pipeline", "augtriever"};
    app.option_defaults()->multi_option_policy(CLI::MultiOptionPolicy::TakeLast);
    app.require_subcommand(1);

    int threads_flag = 0;
    std::uint64_t seed = 0;
    std::string config_path;
    auto add_common = [&](CLI::App* sub) {
        sub->add_option("--threads", threads_flag, "Worker threads (fallback: AUGTRIEVER_THREADS)");
        sub->add_option("--seed", seed, "Global seed")->capture_default_str();
        sub->add_option("--config", config_path, "Flat key = value file; flags override it");
    };

    // ingest
    auto* ingest = app.add_subcommand("ingest", "Normalise raw records into the canonical document file");
    std::string ingest_in, ingest_out, ingest_format = "generic";
    ingest->add_option("--input", ingest_in, "Raw newline-delimited records")->required();
    ingest->add_option("--output", ingest_out, "Canonical document file")->required();
    ingest->add_option("--format", ingest_format, "generic | cc | wiki")->check(CLI::IsMember({"generic", "cc", "wiki"}))->capture_default_str();
    add_common(ingest);

    // index-bm25
    auto* index = app.add_subcommand("index-bm25", "Build a BM25 index file");
    std::string index_corpus, index_out;
    lexical::Bm25Params bm25_params;
    index->add_option("--corpus", index_corpus, "Document file")->required();
    index->add_option("--output", index_out, "Index file")->required();
    index->add_option("--k1", bm25_params.k1, "Term-frequency saturation")->capture_default_str();
    index->add_option("--b", bm25_params.b, "Length normalisation")->capture_default_str();
    add_common(index);

    // augment
    auto* augment_cmd = app.add_subcommand("augment", "Produce pseudo query-document pairs");
    std::string aug_corpus, aug_out;
    AugmentSetup aug;
    augment_cmd->add_option("--corpus", aug_corpus, "Document file")->required();
    augment_cmd->add_option("--output", aug_out, "Pair file")->required();
    aug.add_flags(augment_cmd);
    add_common(augment_cmd);

    // train
    auto* train = app.add_subcommand("train", "Pretrain a bi-encoder from pairs or documents");
    TrainFlags train_flags;
    std::string train_pairs, train_corpus, train_out, train_init;
    AugmentSetup train_aug;
    train->add_option("--pairs", train_pairs, "Pair file");
    train->add_option("--corpus", train_corpus, "Document file augmented in-process (with --strategy)");
    train->add_option("--init", train_init, "Initial model");
    train->add_option("--output", train_out, "Model file")->required();
    add_train_flags(train, train_flags);
    train_aug.add_flags(train);
    add_common(train);

    // finetune
    auto* finetune = app.add_subcommand("finetune", "Fine-tune with one hard negative per pair");
    TrainFlags ft_flags;
    ft_flags.cfg = trainer::finetune_defaults();
    std::string ft_model, ft_pairs, ft_out;
    finetune->add_option("--model", ft_model, "Pretrained model")->required();
    finetune->add_option("--pairs", ft_pairs, "Pair file with neg_doc fields")->required();
    finetune->add_option("--output", ft_out, "Model file")->required();
    add_train_flags(finetune, ft_flags);
    add_common(finetune);

    // adapt
    auto* adapt = app.add_subcommand("adapt", "Adapt a model to a target corpus with topic pseudo queries");
    TrainFlags ad_flags;
    ad_flags.cfg = trainer::adapt_defaults();
    std::string ad_model, ad_corpus, ad_out, ad_pairs_out;
    GenFlags ad_gen;
    adapt->add_option("--model", ad_model, "Pretrained model")->required();
    adapt->add_option("--corpus", ad_corpus, "Target document file")->required();
    adapt->add_option("--output", ad_out, "Adapted model file")->required();
    adapt->add_option("--pairs-output", ad_pairs_out, "Also write the generated pairs");
    add_train_flags(adapt, ad_flags);
    add_gen_flags(adapt, ad_gen);
    add_common(adapt);

    // eval
    auto* eval = app.add_subcommand("eval", "Evaluate a dense model or BM25 on queries and judgments");
    std::string ev_system = "dense", ev_model, ev_index, ev_corpus, ev_queries, ev_qrels, ev_out;
    std::string ev_metrics = "ndcg@10,recall@20";
    bool ev_cosine = false;
    eval->add_option("--system", ev_system, "dense | bm25")->check(CLI::IsMember({"dense", "bm25"}))->capture_default_str();
    eval->add_option("--model", ev_model, "Model file (dense)");
    eval->add_option("--index", ev_index, "Index file (bm25; built from the corpus when omitted)");
    eval->add_option("--corpus", ev_corpus, "Document file")->required();
    eval->add_option("--queries", ev_queries, "Query file")->required();
    eval->add_option("--qrels", ev_qrels, "TREC qrels file");
    eval->add_option("--metrics", ev_metrics, "Comma-separated metrics, e.g. ndcg@10,recall@20,answer_recall@20")->capture_default_str();
    eval->add_option("--output", ev_out, "Report path (standard output when omitted)");
    eval->add_flag("--cosine", ev_cosine, "L2-normalise embeddings");
    add_common(eval);

    std::vector<std::string> argv = args;
    try {
        // Splice config-file values in front of the command-line flags so the
        // latter take precedence under the take-last policy.
        auto cfg_it = std::find(argv.begin(), argv.end(), "--config");
        if (cfg_it != argv.end() && cfg_it + 1 != argv.end() && !argv.empty()) {
            auto entries = parse_config_file(*(cfg_it + 1));
            CLI::App* sub = nullptr;
            for (auto* s : app.get_subcommands({})) {
                if (s->get_name() == argv.front()) sub = s;
            }
            if (!sub) throw CLI::ExtrasError({argv.front()});
            std::vector<std::string> injected;
            for (const auto& [k, v] : entries) {
                if (k == "config") continue;
                if (!sub->get_option_no_throw("--" + k)) throw CLI::ExtrasError({"--" + k + " (from config file)"});
                injected.push_back("--" + k + "=" + v);
            }
            argv.insert(argv.begin() + 1, injected.begin(), injected.end());
        }
        std::vector<std::string> reversed(argv.rbegin(), argv.rend());
        app.parse(reversed);
    } catch (const CLI::CallForHelp&) {
        auto* sub = app.get_subcommands().empty() ? &app : app.get_subcommands().front();
        out << sub->help();
        return kExitOk;
    } catch (const CLI::ParseError& e) {
        err << "error: " << e.what() << "\n";
        auto subs = app.get_subcommands();
        err << (subs.empty() ? app.help() : subs.front()->help());
        return kExitUsage;
    } catch (const Error& e) {
        err << "error: " << e.what() << "\n";
        return e.code() == ErrorCode::Io ? kExitData : kExitUsage;
    }

    const int threads = resolve_threads(threads_flag);
    try {
        if (ingest->parsed()) {
            auto result = corpus::ingest_lines(read_lines(ingest_in), corpus::record_format_from_string(ingest_format), threads);
            for (const auto& w : result.warnings) err << "warning: " << w << "\n";
            ordered_json meta{{"command", "ingest"}, {"format", ingest_format}, {"documents", result.documents.size()},
                              {"skipped", result.skipped}};
            corpus::write_documents(ingest_out, result.documents, meta);
            err << "ingested " << result.documents.size() << " documents, skipped " << result.skipped << "\n";
        } else if (index->parsed()) {
            auto docs = corpus::read_documents(index_corpus);
            auto idx = lexical::Bm25Index::build(docs, bm25_params, threads);
            idx.metadata() = ordered_json{{"command", "index-bm25"}, {"k1", bm25_params.k1}, {"b", bm25_params.b},
                                          {"documents", idx.n_docs()}};
            idx.save(index_out);
            err << "indexed " << idx.n_docs() << " documents, " << idx.n_terms() << " terms\n";
        } else if (augment_cmd->parsed()) {
            auto docs = corpus::read_documents(aug_corpus);
            auto spec = augment::MixSpec::parse(aug.strategy);
            auto backends = aug.prepare(docs, spec, threads);
            auto result = augment::mix_strategies(docs, spec, seed, backends, threads);
            report_mix(result, err);
            ordered_json meta = aug.meta(spec);
            meta["command"] = "augment";
            meta["seed"] = seed;
            meta["produced"] = result.produced;
            meta["skipped"] = result.skipped;
            augment::write_pairs(aug_out, result.pairs, meta);
        } else if (train->parsed()) {
            finish_train_flags(train_flags, seed, threads);
            std::optional<encoder::Model> init;
            if (!train_init.empty()) init = encoder::load_model(train_init);
            trainer::TrainResult r;
            if (!train_pairs.empty()) {
                r = trainer::run_pretrain(train_flags.cfg, augment::read_pairs(train_pairs), init ? &*init : nullptr);
            } else if (!train_corpus.empty()) {
                auto docs = corpus::read_documents(train_corpus);
                auto spec = augment::MixSpec::parse(train_aug.strategy);
                auto backends = train_aug.prepare(docs, spec, threads);
                r = trainer::run_pretrain_from_docs(train_flags.cfg, docs, spec, backends, init ? &*init : nullptr);
                r.model.metadata["augment"] = train_aug.meta(spec);
            } else {
                throw Error(ErrorCode::InvalidArgument, "train needs --pairs or --corpus");
            }
            write_train_outputs(r, train_out, train_flags.log_path, err);
        } else if (finetune->parsed()) {
            finish_train_flags(ft_flags, seed, threads);
            auto model = encoder::load_model(ft_model);
            auto r = trainer::run_finetune(ft_flags.cfg, model, augment::read_pairs(ft_pairs));
            write_train_outputs(r, ft_out, ft_flags.log_path, err);
        } else if (adapt->parsed()) {
            finish_train_flags(ad_flags, seed, threads);
            auto model = encoder::load_model(ad_model);
            auto docs = corpus::read_documents(ad_corpus);
            std::optional<lexical::Bm25Index> idf;
            if (ad_gen.stub) idf = lexical::Bm25Index::build(docs, {}, threads);
            auto gen = make_generator(ad_gen, idf ? &*idf : nullptr);
            if (!gen) throw Error(ErrorCode::InvalidArgument, "adapt needs --gen-stub or --gen-endpoint");
            ad_gen.sampling.validate();
            auto r = trainer::run_adapt(ad_flags.cfg, model, docs, *gen, ad_gen.sampling);
            r.train.model.metadata["generator"] = gen_meta(ad_gen);
            if (!ad_pairs_out.empty()) {
                augment::write_pairs(ad_pairs_out, r.pairs,
                                     ordered_json{{"command", "adapt"}, {"seed", seed}, {"generator", gen_meta(ad_gen)}});
            }
            write_train_outputs(r.train, ad_out, ad_flags.log_path, err);
        } else if (eval->parsed()) {
            auto docs = corpus::read_documents(ev_corpus);
            auto queries = evaluator::read_queries(ev_queries);
            evaluator::Qrels qrels;
            if (!ev_qrels.empty()) qrels = evaluator::read_qrels(ev_qrels);
            std::vector<evaluator::MetricSpec> metrics;
            std::stringstream ss(ev_metrics);
            for (std::string m; std::getline(ss, m, ',');) {
                if (!trim(m).empty()) metrics.push_back(evaluator::MetricSpec::parse(trim(m)));
            }
            std::optional<encoder::Model> model;
            std::optional<lexical::Bm25Index> idx;
            std::unique_ptr<evaluator::Retriever> system;
            if (ev_system == "dense") {
                if (ev_model.empty()) throw Error(ErrorCode::InvalidArgument, "dense evaluation needs --model");
                model = encoder::load_model(ev_model);
                system = std::make_unique<evaluator::DenseRetriever>(*model, docs, threads, ev_cosine);
            } else {
                idx = ev_index.empty() ? lexical::Bm25Index::build(docs, {}, threads) : lexical::Bm25Index::load(ev_index);
                system = std::make_unique<evaluator::Bm25Retriever>(*idx);
            }
            auto report = evaluator::evaluate_run(*system, docs, queries, qrels, metrics, threads);
            std::string text = report.to_json().dump(2) + "\n";
            if (ev_out.empty()) {
                out << text;
            } else {
                write_text_file(ev_out, text);
            }
            if (report.skipped) err << "skipped " << report.skipped << " queries without judgments\n";
        }
    } catch (const Error& e) {
        err << "error: " << e.what() << "\n";
        switch (e.code()) {
            case ErrorCode::InvalidArgument:
            case ErrorCode::BadSpec:
            case ErrorCode::MissingBackend: {
                auto subs = app.get_subcommands();
                if (!subs.empty()) err << subs.front()->help();
                return kExitUsage;
            }
            default:
                return kExitData;
        }
    } catch (const std::exception& e) {
        err << "error: " << e.what() << "\n";
        return kExitData;
    }
    return kExitOk;
}

}  // namespace augtriever::cli
