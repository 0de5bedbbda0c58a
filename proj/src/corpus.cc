#include "augtriever/corpus.h"

#include <algorithm>
#include <cctype>
#include <sstream>

#include "augtriever/common.h"

namespace augtriever::corpus {

using nlohmann::json;
using nlohmann::ordered_json;

std::string_view to_string(Source s) {
    switch (s) {
        case Source::wiki: return "wiki";
        case Source::cc: return "cc";
        case Source::generic: return "generic";
    }
    return "generic";
}

Source source_from_string(std::string_view s) {
    if (s == "wiki") return Source::wiki;
    if (s == "cc") return Source::cc;
    if (s == "generic") return Source::generic;
    throw Error(ErrorCode::Format, "unknown source " + std::string(s));
}

TokenId Vocab::id(std::string_view term) const {
    auto it = term_to_id_.find(std::string(term));
    return it == term_to_id_.end() ? kUnk : it->second;
}

std::size_t Vocab::extend(const std::vector<std::string>& terms) {
    std::size_t added = 0;
    for (const auto& t : terms) {
        if (t.empty() || term_to_id_.count(t)) continue;
        term_to_id_.emplace(t, static_cast<TokenId>(id_to_term_.size()));
        id_to_term_.push_back(t);
        ++added;
    }
    return added;
}

Vocab Vocab::from_terms(std::vector<std::string> terms, int min_freq) {
    Vocab v;
    v.min_freq_ = min_freq;
    v.extend(terms);
    return v;
}

void VocabCounter::add(std::string_view text) {
    for (auto& t : tokenize_surface(text)) ++counts_[t];
}

void VocabCounter::merge(const VocabCounter& other) {
    for (const auto& [t, c] : other.counts_) counts_[t] += c;
}

Vocab VocabCounter::finalize(int min_freq) const {
    if (min_freq < 1) throw Error(ErrorCode::InvalidArgument, "min_freq must be >= 1");
    std::vector<std::pair<std::string, std::uint64_t>> kept;
    for (const auto& [t, c] : counts_) {
        if (c >= static_cast<std::uint64_t>(min_freq)) kept.emplace_back(t, c);
    }
    std::stable_sort(kept.begin(), kept.end(), [](const auto& a, const auto& b) {
        if (a.second != b.second) return a.second > b.second;
        return a.first < b.first;
    });
    std::vector<std::string> terms;
    terms.reserve(kept.size());
    for (auto& [t, c] : kept) terms.push_back(t);
    return Vocab::from_terms(std::move(terms), min_freq);
}

Vocab build_vocab(const std::vector<std::string>& texts, int min_freq, int threads) {
    std::size_t shards = std::max<std::size_t>(1, std::min<std::size_t>(texts.size(), threads));
    std::vector<VocabCounter> partial(shards);
    std::size_t chunk = texts.empty() ? 0 : (texts.size() + shards - 1) / shards;
    parallel_for(shards, threads, [&](std::size_t s) {
        for (std::size_t i = s * chunk; i < std::min(texts.size(), (s + 1) * chunk); ++i) partial[s].add(texts[i]);
    });
    VocabCounter total;
    for (const auto& p : partial) total.merge(p);
    return total.finalize(min_freq);
}

namespace {
bool is_word_char(unsigned char c) {
    return std::isalnum(c) || c >= 0x80;
}
}  // namespace

std::vector<std::string> tokenize_surface(std::string_view text) {
    std::vector<std::string> out;
    std::string cur;
    for (unsigned char c : text) {
        if (is_word_char(c)) {
            cur.push_back(static_cast<char>(std::tolower(c)));
        } else if (!cur.empty()) {
            out.push_back(std::move(cur));
            cur.clear();
        }
    }
    if (!cur.empty()) out.push_back(std::move(cur));
    return out;
}

TokenSeq tokenize(std::string_view text) {
    TokenSeq seq;
    seq.surface = tokenize_surface(text);
    seq.tokens.assign(seq.surface.size(), kUnk);
    return seq;
}

TokenSeq tokenize(std::string_view text, const Vocab& vocab) {
    TokenSeq seq;
    seq.surface = tokenize_surface(text);
    seq.tokens.reserve(seq.surface.size());
    for (const auto& s : seq.surface) seq.tokens.push_back(vocab.id(s));
    return seq;
}

Document parse_cc_record(std::string_view raw, std::string id) {
    std::vector<std::string> lines;
    std::istringstream in{std::string(raw)};
    std::string line;
    while (std::getline(in, line)) {
        auto t = trim(line);
        if (!t.empty()) lines.push_back(std::move(t));
    }
    if (lines.empty()) throw Error(ErrorCode::EmptyDocument, "record '" + id + "' has no non-empty line");

    auto title_words = split_words(lines.front());
    std::vector<std::string> body_words;
    if (title_words.size() > kMaxTitleWords) {
        body_words.assign(title_words.begin() + kMaxTitleWords, title_words.end());
        title_words.resize(kMaxTitleWords);
    }
    for (std::size_t i = 1; i < lines.size(); ++i) {
        for (auto& w : split_words(lines[i])) body_words.push_back(std::move(w));
    }
    if (body_words.empty()) throw Error(ErrorCode::EmptyDocument, "record '" + id + "' has a title but no body");

    Document doc;
    doc.id = std::move(id);
    doc.title = join_words(title_words, 0, title_words.size());
    doc.text = join_words(body_words, 0, body_words.size());
    doc.source = Source::cc;
    return doc;
}

std::vector<AnchorMark> marks_from_strings(std::string_view body, const std::vector<std::string>& anchors) {
    std::vector<AnchorMark> marks;
    for (const auto& a : anchors) {
        if (a.empty()) continue;
        for (std::size_t pos = body.find(a); pos != std::string_view::npos; pos = body.find(a, pos + a.size())) {
            marks.push_back({pos, pos + a.size()});
        }
    }
    std::sort(marks.begin(), marks.end(), [](const AnchorMark& x, const AnchorMark& y) {
        return x.begin != y.begin ? x.begin < y.begin : x.end < y.end;
    });
    return marks;
}

std::vector<Document> parse_wiki_record(const WikiRecord& record) {
    std::vector<Document> docs;
    std::size_t start = 0;
    std::size_t paragraph = 0;
    const std::string& body = record.body;
    while (start <= body.size()) {
        std::size_t end = body.find('\n', start);
        if (end == std::string::npos) end = body.size();
        std::string text = collapse_whitespace(std::string_view(body).substr(start, end - start));
        if (!text.empty()) {
            Document doc;
            doc.id = record.page_id + "#" + std::to_string(paragraph++);
            if (!trim(record.title).empty()) doc.title = collapse_whitespace(record.title);
            doc.text = std::move(text);
            doc.source = Source::wiki;
            for (const auto& m : record.marks) {
                if (m.begin >= start && m.end <= end && m.end > m.begin) {
                    auto a = collapse_whitespace(std::string_view(body).substr(m.begin, m.end - m.begin));
                    if (!a.empty() && std::find(doc.anchors.begin(), doc.anchors.end(), a) == doc.anchors.end()) {
                        doc.anchors.push_back(std::move(a));
                    }
                }
            }
            docs.push_back(std::move(doc));
        }
        start = end + 1;
    }
    if (docs.empty()) throw Error(ErrorCode::EmptyDocument, "page '" + record.page_id + "' has no paragraphs");
    return docs;
}

Document normalize(Document doc) {
    doc.id = trim(doc.id);
    if (doc.id.empty()) throw Error(ErrorCode::EmptyDocument, "document without id");
    doc.text = collapse_whitespace(doc.text);
    if (doc.text.empty()) throw Error(ErrorCode::EmptyDocument, "document '" + doc.id + "' has empty text");
    if (doc.title) {
        auto t = collapse_whitespace(*doc.title);
        if (t.empty()) {
            doc.title.reset();
        } else {
            doc.title = std::move(t);
        }
    }
    std::vector<std::string> anchors;
    for (auto& a : doc.anchors) {
        auto n = collapse_whitespace(a);
        if (!n.empty()) anchors.push_back(std::move(n));
    }
    doc.anchors = std::move(anchors);
    return doc;
}

ordered_json to_json(const Document& doc) {
    ordered_json j;
    j["id"] = doc.id;
    if (doc.title) j["title"] = *doc.title;
    j["text"] = doc.text;
    j["anchors"] = doc.anchors;
    j["source"] = to_string(doc.source);
    return j;
}

Document document_from_json(const json& j) {
    if (!j.is_object() || !j.contains("id") || !j.contains("text")) {
        throw Error(ErrorCode::Format, "document record needs 'id' and 'text'");
    }
    Document doc;
    doc.id = j.at("id").get<std::string>();
    if (j.contains("title") && j.at("title").is_string()) doc.title = j.at("title").get<std::string>();
    doc.text = j.at("text").get<std::string>();
    if (j.contains("anchors") && j.at("anchors").is_array()) doc.anchors = j.at("anchors").get<std::vector<std::string>>();
    if (j.contains("source") && j.at("source").is_string()) doc.source = source_from_string(j.at("source").get<std::string>());
    return doc;
}

RecordFormat record_format_from_string(std::string_view s) {
    if (s == "generic") return RecordFormat::generic;
    if (s == "cc") return RecordFormat::cc;
    if (s == "wiki") return RecordFormat::wiki;
    throw Error(ErrorCode::InvalidArgument, "unknown record format " + std::string(s));
}

IngestResult ingest_lines(const std::vector<std::string>& lines, RecordFormat format, int threads) {
    struct Slot {
        std::vector<Document> docs;
        std::string warning;
    };
    std::vector<Slot> slots(lines.size());
    parallel_for(lines.size(), threads, [&](std::size_t i) {
        try {
            json j = json::parse(lines[i]);
            if (!j.is_object() || !j.contains("id") || !j.contains("text")) {
                throw Error(ErrorCode::Format, "record needs 'id' and 'text'");
            }
            std::string id = j.at("id").get<std::string>();
            switch (format) {
                case RecordFormat::generic:
                    slots[i].docs.push_back(normalize(document_from_json(j)));
                    break;
                case RecordFormat::cc:
                    slots[i].docs.push_back(parse_cc_record(j.at("text").get<std::string>(), id));
                    break;
                case RecordFormat::wiki: {
                    WikiRecord rec;
                    rec.page_id = id;
                    rec.title = j.value("title", "");
                    rec.body = j.at("text").get<std::string>();
                    std::vector<std::string> anchors;
                    if (j.contains("anchors") && j.at("anchors").is_array()) {
                        anchors = j.at("anchors").get<std::vector<std::string>>();
                    }
                    rec.marks = marks_from_strings(rec.body, anchors);
                    slots[i].docs = parse_wiki_record(rec);
                    break;
                }
            }
        } catch (const std::exception& e) {
            slots[i].docs.clear();
            slots[i].warning = "line " + std::to_string(i + 1) + ": " + e.what();
        }
    });

    IngestResult result;
    std::unordered_map<std::string, std::size_t> seen;
    for (auto& s : slots) {
        if (!s.warning.empty()) {
            ++result.skipped;
            result.warnings.push_back(std::move(s.warning));
            continue;
        }
        for (auto& d : s.docs) {
            if (!seen.emplace(d.id, result.documents.size()).second) {
                ++result.skipped;
                result.warnings.push_back("duplicate id '" + d.id + "' skipped");
                continue;
            }
            result.documents.push_back(std::move(d));
        }
    }
    return result;
}

std::vector<Document> read_documents(const std::string& path) {
    std::vector<Document> docs;
    for (const auto& line : read_lines(path)) {
        json j = json::parse(line);
        if (j.contains("_meta")) continue;
        docs.push_back(normalize(document_from_json(j)));
    }
    return docs;
}

void write_documents(const std::string& path, const std::vector<Document>& docs, const ordered_json& meta) {
    std::string out;
    if (!meta.is_null()) out += ordered_json{{"_meta", meta}}.dump() + "\n";
    for (const auto& d : docs) out += to_json(d).dump() + "\n";
    write_text_file(path, out);
}

}  // namespace augtriever::corpus
