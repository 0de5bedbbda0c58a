#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include <json.hpp>

namespace augtriever::corpus {

enum class Source { wiki, cc, generic };

std::string_view to_string(Source s);
Source source_from_string(std::string_view s);

struct Document {
    std::string id;
    std::optional<std::string> title;
    std::string text;
    std::vector<std::string> anchors;
    Source source = Source::generic;

    bool operator==(const Document&) const = default;
};

using TokenId = std::uint32_t;
inline constexpr TokenId kUnk = 0;

struct TokenSeq {
    std::vector<TokenId> tokens;
    std::vector<std::string> surface;

    std::size_t size() const { return surface.size(); }
    bool empty() const { return surface.empty(); }
};

/// Term dictionary. Id 0 is UNK; retained terms get ids 1..n by descending
/// frequency with lexicographic tie-break.
class Vocab {
public:
    Vocab() : id_to_term_{"<unk>"} {}

    TokenId id(std::string_view term) const;
    const std::string& term(TokenId id) const { return id_to_term_.at(id); }
    /// Number of ids including UNK.
    std::size_t size() const { return id_to_term_.size(); }
    int min_freq() const { return min_freq_; }
    bool contains(std::string_view term) const { return id(term) != kUnk; }

    /// Appends unseen terms in the given order; returns how many were added.
    std::size_t extend(const std::vector<std::string>& terms);

    static Vocab from_terms(std::vector<std::string> terms_without_unk, int min_freq);

    bool operator==(const Vocab& other) const { return id_to_term_ == other.id_to_term_ && min_freq_ == other.min_freq_; }

private:
    friend class VocabCounter;
    std::unordered_map<std::string, TokenId> term_to_id_;
    std::vector<std::string> id_to_term_;
    int min_freq_ = 1;
};

/// Mergeable term counts; finalize() performs the deterministic id assignment.
class VocabCounter {
public:
    void add(std::string_view text);
    void merge(const VocabCounter& other);
    Vocab finalize(int min_freq) const;

private:
    std::map<std::string, std::uint64_t> counts_;
};

Vocab build_vocab(const std::vector<std::string>& texts, int min_freq, int threads = 1);

/// Lowercased word/number runs; punctuation-only runs are dropped.
std::vector<std::string> tokenize_surface(std::string_view text);
TokenSeq tokenize(std::string_view text);
TokenSeq tokenize(std::string_view text, const Vocab& vocab);

inline constexpr std::size_t kMaxTitleWords = 64;

/// First non-empty line becomes the title (at most 64 words); words past the
/// limit stay in the body so nothing is lost.
Document parse_cc_record(std::string_view raw, std::string id);

struct AnchorMark {
    std::size_t begin = 0;  // byte offsets into body
    std::size_t end = 0;
};

struct WikiRecord {
    std::string page_id;
    std::string title;
    std::string body;
    std::vector<AnchorMark> marks;
};

/// Marks every occurrence of each anchor string inside body.
std::vector<AnchorMark> marks_from_strings(std::string_view body, const std::vector<std::string>& anchors);

std::vector<Document> parse_wiki_record(const WikiRecord& record);

/// Trims, collapses whitespace, drops empty anchors. Throws EmptyDocument.
Document normalize(Document doc);

nlohmann::ordered_json to_json(const Document& doc);
Document document_from_json(const nlohmann::json& j);

enum class RecordFormat { generic, cc, wiki };
RecordFormat record_format_from_string(std::string_view s);

struct IngestResult {
    std::vector<Document> documents;
    std::size_t skipped = 0;
    std::vector<std::string> warnings;
};

/// Parses raw newline-delimited records. Degenerate records are skipped and
/// counted; output order follows input order.
IngestResult ingest_lines(const std::vector<std::string>& lines, RecordFormat format, int threads = 1);

std::vector<Document> read_documents(const std::string& path);
void write_documents(const std::string& path, const std::vector<Document>& docs, const nlohmann::ordered_json& meta);

}  // namespace augtriever::corpus
