#pragma once

#include <cstddef>
#include <cstdint>
#include <functional>
#include <iosfwd>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

namespace augtriever {

enum class ErrorCode {
    EmptyDocument,
    EmptyCorpus,
    DuplicateDocId,
    UnknownDoc,
    TooShort,
    EmptySpan,
    EmptyInput,
    NoTitle,
    NoAnchor,
    BadSpec,
    MissingBackend,
    GenUnavailable,
    GenRejected,
    EmptyGeneration,
    DimMismatch,
    NonFinite,
    BatchExceedsQueue,
    MissingHardNegative,
    NoRelevanceInfo,
    InvalidArgument,
    Io,
    Format,
};

std::string_view to_string(ErrorCode code);

/// Every failure raised by the library carries a machine-readable code so the
/// pipeline can decide between skipping a record and aborting a stage.
class Error : public std::runtime_error {
public:
    Error(ErrorCode code, const std::string& what)
        : std::runtime_error(std::string(to_string(code)) + ": " + what), code_(code) {}

    ErrorCode code() const noexcept { return code_; }

private:
    ErrorCode code_;
};

// ---------------------------------------------------------------------------
// Seeding. Per-record randomness is derived from (seed, record id, purpose) so
// results never depend on traversal order or thread count.

std::uint64_t splitmix64(std::uint64_t x);
std::uint64_t fnv1a(std::string_view s);
std::uint64_t derive_seed(std::uint64_t seed, std::string_view id, std::string_view purpose);
/// Uniform value in [0, 1) from the top 53 bits of a derived seed.
double unit_interval(std::uint64_t bits);

// ---------------------------------------------------------------------------
// Threads.

/// Resolves a requested worker count: a positive flag wins, then the
/// AUGTRIEVER_THREADS environment variable, then 1.
int resolve_threads(int requested);

/// Runs fn(i) for i in [0, n) on up to `threads` workers with static
/// contiguous partitioning. The first exception thrown is rethrown.
void parallel_for(std::size_t n, int threads, const std::function<void(std::size_t)>& fn);

// ---------------------------------------------------------------------------
// Dense row-major matrix of doubles used by losses and search.

struct Matrix {
    std::size_t rows = 0;
    std::size_t cols = 0;
    std::vector<double> data;

    Matrix() = default;
    Matrix(std::size_t r, std::size_t c, double fill = 0.0) : rows(r), cols(c), data(r * c, fill) {}

    double& operator()(std::size_t r, std::size_t c) { return data[r * cols + c]; }
    double operator()(std::size_t r, std::size_t c) const { return data[r * cols + c]; }
    const double* row(std::size_t r) const { return data.data() + r * cols; }
    double* row(std::size_t r) { return data.data() + r * cols; }
};

// ---------------------------------------------------------------------------
// Text helpers.

std::vector<std::string> split_words(std::string_view text);
std::string join_words(const std::vector<std::string>& words, std::size_t begin, std::size_t end);
std::string trim(std::string_view s);
/// Collapses every whitespace run to one space and trims both ends.
std::string collapse_whitespace(std::string_view s);

// ---------------------------------------------------------------------------
// Little-endian binary encoding for the index and model files.

namespace binio {
void write_u32(std::ostream& out, std::uint32_t v);
void write_u64(std::ostream& out, std::uint64_t v);
void write_f32(std::ostream& out, float v);
void write_f64(std::ostream& out, double v);
void write_string(std::ostream& out, std::string_view s);
std::uint32_t read_u32(std::istream& in);
std::uint64_t read_u64(std::istream& in);
float read_f32(std::istream& in);
double read_f64(std::istream& in);
std::string read_string(std::istream& in);
}  // namespace binio

// ---------------------------------------------------------------------------
// Newline-delimited JSON files. A leading {"_meta": ...} line carries the
// producing configuration; readers skip it.

std::vector<std::string> read_lines(const std::string& path);
void write_text_file(const std::string& path, std::string_view content);
std::string read_text_file(const std::string& path);

}  // namespace augtriever
