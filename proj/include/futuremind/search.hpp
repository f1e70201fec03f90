#pragma once

#include <atomic>
#include <chrono>
#include <cstdint>
#include <filesystem>
#include <memory>
#include <mutex>
#include <optional>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include "futuremind/domain.hpp"

namespace futuremind {

class AllQueriesFailed : public Error {
public:
    using Error::Error;
};

struct SearchHit {
    std::string query;
    std::size_t rank = 0;  // 1-based
    std::string title;
    std::string snippet;
    std::string url;

    bool operator==(const SearchHit&) const = default;
};

// Implementations must be safe to call concurrently.
class SearchBackend {
public:
    virtual ~SearchBackend() = default;
    virtual std::vector<SearchHit> search(const std::string& query, std::size_t top_k) = 0;
};

// Lower-cased ASCII alphanumeric runs; non-ASCII bytes count as word characters.
std::vector<std::string> tokenize_terms(std::string_view text);

struct FixtureDocument {
    std::string id;
    std::string title;
    std::string url;
    std::string body;
};

// Offline backend over a local document set, ranked by tf-idf.
//
// score(q, d) = sum over distinct query terms t of tf(t, d) * idf(t),
// tf = raw count in title + body, idf = ln(1 + N / df) (0 when df = 0).
class FixtureCorpus final : public SearchBackend {
public:
    explicit FixtureCorpus(std::vector<FixtureDocument> docs);

    // `dir/manifest.json` maps doc id -> {"title", "url"}; body is read from `dir/<id>.txt`.
    static std::shared_ptr<FixtureCorpus> load(const std::filesystem::path& dir);

    double idf(const std::string& term) const;
    double score(std::string_view query, std::size_t doc_index) const;

    std::vector<SearchHit> search(const std::string& query, std::size_t top_k) override;

    const std::vector<FixtureDocument>& documents() const { return docs_; }

private:
    std::vector<FixtureDocument> docs_;
    std::vector<std::unordered_map<std::string, std::size_t>> term_counts_;
    std::unordered_map<std::string, std::size_t> doc_freq_;
};

double fixture_score(const FixtureCorpus& corpus, std::string_view query, std::size_t doc_index);

class TokenBucket {
public:
    TokenBucket(double rate_per_second, double burst);
    void acquire();

private:
    std::mutex mu_;
    double rate_;
    double burst_;
    double tokens_;
    std::chrono::steady_clock::time_point last_;
};

// Custom Search JSON API backend. Key and engine id come from the named environment variables.
class LiveWebSearch final : public SearchBackend {
public:
    struct Options {
        std::string key_env = "GOOGLE_API_KEY";
        std::string engine_env = "GOOGLE_CSE_ID";
        std::string endpoint = "https://www.googleapis.com/customsearch/v1";
        double queries_per_second = 5.0;
    };
    explicit LiveWebSearch(Options options);

    std::vector<SearchHit> search(const std::string& query, std::size_t top_k) override;

    static std::vector<SearchHit> parse_response(const std::string& query, const json& body, std::size_t top_k);

private:
    Options options_;
    std::string key_;
    std::string engine_;
    TokenBucket bucket_;
};

struct QueryResult {
    std::string query;
    std::vector<SearchHit> hits;
    std::optional<std::string> error;
};

using SearchResults = std::vector<QueryResult>;

// Rank-order and drop repeated urls, keeping at most top_k hits; ranks are reassigned 1..n.
std::vector<SearchHit> finalize_hits(std::vector<SearchHit> hits, std::size_t top_k);

struct ParallelSearchOptions {
    std::size_t top_k = 10;
    std::size_t max_queries = 8;
    std::size_t max_parallel = 8;
};

class ParallelSearch {
public:
    explicit ParallelSearch(std::shared_ptr<SearchBackend> backend, ParallelSearchOptions options = {});

    // Fans the queries out concurrently. ledger.search_queries grows by queries.size()
    // whether or not individual queries succeed. Throws AllQueriesFailed when every query errors.
    SearchResults run(const std::vector<std::string>& queries, CostLedger& ledger);

    std::int64_t queries_issued() const { return issued_.load(); }
    const ParallelSearchOptions& options() const { return options_; }

private:
    std::shared_ptr<SearchBackend> backend_;
    ParallelSearchOptions options_;
    std::atomic<std::int64_t> issued_{0};
};

inline constexpr std::string_view kNoResults = "No results found.";

struct RenderOptions {
    std::size_t snippet_bytes = 600;
};

// One "snippet (url)" line per hit, groups separated by a blank line.
std::string render_hits(const SearchResults& results, RenderOptions options = {});

}  // namespace futuremind
