#include "futuremind/search.hpp"

#include <algorithm>
#include <cmath>
#include <cstdlib>
#include <fstream>
#include <numeric>
#include <set>
#include <sstream>
#include <thread>

#include "futuremind/text.hpp"
#include "http_util.hpp"

namespace futuremind {

std::vector<std::string> tokenize_terms(std::string_view text) {
    std::vector<std::string> out;
    std::string cur;
    for (char ch : text) {
        auto c = static_cast<unsigned char>(ch);
        if (std::isalnum(c) || c >= 0x80) {
            cur.push_back(static_cast<char>(std::tolower(c)));
        } else if (!cur.empty()) {
            out.push_back(std::move(cur));
            cur.clear();
        }
    }
    if (!cur.empty()) out.push_back(std::move(cur));
    return out;
}

// --- FixtureCorpus -----------------------------------------------------------

FixtureCorpus::FixtureCorpus(std::vector<FixtureDocument> docs) : docs_(std::move(docs)) {
    std::sort(docs_.begin(), docs_.end(), [](const auto& a, const auto& b) { return a.id < b.id; });
    for (std::size_t i = 1; i < docs_.size(); ++i) {
        if (docs_[i].id == docs_[i - 1].id) throw Error("duplicate fixture document id: " + docs_[i].id);
    }
    term_counts_.reserve(docs_.size());
    for (const auto& d : docs_) {
        std::unordered_map<std::string, std::size_t> counts;
        for (auto& t : tokenize_terms(d.title + "\n" + d.body)) ++counts[t];
        for (const auto& [term, n] : counts) ++doc_freq_[term];
        term_counts_.push_back(std::move(counts));
    }
}

std::shared_ptr<FixtureCorpus> FixtureCorpus::load(const std::filesystem::path& dir) {
    std::ifstream manifest_in(dir / "manifest.json");
    if (!manifest_in) throw ConfigError("fixture corpus manifest not found: " + (dir / "manifest.json").string());
    auto manifest = json::parse(manifest_in);
    std::vector<FixtureDocument> docs;
    for (const auto& [id, meta] : manifest.items()) {
        std::ifstream body_in(dir / (id + ".txt"));
        if (!body_in) throw ConfigError("fixture document missing: " + (dir / (id + ".txt")).string());
        std::stringstream body;
        body << body_in.rdbuf();
        docs.push_back(FixtureDocument{id, meta.value("title", ""), meta.value("url", ""),
                                       std::string(text::trim(body.str()))});
    }
    return std::make_shared<FixtureCorpus>(std::move(docs));
}

double FixtureCorpus::idf(const std::string& term) const {
    auto it = doc_freq_.find(term);
    if (it == doc_freq_.end() || it->second == 0) return 0.0;
    return std::log(1.0 + static_cast<double>(docs_.size()) / static_cast<double>(it->second));
}

double FixtureCorpus::score(std::string_view query, std::size_t doc_index) const {
    auto terms = tokenize_terms(query);
    std::set<std::string> distinct(terms.begin(), terms.end());
    const auto& counts = term_counts_.at(doc_index);
    double total = 0.0;
    for (const auto& t : distinct) {
        auto it = counts.find(t);
        if (it != counts.end()) total += static_cast<double>(it->second) * idf(t);
    }
    return total;
}

double fixture_score(const FixtureCorpus& corpus, std::string_view query, std::size_t doc_index) {
    return corpus.score(query, doc_index);
}

std::vector<SearchHit> FixtureCorpus::search(const std::string& query, std::size_t top_k) {
    std::vector<std::pair<double, std::size_t>> scored;
    for (std::size_t i = 0; i < docs_.size(); ++i) {
        double s = score(query, i);
        if (s > 0.0) scored.emplace_back(s, i);
    }
    // docs_ is sorted by id, so index order breaks ties by id.
    std::stable_sort(scored.begin(), scored.end(), [](const auto& a, const auto& b) { return a.first > b.first; });
    std::vector<SearchHit> hits;
    for (const auto& [s, i] : scored) {
        const auto& d = docs_[i];
        hits.push_back(SearchHit{query, hits.size() + 1, d.title, d.body, d.url});
    }
    return finalize_hits(std::move(hits), top_k);
}

std::vector<SearchHit> finalize_hits(std::vector<SearchHit> hits, std::size_t top_k) {
    std::stable_sort(hits.begin(), hits.end(), [](const auto& a, const auto& b) { return a.rank < b.rank; });
    std::set<std::string> seen;
    std::vector<SearchHit> out;
    for (auto& h : hits) {
        if (out.size() >= top_k) break;
        if (!seen.insert(h.url).second) continue;
        h.rank = out.size() + 1;
        out.push_back(std::move(h));
    }
    return out;
}

// --- TokenBucket -------------------------------------------------------------

TokenBucket::TokenBucket(double rate_per_second, double burst)
    : rate_(rate_per_second), burst_(burst), tokens_(burst), last_(std::chrono::steady_clock::now()) {}

void TokenBucket::acquire() {
    while (true) {
        std::chrono::duration<double> wait{};
        {
            std::lock_guard lock(mu_);
            auto now = std::chrono::steady_clock::now();
            tokens_ = std::min(burst_, tokens_ + std::chrono::duration<double>(now - last_).count() * rate_);
            last_ = now;
            if (tokens_ >= 1.0) {
                tokens_ -= 1.0;
                return;
            }
            wait = std::chrono::duration<double>((1.0 - tokens_) / rate_);
        }
        std::this_thread::sleep_for(wait);
    }
}

// --- LiveWebSearch -----------------------------------------------------------

namespace {

std::string require_env(const std::string& name) {
    const char* v = std::getenv(name.c_str());
    if (v == nullptr || *v == '\0') throw ConfigError("environment variable " + name + " is not set");
    return v;
}

}  // namespace

LiveWebSearch::LiveWebSearch(Options options)
    : options_(std::move(options)),
      key_(require_env(options_.key_env)),
      engine_(require_env(options_.engine_env)),
      bucket_(options_.queries_per_second, options_.queries_per_second) {}

std::vector<SearchHit> LiveWebSearch::parse_response(const std::string& query, const json& body, std::size_t top_k) {
    std::vector<SearchHit> hits;
    for (const auto& item : body.value("items", json::array())) {
        hits.push_back(SearchHit{query, hits.size() + 1, item.value("title", ""), item.value("snippet", ""),
                                 item.value("link", "")});
    }
    return finalize_hits(std::move(hits), top_k);
}

std::vector<SearchHit> LiveWebSearch::search(const std::string& query, std::size_t top_k) {
    bucket_.acquire();
    auto [origin, path] = detail::split_url(options_.endpoint);
    httplib::Client client(origin);
    httplib::Params params{{"key", key_},
                           {"cx", engine_},
                           {"q", query},
                           {"num", std::to_string(std::clamp<std::size_t>(top_k, 1, 10))}};
    auto res = client.Get(path, params, httplib::Headers{});
    if (!res) throw Error("search request failed: " + httplib::to_string(res.error()));
    if (res->status != 200) throw Error("search endpoint returned HTTP " + std::to_string(res->status));
    return parse_response(query, json::parse(res->body), top_k);
}

// --- ParallelSearch ----------------------------------------------------------

ParallelSearch::ParallelSearch(std::shared_ptr<SearchBackend> backend, ParallelSearchOptions options)
    : backend_(std::move(backend)), options_(options) {}

SearchResults ParallelSearch::run(const std::vector<std::string>& queries, CostLedger& ledger) {
    if (queries.empty() || queries.size() > options_.max_queries) {
        throw std::invalid_argument("parallel_search takes between 1 and " + std::to_string(options_.max_queries) +
                                    " queries, got " + std::to_string(queries.size()));
    }
    for (const auto& q : queries) {
        if (text::trim(q).empty()) throw std::invalid_argument("parallel_search: empty query");
    }

    SearchResults results(queries.size());
    std::atomic<std::size_t> next{0};
    auto worker = [&] {
        for (std::size_t i = next++; i < queries.size(); i = next++) {
            results[i].query = queries[i];
            try {
                results[i].hits = finalize_hits(backend_->search(queries[i], options_.top_k), options_.top_k);
            } catch (const std::exception& e) {
                results[i].error = e.what();
            }
        }
    };
    {
        const auto n = std::min(std::max<std::size_t>(1, options_.max_parallel), queries.size());
        std::vector<std::jthread> pool;
        pool.reserve(n);
        for (std::size_t t = 0; t < n; ++t) pool.emplace_back(worker);
    }

    issued_ += static_cast<std::int64_t>(queries.size());
    ledger.search_queries += static_cast<std::int64_t>(queries.size());

    if (std::all_of(results.begin(), results.end(), [](const auto& r) { return r.error.has_value(); })) {
        throw AllQueriesFailed("all " + std::to_string(queries.size()) + " search queries failed: " +
                               *results.front().error);
    }
    return results;
}

std::string render_hits(const SearchResults& results, RenderOptions options) {
    std::string out;
    bool any = false;
    for (const auto& group : results) {
        std::string block;
        if (group.error) block += "[search failed for \"" + group.query + "\": " + *group.error + "]\n";
        for (const auto& h : group.hits) {
            auto flat = text::collapse_whitespace(h.snippet);
            std::string snippet(text::utf8_prefix(flat, options.snippet_bytes));
            if (snippet.size() < flat.size()) snippet += "...";
            block += snippet + " (" + h.url + ")\n";
        }
        if (block.empty()) continue;
        if (any) out += '\n';
        out += block;
        any = true;
    }
    if (!any) return std::string(kNoResults);
    out.pop_back();
    return out;
}

}  // namespace futuremind
