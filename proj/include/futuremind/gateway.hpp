#pragma once

#include <atomic>
#include <chrono>
#include <cstdint>
#include <deque>
#include <filesystem>
#include <functional>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <semaphore>
#include <shared_mutex>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include "futuremind/domain.hpp"

namespace futuremind {

class TransportError : public Error {
public:
    using Error::Error;
};

class EndpointError : public Error {
public:
    EndpointError(int status, std::string body)
        : Error("endpoint returned HTTP " + std::to_string(status) + ": " + body), status_(status),
          body_(std::move(body)) {}
    int status() const { return status_; }
    const std::string& body() const { return body_; }

private:
    int status_;
    std::string body_;
};

class BudgetExceeded : public Error {
public:
    using Error::Error;
};

struct ModelRef {
    std::string alias;
    std::string endpoint;  // http(s)://… or scripted:<file>
    std::string model_name;
    std::string api_key_env;
    GenerationParams params;
};

struct CompletionResult {
    std::string text;
    std::int64_t input_tokens = 0;
    std::int64_t output_tokens = 0;
    TokenSource token_source = TokenSource::Estimated;
    bool from_cache = false;

    CostLedger ledger() const { return {input_tokens, output_tokens, 0, token_source}; }
};

// ceil(bytes / 4)
std::int64_t estimate_tokens(std::string_view text);

std::string sha256_hex(std::string_view data);

// Cache key over everything that determines a completion.
std::string transcript_digest(const std::string& model_name, const GenerationParams& params,
                              const ChatTranscript& transcript);

struct TransportReply {
    std::string text;
    std::optional<std::int64_t> input_tokens;
    std::optional<std::int64_t> output_tokens;
};

// A raw completion channel. send() counts every attempt that reaches the channel.
class Transport {
public:
    virtual ~Transport() = default;

    TransportReply send(const ModelRef& model, const ChatTranscript& transcript) {
        ++calls_;
        return do_send(model, transcript);
    }
    std::size_t calls() const { return calls_.load(); }

protected:
    virtual TransportReply do_send(const ModelRef& model, const ChatTranscript& transcript) = 0;

private:
    std::atomic<std::size_t> calls_{0};
};

// Deterministic replies for tests and offline runs.
//
// A reply is chosen by the first rule whose `match` text occurs in any message of the
// transcript; otherwise the queue is consumed in order. With `repeat_last` the final queued
// reply is served forever once the queue drains.
class ScriptedTransport final : public Transport {
public:
    struct Rule {
        std::string match;
        TransportReply reply;
    };

    explicit ScriptedTransport(std::vector<TransportReply> queue, std::vector<Rule> rules = {},
                               bool repeat_last = false);

    // {"queue": [...], "rules": [{"match": …, "reply": …}], "repeat_last": bool};
    // a reply is a string or {"text", "input_tokens", "output_tokens"}.
    static std::shared_ptr<ScriptedTransport> from_json(const json& script);
    static std::shared_ptr<ScriptedTransport> load(const std::filesystem::path& file);

    std::size_t remaining() const;

protected:
    TransportReply do_send(const ModelRef& model, const ChatTranscript& transcript) override;

private:
    mutable std::mutex mu_;
    std::deque<TransportReply> queue_;
    std::vector<Rule> rules_;
    bool repeat_last_;
    std::optional<TransportReply> last_;
};

// OpenAI-compatible chat-completions over HTTP(S).
class HttpTransport final : public Transport {
public:
    struct Options {
        std::chrono::seconds timeout{300};
    };
    HttpTransport();
    explicit HttpTransport(Options options);

    // Request body sent for one call; exposed for inspection.
    static json request_body(const ModelRef& model, const ChatTranscript& transcript);
    static TransportReply parse_response(const json& body);

protected:
    TransportReply do_send(const ModelRef& model, const ChatTranscript& transcript) override;

private:
    Options options_;
};

// Content-addressed completion cache: one JSON file per key when a directory is given.
// The directory is created on the first write.
class ResponseCache {
public:
    ResponseCache() = default;
    explicit ResponseCache(std::filesystem::path dir);

    std::optional<CompletionResult> get(const std::string& key) const;
    void put(const std::string& key, const CompletionResult& result);
    std::size_t size() const;

private:
    std::optional<std::filesystem::path> dir_;
    mutable std::shared_mutex mu_;
    mutable std::unordered_map<std::string, CompletionResult> memory_;
};

struct GatewayOptions {
    int max_retries = 3;
    std::chrono::milliseconds base_backoff{1000};
    std::optional<std::int64_t> token_budget;
    std::ptrdiff_t max_in_flight_per_endpoint = 4;
    std::function<void(std::chrono::milliseconds)> sleeper;  // defaults to sleep_for
};

class Gateway {
public:
    explicit Gateway(GatewayOptions options = {}, std::shared_ptr<ResponseCache> cache = nullptr);

    // Transport used for `alias`; unregistered http(s) endpoints get a shared HttpTransport.
    void register_transport(const std::string& alias, std::shared_ptr<Transport> transport);

    CompletionResult complete(const ModelRef& model, const ChatTranscript& transcript);

    std::int64_t tokens_spent() const { return tokens_spent_.load(); }
    std::size_t transport_calls() const;

private:
    std::shared_ptr<Transport> transport_for(const ModelRef& model);
    std::counting_semaphore<>& limiter_for(const std::string& endpoint);

    GatewayOptions options_;
    std::shared_ptr<ResponseCache> cache_;
    mutable std::mutex mu_;
    std::map<std::string, std::shared_ptr<Transport>> transports_;
    std::shared_ptr<Transport> http_;
    std::map<std::string, std::unique_ptr<std::counting_semaphore<>>> limiters_;
    std::atomic<std::int64_t> tokens_spent_{0};
};

}  // namespace futuremind
