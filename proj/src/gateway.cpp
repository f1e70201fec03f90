#include "futuremind/gateway.hpp"

#include <openssl/evp.h>

#include <cstdlib>
#include <fstream>
#include <sstream>
#include <thread>

#include "http_util.hpp"

namespace futuremind {

std::int64_t estimate_tokens(std::string_view text) {
    return static_cast<std::int64_t>((text.size() + 3) / 4);
}

std::string sha256_hex(std::string_view data) {
    unsigned char digest[EVP_MAX_MD_SIZE];
    unsigned int len = 0;
    if (EVP_Digest(data.data(), data.size(), digest, &len, EVP_sha256(), nullptr) != 1) {
        throw Error("sha256 digest failed");
    }
    static constexpr char kHex[] = "0123456789abcdef";
    std::string out;
    out.reserve(len * 2);
    for (unsigned int i = 0; i < len; ++i) {
        out.push_back(kHex[digest[i] >> 4]);
        out.push_back(kHex[digest[i] & 0xF]);
    }
    return out;
}

std::string transcript_digest(const std::string& model_name, const GenerationParams& params,
                              const ChatTranscript& transcript) {
    json key{{"model", model_name}, {"params", params}, {"messages", transcript}};
    return sha256_hex(key.dump());
}

// --- ScriptedTransport -------------------------------------------------------

ScriptedTransport::ScriptedTransport(std::vector<TransportReply> queue, std::vector<Rule> rules, bool repeat_last)
    : queue_(queue.begin(), queue.end()), rules_(std::move(rules)), repeat_last_(repeat_last) {}

namespace {

TransportReply reply_from_json(const json& j) {
    if (j.is_string()) return {j.get<std::string>(), std::nullopt, std::nullopt};
    TransportReply r;
    r.text = j.at("text").get<std::string>();
    if (j.contains("input_tokens")) r.input_tokens = j.at("input_tokens").get<std::int64_t>();
    if (j.contains("output_tokens")) r.output_tokens = j.at("output_tokens").get<std::int64_t>();
    return r;
}

}  // namespace

std::shared_ptr<ScriptedTransport> ScriptedTransport::from_json(const json& script) {
    std::vector<TransportReply> queue;
    std::vector<Rule> rules;
    if (script.is_array()) {
        for (const auto& r : script) queue.push_back(reply_from_json(r));
        return std::make_shared<ScriptedTransport>(std::move(queue));
    }
    for (const auto& r : script.value("queue", json::array())) queue.push_back(reply_from_json(r));
    for (const auto& r : script.value("rules", json::array())) {
        rules.push_back(Rule{r.at("match").get<std::string>(), reply_from_json(r.at("reply"))});
    }
    return std::make_shared<ScriptedTransport>(std::move(queue), std::move(rules),
                                               script.value("repeat_last", false));
}

std::shared_ptr<ScriptedTransport> ScriptedTransport::load(const std::filesystem::path& file) {
    std::ifstream in(file);
    if (!in) throw ConfigError("cannot open script file: " + file.string());
    return from_json(json::parse(in));
}

std::size_t ScriptedTransport::remaining() const {
    std::lock_guard lock(mu_);
    return queue_.size();
}

TransportReply ScriptedTransport::do_send(const ModelRef& /*model*/, const ChatTranscript& transcript) {
    std::lock_guard lock(mu_);
    for (const auto& rule : rules_) {
        for (const auto& m : transcript) {
            if (m.content.find(rule.match) != std::string::npos) return rule.reply;
        }
    }
    if (!queue_.empty()) {
        last_ = queue_.front();
        queue_.pop_front();
        return *last_;
    }
    if (repeat_last_ && last_) return *last_;
    throw TransportError("scripted transport exhausted");
}

// --- HttpTransport -----------------------------------------------------------

HttpTransport::HttpTransport() : HttpTransport(Options{}) {}
HttpTransport::HttpTransport(Options options) : options_(options) {}

json HttpTransport::request_body(const ModelRef& model, const ChatTranscript& transcript) {
    json messages = json::array();
    for (const auto& m : transcript) {
        // Tool output travels as user text already framed in <tool_response>.
        auto role = m.role == Role::Tool ? Role::User : m.role;
        messages.push_back({{"role", to_string(role)}, {"content", m.content}});
    }
    return json{{"model", model.model_name},
                {"messages", std::move(messages)},
                {"max_tokens", model.params.max_tokens},
                {"temperature", model.params.temperature},
                {"top_p", model.params.top_p},
                {"top_k", model.params.top_k},
                {"repetition_penalty", model.params.repetition_penalty}};
}

TransportReply HttpTransport::parse_response(const json& body) {
    const auto& choices = body.at("choices");
    if (!choices.is_array() || choices.empty()) throw TransportError("response carries no choices");
    const auto& content = choices.at(0).at("message").at("content");
    TransportReply r;
    r.text = content.is_null() ? std::string{} : content.get<std::string>();
    if (auto usage = body.find("usage"); usage != body.end() && usage->is_object()) {
        if (usage->contains("prompt_tokens")) r.input_tokens = usage->at("prompt_tokens").get<std::int64_t>();
        if (usage->contains("completion_tokens")) {
            r.output_tokens = usage->at("completion_tokens").get<std::int64_t>();
        }
    }
    return r;
}

TransportReply HttpTransport::do_send(const ModelRef& model, const ChatTranscript& transcript) {
    auto [origin, path] = detail::split_url(model.endpoint);
    if (!path.ends_with("/chat/completions")) {
        if (path.back() != '/') path.push_back('/');
        path += "chat/completions";
    }
    httplib::Client client(origin);
    client.set_read_timeout(options_.timeout);
    client.set_write_timeout(options_.timeout);
    httplib::Headers headers;
    if (!model.api_key_env.empty()) {
        const char* key = std::getenv(model.api_key_env.c_str());
        if (key == nullptr) throw ConfigError("environment variable " + model.api_key_env + " is not set");
        headers.emplace("Authorization", std::string("Bearer ") + key);
    }
    auto res = client.Post(path, headers, request_body(model, transcript).dump(), "application/json");
    if (!res) throw TransportError("request to " + origin + " failed: " + httplib::to_string(res.error()));
    if (res->status < 200 || res->status >= 300) throw EndpointError(res->status, res->body);
    auto body = json::parse(res->body, nullptr, false);
    if (body.is_discarded()) throw TransportError("endpoint returned non-JSON body");
    try {
        return parse_response(body);
    } catch (const json::exception& e) {
        throw TransportError(std::string("unexpected response shape: ") + e.what());
    }
}

// --- ResponseCache -----------------------------------------------------------

ResponseCache::ResponseCache(std::filesystem::path dir) : dir_(std::move(dir)) {}

namespace {

json result_to_json(const CompletionResult& r) {
    return json{{"text", r.text},
                {"input_tokens", r.input_tokens},
                {"output_tokens", r.output_tokens},
                {"token_source", to_string(r.token_source)}};
}

CompletionResult result_from_json(const json& j) {
    CompletionResult r;
    r.text = j.at("text").get<std::string>();
    r.input_tokens = j.at("input_tokens").get<std::int64_t>();
    r.output_tokens = j.at("output_tokens").get<std::int64_t>();
    r.token_source = j.at("token_source").get<std::string>() == "estimated" ? TokenSource::Estimated
                                                                              : TokenSource::EndpointReported;
    return r;
}

}  // namespace

std::optional<CompletionResult> ResponseCache::get(const std::string& key) const {
    {
        std::shared_lock lock(mu_);
        if (auto it = memory_.find(key); it != memory_.end()) return it->second;
    }
    if (!dir_) return std::nullopt;
    std::ifstream in(*dir_ / (key + ".json"));
    if (!in) return std::nullopt;
    auto doc = json::parse(in, nullptr, false);
    if (doc.is_discarded()) return std::nullopt;
    auto result = result_from_json(doc);
    std::unique_lock lock(mu_);
    memory_.emplace(key, result);
    return result;
}

void ResponseCache::put(const std::string& key, const CompletionResult& result) {
    std::unique_lock lock(mu_);
    auto stored = result;
    stored.from_cache = false;
    memory_[key] = stored;
    if (!dir_) return;
    std::filesystem::create_directories(*dir_);
    auto final_path = *dir_ / (key + ".json");
    auto tmp = final_path;
    tmp += ".tmp";
    {
        std::ofstream out(tmp, std::ios::trunc);
        out << result_to_json(stored).dump();
    }
    std::filesystem::rename(tmp, final_path);
}

std::size_t ResponseCache::size() const {
    std::shared_lock lock(mu_);
    return memory_.size();
}

// --- Gateway -----------------------------------------------------------------

Gateway::Gateway(GatewayOptions options, std::shared_ptr<ResponseCache> cache)
    : options_(std::move(options)), cache_(std::move(cache)) {
    if (!options_.sleeper) {
        options_.sleeper = [](std::chrono::milliseconds d) { std::this_thread::sleep_for(d); };
    }
}

void Gateway::register_transport(const std::string& alias, std::shared_ptr<Transport> transport) {
    std::lock_guard lock(mu_);
    transports_[alias] = std::move(transport);
}

std::size_t Gateway::transport_calls() const {
    std::lock_guard lock(mu_);
    std::size_t total = http_ ? http_->calls() : 0;
    for (const auto& [alias, t] : transports_) total += t->calls();
    return total;
}

std::shared_ptr<Transport> Gateway::transport_for(const ModelRef& model) {
    std::lock_guard lock(mu_);
    if (auto it = transports_.find(model.alias); it != transports_.end()) return it->second;
    if (model.endpoint.starts_with("http://") || model.endpoint.starts_with("https://")) {
        if (!http_) http_ = std::make_shared<HttpTransport>();
        return http_;
    }
    throw ConfigError("no transport registered for model alias '" + model.alias + "'");
}

std::counting_semaphore<>& Gateway::limiter_for(const std::string& endpoint) {
    std::lock_guard lock(mu_);
    auto& slot = limiters_[endpoint];
    if (!slot) slot = std::make_unique<std::counting_semaphore<>>(std::max<std::ptrdiff_t>(1, options_.max_in_flight_per_endpoint));
    return *slot;
}

CompletionResult Gateway::complete(const ModelRef& model, const ChatTranscript& transcript) {
    if (transcript.empty()) throw std::invalid_argument("complete: transcript is empty");
    if (transcript.front().role != Role::System && transcript.front().role != Role::User) {
        throw std::invalid_argument("complete: first message must be system or user");
    }

    const auto key = transcript_digest(model.model_name, model.params, transcript);
    if (cache_) {
        if (auto hit = cache_->get(key)) {
            hit->from_cache = true;
            return *hit;
        }
    }
    if (options_.token_budget && tokens_spent_.load() >= *options_.token_budget) {
        throw BudgetExceeded("token budget of " + std::to_string(*options_.token_budget) + " reached");
    }

    auto transport = transport_for(model);
    auto& limiter = limiter_for(model.endpoint);

    TransportReply reply;
    for (int attempt = 0;; ++attempt) {
        try {
            limiter.acquire();
            struct Release {
                std::counting_semaphore<>& s;
                ~Release() { s.release(); }
            } release{limiter};
            reply = transport->send(model, transcript);
            break;
        } catch (const TransportError&) {
            if (attempt >= options_.max_retries) throw;
        } catch (const EndpointError& e) {
            const bool retryable = e.status() == 429 || e.status() >= 500;
            if (!retryable || attempt >= options_.max_retries) throw;
        }
        options_.sleeper(options_.base_backoff * (1 << attempt));
    }

    CompletionResult result;
    result.text = std::move(reply.text);
    if (reply.input_tokens && reply.output_tokens) {
        result.input_tokens = *reply.input_tokens;
        result.output_tokens = *reply.output_tokens;
        result.token_source = TokenSource::EndpointReported;
    } else {
        std::int64_t in = 0;
        for (const auto& m : transcript) in += estimate_tokens(m.content);
        result.input_tokens = reply.input_tokens.value_or(in);
        result.output_tokens = reply.output_tokens.value_or(estimate_tokens(result.text));
        result.token_source = TokenSource::Estimated;
    }
    tokens_spent_ += result.input_tokens + result.output_tokens;
    if (cache_) cache_->put(key, result);
    return result;
}

}  // namespace futuremind
