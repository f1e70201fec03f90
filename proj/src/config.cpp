#include "futuremind/config.hpp"

#include <cctype>
#include <cstdlib>
#include <fstream>
#include <sstream>

#include "futuremind/text.hpp"

namespace futuremind {

namespace {

class LineParser {
public:
    LineParser(std::string_view s, std::size_t line_no) : s_(s), line_(line_no) {}

    [[noreturn]] void fail(const std::string& what) const {
        throw ConfigError("config line " + std::to_string(line_) + ": " + what);
    }

    void skip_ws() {
        while (pos_ < s_.size() && (s_[pos_] == ' ' || s_[pos_] == '\t')) ++pos_;
    }

    bool at_end_or_comment() {
        skip_ws();
        return pos_ >= s_.size() || s_[pos_] == '#';
    }

    std::string bare_key() {
        skip_ws();
        std::size_t start = pos_;
        while (pos_ < s_.size() &&
               (std::isalnum(static_cast<unsigned char>(s_[pos_])) || s_[pos_] == '_' || s_[pos_] == '-')) {
            ++pos_;
        }
        if (start == pos_) fail("expected a key");
        return std::string(s_.substr(start, pos_ - start));
    }

    void expect(char c) {
        skip_ws();
        if (pos_ >= s_.size() || s_[pos_] != c) fail(std::string("expected '") + c + "'");
        ++pos_;
    }

    ordered_json value() {
        skip_ws();
        if (pos_ >= s_.size()) fail("missing value");
        char c = s_[pos_];
        if (c == '"') return basic_string();
        if (c == '\'') return literal_string();
        if (c == '[') return array();
        return scalar();
    }

private:
    ordered_json basic_string() {
        ++pos_;
        std::string out;
        while (pos_ < s_.size() && s_[pos_] != '"') {
            char c = s_[pos_++];
            if (c != '\\') {
                out.push_back(c);
                continue;
            }
            if (pos_ >= s_.size()) fail("dangling escape");
            char e = s_[pos_++];
            switch (e) {
                case 'n': out.push_back('\n'); break;
                case 't': out.push_back('\t'); break;
                case 'r': out.push_back('\r'); break;
                case '"': out.push_back('"'); break;
                case '\\': out.push_back('\\'); break;
                default: fail(std::string("unsupported escape \\") + e);
            }
        }
        if (pos_ >= s_.size()) fail("unterminated string");
        ++pos_;
        return out;
    }

    ordered_json literal_string() {
        ++pos_;
        auto end = s_.find('\'', pos_);
        if (end == std::string_view::npos) fail("unterminated string");
        std::string out(s_.substr(pos_, end - pos_));
        pos_ = end + 1;
        return out;
    }

    ordered_json array() {
        ++pos_;
        ordered_json out = ordered_json::array();
        skip_ws();
        if (pos_ < s_.size() && s_[pos_] == ']') {
            ++pos_;
            return out;
        }
        while (true) {
            out.push_back(value());
            skip_ws();
            if (pos_ >= s_.size()) fail("unterminated array");
            if (s_[pos_] == ',') {
                ++pos_;
                skip_ws();
                if (pos_ < s_.size() && s_[pos_] == ']') {
                    ++pos_;
                    return out;
                }
                continue;
            }
            if (s_[pos_] == ']') {
                ++pos_;
                return out;
            }
            fail("expected ',' or ']' in array");
        }
    }

    ordered_json scalar() {
        std::size_t start = pos_;
        while (pos_ < s_.size() && s_[pos_] != ',' && s_[pos_] != ']' && s_[pos_] != '#' && s_[pos_] != ' ' &&
               s_[pos_] != '\t') {
            ++pos_;
        }
        std::string tok(s_.substr(start, pos_ - start));
        if (tok == "true") return true;
        if (tok == "false") return false;
        std::string digits;
        for (char c : tok) {
            if (c != '_') digits.push_back(c);
        }
        if (digits.empty()) fail("missing value");
        char* end = nullptr;
        bool is_float = digits.find_first_of(".eE") != std::string::npos;
        if (!is_float) {
            long long v = std::strtoll(digits.c_str(), &end, 10);
            if (end != nullptr && *end == '\0') return static_cast<std::int64_t>(v);
        } else {
            double v = std::strtod(digits.c_str(), &end);
            if (end != nullptr && *end == '\0') return v;
        }
        fail("unrecognized value '" + tok + "'");
    }

    std::string_view s_;
    std::size_t line_;
    std::size_t pos_ = 0;
};

ordered_json& descend(ordered_json& root, const std::vector<std::string>& path, std::size_t line) {
    ordered_json* node = &root;
    for (const auto& key : path) {
        if (!node->contains(key)) (*node)[key] = ordered_json::object();
        node = &(*node)[key];
        if (!node->is_object()) {
            throw ConfigError("config line " + std::to_string(line) + ": '" + key + "' is not a table");
        }
    }
    return *node;
}

bool bare_ok(const std::string& key) {
    if (key.empty()) return false;
    for (char c : key) {
        if (!(std::isalnum(static_cast<unsigned char>(c)) || c == '_' || c == '-')) return false;
    }
    return true;
}

std::string render_value(const ordered_json& v) {
    if (v.is_string()) {
        std::string out = "\"";
        for (char c : v.get<std::string>()) {
            switch (c) {
                case '"': out += "\\\""; break;
                case '\\': out += "\\\\"; break;
                case '\n': out += "\\n"; break;
                case '\t': out += "\\t"; break;
                case '\r': out += "\\r"; break;
                default: out.push_back(c);
            }
        }
        return out + "\"";
    }
    if (v.is_array()) {
        std::string out = "[";
        for (std::size_t i = 0; i < v.size(); ++i) {
            if (i) out += ", ";
            out += render_value(v[i]);
        }
        return out + "]";
    }
    if (v.is_number_float()) {
        std::ostringstream os;
        os.precision(17);
        os << v.get<double>();
        std::string s = os.str();
        if (s.find_first_of(".eE") == std::string::npos) s += ".0";
        return s;
    }
    return v.dump();
}

void serialize_table(const ordered_json& table, const std::string& prefix, std::string& out) {
    for (const auto& [k, v] : table.items()) {
        if (!bare_ok(k)) throw ConfigError("config key cannot be serialized: " + k);
        if (!v.is_object()) out += k + " = " + render_value(v) + "\n";
    }
    for (const auto& [k, v] : table.items()) {
        if (!v.is_object()) continue;
        std::string path = prefix.empty() ? k : prefix + "." + k;
        bool has_scalars = false;
        for (const auto& [ik, iv] : v.items()) has_scalars = has_scalars || !iv.is_object();
        if (has_scalars || v.empty()) {
            if (!out.empty()) out += "\n";
            out += "[" + path + "]\n";
        }
        serialize_table(v, path, out);
    }
}

}  // namespace

ordered_json parse_config_text(std::string_view text) {
    ordered_json root = ordered_json::object();
    ordered_json* current = &root;
    std::size_t line_no = 0;
    for (auto raw : text::split_lines(text)) {
        ++line_no;
        LineParser p(raw, line_no);
        if (p.at_end_or_comment()) continue;
        auto line = text::trim(raw);
        if (line.front() == '[') {
            auto close = line.find(']');
            if (close == std::string_view::npos) p.fail("unterminated table header");
            auto rest = text::trim(line.substr(close + 1));
            if (!rest.empty() && rest.front() != '#') p.fail("text after table header");
            std::vector<std::string> path;
            std::string name(text::trim(line.substr(1, close - 1)));
            std::size_t start = 0;
            while (true) {
                auto dot = name.find('.', start);
                std::string part(text::trim(std::string_view(name).substr(start, dot - start)));
                if (!bare_ok(part)) p.fail("bad table name '" + name + "'");
                path.push_back(part);
                if (dot == std::string::npos) break;
                start = dot + 1;
            }
            current = &descend(root, path, line_no);
            continue;
        }
        std::string key = p.bare_key();
        p.expect('=');
        ordered_json v = p.value();
        if (!p.at_end_or_comment()) p.fail("unexpected text after value");
        if (current->contains(key)) p.fail("duplicate key '" + key + "'");
        (*current)[key] = std::move(v);
    }
    return root;
}

std::string serialize_config(const ordered_json& doc) {
    std::string out;
    serialize_table(doc, "", out);
    return out;
}

EnvLookup process_env() {
    return [](const std::string& name) -> std::optional<std::string> {
        const char* v = std::getenv(name.c_str());
        if (v == nullptr) return std::nullopt;
        return std::string(v);
    };
}

std::string interpolate_env(std::string_view s, const EnvLookup& env) {
    std::string out;
    for (std::size_t i = 0; i < s.size(); ++i) {
        if (s[i] != '$' || i + 1 >= s.size()) {
            out.push_back(s[i]);
            continue;
        }
        if (s[i + 1] == '$') {
            out.push_back('$');
            ++i;
            continue;
        }
        if (s[i + 1] != '{') {
            out.push_back('$');
            continue;
        }
        auto close = s.find('}', i + 2);
        if (close == std::string_view::npos) throw ConfigError("unterminated ${ in config value");
        std::string name(s.substr(i + 2, close - i - 2));
        auto value = env(name);
        if (!value) throw ConfigError("environment variable " + name + " is not set");
        out += *value;
        i = close;
    }
    return out;
}

// --- RunConfig -------------------------------------------------------------------

const ModelRef& RunConfig::model(const std::string& alias) const {
    auto it = models.find(alias);
    if (it == models.end()) throw ConfigError("config has no model '" + alias + "'");
    return it->second;
}

namespace {

class Reader {
public:
    Reader(const ordered_json& table, std::string where, const EnvLookup& env)
        : t_(table), where_(std::move(where)), env_(env) {}

    std::optional<std::string> str(const std::string& key) const {
        if (!t_.contains(key)) return std::nullopt;
        const auto& v = t_.at(key);
        if (!v.is_string()) throw ConfigError(where_ + "." + key + " must be a string");
        return interpolate_env(v.get<std::string>(), env_);
    }
    template <class T>
    std::optional<T> num(const std::string& key) const {
        if (!t_.contains(key)) return std::nullopt;
        const auto& v = t_.at(key);
        if (!v.is_number()) throw ConfigError(where_ + "." + key + " must be a number");
        return v.get<T>();
    }
    std::optional<bool> flag(const std::string& key) const {
        if (!t_.contains(key)) return std::nullopt;
        const auto& v = t_.at(key);
        if (!v.is_boolean()) throw ConfigError(where_ + "." + key + " must be true or false");
        return v.get<bool>();
    }
    Reader sub(const std::string& key) const {
        static const ordered_json empty = ordered_json::object();
        if (!t_.contains(key)) return Reader(empty, where_ + "." + key, env_);
        if (!t_.at(key).is_object()) throw ConfigError(where_ + "." + key + " must be a table");
        return Reader(t_.at(key), where_.empty() ? key : where_ + "." + key, env_);
    }
    const ordered_json& table() const { return t_; }

private:
    const ordered_json& t_;
    std::string where_;
    const EnvLookup& env_;
};

std::filesystem::path resolve(const std::filesystem::path& base, const std::string& p) {
    std::filesystem::path path(p);
    return path.is_absolute() ? path : base / path;
}

template <class T>
void set_if(T& target, const std::optional<T>& v) {
    if (v) target = *v;
}

}  // namespace

RunConfig run_config_from_doc(const ordered_json& doc, const std::filesystem::path& base_dir, const EnvLookup& env) {
    RunConfig c;
    c.raw = doc;
    Reader root(doc, "", env);

    for (const auto& [alias, table] : root.sub("models").table().items()) {
        if (!table.is_object()) throw ConfigError("models." + alias + " must be a table");
        Reader m(table, "models." + alias, env);
        ModelRef ref;
        ref.alias = alias;
        ref.endpoint = m.str("endpoint").value_or("");
        if (ref.endpoint.empty()) throw ConfigError("models." + alias + ".endpoint is required");
        if (ref.endpoint.rfind("scripted:", 0) == 0) {
            ref.endpoint = "scripted:" + resolve(base_dir, ref.endpoint.substr(9)).string();
        }
        ref.model_name = m.str("model").value_or(alias);
        ref.api_key_env = m.str("api_key_env").value_or("");
        set_if(ref.params.max_tokens, m.num<std::int64_t>("max_tokens"));
        set_if(ref.params.temperature, m.num<double>("temperature"));
        set_if(ref.params.top_p, m.num<double>("top_p"));
        set_if(ref.params.top_k, m.num<std::int64_t>("top_k"));
        set_if(ref.params.repetition_penalty, m.num<double>("repetition_penalty"));
        c.models.emplace(alias, std::move(ref));
    }

    auto s = root.sub("search");
    set_if(c.search.backend, s.str("backend"));
    if (c.search.backend != "fixture" && c.search.backend != "live") {
        throw ConfigError("search.backend must be \"fixture\" or \"live\"");
    }
    if (auto corpus = s.str("corpus")) c.search.corpus = resolve(base_dir, *corpus);
    set_if(c.search.live.key_env, s.str("key_env"));
    set_if(c.search.live.engine_env, s.str("engine_env"));
    set_if(c.search.live.endpoint, s.str("endpoint"));
    set_if(c.search.live.queries_per_second, s.num<double>("queries_per_second"));
    set_if(c.search.parallel.top_k, s.num<std::size_t>("top_k"));
    set_if(c.search.parallel.max_queries, s.num<std::size_t>("max_queries"));
    set_if(c.search.parallel.max_parallel, s.num<std::size_t>("max_parallel"));
    set_if(c.pipeline.render.snippet_bytes, s.num<std::size_t>("snippet_bytes"));

    auto p = root.sub("pipeline");
    if (auto name = p.str("name")) {
        auto parsed = parse_pipeline(*name);
        if (!parsed) throw ConfigError("unknown pipeline '" + *name + "'");
        c.pipeline.pipeline = *parsed;
    }
    set_if(c.pipeline.step_budget, p.num<std::int64_t>("step_budget"));
    set_if(c.pipeline.search_limit, p.num<std::int64_t>("search_limit"));
    set_if(c.pipeline.rag_top_k, p.num<std::size_t>("rag_top_k"));
    set_if(c.pipeline.force_answer_on_budget, p.flag("force_answer_on_budget"));
    if (c.pipeline.step_budget < 1) throw ConfigError("pipeline.step_budget must be at least 1");
    if (c.pipeline.search_limit < 1) throw ConfigError("pipeline.search_limit must be at least 1");

    auto pr = root.sub("prices");
    set_if(c.prices.input_per_million, pr.num<double>("input_per_million"));
    set_if(c.prices.output_per_million, pr.num<double>("output_per_million"));
    set_if(c.prices.per_thousand_queries, pr.num<double>("per_thousand_queries"));
    c.prices.validate();

    auto r = root.sub("run");
    if (auto dir = r.str("cache_dir")) c.cache_dir = resolve(base_dir, *dir);
    if (auto dir = r.str("output_dir")) c.output_dir = resolve(base_dir, *dir);
    if (auto dir = r.str("prompts_dir")) c.prompts_dir = resolve(base_dir, *dir);
    set_if(c.workers, r.num<std::size_t>("workers"));
    set_if(c.max_retries, r.num<int>("max_retries"));
    set_if(c.backoff_ms, r.num<std::int64_t>("backoff_ms"));
    set_if(c.max_in_flight, r.num<std::ptrdiff_t>("max_in_flight"));
    if (auto b = r.num<std::int64_t>("token_budget")) c.token_budget = *b;
    if (c.workers == 0) throw ConfigError("run.workers must be at least 1");

    for (const auto& alias : {"student"}) {
        if (!c.has_model(alias)) throw ConfigError(std::string("config must define models.") + alias);
    }
    return c;
}

RunConfig load_run_config(const std::filesystem::path& file, const EnvLookup& env) {
    std::ifstream in(file, std::ios::binary);
    if (!in) throw ConfigError("cannot open config file: " + file.string());
    std::stringstream buf;
    buf << in.rdbuf();
    return run_config_from_doc(parse_config_text(buf.str()), file.parent_path(), env);
}

// --- runtime ---------------------------------------------------------------------

std::size_t Runtime::transport_calls() const { return gateway ? gateway->transport_calls() : 0; }

std::unique_ptr<Runtime> make_runtime(RunConfig config, const EnvLookup& env) {
    auto rt = std::make_unique<Runtime>();
    rt->config = std::move(config);
    const auto& c = rt->config;

    rt->cache = c.cache_dir ? std::make_shared<ResponseCache>(*c.cache_dir) : std::make_shared<ResponseCache>();
    GatewayOptions opts;
    opts.max_retries = c.max_retries;
    opts.base_backoff = std::chrono::milliseconds(c.backoff_ms);
    opts.token_budget = c.token_budget;
    opts.max_in_flight_per_endpoint = c.max_in_flight;
    rt->gateway = std::make_unique<Gateway>(opts, rt->cache);

    for (const auto& [alias, ref] : c.models) {
        if (ref.endpoint.rfind("scripted:", 0) == 0) {
            auto t = ScriptedTransport::load(ref.endpoint.substr(9));
            rt->transports[alias] = t;
            rt->gateway->register_transport(alias, t);
        } else if (ref.endpoint.rfind("http://", 0) == 0 || ref.endpoint.rfind("https://", 0) == 0) {
            if (!ref.api_key_env.empty() && !env(ref.api_key_env)) {
                throw ConfigError("environment variable " + ref.api_key_env + " is not set (needed by model '" +
                                  alias + "')");
            }
        } else {
            throw ConfigError("models." + alias + ".endpoint must be http(s)://… or scripted:<file>");
        }
    }

    std::shared_ptr<SearchBackend> backend;
    if (c.search.backend == "live") {
        for (const auto& var : {c.search.live.key_env, c.search.live.engine_env}) {
            if (!env(var)) throw ConfigError("environment variable " + var + " is not set (needed by live search)");
        }
        backend = std::make_shared<LiveWebSearch>(c.search.live);
    } else if (!c.search.corpus.empty()) {
        backend = FixtureCorpus::load(c.search.corpus);
    } else {
        backend = std::make_shared<FixtureCorpus>(std::vector<FixtureDocument>{});
    }
    rt->search = std::make_unique<ParallelSearch>(backend, c.search.parallel);

    if (c.has_model("teacher") && !c.prompts_dir.empty()) {
        rt->thinking = std::make_unique<ThinkingTool>(*rt->gateway, c.model("teacher"),
                                                      TeacherPromptAssets::load(c.prompts_dir));
    }
    return rt;
}

}  // namespace futuremind
