#include <gtest/gtest.h>

#include <fstream>

#include "futuremind/config.hpp"
#include "test_support.hpp"

using namespace futuremind;
using namespace fmtest;

namespace {

EnvLookup env_of(std::map<std::string, std::string> vars) {
    return [vars = std::move(vars)](const std::string& name) -> std::optional<std::string> {
        auto it = vars.find(name);
        if (it == vars.end()) return std::nullopt;
        return it->second;
    };
}

void write(const std::filesystem::path& p, const std::string& s) {
    std::ofstream(p, std::ios::binary) << s;
}

}  // namespace

TEST(ConfigText, ParsesTablesScalarsAndArrays) {
    auto doc = parse_config_text(R"(
# comment
title = "run"   # trailing
[models.student]
endpoint = 'scripted:s.json'
model = "a \"quoted\" name"
[pipeline]
step_budget = 10
force_answer_on_budget = false
ratio = 0.5
big = 1_000
names = ["a", 'b', ]
)");
    EXPECT_EQ(doc["title"], "run");
    EXPECT_EQ(doc["models"]["student"]["endpoint"], "scripted:s.json");
    EXPECT_EQ(doc["models"]["student"]["model"], "a \"quoted\" name");
    EXPECT_EQ(doc["pipeline"]["step_budget"], 10);
    EXPECT_EQ(doc["pipeline"]["force_answer_on_budget"], false);
    EXPECT_DOUBLE_EQ(doc["pipeline"]["ratio"].get<double>(), 0.5);
    EXPECT_EQ(doc["pipeline"]["big"], 1000);
    EXPECT_EQ(doc["pipeline"]["names"], ordered_json::array({"a", "b"}));
}

TEST(ConfigText, ErrorsCarryLineNumbers) {
    try {
        parse_config_text("a = 1\nb = \"open\n");
        FAIL() << "expected ConfigError";
    } catch (const ConfigError& e) {
        EXPECT_NE(std::string(e.what()).find("line 2"), std::string::npos) << e.what();
    }
    EXPECT_THROW(parse_config_text("a = 1\na = 2\n"), ConfigError);
    EXPECT_THROW(parse_config_text("[x\n"), ConfigError);
    EXPECT_THROW(parse_config_text("a = nope\n"), ConfigError);
}

TEST(ConfigText, SerializeRoundTrips) {
    const auto text = slurp(data_dir() / "live.example.toml");
    auto doc = parse_config_text(text);
    auto again = parse_config_text(serialize_config(doc));
    EXPECT_EQ(doc, again);
    EXPECT_EQ(serialize_config(doc), serialize_config(again));
    // References stay unexpanded in the serialized form.
    EXPECT_NE(serialize_config(doc).find("${STUDENT_ENDPOINT}"), std::string::npos);
}

TEST(ConfigEnv, InterpolatesAndNamesMissingVariables) {
    auto env = env_of({{"HOST", "example.org"}, {"PORT", "8080"}});
    EXPECT_EQ(interpolate_env("https://${HOST}:${PORT}/v1", env), "https://example.org:8080/v1");
    EXPECT_EQ(interpolate_env("cost $$5 and $x", env), "cost $5 and $x");
    try {
        interpolate_env("${NOPE_VAR}", env);
        FAIL() << "expected ConfigError";
    } catch (const ConfigError& e) {
        EXPECT_NE(std::string(e.what()).find("NOPE_VAR"), std::string::npos);
    }
    EXPECT_THROW(interpolate_env("${OPEN", env), ConfigError);
}

TEST(RunConfigLoad, TrajectoryConfig) {
    auto c = load_run_config(data_dir() / "trajectory" / "config.toml", env_of({}));
    EXPECT_EQ(c.pipeline.pipeline, Pipeline::TcFm);
    EXPECT_EQ(c.pipeline.step_budget, 10);
    ASSERT_TRUE(c.has_model("student"));
    ASSERT_TRUE(c.has_model("teacher"));
    EXPECT_EQ(c.model("student").model_name, "qwen2.5-7b-instruct");
    EXPECT_EQ(c.model("student").params, default_generation_params());
    EXPECT_EQ(c.model("student").endpoint.rfind("scripted:", 0), 0u);
    EXPECT_TRUE(std::filesystem::exists(c.model("student").endpoint.substr(9)));
    EXPECT_TRUE(std::filesystem::exists(c.search.corpus / "manifest.json"));
    EXPECT_EQ(c.workers, 1u);
    EXPECT_THROW(c.model("judge"), ConfigError);
}

TEST(RunConfigLoad, SampleEvalConfigHasJudgeAndPrices) {
    auto c = load_run_config(data_dir() / "sample_eval" / "config.toml", env_of({}));
    EXPECT_EQ(c.pipeline.pipeline, Pipeline::Tc);
    EXPECT_TRUE(c.has_model("judge"));
    EXPECT_DOUBLE_EQ(c.prices.input_per_million, 0.15);
    EXPECT_DOUBLE_EQ(c.prices.output_per_million, 0.60);
    EXPECT_DOUBLE_EQ(c.prices.per_thousand_queries, 5.0);
    ASSERT_TRUE(c.cache_dir.has_value());
    EXPECT_EQ(c.workers, 2u);
}

TEST(RunConfigLoad, LiveTemplateNeedsItsVariables) {
    const auto path = data_dir() / "live.example.toml";
    try {
        load_run_config(path, env_of({}));
        FAIL() << "expected ConfigError";
    } catch (const ConfigError& e) {
        EXPECT_NE(std::string(e.what()).find("STUDENT_ENDPOINT"), std::string::npos) << e.what();
    }
    auto env = env_of({{"STUDENT_ENDPOINT", "https://student.example/v1"},
                       {"TEACHER_ENDPOINT", "https://teacher.example/v1"}});
    auto c = load_run_config(path, env);
    EXPECT_EQ(c.model("student").endpoint, "https://student.example/v1");
    EXPECT_EQ(c.model("teacher").api_key_env, "TEACHER_API_KEY");
    EXPECT_EQ(c.search.backend, "live");
    // The raw document keeps the reference, so digests and echoes never carry values.
    EXPECT_EQ(c.raw["models"]["student"]["endpoint"], "${STUDENT_ENDPOINT}");

    try {
        make_runtime(c, env);
        FAIL() << "expected ConfigError";
    } catch (const ConfigError& e) {
        EXPECT_NE(std::string(e.what()).find("_API_KEY"), std::string::npos) << e.what();
    }
    auto full = env_of({{"STUDENT_ENDPOINT", "https://student.example/v1"},
                        {"TEACHER_ENDPOINT", "https://teacher.example/v1"},
                        {"STUDENT_API_KEY", "k"},
                        {"TEACHER_API_KEY", "k"},
                        {"OPENAI_API_KEY", "k"}});
    try {
        make_runtime(load_run_config(path, full), full);
        FAIL() << "expected ConfigError";
    } catch (const ConfigError& e) {
        EXPECT_NE(std::string(e.what()).find("GOOGLE_API_KEY"), std::string::npos) << e.what();
    }
}

TEST(RunConfigLoad, RejectsBadValues) {
    TempDir dir("cfg-bad");
    auto path = dir.path() / "c.toml";
    write(path, "[pipeline]\nname = \"tc\"\n");
    EXPECT_THROW(load_run_config(path, env_of({})), ConfigError);  // no student

    write(path, "[models.student]\nendpoint = \"scripted:x.json\"\n[pipeline]\nname = \"bogus\"\n");
    EXPECT_THROW(load_run_config(path, env_of({})), ConfigError);

    write(path, "[models.student]\nendpoint = \"scripted:x.json\"\n[pipeline]\nstep_budget = 0\n");
    EXPECT_THROW(load_run_config(path, env_of({})), ConfigError);

    write(path, "[models.student]\nendpoint = \"scripted:x.json\"\n[prices]\ninput_per_million = -1\n");
    EXPECT_THROW(load_run_config(path, env_of({})), ConfigError);

    write(path, "[models.student]\nendpoint = \"ftp://nowhere\"\n");
    auto c = load_run_config(path, env_of({}));
    EXPECT_THROW(make_runtime(c, env_of({})), ConfigError);
}

TEST(Runtime, TrajectoryRuntimeWiresEverything) {
    auto c = load_run_config(data_dir() / "trajectory" / "config.toml", env_of({}));
    auto rt = make_runtime(c, env_of({}));
    ASSERT_NE(rt->gateway, nullptr);
    ASSERT_NE(rt->search, nullptr);
    ASSERT_NE(rt->thinking, nullptr);
    EXPECT_EQ(rt->transports.size(), 2u);
    EXPECT_EQ(rt->transport_calls(), 0u);
}
