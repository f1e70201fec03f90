#include <gtest/gtest.h>

#include <random>

#include "futuremind/evalkit.hpp"
#include "test_support.hpp"

using namespace futuremind;

namespace {

// Independent containment check over whitespace tokens of already-normalized strings.
bool contains_tokens(const std::string& hay, const std::string& needle) {
    return (" " + hay + " ").find(" " + needle + " ") != std::string::npos;
}

EvalRecord rec(Dataset d, Pipeline p, int e, std::optional<int> l = std::nullopt) {
    EvalRecord r;
    r.question_id = "q";
    r.dataset = d;
    r.pipeline = p;
    r.acc_e = e;
    r.acc_l = l;
    return r;
}

void add(std::vector<EvalRecord>& out, Dataset d, Pipeline p, int correct, int total) {
    for (int i = 0; i < total; ++i) out.push_back(rec(d, p, i < correct ? 1 : 0));
}

}  // namespace

TEST(Evalkit, NormalizeExamples) {
    EXPECT_EQ(normalize_text("The 15th Century."), "15th century");
    EXPECT_EQ(normalize_text(""), "");
    EXPECT_EQ(normalize_text("  A   cat,  an apple; THE end!  "), "cat apple end");
    EXPECT_EQ(normalize_text("Ｐａｌａｕ"), "palau");  // full-width folds under NFKC
    EXPECT_EQ(normalize_text("Straße"), "strasse");
    EXPECT_EQ(normalize_text("Gerona—Barcelona"), "gerona barcelona");
    EXPECT_EQ(normalize_text("theory"), "theory");
}

TEST(Evalkit, NormalizeIsIdempotent) {
    std::mt19937_64 rng(5);
    const std::vector<std::string> pieces{"The", " ", "a", "ÉCOLE", ".", ",", "ﬁ", "Ⅸ", "1410", "\t", "(x)", "an", "über"};
    for (int i = 0; i < 500; ++i) {
        std::string s;
        for (int k = 0, n = static_cast<int>(rng() % 12); k < n; ++k) s += pieces[rng() % pieces.size()];
        auto once = normalize_text(s);
        EXPECT_EQ(normalize_text(once), once) << s;
    }
}

TEST(Evalkit, AccEExamples) {
    EXPECT_EQ(acc_e("built in the 15th century, long before 1410", {"15th century"}), 1);
    EXPECT_TRUE(contains_tokens("built in 15th century long before 1410", "15th century"));
    EXPECT_EQ(acc_e("Barcelona", {"Barcelona"}), 1);
    EXPECT_EQ(acc_e("Paris", {"London"}), 0);
    EXPECT_EQ(acc_e("Parisian food", {"Paris"}), 0);  // token containment, not substring
    EXPECT_EQ(acc_e("anything", {"the"}), 0);         // empty normalized gold never matches
    EXPECT_EQ(acc_e("", {"x"}), 0);
}

TEST(Evalkit, AccEMonotoneInGolds) {
    EXPECT_EQ(acc_e("Zaragoza province", {"Huesca"}), 0);
    EXPECT_EQ(acc_e("Zaragoza province", {"Huesca", "Zaragoza"}), 1);
}

TEST(Evalkit, AccEInvariantUnderErasedTransforms) {
    const std::vector<std::pair<std::string, std::string>> pairs{
        {"The Palau was built in the 15th century.", "15th century"},
        {"Martin died in Barcelona", "Barcelona"},
        {"Paris", "London"},
        {"It is the Province of Zaragoza", "Province of Zaragoza"}};
    auto variants = [](const std::string& s) {
        std::string upper, spaced, punct;
        for (char c : s) upper.push_back(static_cast<char>(std::toupper(static_cast<unsigned char>(c))));
        for (char c : s) spaced += (c == ' ' ? std::string("   ") : std::string(1, c));
        punct = "\"" + s + "\"!?";
        return std::vector<std::string>{s, upper, spaced, punct, "the " + s, "  " + s + " an "};
    };
    for (const auto& [pred, gold] : pairs) {
        const int base = acc_e(pred, {gold});
        for (const auto& p : variants(pred)) {
            for (const auto& g : variants(gold)) EXPECT_EQ(acc_e(p, {g}), base) << p << " | " << g;
        }
    }
}

TEST(Evalkit, JudgeParsing) {
    auto t = parse_judge_reply("True");
    EXPECT_EQ(t.verdict, 1);
    EXPECT_FALSE(t.flagged);
    auto f = parse_judge_reply("false.");
    EXPECT_EQ(f.verdict, 0);
    EXPECT_FALSE(f.flagged);
    auto u = parse_judge_reply("The answer is correct");
    EXPECT_EQ(u.verdict, 0);
    EXPECT_TRUE(u.flagged);
    EXPECT_EQ(u.raw, "The answer is correct");
    EXPECT_EQ(parse_judge_reply("**TRUE** - it matches").verdict, 1);
    EXPECT_EQ(parse_judge_reply("Untrue? False").verdict, 0);
    EXPECT_TRUE(parse_judge_reply("").flagged);
}

TEST(Evalkit, JudgePromptAndCall) {
    auto prompt = judge_prompt("Q?", "Gold", "Pred");
    EXPECT_TRUE(prompt.starts_with("Given a Question and its Golden Answer"));
    EXPECT_TRUE(prompt.ends_with("[Question:]\nQ?\n\n[Golden Answer]\nGold\n\n[Predicted Answer]\nPred"));

    GatewayOptions o;
    o.sleeper = [](std::chrono::milliseconds) {};
    Gateway gw(o);
    gw.register_transport("judge", ScriptedTransport::from_json(json{{"queue", {"True"}}}));
    Question q{"1", "Where?", {"Barcelona", "BCN"}, Dataset::Custom};
    auto v = acc_l(q, "Barcelona", ModelRef{"judge", "scripted:x", "j", "", {}}, gw);
    EXPECT_EQ(v.verdict, 1);
    EXPECT_GT(v.ledger.input_tokens, 0);
}

TEST(Evalkit, LoadFamilies) {
    auto twowiki = parse_dataset_text(R"([{"_id":"a1","question":"Q1","answer":"A1"},{"_id":"a2","question":"Q2","answer":"A2"}])",
                                      Dataset::TwoWiki, SampleSpec{5, 1});
    ASSERT_EQ(twowiki.questions.size(), 2u);
    EXPECT_EQ(twowiki.questions[0].id, "a1");
    EXPECT_EQ(twowiki.warnings.size(), 1u);  // n clamped to the set size

    auto musique = parse_dataset_text(
        "{\"id\":\"m1\",\"question\":\"Q\",\"answer\":\"A\",\"answer_aliases\":[\"B\"]}\n\n{\"id\":\"m2\",\"question\":\"Q\","
        "\"answer\":\"C\",\"answer_aliases\":[]}\n",
        Dataset::Musique, SampleSpec{2, 1});
    EXPECT_EQ(musique.questions[0].gold_answers, (std::vector<std::string>{"A", "B"}));

    auto frames = parse_dataset_text(R"({"data":[{"Prompt":"P","Answer":"X"}]})", Dataset::Frames);
    EXPECT_EQ(frames.questions[0].text, "P");
    EXPECT_EQ(frames.questions[0].id, "frames-0");

    auto flash = parse_dataset_text(R"({"id":"b1","question":"Q","golden_answers":["x","y"]})", Dataset::Bamboogle);
    EXPECT_EQ(flash.questions[0].gold_answers.size(), 2u);
}

TEST(Evalkit, LoadErrors) {
    EXPECT_THROW(parse_dataset_text("", Dataset::Custom), DatasetError);
    EXPECT_THROW(parse_dataset_text("[]", Dataset::Custom), DatasetError);
    EXPECT_THROW(parse_dataset_text(R"([{"text":"no question key","answer":"a"}])", Dataset::Custom), DatasetError);
    EXPECT_THROW(parse_dataset_text(R"([{"question":"q"}])", Dataset::Custom), DatasetError);
    EXPECT_THROW(parse_dataset_text("{not json}\n", Dataset::Custom), DatasetError);
    try {
        parse_dataset_text(R"([{"Prompt":"q","answer":"a"}])", Dataset::Musique);
    } catch (const DatasetError& e) {
        EXPECT_NE(std::string(e.what()).find("UnknownSchema"), std::string::npos);
    }
}

TEST(Evalkit, SeededSampling) {
    std::string lines;
    for (int i = 0; i < 2000; ++i) {
        lines += json{{"id", "q" + std::to_string(i)}, {"question", "Q"}, {"answer", "A"}}.dump() + "\n";
    }
    auto ids = [](const LoadedDataset& d) {
        std::vector<std::string> out;
        for (const auto& q : d.questions) out.push_back(q.id);
        return out;
    };
    auto a = parse_dataset_text(lines, Dataset::Musique, SampleSpec{500, 7});
    auto b = parse_dataset_text(lines, Dataset::Musique, SampleSpec{500, 7});
    auto c = parse_dataset_text(lines, Dataset::Musique, SampleSpec{500, 8});
    EXPECT_EQ(a.questions.size(), 500u);
    EXPECT_EQ(ids(a), ids(b));
    EXPECT_NE(ids(a), ids(c));
    EXPECT_EQ(parse_dataset_text(lines, Dataset::TwoWiki).questions.size(), 500u);     // family default
    EXPECT_EQ(parse_dataset_text(lines, Dataset::Bamboogle).questions.size(), 2000u);  // full set
    EXPECT_EQ(parse_dataset_text(lines, Dataset::Frames).questions.size(), 2000u);
}

TEST(Evalkit, LoadShippedSample) {
    auto d = load_dataset(fmtest::data_dir() / "sample_eval" / "questions.jsonl", Dataset::Bamboogle);
    EXPECT_EQ(d.questions.size(), 4u);
    EXPECT_TRUE(d.warnings.empty());
}

TEST(Evalkit, AggregateSaturationAndMixed) {
    std::vector<EvalRecord> all;
    for (int i = 0; i < 4; ++i) all.push_back(rec(Dataset::Bamboogle, Pipeline::Tc, 1, 1));
    auto rows = aggregate(all);
    ASSERT_EQ(rows.size(), 1u);
    EXPECT_DOUBLE_EQ(*rows[0].avg_acc_e, 100.0);
    EXPECT_DOUBLE_EQ(*rows[0].avg_acc_l, 100.0);

    std::vector<EvalRecord> mixed;
    add(mixed, Dataset::Musique, Pipeline::Naive, 3, 4);
    EXPECT_DOUBLE_EQ(*aggregate(mixed)[0].avg_acc_e, 75.0);
    EXPECT_FALSE(aggregate(mixed)[0].avg_acc_l);
}

// Cells synthesized with the benchmark sizes (500 / 125 / 824 / 500).
TEST(Evalkit, AggregateReproducesTableAverages) {
    std::vector<EvalRecord> r;
    add(r, Dataset::TwoWiki, Pipeline::SearchO1, 205, 500);
    add(r, Dataset::Bamboogle, Pipeline::SearchO1, 43, 125);
    add(r, Dataset::Frames, Pipeline::SearchO1, 97, 824);
    add(r, Dataset::Musique, Pipeline::SearchO1, 52, 500);
    auto rows = aggregate(r);
    ASSERT_EQ(rows.size(), 1u);
    EXPECT_NEAR(*rows[0].cells[0].second.acc_e, 41.00, 0.005);
    EXPECT_NEAR(*rows[0].cells[1].second.acc_e, 34.40, 0.005);
    EXPECT_NEAR(*rows[0].cells[2].second.acc_e, 11.77, 0.005);
    EXPECT_NEAR(*rows[0].cells[3].second.acc_e, 10.40, 0.005);
    EXPECT_NEAR(*rows[0].avg_acc_e, 24.39, 0.01);
    EXPECT_NEAR(row_average({41.00, 34.40, 11.77, 10.40}), 24.39, 0.01);
    EXPECT_NEAR(row_average({16.80, 20.80, 5.94, 3.60}), 11.79, 0.01);
}

TEST(Evalkit, ReportCsvLayout) {
    std::vector<EvalRecord> r;
    add(r, Dataset::Bamboogle, Pipeline::Tc, 1, 2);
    r.push_back(rec(Dataset::TwoWiki, Pipeline::TcFm, 1, 0));
    auto csv = report_csv(r);
    EXPECT_EQ(csv,
              "pipeline,2wiki_acc_e,2wiki_acc_l,bamboogle_acc_e,bamboogle_acc_l,frames_acc_e,frames_acc_l,musique_acc_e,"
              "musique_acc_l,avg_acc_e,avg_acc_l\n"
              "tc,,,50.00,,,,,,50.00,\n"
              "tc_fm,100.00,0.00,,,,,,,100.00,0.00\n");
}

TEST(Evalkit, EvalRecordJson) {
    auto r = rec(Dataset::Frames, Pipeline::Rag, 1, 0);
    r.judge_raw = "False";
    r.ledger = {1, 2, 3, TokenSource::Estimated};
    json j = r;
    auto back = j.get<EvalRecord>();
    EXPECT_EQ(json(back), j);
    EXPECT_EQ(back.acc_l, 0);
}

TEST(Evalkit, CostReproduction) {
    EXPECT_NEAR(compute_cost({772000, 2000, 0}), 0.1170, 0.0005);
    EXPECT_DOUBLE_EQ(compute_cost({772000, 2000, 0}), 0.117);
    EXPECT_DOUBLE_EQ(compute_cost({0, 0, 4200}), 21.0);
    EXPECT_DOUBLE_EQ(compute_cost({}), 0.0);
    EXPECT_DOUBLE_EQ(compute_cost({0, 0, 4326}), 21.63);
}

TEST(Evalkit, CostIsLinear) {
    PriceTable p;
    CostLedger a{1000000, 0, 0}, b{0, 1000000, 0}, c{0, 0, 1000};
    EXPECT_DOUBLE_EQ(compute_cost(a, p), 0.15);
    EXPECT_DOUBLE_EQ(compute_cost(b, p), 0.60);
    EXPECT_DOUBLE_EQ(compute_cost(c, p), 5.00);
    EXPECT_DOUBLE_EQ(compute_cost(merge_ledgers(merge_ledgers(a, b), c), p), 5.75);
    EXPECT_DOUBLE_EQ(compute_cost({2000000, 0, 0}, p), 2 * compute_cost(a, p));
    EXPECT_THROW((PriceTable{-1, 0, 0}.validate()), ConfigError);
}

TEST(Evalkit, CostLine) {
    auto line = format_cost_line("judge", {772000, 2000, 0}, PriceTable{});
    EXPECT_NE(line.find("$0.1170"), std::string::npos);
    EXPECT_NE(format_cost_line("search", {0, 0, 4200}, PriceTable{}).find("$21.00"), std::string::npos);
}
