#include "support.hpp"

using namespace gendfir;
using namespace testing_support;

namespace {

FactLedger counts(std::size_t kc, std::size_t ki, std::size_t lc, std::size_t li) {
    FactLedger l;
    l.kb_correct = kc;
    l.kb_incorrect = ki;
    l.llm_correct = lc;
    l.llm_incorrect = li;
    return l;
}

PromptResult prompt(std::size_t id, double verdict, PromptCategory cat) {
    PromptResult p;
    p.prompt_id = id;
    p.verdict = verdict;
    p.category = cat;
    return p;
}

}  // namespace

TEST(Accuracy, PerScenarioCounts) {
    EXPECT_DOUBLE_EQ(accuracy(counts(17, 0, 3, 0)), 1.0);
    EXPECT_NEAR(accuracy(counts(9, 1, 3, 0)), 12.0 / 13.0, 1e-15);
    EXPECT_NEAR(accuracy(counts(13, 3, 6, 0)), 19.0 / 22.0, 1e-15);
    EXPECT_NEAR(accuracy(counts(14, 1, 7, 0)), 21.0 / 22.0, 1e-15);
    EXPECT_EQ(code_of([] { accuracy(counts(0, 0, 0, 0)); }), ErrorCode::EmptyLedger);
}

TEST(Accuracy, LedgerFromFactRecords) {
    FactLedger l;
    l.add({"a", FactSource::KnowledgeBase, Verdict::Correct});
    l.add({"b", FactSource::Llm, Verdict::Incorrect});
    l.add({"c", FactSource::Llm, Verdict::Correct});
    EXPECT_EQ(l.kb_correct, 1u);
    EXPECT_EQ(l.llm_incorrect, 1u);
    EXPECT_NEAR(accuracy(l), 2.0 / 3.0, 1e-15);
}

TEST(Accuracy, BoundedProperty) {
    std::mt19937_64 rng(3);
    for (int i = 0; i < 1000; ++i) {
        auto l = counts(rng() % 20, rng() % 20, rng() % 20, rng() % 20 + 1);
        double a = accuracy(l);
        EXPECT_GE(a, 0.0);
        EXPECT_LE(a, 1.0);
    }
}

TEST(Relevance, PartialCredit) {
    std::vector<PromptResult> r;
    for (std::size_t i = 1; i <= 19; ++i) r.push_back(prompt(i, 1.0, PromptCategory::Relevance));
    r.push_back(prompt(20, 0.5, PromptCategory::Relevance));
    EXPECT_NEAR(relevance(r), 0.975, 1e-15);
    EXPECT_EQ(code_of([] { relevance({}); }), ErrorCode::EmptyResults);
    std::vector<PromptResult> bad{prompt(1, 1.5, PromptCategory::Relevance)};
    EXPECT_EQ(code_of([&] { relevance(bad); }), ErrorCode::OutOfRange);
}

TEST(ExactMatch, RejectsPartialCredit) {
    std::vector<PromptResult> r{prompt(1, 1, PromptCategory::ExactMatch), prompt(2, 0, PromptCategory::ExactMatch),
                                prompt(3, 1, PromptCategory::ExactMatch), prompt(4, 1, PromptCategory::ExactMatch)};
    EXPECT_DOUBLE_EQ(exact_match(r), 0.75);
    r.push_back(prompt(5, 0.5, PromptCategory::ExactMatch));
    EXPECT_EQ(code_of([&] { exact_match(r); }), ErrorCode::FractionalVerdict);
    std::vector<PromptResult> only_relevance{prompt(1, 1, PromptCategory::Relevance)};
    EXPECT_EQ(code_of([&] { exact_match(only_relevance); }), ErrorCode::EmptyResults);
}

TEST(TopK, Checks) {
    EvidenceGroundTruth t{"UA", "Level: Warning", 25, 25, std::nullopt};
    std::vector<std::size_t> all(25);
    for (std::size_t i = 0; i < 25; ++i) all[i] = i + 1;
    auto c = topk_evidence_check(all, t);
    EXPECT_TRUE(c.count_match);
    EXPECT_FALSE(c.set_match.has_value());

    t.expected_ordinals = std::vector<std::size_t>{1, 2, 3, 4, 5};
    t.expected_topk = 5;
    std::vector<std::size_t> got{1, 2, 3, 4, 9};
    c = topk_evidence_check(got, t);
    EXPECT_TRUE(c.count_match);
    EXPECT_FALSE(*c.set_match);
    EXPECT_DOUBLE_EQ(c.recall, 0.8);

    t.expected_ordinals = std::vector<std::size_t>{};
    t.expected_topk = 0;
    c = topk_evidence_check(std::vector<std::size_t>{}, t);
    EXPECT_TRUE(c.degenerate);
    EXPECT_DOUBLE_EQ(c.recall, 1.0);

    EvidenceGroundTruth bad{"x", "", 3, 4, std::nullopt};
    EXPECT_EQ(code_of([&] { topk_evidence_check(got, bad); }), ErrorCode::OutOfRange);
}

TEST(Overall, MeanOfFourRates) {
    auto r = overall_performance(0.9552, 0.9451, 1.0, 1.0);
    EXPECT_NEAR(r.overall, 0.975075, 1e-12);
    EXPECT_NEAR(r.overall * 100.0, 97.51, 0.005);
    EXPECT_EQ(code_of([] { overall_performance(1.1, 1, 1, 1); }), ErrorCode::OutOfRange);
    EXPECT_EQ(code_of([] { overall_performance(std::nan(""), 1, 1, 1); }), ErrorCode::OutOfRange);
}

TEST(Overall, PerfectAndMonotone) {
    EXPECT_DOUBLE_EQ(overall_performance(1, 1, 1, 1).overall, 1.0);
    std::mt19937_64 rng(8);
    std::uniform_real_distribution<double> u(0.0, 0.9);
    for (int i = 0; i < 500; ++i) {
        double a = u(rng), b = u(rng), c = u(rng), d = u(rng);
        EXPECT_GT(overall_performance(a + 0.1, b, c, d).overall, overall_performance(a, b, c, d).overall);
    }
}

TEST(LabelFiles, CountsLayoutReproducesPerScenarioAccuracy) {
    auto ledgers = parse_ledgers(read_file(scenario("fact_counts.csv")));
    ASSERT_EQ(ledgers.size(), 6u);
    std::map<std::string, double> expected{{"SYN Flood", 1.0},          {"Rhino Hunt", 1.0},
                                           {"Phishing Email - 1", 0.9231}, {"Phishing Email - 2", 0.8636},
                                           {"DNS Spoof", 1.0},          {"Unauthorised Access", 0.9545}};
    double sum = 0.0;
    for (const auto& l : ledgers) {
        EXPECT_NEAR(accuracy(l), expected.at(l.scenario), 1e-4) << l.scenario;
        sum += accuracy(l);
    }
    EXPECT_NEAR(sum / 6.0, 0.9569, 1e-4);
}

TEST(LabelFiles, FactLayout) {
    auto ledgers = parse_ledgers(
        "scenario,source,verdict,fact\nA,kb,correct,x\nA,llm,incorrect,y\nB,KB,Correct,\"z, w\"\n");
    ASSERT_EQ(ledgers.size(), 2u);
    EXPECT_EQ(ledgers[0].total(), 2u);
    EXPECT_EQ(ledgers[1].fact_records[0].text, "z, w");
    EXPECT_EQ(code_of([] { parse_ledgers("scenario,source,verdict,fact\nA,model,correct,x\n"); }),
              ErrorCode::CorruptFile);
    EXPECT_EQ(code_of([] { parse_ledgers(""); }), ErrorCode::EmptyLedger);
    EXPECT_EQ(code_of([] { parse_ledgers("scenario,source,verdict,fact\n"); }), ErrorCode::EmptyLedger);
}

TEST(LabelFiles, PromptsAndTopK) {
    auto prompts = parse_prompt_results(
        "scenario,prompt_id,category,verdict,prompt\nA,1,relevance,1,p\nA,2,relevance,0.5,q\nA,3,exact_match,1,r\n");
    ASSERT_EQ(prompts.size(), 3u);
    EXPECT_NEAR(relevance(prompts), 0.75, 1e-15);
    EXPECT_DOUBLE_EQ(exact_match(prompts), 1.0);

    auto rows = parse_topk_truth(read_file(scenario("evidence_topk.csv")));
    ASSERT_EQ(rows.size(), 6u);
    EXPECT_DOUBLE_EQ(topk_rate(rows), 1.0);

    auto with_sets = parse_topk_truth(
        "scenario,criteria,total_events_k,expected_topk,retrieved_topk,expected_ordinals,retrieved_ordinals\n"
        "A,c,10,2,2,1 2,2 1\nB,c,10,2,2,1 2,1 3\n");
    EXPECT_DOUBLE_EQ(topk_rate(with_sets), 0.5);
}

TEST(Summary, AllFourRates) {
    auto ledgers = parse_ledgers(read_file(scenario("fact_counts.csv")));
    std::vector<PromptResult> prompts{prompt(1, 1, PromptCategory::Relevance), prompt(2, 1, PromptCategory::ExactMatch)};
    auto topk = parse_topk_truth(read_file(scenario("evidence_topk.csv")));
    auto s = summarize(ledgers, prompts, topk);
    ASSERT_TRUE(s.report.has_value());
    EXPECT_NEAR(*s.accuracy_rate, 0.9569, 1e-4);
    EXPECT_NEAR(s.report->overall, (*s.accuracy_rate + 3.0) / 4.0, 1e-15);
    auto j = nlohmann::json::parse(summary_json(s));
    EXPECT_EQ(j["per_scenario"].size(), 6u);
    EXPECT_NE(summary_table(s).find("SYN Flood"), std::string::npos);
}

TEST(Projection, RankLayout) {
    ReferenceEmbedder emb;
    auto kb = unauthorised_access_kb(emb);
    auto q = embed_text(emb, kb.chunk(7).stripped_text);
    auto p = export_evidence_projection(kb, q.values);
    ASSERT_EQ(p.size(), 25u);
    EXPECT_NEAR(p[6].heat, 1.0, 1e-12);
    EXPECT_DOUBLE_EQ(p[6].x, 1.0);
    std::set<double> ranks;
    for (std::size_t i = 0; i < p.size(); ++i) {
        EXPECT_EQ(p[i].ordinal, i + 1);
        EXPECT_GE(p[i].heat, 0.0);
        EXPECT_LE(p[i].heat, 1.0);
        EXPECT_DOUBLE_EQ(p[i].y, p[i].score);
        ranks.insert(p[i].x);
    }
    EXPECT_EQ(ranks.size(), 25u);

    auto table = projection_table(p);
    auto rows = csv::parse(table, '\t');
    ASSERT_EQ(rows.size(), 26u);
    for (const auto& r : rows) EXPECT_EQ(r.fields.size(), 5u);
}
