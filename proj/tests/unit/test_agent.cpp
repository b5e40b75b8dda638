#include "support.hpp"

using namespace gendfir;
using namespace testing_support;

namespace {

struct Fixture {
    ReferenceEmbedder emb;
    KnowledgeBase kb = unauthorised_access_kb(emb);
    EmbeddingVector q = embed_text(emb, kDefaultQuery);
    ContextBundle bundle = enrich(kb, top_k(kb, q.values, 25), q.values, std::string(kDefaultQuery));
};

class EchoGenerator final : public TextGenerator {
public:
    explicit EchoGenerator(std::string body, bool truncated = false) : body_(std::move(body)), truncated_(truncated) {}
    std::string model_name() const override { return "echo"; }
    GenerationResult generate(const Prompts&, const GenerationParams&) const override { return {body_, truncated_}; }

private:
    std::string body_;
    bool truncated_;
};

}  // namespace

TEST(Agent, SystemPromptIsVerbatim) {
    AgentProfile p;
    EXPECT_EQ(p.system_prompt,
              "You are a DFIR AI assistant, tasked with analysing artefacts, correlating events, and producing a "
              "coherent timeline of the incident. Base your answer on the provided context and do not include "
              "additional information outside of the context given.");
    EXPECT_EQ(p.role_name, "DFIR Timeline Analysis AI Assistant");
}

TEST(Agent, PromptContainsEveryContextEventInAttentionOrder) {
    Fixture f;
    auto prompts = build_agent_prompt(AgentProfile{}, f.bundle, kDefaultQuery);
    EXPECT_EQ(prompts.system, AgentProfile{}.system_prompt);
    EXPECT_TRUE(prompts.user.starts_with(std::string(kDefaultQuery)));
    auto listed = context_events(prompts.user);
    ASSERT_EQ(listed.size(), 25u);
    std::size_t last = 0;
    for (std::size_t i = 0; i < 25; ++i) {
        EXPECT_EQ(listed[i], f.bundle.entries[i].text);
        auto at = prompts.user.find(f.bundle.entries[i].text);
        ASSERT_NE(at, std::string::npos);
        EXPECT_GE(at, last);
        last = at;
    }
    for (const auto& h : report_headings()) EXPECT_NE(prompts.user.find("- " + h), std::string::npos);
}

TEST(Agent, PromptErrors) {
    EXPECT_EQ(code_of([] { build_agent_prompt(AgentProfile{}, ContextBundle{}, "q"); }), ErrorCode::EmptyContext);
    Fixture f;
    AgentProfile blank;
    blank.system_prompt.clear();
    EXPECT_EQ(code_of([&] { build_agent_prompt(blank, f.bundle, "q"); }), ErrorCode::InvalidConfig);
}

TEST(Agent, GenerationParamsValidate) {
    GenerationParams p;
    EXPECT_NO_THROW(p.validate());
    p.temperature = -0.1;
    EXPECT_EQ(code_of([&] { p.validate(); }), ErrorCode::InvalidConfig);
    p = {};
    p.max_tokens = 0;
    EXPECT_EQ(code_of([&] { p.validate(); }), ErrorCode::InvalidConfig);
    p = {};
    p.completions = 0;
    EXPECT_EQ(code_of([&] { p.validate(); }), ErrorCode::InvalidConfig);
}

TEST(Agent, AttributeValue) {
    std::string ev = "Event ID: 4625, Details: Logon failure, Level: Warning, Date and Time: 3/28/2024 20:22";
    EXPECT_EQ(attribute_value(ev, "Level"), "Warning");
    EXPECT_EQ(attribute_value(ev, "Date and Time"), "3/28/2024 20:22");
    EXPECT_EQ(attribute_value(ev, "ID"), std::nullopt);
    EXPECT_EQ(attribute_value(ev, "Source"), std::nullopt);
}

TEST(Agent, ParseSectionsToleratesMarkup) {
    std::string body =
        "Intro line\n\n**Event Timeline Reconstructed**\n1. a\n2. b\n\n## Anomalous Events and Trends:\n- x\n"
        "<p>**root cause analysis**</p>\ncause\n### Mitigation Solutions\nfix\n**Recommendations**\nrec\n";
    auto s = parse_sections(body);
    EXPECT_EQ(s.at("Other"), "Intro line");
    EXPECT_EQ(s.at("Event Timeline Reconstructed"), "1. a\n2. b");
    EXPECT_EQ(s.at("Anomalous Events and Trends"), "- x");
    EXPECT_EQ(s.at("Root Cause Analysis"), "cause");
    EXPECT_EQ(s.at("Mitigation Solutions"), "fix");
    EXPECT_EQ(s.at("Recommendations"), "rec");
}

TEST(Agent, MissingSectionsAreReportedNotFatal) {
    Fixture f;
    auto prompts = build_agent_prompt(AgentProfile{}, f.bundle, kDefaultQuery);
    auto report = generate_report(EchoGenerator("**Recommendations**\nonly this\n", true), prompts, {});
    EXPECT_TRUE(report.has_section("Recommendations"));
    EXPECT_FALSE(report.has_section("Root Cause Analysis"));
    EXPECT_TRUE(report.truncated);
    EXPECT_EQ(report.provenance.model_name, "echo");
    EXPECT_EQ(code_of([&] { generate_report(EchoGenerator(""), prompts, {}); }), ErrorCode::MalformedResponse);
}

TEST(Agent, MockReportHasAllHeadingsAndSortedTimestamps) {
    Fixture f;
    auto prompts = build_agent_prompt(AgentProfile{}, f.bundle, kDefaultQuery);
    MockGenerator gen;
    auto a = generate_report(gen, prompts, {});
    auto b = generate_report(gen, prompts, {});
    EXPECT_EQ(a.body, b.body);
    for (const auto& h : report_headings()) EXPECT_TRUE(a.has_section(h)) << h;

    std::vector<std::string> stamps;
    for (const auto& e : f.bundle.entries) stamps.push_back(*attribute_value(e.text, "Date and Time"));
    std::size_t last = 0;
    auto timeline = a.sections.at("Event Timeline Reconstructed");
    std::sort(stamps.begin(), stamps.end());
    for (const auto& s : stamps) {
        auto at = timeline.find("**" + s + "**", last);
        ASSERT_NE(at, std::string::npos) << s;
        last = at;
    }
}

TEST(Agent, PipelineManifestReplays) {
    ReferenceEmbedder emb;
    MockGenerator gen;
    PipelineConfig cfg;
    cfg.chunking.max_length = 208;
    cfg.scenario_label = "Unauthorised Access";
    cfg.timestamp = "1970-01-01T00:00:00Z";
    auto path = temp_path("ua_doc.txt");
    write_file(path, unauthorised_access_document());
    auto report = run_pipeline(cfg, path, kDefaultQuery, emb, gen);
    EXPECT_EQ(report.provenance.t, 25u);
    EXPECT_EQ(report.provenance.k, 25u);

    auto m = nlohmann::json::parse(manifest_json(report));
    EXPECT_EQ(m["t"], 25);
    EXPECT_EQ(m["k"], 25);
    EXPECT_EQ(m["scores"].size(), 25u);
    EXPECT_EQ(m["sections"].size(), 5u);
    EXPECT_EQ(m["kb_fingerprint"], "reference-trigram-fnv1a/1024");

    // Replaying from the manifest's recorded inputs reproduces the run.
    PipelineConfig replay = cfg;
    replay.generation.temperature = m["generation"]["temperature"];
    replay.generation.max_tokens = m["generation"]["max_tokens"];
    replay.scenario_label = m["scenario"];
    replay.timestamp = m["timestamp"];
    auto again = run_pipeline(replay, path, m["query"].get<std::string>(), emb, gen);
    EXPECT_EQ(again.body, report.body);
    EXPECT_EQ(manifest_json(again), manifest_json(report));
}

TEST(Agent, PipelineKAndStageTags) {
    ReferenceEmbedder emb;
    MockGenerator gen;
    PipelineConfig cfg;
    cfg.k = 5;
    auto kb = unauthorised_access_kb(emb);
    auto report = analyze_kb(kb, kDefaultQuery, emb, gen, cfg);
    EXPECT_EQ(report.provenance.k, 5u);
    EXPECT_EQ(nlohmann::json::parse(manifest_json(report))["k"], 5);

    ReferenceEmbedder other(512);
    try {
        analyze_kb(kb, kDefaultQuery, other, gen, cfg);
        FAIL();
    } catch (const Error& e) {
        EXPECT_EQ(e.code(), ErrorCode::ProviderMismatch);
        EXPECT_TRUE(std::string(e.what()).starts_with("[retrieve]"));
    }

    cfg.chunking.max_length = 10;
    auto path = temp_path("ua_doc_short.txt");
    write_file(path, unauthorised_access_document());
    try {
        run_pipeline(cfg, path, kDefaultQuery, emb, gen);
        FAIL();
    } catch (const Error& e) {
        EXPECT_EQ(e.code(), ErrorCode::EventTooLong);
        EXPECT_TRUE(std::string(e.what()).starts_with("[chunk]"));
    }
}

TEST(ChatGenerator, RequestAndResponseShapes) {
    Prompts p{"sys", "user"};
    GenerationParams params;
    params.model_name = "llama3.1:8b";
    auto body = ChatGenerator::request_body(p, params);
    EXPECT_EQ(body["model"], "llama3.1:8b");
    EXPECT_EQ(body["messages"][0]["role"], "system");
    EXPECT_EQ(body["messages"][1]["content"], "user");
    EXPECT_EQ(body["temperature"], 0.1);
    EXPECT_EQ(body["max_tokens"], 2000);
    EXPECT_EQ(body["n"], 1);

    auto r = ChatGenerator::parse_response(
        nlohmann::json::parse(R"({"choices":[{"message":{"content":"hi"},"finish_reason":"length"}]})"));
    EXPECT_EQ(r.text, "hi");
    EXPECT_TRUE(r.truncated);
    EXPECT_EQ(code_of([] { ChatGenerator::parse_response(nlohmann::json::parse(R"({"choices":[]})")); }),
              ErrorCode::MalformedResponse);
}
