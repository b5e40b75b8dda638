#pragma once

#include <algorithm>
#include <chrono>
#include <cstddef>
#include <cstdio>
#include <filesystem>
#include <map>
#include <memory>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include <json.hpp>

#include "gendfir/chunker.hpp"
#include "gendfir/embedding.hpp"
#include "gendfir/enrichment.hpp"
#include "gendfir/error.hpp"
#include "gendfir/event_model.hpp"
#include "gendfir/http.hpp"
#include "gendfir/knowledge_base.hpp"
#include "gendfir/utf8.hpp"

namespace gendfir {

inline constexpr std::string_view kDefaultRoleName = "DFIR Timeline Analysis AI Assistant";
inline constexpr std::string_view kDefaultSystemPrompt =
    "You are a DFIR AI assistant, tasked with analysing artefacts, correlating events, and producing a coherent "
    "timeline of the incident. Base your answer on the provided context and do not include additional "
    "information outside of the context given.";
inline constexpr std::string_view kDefaultQuery =
    "Conduct DFIR timeline analysis by examining the artefact, correlating events, and reconstructing the "
    "timeline of the cyber incident";

inline constexpr std::string_view kContextBegin = "-----BEGIN CONTEXT-----";
inline constexpr std::string_view kContextEnd = "-----END CONTEXT-----";

/// Report headings, in the order the agent is asked to produce them.
inline const std::vector<std::string>& report_headings() {
    static const std::vector<std::string> h{"Event Timeline Reconstructed", "Anomalous Events and Trends",
                                            "Root Cause Analysis", "Mitigation Solutions", "Recommendations"};
    return h;
}
inline constexpr std::string_view kOtherSection = "Other";

struct AgentProfile {
    std::string role_name{kDefaultRoleName};
    std::string system_prompt{kDefaultSystemPrompt};
    std::size_t max_tokens = 2000;
};

struct GenerationParams {
    double temperature = 0.1;
    std::size_t max_tokens = 2000;
    std::size_t completions = 1;
    std::string model_name = "llama3.1:8b";

    void validate() const {
        if (!(temperature >= 0.0)) throw Error(ErrorCode::InvalidConfig, "temperature must be >= 0");
        if (max_tokens < 1) throw Error(ErrorCode::InvalidConfig, "max_tokens must be >= 1");
        if (completions < 1) throw Error(ErrorCode::InvalidConfig, "completions must be >= 1");
    }
};

struct Prompts {
    std::string system;
    std::string user;
};

inline Prompts build_agent_prompt(const AgentProfile& profile, const ContextBundle& bundle,
                                  std::string_view user_query) {
    if (bundle.entries.empty()) throw Error(ErrorCode::EmptyContext, "no context entries for the prompt");
    if (profile.system_prompt.empty()) throw Error(ErrorCode::InvalidConfig, "empty system prompt");

    std::string user(user_query);
    user += "\n\nCONTEXT (" + std::to_string(bundle.entries.size()) +
            " events from the incident knowledge base, most relevant first):\n";
    user += kContextBegin;
    user += '\n';
    char buf[96];
    for (std::size_t i = 0; i < bundle.entries.size(); ++i) {
        const auto& e = bundle.entries[i];
        std::snprintf(buf, sizeof buf, "[%zu] score=%.6f weight=%.6f | ", i + 1, e.score, e.weight);
        user += buf;
        user += e.text;
        user += '\n';
    }
    user += kContextEnd;
    user += "\n\nStructure the answer under these headings:";
    for (const auto& h : report_headings()) user += "\n- " + h;
    user += '\n';
    return {profile.system_prompt, std::move(user)};
}

/// Event texts listed between the CONTEXT markers of a user prompt, in order.
inline std::vector<std::string> context_events(std::string_view user_prompt) {
    std::vector<std::string> out;
    auto begin = user_prompt.find(kContextBegin);
    auto end = user_prompt.find(kContextEnd);
    if (begin == std::string_view::npos || end == std::string_view::npos || end < begin) return out;
    auto block = user_prompt.substr(begin + kContextBegin.size(), end - begin - kContextBegin.size());
    std::size_t pos = 0;
    while (pos < block.size()) {
        auto eol = block.find('\n', pos);
        auto line = block.substr(pos, eol == std::string_view::npos ? std::string_view::npos : eol - pos);
        pos = eol == std::string_view::npos ? block.size() : eol + 1;
        auto bar = line.find(" | ");
        if (!line.empty() && line.front() == '[' && bar != std::string_view::npos) {
            out.emplace_back(line.substr(bar + 3));
        }
    }
    return out;
}

/// Value of `name` inside a rendered event ("Name: value, Next: ..."), if present.
inline std::optional<std::string> attribute_value(std::string_view event_text, std::string_view name,
                                                  std::string_view separator = kDefaultAttributeSeparator) {
    std::string key = std::string(name) + std::string(kKeyValueJoiner);
    std::size_t pos = 0;
    while ((pos = event_text.find(key, pos)) != std::string_view::npos) {
        bool at_boundary = pos == 0 || event_text.substr(0, pos).ends_with(separator);
        if (at_boundary) {
            auto start = pos + key.size();
            auto stop = event_text.find(separator, start);
            return std::string(event_text.substr(start, stop == std::string_view::npos ? std::string_view::npos
                                                                                       : stop - start));
        }
        pos += key.size();
    }
    return std::nullopt;
}

struct GenerationResult {
    std::string text;
    bool truncated = false;
};

class TextGenerator {
public:
    virtual ~TextGenerator() = default;
    virtual std::string model_name() const = 0;
    virtual GenerationResult generate(const Prompts& prompts, const GenerationParams& params) const = 0;
};

/// Offline stand-in for the language model. Lists the context events sorted
/// by their "Date and Time" text (events without one keep their order at the
/// end) and fills the report headings from simple tallies.
class MockGenerator final : public TextGenerator {
public:
    std::string model_name() const override { return "mock-timeline-template"; }

    GenerationResult generate(const Prompts& prompts, const GenerationParams& params) const override {
        params.validate();
        auto events = context_events(prompts.user);

        struct Item {
            std::string text;
            std::optional<std::string> when;
        };
        std::vector<Item> items;
        for (auto& e : events) items.push_back({e, attribute_value(e, "Date and Time")});
        std::stable_sort(items.begin(), items.end(), [](const Item& a, const Item& b) {
            if (a.when.has_value() != b.when.has_value()) return a.when.has_value();
            return a.when && *a.when < *b.when;
        });

        std::string out = "**Incident Analysis**\nThe " + std::to_string(items.size()) +
                          " events supplied as context were ordered by timestamp and correlated by level, "
                          "event ID and source.\n\n";

        out += "**Event Timeline Reconstructed**\n";
        for (std::size_t i = 0; i < items.size(); ++i) {
            out += std::to_string(i + 1) + ". ";
            if (items[i].when) out += "**" + *items[i].when + "**: ";
            out += items[i].text + "\n";
        }

        out += "\n**Anomalous Events and Trends**\n";
        auto tally = [&](std::string_view attr) {
            std::map<std::string, std::size_t> counts;
            for (const auto& it : items) {
                if (auto v = attribute_value(it.text, attr)) ++counts[*v];
            }
            std::vector<std::pair<std::string, std::size_t>> sorted(counts.begin(), counts.end());
            std::stable_sort(sorted.begin(), sorted.end(),
                             [](const auto& a, const auto& b) { return a.second > b.second; });
            return sorted;
        };
        auto levels = tally("Level");
        for (const auto& [level, n] : levels) out += "- Level " + level + ": " + std::to_string(n) + " event(s)\n";
        for (const auto& [id, n] : tally("Event ID")) {
            if (n > 1) out += "- Event ID " + id + " recurs " + std::to_string(n) + " times\n";
        }
        if (levels.empty()) out += "- No level information present in the context.\n";

        out += "\n**Root Cause Analysis**\n";
        auto details = tally("Details");
        if (!details.empty()) {
            out += "The most frequent activity is \"" + details.front().first + "\" (" +
                   std::to_string(details.front().second) + " occurrence(s)), which is the primary thread to "
                   "investigate.\n";
        } else {
            out += "No recurring activity could be identified from the context.\n";
        }

        out += "\n**Mitigation Solutions**\n";
        std::size_t n = 0;
        for (const auto& [source, count] : tally("Source")) {
            out += std::to_string(++n) + ". Review and contain activity reported by " + source + " (" +
                   std::to_string(count) + " event(s)).\n";
        }
        if (n == 0) out += "1. Review and contain the activity listed in the timeline.\n";

        out += "\n**Recommendations**\n"
               "1. Preserve the original artefacts for every event listed in the timeline.\n"
               "2. Validate this generated timeline against the source logs before acting on it.\n";
        return {std::move(out), false};
    }
};

struct ChatGeneratorConfig {
    std::string url = "http://localhost:11434/v1/chat/completions";
    http::RequestOptions request{std::chrono::milliseconds(120000), {}, {}};
};

/// Chat completions over HTTP: {"model", "messages", "temperature", "max_tokens", "n"}
/// -> {"choices": [{"message": {"content": ...}, "finish_reason": ...}]}.
class ChatGenerator final : public TextGenerator {
public:
    ChatGenerator(ChatGeneratorConfig config, std::string model)
        : config_(std::move(config)), model_(std::move(model)) {
        http::parse_url(config_.url);
    }

    std::string model_name() const override { return model_; }

    static http::Json request_body(const Prompts& prompts, const GenerationParams& params) {
        http::Json body;
        body["model"] = params.model_name;
        body["messages"] = http::Json::array({{{"role", "system"}, {"content", prompts.system}},
                                              {{"role", "user"}, {"content", prompts.user}}});
        body["temperature"] = params.temperature;
        body["max_tokens"] = params.max_tokens;
        body["n"] = params.completions;
        return body;
    }

    static GenerationResult parse_response(const http::Json& response) {
        if (!response.contains("choices") || !response["choices"].is_array() || response["choices"].empty()) {
            throw Error(ErrorCode::MalformedResponse, "chat response has no choices");
        }
        const auto& choice = response["choices"][0];
        if (!choice.contains("message") || !choice["message"].contains("content") ||
            !choice["message"]["content"].is_string()) {
            throw Error(ErrorCode::MalformedResponse, "chat choice has no message content");
        }
        GenerationResult r;
        r.text = choice["message"]["content"].get<std::string>();
        r.truncated = choice.contains("finish_reason") && choice["finish_reason"] == "length";
        return r;
    }

    GenerationResult generate(const Prompts& prompts, const GenerationParams& params) const override {
        params.validate();
        GenerationParams p = params;
        p.model_name = model_;
        auto reply = http::post_json(config_.url, request_body(prompts, p), config_.request,
                                     ErrorCode::GeneratorUnavailable);
        return parse_response(reply);
    }

private:
    ChatGeneratorConfig config_;
    std::string model_;
};

/// Case-insensitive, markup-tolerant heading match ("**Root Cause Analysis**",
/// "## Recommendations:", "<p>**Mitigation Solutions**</p>").
inline std::optional<std::string> match_heading(std::string_view line) {
    std::string cleaned;
    bool in_tag = false;
    for (char c : line) {
        if (c == '<') in_tag = true;
        else if (c == '>') in_tag = false;
        else if (!in_tag && c != '*' && c != '#' && c != '_') cleaned.push_back(c);
    }
    std::string_view v = utf8::trim(cleaned);
    if (v.ends_with(':')) v.remove_suffix(1);
    v = utf8::trim(v);
    std::string low = utf8::ascii_lower(v);
    for (const auto& h : report_headings()) {
        if (low == utf8::ascii_lower(h)) return h;
    }
    return std::nullopt;
}

/// Splits a report into the five heading sections; text outside them goes to "Other".
inline std::map<std::string, std::string> parse_sections(std::string_view body) {
    std::map<std::string, std::string> sections;
    std::string current{kOtherSection};
    std::size_t pos = 0;
    while (pos < body.size()) {
        auto eol = body.find('\n', pos);
        auto line = body.substr(pos, eol == std::string_view::npos ? std::string_view::npos : eol - pos);
        pos = eol == std::string_view::npos ? body.size() : eol + 1;
        if (auto h = match_heading(line)) {
            current = *h;
            sections.try_emplace(current);
            continue;
        }
        if (utf8::trim(line).empty() && sections[current].empty()) continue;
        sections[current] += std::string(line) + "\n";
    }
    for (auto& [_, text] : sections) {
        while (!text.empty() && utf8::is_space(text.back())) text.pop_back();
    }
    if (auto it = sections.find(std::string(kOtherSection)); it != sections.end() && it->second.empty()) {
        sections.erase(it);
    }
    return sections;
}

struct Provenance {
    std::string query;
    std::size_t k = 0;
    std::size_t t = 0;
    std::string model_name;
    std::string kb_fingerprint;
    std::string scenario;
    std::string timestamp;
    GenerationParams params;
    std::string system_prompt;
    std::optional<double> min_score;
};

struct TimelineReport {
    std::string body;
    std::map<std::string, std::string> sections;
    Provenance provenance;
    bool truncated = false;
    EvidenceSet evidence;                 // ranked retrieval hits
    std::vector<ContextEntry> context;    // attention order

    bool has_section(std::string_view heading) const { return sections.contains(std::string(heading)); }
};

inline TimelineReport generate_report(const TextGenerator& generator, const Prompts& prompts,
                                      const GenerationParams& params, Provenance provenance = {}) {
    params.validate();
    auto result = generator.generate(prompts, params);
    if (result.text.empty()) throw Error(ErrorCode::MalformedResponse, "generator returned an empty report");
    TimelineReport report;
    report.body = std::move(result.text);
    report.truncated = result.truncated;
    report.sections = parse_sections(report.body);
    provenance.model_name = generator.model_name();
    provenance.params = params;
    provenance.params.model_name = generator.model_name();
    provenance.system_prompt = prompts.system;
    report.provenance = std::move(provenance);
    return report;
}

struct PipelineConfig {
    ChunkingConfig chunking;
    std::optional<std::size_t> k;  // unset: every event
    std::optional<double> min_score;
    GenerationParams generation;
    AgentProfile profile;
    std::string scenario_label;
    std::string timestamp;  // recorded verbatim in provenance
};

namespace detail {

template <typename F>
auto stage(std::string_view name, F&& f) -> decltype(f()) {
    try {
        return f();
    } catch (const Error& e) {
        throw e.tagged(name);
    }
}

}  // namespace detail

/// Retrieve, weight, prompt and generate against an existing knowledge base.
inline TimelineReport analyze_kb(const KnowledgeBase& kb, std::string_view user_query,
                                 const EmbeddingProvider& provider, const TextGenerator& generator,
                                 const PipelineConfig& config) {
    auto query_vec = detail::stage("embed-query", [&] { return embed_text(provider, user_query, kb.chunking().c_avg); });
    auto fingerprint = provider.fingerprint();
    auto hits = detail::stage("retrieve", [&] {
        return top_k(kb, query_vec.values, TopKOptions{config.k, config.min_score, fingerprint});
    });
    auto bundle = detail::stage("enrich", [&] { return enrich(kb, hits, query_vec.values, std::string(user_query)); });
    auto prompts = detail::stage("prompt", [&] { return build_agent_prompt(config.profile, bundle, user_query); });

    Provenance prov;
    prov.query = std::string(user_query);
    prov.k = hits.size();
    prov.t = kb.size();
    prov.kb_fingerprint = kb.provider_fingerprint();
    prov.scenario = kb.scenario_label();
    prov.timestamp = config.timestamp;
    prov.min_score = config.min_score;
    auto report = detail::stage("generate", [&] { return generate_report(generator, prompts, config.generation, prov); });
    report.evidence = std::move(hits);
    report.context = std::move(bundle.entries);
    return report;
}

inline KnowledgeBase build_kb_from_document(std::string_view document_text, const EmbeddingProvider& provider,
                                            const ChunkingConfig& chunking, std::string label) {
    auto chunks = detail::stage("chunk", [&] { return chunk_document(document_text, chunking); });
    return detail::stage("embed", [&] { return build_kb(std::move(chunks), provider, std::move(label), chunking); });
}

/// The whole chain: chunk -> embed -> top-k -> attention -> assemble -> generate.
inline TimelineReport run_pipeline(const PipelineConfig& config, const std::filesystem::path& document_path,
                                   std::string_view user_query, const EmbeddingProvider& provider,
                                   const TextGenerator& generator) {
    auto text = detail::stage("read", [&] { return read_file(document_path); });
    std::string label = config.scenario_label.empty() ? document_path.stem().string() : config.scenario_label;
    auto kb = build_kb_from_document(text, provider, config.chunking, std::move(label));
    return analyze_kb(kb, user_query, provider, generator, config);
}

/// Machine-readable sidecar for a report: enough to replay the run.
inline std::string manifest_json(const TimelineReport& report) {
    const auto& p = report.provenance;
    nlohmann::ordered_json m;
    m["query"] = p.query;
    m["scenario"] = p.scenario;
    m["t"] = p.t;
    m["k"] = p.k;
    m["model"] = p.model_name;
    m["kb_fingerprint"] = p.kb_fingerprint;
    m["timestamp"] = p.timestamp;
    m["generation"] = {{"temperature", p.params.temperature},
                       {"max_tokens", p.params.max_tokens},
                       {"completions", p.params.completions}};
    m["system_prompt"] = p.system_prompt;
    if (p.min_score) m["min_score"] = *p.min_score;
    m["truncated"] = report.truncated;
    m["sections"] = nlohmann::ordered_json::array();
    for (const auto& h : report_headings()) {
        if (report.has_section(h)) m["sections"].push_back(h);
    }
    std::map<std::size_t, double> weight_of;
    for (const auto& e : report.context) weight_of[e.ordinal] = e.weight;
    m["scores"] = nlohmann::ordered_json::array();
    for (const auto& h : report.evidence) {
        m["scores"].push_back({{"rank", h.rank}, {"ordinal", h.ordinal}, {"score", h.score},
                               {"attention", weight_of.count(h.ordinal) ? weight_of[h.ordinal] : 0.0}});
    }
    return m.dump(2) + "\n";
}

}  // namespace gendfir
