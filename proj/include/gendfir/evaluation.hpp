#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdio>
#include <map>
#include <optional>
#include <set>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include <json.hpp>

#include "gendfir/csv.hpp"
#include "gendfir/error.hpp"
#include "gendfir/knowledge_base.hpp"
#include "gendfir/utf8.hpp"

namespace gendfir {

enum class FactSource { KnowledgeBase, Llm };
enum class Verdict { Correct, Incorrect };

struct FactRecord {
    std::string text;
    FactSource source = FactSource::KnowledgeBase;
    Verdict verdict = Verdict::Correct;
};

struct FactLedger {
    std::string scenario;
    std::size_t kb_correct = 0;
    std::size_t kb_incorrect = 0;
    std::size_t llm_correct = 0;
    std::size_t llm_incorrect = 0;
    std::vector<FactRecord> fact_records;

    std::size_t total() const noexcept { return kb_correct + kb_incorrect + llm_correct + llm_incorrect; }

    void add(FactRecord r) {
        bool ok = r.verdict == Verdict::Correct;
        if (r.source == FactSource::KnowledgeBase) ++(ok ? kb_correct : kb_incorrect);
        else ++(ok ? llm_correct : llm_incorrect);
        fact_records.push_back(std::move(r));
    }
};

/// Correct facts (knowledge base + model) over all labelled facts.
inline double accuracy(const FactLedger& ledger) {
    if (ledger.total() == 0) throw Error(ErrorCode::EmptyLedger, "ledger \"" + ledger.scenario + "\" has no facts");
    return static_cast<double>(ledger.kb_correct + ledger.llm_correct) / static_cast<double>(ledger.total());
}

enum class PromptCategory { Relevance, ExactMatch };

struct PromptResult {
    std::size_t prompt_id = 0;
    std::string prompt_text;
    double verdict = 0.0;  // 1 correct, 0 incorrect, fractional = partial credit
    PromptCategory category = PromptCategory::Relevance;
    std::string scenario;
};

inline double relevance(std::span<const PromptResult> results) {
    double sum = 0.0;
    std::size_t n = 0;
    for (const auto& r : results) {
        if (r.category != PromptCategory::Relevance) continue;
        if (r.verdict < 0.0 || r.verdict > 1.0) throw Error(ErrorCode::OutOfRange, "verdict outside [0, 1]");
        sum += r.verdict;
        ++n;
    }
    if (n == 0) throw Error(ErrorCode::EmptyResults, "no relevance results");
    return sum / static_cast<double>(n);
}

/// Exact match admits no partial credit.
inline double exact_match(std::span<const PromptResult> results) {
    std::size_t correct = 0, n = 0;
    for (const auto& r : results) {
        if (r.category != PromptCategory::ExactMatch) continue;
        if (r.verdict != 0.0 && r.verdict != 1.0) {
            throw Error(ErrorCode::FractionalVerdict,
                        "prompt " + std::to_string(r.prompt_id) + " has partial credit in an exact-match set");
        }
        correct += r.verdict == 1.0;
        ++n;
    }
    if (n == 0) throw Error(ErrorCode::EmptyResults, "no exact-match results");
    return static_cast<double>(correct) / static_cast<double>(n);
}

struct EvidenceGroundTruth {
    std::string scenario;
    std::string criteria_prompt;
    std::size_t total_events_k = 0;
    std::size_t expected_topk = 0;
    std::optional<std::vector<std::size_t>> expected_ordinals;

    void validate() const {
        if (expected_topk > total_events_k) {
            throw Error(ErrorCode::OutOfRange, "expected top-k exceeds the event count for " + scenario);
        }
    }
};

struct TopKCheck {
    bool count_match = false;
    std::optional<bool> set_match;
    double recall = 0.0;
    bool degenerate = false;  // empty expected set
};

inline TopKCheck topk_evidence_check(std::span<const std::size_t> retrieved_ordinals,
                                     const EvidenceGroundTruth& truth) {
    truth.validate();
    TopKCheck out;
    out.count_match = retrieved_ordinals.size() == truth.expected_topk;
    if (!truth.expected_ordinals) {
        out.recall = out.count_match ? 1.0 : 0.0;
        return out;
    }
    std::set<std::size_t> expected(truth.expected_ordinals->begin(), truth.expected_ordinals->end());
    if (expected.empty()) {
        out.recall = 1.0;
        out.degenerate = true;
        out.set_match = retrieved_ordinals.empty();
        return out;
    }
    std::set<std::size_t> got(retrieved_ordinals.begin(), retrieved_ordinals.end());
    std::size_t hit = 0;
    for (auto o : expected) hit += got.count(o);
    out.recall = static_cast<double>(hit) / static_cast<double>(expected.size());
    out.set_match = hit == expected.size();
    return out;
}

inline TopKCheck topk_evidence_check(const EvidenceSet& retrieved, const EvidenceGroundTruth& truth) {
    std::vector<std::size_t> ords;
    for (const auto& h : retrieved) ords.push_back(h.ordinal);
    return topk_evidence_check(ords, truth);
}

struct MetricReport {
    double accuracy_rate = 0.0;
    double relevance_rate = 0.0;
    double em_rate = 0.0;
    double topk_rate = 0.0;
    double overall = 0.0;
};

inline MetricReport overall_performance(double accuracy_rate, double relevance_rate, double em_rate,
                                        double topk_rate) {
    for (double r : {accuracy_rate, relevance_rate, em_rate, topk_rate}) {
        if (!(r >= 0.0 && r <= 1.0)) throw Error(ErrorCode::OutOfRange, "rate " + std::to_string(r) + " outside [0, 1]");
    }
    return {accuracy_rate, relevance_rate, em_rate, topk_rate,
            (accuracy_rate + relevance_rate + em_rate + topk_rate) / 4.0};
}

struct ProjectionRecord {
    std::size_t ordinal = 0;
    double score = 0.0;
    double heat = 0.0;
    double x = 0.0;
    double y = 0.0;
};

enum class ProjectionMethod { RankLayout };

/// Index-aligned with kb ordinals. Rank layout: x = similarity rank, y = score.
inline std::vector<ProjectionRecord> export_evidence_projection(const KnowledgeBase& kb, std::span<const double> query,
                                                                ProjectionMethod method = ProjectionMethod::RankLayout,
                                                                std::string_view query_fingerprint = {}) {
    auto scores = score_all(kb, query, query_fingerprint);
    auto ranked = rank_scores(scores);
    std::vector<ProjectionRecord> out(scores.size());
    for (std::size_t i = 0; i < scores.size(); ++i) {
        out[i] = {i + 1, scores[i], std::clamp(scores[i], 0.0, 1.0), 0.0, scores[i]};
    }
    switch (method) {
        case ProjectionMethod::RankLayout:
            for (const auto& h : ranked) out[h.ordinal - 1].x = static_cast<double>(h.rank);
            break;
    }
    return out;
}

inline std::string projection_table(std::span<const ProjectionRecord> records) {
    std::string out = "ordinal\tscore\theat\tx\ty\n";
    char buf[160];
    for (const auto& r : records) {
        std::snprintf(buf, sizeof buf, "%zu\t%.17g\t%.17g\t%.17g\t%.17g\n", r.ordinal, r.score, r.heat, r.x, r.y);
        out += buf;
    }
    return out;
}

// ---------------------------------------------------------------------------
// Label files (comma-separated, header row required)
//   facts:   scenario,source,verdict,fact            source kb|llm, verdict correct|incorrect
//   counts:  scenario,kb_correct,kb_incorrect,llm_correct,llm_incorrect
//   prompts: scenario,prompt_id,category,verdict,prompt   category relevance|exact_match
//   top-k:   scenario,criteria,total_events_k,expected_topk,retrieved_topk[,expected_ordinals,retrieved_ordinals]
//            ordinal lists are space-separated
// ---------------------------------------------------------------------------

namespace detail {

inline std::size_t to_count(const std::string& s, std::size_t line, std::string_view what) {
    try {
        std::size_t used = 0;
        long long v = std::stoll(std::string(utf8::trim(s)), &used);
        if (v < 0) throw std::invalid_argument("negative");
        return static_cast<std::size_t>(v);
    } catch (const std::exception&) {
        throw Error(ErrorCode::CorruptFile, "line " + std::to_string(line) + ": bad " + std::string(what) + " \"" + s + "\"");
    }
}

inline std::vector<std::size_t> to_ordinals(const std::string& s, std::size_t line) {
    std::vector<std::size_t> out;
    std::string token;
    for (char c : s + " ") {
        if (c == ' ' || c == ';') {
            if (!token.empty()) out.push_back(to_count(token, line, "ordinal"));
            token.clear();
        } else {
            token.push_back(c);
        }
    }
    return out;
}

inline std::map<std::string, std::size_t> header_index(const csv::Row& header) {
    std::map<std::string, std::size_t> idx;
    for (std::size_t i = 0; i < header.fields.size(); ++i) {
        idx[utf8::ascii_lower(utf8::trim(header.fields[i]))] = i;
    }
    return idx;
}

inline const std::string& field(const csv::Row& row, const std::map<std::string, std::size_t>& idx,
                                const std::string& name) {
    auto it = idx.find(name);
    if (it == idx.end()) throw Error(ErrorCode::CorruptFile, "missing column \"" + name + "\"");
    if (it->second >= row.fields.size()) {
        throw Error(ErrorCode::RaggedRow, "line " + std::to_string(row.line) + " is missing \"" + name + "\"");
    }
    return row.fields[it->second];
}

}  // namespace detail

/// Ledgers per scenario, in first-appearance order. Accepts either the
/// per-fact layout or the counts-only layout (detected from the header).
inline std::vector<FactLedger> parse_ledgers(std::string_view raw) {
    auto rows = csv::parse(raw);
    if (rows.empty()) throw Error(ErrorCode::EmptyLedger, "ledger file is empty");
    auto idx = detail::header_index(rows.front());
    bool counts_only = idx.contains("kb_correct");

    std::vector<FactLedger> ledgers;
    auto ledger_for = [&](const std::string& scenario) -> FactLedger& {
        for (auto& l : ledgers) {
            if (l.scenario == scenario) return l;
        }
        FactLedger fresh;
        fresh.scenario = scenario;
        ledgers.push_back(std::move(fresh));
        return ledgers.back();
    };
    for (std::size_t r = 1; r < rows.size(); ++r) {
        const auto& row = rows[r];
        auto& ledger = ledger_for(detail::field(row, idx, "scenario"));
        if (counts_only) {
            ledger.kb_correct += detail::to_count(detail::field(row, idx, "kb_correct"), row.line, "kb_correct");
            ledger.kb_incorrect += detail::to_count(detail::field(row, idx, "kb_incorrect"), row.line, "kb_incorrect");
            ledger.llm_correct += detail::to_count(detail::field(row, idx, "llm_correct"), row.line, "llm_correct");
            ledger.llm_incorrect +=
                detail::to_count(detail::field(row, idx, "llm_incorrect"), row.line, "llm_incorrect");
            continue;
        }
        auto source = utf8::ascii_lower(utf8::trim(detail::field(row, idx, "source")));
        auto verdict = utf8::ascii_lower(utf8::trim(detail::field(row, idx, "verdict")));
        FactRecord rec;
        rec.text = detail::field(row, idx, "fact");
        if (source == "kb") rec.source = FactSource::KnowledgeBase;
        else if (source == "llm") rec.source = FactSource::Llm;
        else throw Error(ErrorCode::CorruptFile, "line " + std::to_string(row.line) + ": source must be kb or llm");
        if (verdict == "correct") rec.verdict = Verdict::Correct;
        else if (verdict == "incorrect") rec.verdict = Verdict::Incorrect;
        else throw Error(ErrorCode::CorruptFile, "line " + std::to_string(row.line) + ": verdict must be correct or incorrect");
        ledger.add(std::move(rec));
    }
    if (ledgers.empty()) throw Error(ErrorCode::EmptyLedger, "ledger file has no entries");
    return ledgers;
}

inline std::vector<PromptResult> parse_prompt_results(std::string_view raw) {
    auto rows = csv::parse(raw);
    if (rows.size() < 2) throw Error(ErrorCode::EmptyResults, "prompt results file has no entries");
    auto idx = detail::header_index(rows.front());
    std::vector<PromptResult> out;
    for (std::size_t r = 1; r < rows.size(); ++r) {
        const auto& row = rows[r];
        PromptResult p;
        p.scenario = idx.contains("scenario") ? detail::field(row, idx, "scenario") : std::string{};
        p.prompt_id = detail::to_count(detail::field(row, idx, "prompt_id"), row.line, "prompt_id");
        p.prompt_text = idx.contains("prompt") ? detail::field(row, idx, "prompt") : std::string{};
        auto cat = utf8::ascii_lower(utf8::trim(detail::field(row, idx, "category")));
        if (cat == "relevance") p.category = PromptCategory::Relevance;
        else if (cat == "exact_match" || cat == "em") p.category = PromptCategory::ExactMatch;
        else throw Error(ErrorCode::CorruptFile, "line " + std::to_string(row.line) + ": unknown category " + cat);
        try {
            p.verdict = std::stod(std::string(utf8::trim(detail::field(row, idx, "verdict"))));
        } catch (const std::exception&) {
            throw Error(ErrorCode::CorruptFile, "line " + std::to_string(row.line) + ": bad verdict");
        }
        if (!(p.verdict >= 0.0 && p.verdict <= 1.0)) {
            throw Error(ErrorCode::OutOfRange, "line " + std::to_string(row.line) + ": verdict outside [0, 1]");
        }
        out.push_back(std::move(p));
    }
    return out;
}

struct TopKRow {
    EvidenceGroundTruth truth;
    std::size_t retrieved_topk = 0;
    std::optional<std::vector<std::size_t>> retrieved_ordinals;
};

inline std::vector<TopKRow> parse_topk_truth(std::string_view raw) {
    auto rows = csv::parse(raw);
    if (rows.size() < 2) throw Error(ErrorCode::EmptyResults, "top-k file has no entries");
    auto idx = detail::header_index(rows.front());
    std::vector<TopKRow> out;
    for (std::size_t r = 1; r < rows.size(); ++r) {
        const auto& row = rows[r];
        TopKRow t;
        t.truth.scenario = detail::field(row, idx, "scenario");
        t.truth.criteria_prompt = idx.contains("criteria") ? detail::field(row, idx, "criteria") : std::string{};
        t.truth.total_events_k = detail::to_count(detail::field(row, idx, "total_events_k"), row.line, "total_events_k");
        t.truth.expected_topk = detail::to_count(detail::field(row, idx, "expected_topk"), row.line, "expected_topk");
        t.retrieved_topk = detail::to_count(detail::field(row, idx, "retrieved_topk"), row.line, "retrieved_topk");
        if (idx.contains("expected_ordinals") && !utf8::trim(detail::field(row, idx, "expected_ordinals")).empty()) {
            t.truth.expected_ordinals = detail::to_ordinals(detail::field(row, idx, "expected_ordinals"), row.line);
        }
        if (idx.contains("retrieved_ordinals") && !utf8::trim(detail::field(row, idx, "retrieved_ordinals")).empty()) {
            t.retrieved_ordinals = detail::to_ordinals(detail::field(row, idx, "retrieved_ordinals"), row.line);
        }
        t.truth.validate();
        out.push_back(std::move(t));
    }
    return out;
}

/// Fraction of scenarios whose retrieval matches the ground truth (set match
/// when ordinals are given on both sides, count match otherwise).
inline double topk_rate(std::span<const TopKRow> rows) {
    if (rows.empty()) throw Error(ErrorCode::EmptyResults, "no top-k rows");
    std::size_t ok = 0;
    for (const auto& r : rows) {
        TopKCheck c;
        if (r.retrieved_ordinals) {
            c = topk_evidence_check(*r.retrieved_ordinals, r.truth);
        } else {
            std::vector<std::size_t> placeholder(r.retrieved_topk);
            EvidenceGroundTruth counts_only = r.truth;
            counts_only.expected_ordinals.reset();
            c = topk_evidence_check(placeholder, counts_only);
        }
        ok += c.set_match.value_or(c.count_match) && c.count_match;
    }
    return static_cast<double>(ok) / static_cast<double>(rows.size());
}

struct ScenarioAccuracy {
    std::string scenario;
    double accuracy = 0.0;
    std::size_t total_facts = 0;
};

struct EvaluationSummary {
    std::vector<ScenarioAccuracy> per_scenario;
    std::optional<double> accuracy_rate;   // mean of per-scenario accuracies
    std::optional<double> relevance_rate;
    std::optional<double> em_rate;
    std::optional<double> topk_rate;
    std::optional<MetricReport> report;    // present when all four rates are known
};

inline EvaluationSummary summarize(std::span<const FactLedger> ledgers, std::span<const PromptResult> prompts,
                                   std::span<const TopKRow> topk) {
    EvaluationSummary s;
    if (!ledgers.empty()) {
        double sum = 0.0;
        for (const auto& l : ledgers) {
            double a = accuracy(l);
            s.per_scenario.push_back({l.scenario, a, l.total()});
            sum += a;
        }
        s.accuracy_rate = sum / static_cast<double>(ledgers.size());
    }
    auto has = [&](PromptCategory c) {
        return std::any_of(prompts.begin(), prompts.end(), [c](const PromptResult& p) { return p.category == c; });
    };
    if (has(PromptCategory::Relevance)) s.relevance_rate = relevance(prompts);
    if (has(PromptCategory::ExactMatch)) s.em_rate = exact_match(prompts);
    if (!topk.empty()) s.topk_rate = topk_rate(topk);
    if (s.accuracy_rate && s.relevance_rate && s.em_rate && s.topk_rate) {
        s.report = overall_performance(*s.accuracy_rate, *s.relevance_rate, *s.em_rate, *s.topk_rate);
    }
    return s;
}

inline std::string summary_table(const EvaluationSummary& s) {
    std::string out;
    char buf[256];
    if (!s.per_scenario.empty()) {
        out += "Scenario                          Facts  Accuracy\n";
        for (const auto& p : s.per_scenario) {
            std::snprintf(buf, sizeof buf, "%-32s %6zu  %7.2f%%\n", p.scenario.c_str(), p.total_facts, p.accuracy * 100.0);
            out += buf;
        }
        out += "\n";
    }
    out += "Metric      Rate\n";
    auto line = [&](const char* name, const std::optional<double>& v) {
        if (v) std::snprintf(buf, sizeof buf, "%-10s %7.2f%%\n", name, *v * 100.0);
        else std::snprintf(buf, sizeof buf, "%-10s %8s\n", name, "n/a");
        out += buf;
    };
    line("Accuracy", s.accuracy_rate);
    line("Relevance", s.relevance_rate);
    line("EM", s.em_rate);
    line("Top-K", s.topk_rate);
    line("Overall", s.report ? std::optional<double>(s.report->overall) : std::nullopt);
    return out;
}

inline std::string summary_json(const EvaluationSummary& s) {
    nlohmann::ordered_json j;
    j["per_scenario"] = nlohmann::ordered_json::array();
    for (const auto& p : s.per_scenario) {
        j["per_scenario"].push_back({{"scenario", p.scenario}, {"facts", p.total_facts}, {"accuracy", p.accuracy}});
    }
    auto put = [&](const char* key, const std::optional<double>& v) {
        if (v) j["metrics"][key] = *v;
        else j["metrics"][key] = nullptr;
    };
    put("accuracy", s.accuracy_rate);
    put("relevance", s.relevance_rate);
    put("exact_match", s.em_rate);
    put("top_k", s.topk_rate);
    put("overall", s.report ? std::optional<double>(s.report->overall) : std::nullopt);
    return j.dump(2) + "\n";
}

}  // namespace gendfir
