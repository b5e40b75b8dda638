#include <cstdio>
#include <ctime>
#include <filesystem>
#include <iostream>
#include <map>
#include <memory>
#include <optional>
#include <string>

#include <CLI11.hpp>

#include "gendfir/gendfir.hpp"

namespace fs = std::filesystem;
using namespace gendfir;

namespace {

struct Globals {
    std::optional<fs::path> config_file;
    bool mock = false;
    std::map<std::string, std::string> flag_values;
    std::map<std::string, CLI::Option*> flag_options;
};

std::string flag_for(std::string_view key) {
    std::string flag = "--";
    for (char c : key) flag.push_back(c == '.' || c == '_' ? '-' : c);
    return flag;
}

RunConfig resolve(const Globals& g) {
    Settings overrides;
    for (const auto& [key, opt] : g.flag_options) {
        if (opt->count() == 0) continue;
        auto value = g.flag_values.at(key);
        if (key == "chunk.splitter") value = Settings::unescape(value);
        overrides.set(key, value);
    }
    if (g.mock) {
        overrides.set("embed.provider", "reference");
        overrides.set("llm.provider", "mock");
    }
    return load_config(g.config_file, overrides);
}

std::unique_ptr<EmbeddingProvider> make_embedder(const RunConfig& c) {
    if (c.embed_provider == EmbedProviderKind::Remote) return std::make_unique<RemoteEmbedder>(c.embed);
    return std::make_unique<ReferenceEmbedder>(c.embed.dimension, c.embed.token_capacity);
}

std::unique_ptr<TextGenerator> make_generator(const RunConfig& c) {
    if (c.generator == GeneratorKind::Remote) return std::make_unique<ChatGenerator>(c.chat, c.generation.model_name);
    return std::make_unique<MockGenerator>();
}

// Offline runs are pinned to SOURCE_DATE_EPOCH (or the Unix epoch) so that
// reports are reproducible; live runs use the wall clock unless it is set.
std::string run_timestamp(bool offline) {
    std::time_t t = offline ? 0 : std::time(nullptr);
    if (const char* sde = std::getenv("SOURCE_DATE_EPOCH"); sde && *sde) {
        try {
            t = static_cast<std::time_t>(std::stoll(sde));
        } catch (const std::exception&) {
            throw Error(ErrorCode::InvalidConfig, "SOURCE_DATE_EPOCH is not an integer");
        }
    }
    std::tm tm{};
    gmtime_r(&t, &tm);
    char buf[32];
    std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &tm);
    return buf;
}

std::string slug(std::string_view label) {
    std::string s;
    for (char c : utf8::ascii_lower(label)) {
        bool alnum = (c >= 'a' && c <= 'z') || (c >= '0' && c <= '9');
        if (alnum) s.push_back(c);
        else if (!s.empty() && s.back() != '_') s.push_back('_');
    }
    while (!s.empty() && s.back() == '_') s.pop_back();
    return s.empty() ? "incident" : s;
}

void require_file(const fs::path& p) {
    if (!fs::is_regular_file(p)) throw Error(ErrorCode::FileNotFound, "no such file: " + p.string());
}

bool is_csv(const fs::path& p) { return utf8::ascii_lower(p.extension().string()) == ".csv"; }

std::string document_text(const fs::path& input, const RunConfig& c) {
    require_file(input);
    if (is_csv(input)) {
        auto incident = detail::stage("ingest", [&] { return read_incident_csv(input); });
        return render_incident_document(incident, c.chunking.splitter).text;
    }
    return read_file(input);
}

KnowledgeBase kb_from_input(const fs::path& input, const RunConfig& c, const EmbeddingProvider& provider,
                            const std::string& label) {
    require_file(input);
    auto raw = read_file(input);
    if (raw.starts_with(kGdkbMagic)) return detail::stage("load", [&] { return deserialize_kb(raw); });
    return build_kb_from_document(document_text(input, c), provider, c.chunking,
                                  label.empty() ? input.stem().string() : label);
}

void print_hits(const KnowledgeBase& kb, const EvidenceSet& hits) {
    std::printf("rank\tordinal\tscore\ttext\n");
    for (const auto& h : hits) {
        std::printf("%zu\t%zu\t%.6f\t%s\n", h.rank, h.ordinal, h.score, kb.chunk(h.ordinal).stripped_text.c_str());
    }
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Timeline analysis of incident artefacts with retrieval-augmented generation"};
    app.require_subcommand(1);
    app.fallthrough();

    Globals g;
    app.add_option("--config", g.config_file, "key = value settings file")->check(CLI::ExistingFile);
    app.add_flag("--mock", g.mock, "use the reference embedder and the template generator (offline)");
    for (auto key : kKnownKeys) {
        std::string k(key);
        std::string names = flag_for(key);
        if (k == "retrieval.k") names += ",--k";
        g.flag_options[k] = app.add_option(names, g.flag_values[k], "setting " + k);
    }

    // ingest
    auto* ingest = app.add_subcommand("ingest", "render an event CSV as an incident document");
    fs::path ingest_in;
    std::optional<fs::path> ingest_out;
    bool no_header = false;
    ingest->add_option("csv", ingest_in, "event CSV")->required();
    ingest->add_option("-o,--out", ingest_out, "document path (default: stdout)");
    ingest->add_flag("--no-header", no_header, "first row is data; columns become col1..colN");

    // build-kb
    auto* build = app.add_subcommand("build-kb", "chunk and embed a document (or CSV) into a knowledge base file");
    fs::path build_in;
    std::optional<fs::path> build_out;
    std::string build_label;
    build->add_option("document", build_in, "incident document or event CSV")->required();
    build->add_option("-o,--out", build_out, "knowledge base path (default: paths.kb)");
    build->add_option("--scenario", build_label, "scenario label stored in the file");

    // query
    auto* query = app.add_subcommand("query", "rank knowledge base events against a text");
    fs::path query_kb;
    std::string query_text;
    query->add_option("kb", query_kb, "knowledge base file")->required();
    query->add_option("text", query_text, "query text")->required();

    // analyze
    auto* analyze = app.add_subcommand("analyze", "produce a timeline report and its manifest");
    std::optional<fs::path> analyze_in;
    std::string analyze_query{kDefaultQuery};
    std::string analyze_label;
    analyze->add_option("input", analyze_in, "knowledge base, document or CSV (default: paths.kb)");
    analyze->add_option("-q,--query", analyze_query, "analysis instruction");
    analyze->add_option("--scenario", analyze_label, "scenario label when building from a document");

    // evidence
    auto* evidence = app.add_subcommand("evidence", "top-k evidence listing and projection table for a criteria prompt");
    fs::path evidence_kb;
    std::string criteria;
    std::optional<fs::path> evidence_out;
    evidence->add_option("kb", evidence_kb, "knowledge base, document or CSV")->required();
    evidence->add_option("criteria", criteria, "criteria prompt")->required();
    evidence->add_option("-o,--out", evidence_out, "projection table path (default: <paths.reports>/<scenario>_evidence.tsv)");

    // eval
    auto* eval = app.add_subcommand("eval", "compute accuracy, relevance, exact match, top-k and overall rates");
    std::optional<fs::path> ledger_path, prompts_path, topk_path, eval_out;
    eval->add_option("--ledger", ledger_path, "fact ledger (per-fact or counts layout)");
    eval->add_option("--prompts", prompts_path, "prompt verdicts");
    eval->add_option("--topk", topk_path, "top-k ground truth");
    eval->add_option("-o,--out", eval_out, "summary JSON path");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        return app.exit(e) == 0 ? 0 : static_cast<int>(ErrorKind::Usage);
    }

    try {
        RunConfig cfg = resolve(g);
        const bool offline = cfg.embed_provider == EmbedProviderKind::Reference && cfg.generator == GeneratorKind::Mock;

        if (ingest->parsed()) {
            require_file(ingest_in);
            auto incident = detail::stage("ingest", [&] {
                return parse_incident_csv(read_file(ingest_in), !no_header, ingest_in.stem().string());
            });
            auto doc = render_incident_document(incident, cfg.chunking.splitter);
            if (ingest_out) {
                write_file(*ingest_out, doc.text);
                std::printf("events: %zu\n", incident.events.size());
            } else {
                std::fwrite(doc.text.data(), 1, doc.text.size(), stdout);
                std::fprintf(stderr, "events: %zu\n", incident.events.size());
            }
        } else if (build->parsed()) {
            auto provider = make_embedder(cfg);
            auto kb = kb_from_input(build_in, cfg, *provider, build_label);
            fs::path out = build_out.value_or(cfg.kb_path);
            detail::stage("save", [&] { save_kb(kb, out); });
            std::printf("t: %zu\nmax_length: %zu\nprovider: %s\nwrote: %s\n", kb.size(),
                        kb.chunking().max_length.value_or(0), kb.provider_fingerprint().c_str(), out.string().c_str());
        } else if (query->parsed()) {
            auto provider = make_embedder(cfg);
            auto kb = kb_from_input(query_kb, cfg, *provider, "");
            auto q = detail::stage("embed-query", [&] { return embed_text(*provider, query_text, kb.chunking().c_avg); });
            auto fp = provider->fingerprint();
            TopKOptions opts;
            opts.k = cfg.k;
            opts.min_score = cfg.min_score;
            opts.query_fingerprint = fp;
            print_hits(kb, detail::stage("retrieve", [&] { return top_k(kb, q.values, opts); }));
        } else if (analyze->parsed()) {
            auto provider = make_embedder(cfg);
            auto generator = make_generator(cfg);
            auto kb = kb_from_input(analyze_in.value_or(cfg.kb_path), cfg, *provider, analyze_label);
            PipelineConfig pc;
            pc.chunking = cfg.chunking;
            pc.k = cfg.k;
            pc.min_score = cfg.min_score;
            pc.generation = cfg.generation;
            pc.profile = cfg.profile;
            pc.timestamp = run_timestamp(offline);
            auto report = analyze_kb(kb, analyze_query, *provider, *generator, pc);
            fs::create_directories(cfg.reports_dir);
            auto stem = slug(kb.scenario_label());
            auto report_path = cfg.reports_dir / (stem + "_report.md");
            auto manifest_path = cfg.reports_dir / (stem + "_manifest.json");
            write_file(report_path, report.body);
            write_file(manifest_path, manifest_json(report));
            std::printf("report: %s\nmanifest: %s\nt: %zu\nk: %zu\n", report_path.string().c_str(),
                        manifest_path.string().c_str(), report.provenance.t, report.provenance.k);
            if (report.truncated) std::fprintf(stderr, "warning: generator stopped at max_tokens\n");
        } else if (evidence->parsed()) {
            auto provider = make_embedder(cfg);
            auto kb = kb_from_input(evidence_kb, cfg, *provider, "");
            auto q = detail::stage("embed-query", [&] { return embed_text(*provider, criteria, kb.chunking().c_avg); });
            auto fp = provider->fingerprint();
            TopKOptions opts;
            opts.k = cfg.k;
            opts.min_score = cfg.min_score;
            opts.query_fingerprint = fp;
            auto hits = detail::stage("retrieve", [&] { return top_k(kb, q.values, opts); });
            auto projection = export_evidence_projection(kb, q.values, ProjectionMethod::RankLayout, fp);
            fs::path out = evidence_out.value_or(cfg.reports_dir / (slug(kb.scenario_label()) + "_evidence.tsv"));
            if (out.has_parent_path()) fs::create_directories(out.parent_path());
            write_file(out, projection_table(projection));
            print_hits(kb, hits);
            std::fprintf(stderr, "top-k: %zu of %zu\nprojection: %s\n", hits.size(), kb.size(), out.string().c_str());
        } else if (eval->parsed()) {
            if (!ledger_path && !prompts_path && !topk_path) {
                throw Error(ErrorCode::InvalidArgument, "eval needs at least one of --ledger, --prompts, --topk");
            }
            std::vector<FactLedger> ledgers;
            std::vector<PromptResult> prompts;
            std::vector<TopKRow> topk;
            if (ledger_path) {
                require_file(*ledger_path);
                ledgers = detail::stage("ledger", [&] { return parse_ledgers(read_file(*ledger_path)); });
            }
            if (prompts_path) {
                require_file(*prompts_path);
                prompts = detail::stage("prompts", [&] { return parse_prompt_results(read_file(*prompts_path)); });
            }
            if (topk_path) {
                require_file(*topk_path);
                topk = detail::stage("top-k", [&] { return parse_topk_truth(read_file(*topk_path)); });
            }
            auto summary = summarize(ledgers, prompts, topk);
            std::fputs(summary_table(summary).c_str(), stdout);
            if (eval_out) write_file(*eval_out, summary_json(summary));
        }
    } catch (const Error& e) {
        std::fprintf(stderr, "error: %s\n", e.what());
        return static_cast<int>(e.kind());
    } catch (const std::exception& e) {
        std::fprintf(stderr, "error: %s\n", e.what());
        return static_cast<int>(ErrorKind::Data);
    }
    return 0;
}
