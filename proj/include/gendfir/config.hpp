#pragma once

#include <cstdlib>
#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <string_view>

#include "gendfir/agent.hpp"
#include "gendfir/chunker.hpp"
#include "gendfir/error.hpp"
#include "gendfir/event_model.hpp"
#include "gendfir/remote_embedder.hpp"
#include "gendfir/utf8.hpp"

namespace gendfir {

/// Flat `key = value` settings. Lines starting with '#' are comments; values
/// may be wrapped in double quotes to keep surrounding whitespace, and inside
/// quotes \n, \t, \" and \\ are unescaped.
class Settings {
public:
    static Settings parse(std::string_view text, std::string_view origin = "config") {
        Settings s;
        std::size_t line_no = 0, pos = 0;
        while (pos <= text.size()) {
            auto eol = text.find('\n', pos);
            auto line = text.substr(pos, eol == std::string_view::npos ? std::string_view::npos : eol - pos);
            pos = eol == std::string_view::npos ? text.size() + 1 : eol + 1;
            ++line_no;
            auto body = utf8::trim(line);
            if (body.empty() || body.front() == '#') continue;
            auto eq = body.find('=');
            auto where = std::string(origin) + ":" + std::to_string(line_no);
            if (eq == std::string_view::npos) throw Error(ErrorCode::InvalidConfig, where + ": expected key = value");
            auto key = std::string(utf8::trim(body.substr(0, eq)));
            if (key.empty()) throw Error(ErrorCode::InvalidConfig, where + ": empty key");
            auto raw = utf8::trim(body.substr(eq + 1));
            std::string value;
            if (!raw.empty() && raw.front() == '"') {
                if (raw.size() < 2 || raw.back() != '"') {
                    throw Error(ErrorCode::InvalidConfig, where + ": unterminated quoted value");
                }
                value = unescape(raw.substr(1, raw.size() - 2));
            } else {
                value = std::string(raw);
            }
            s.values_[key] = std::move(value);
        }
        return s;
    }

    static std::string unescape(std::string_view v) {
        std::string out;
        for (std::size_t i = 0; i < v.size(); ++i) {
            if (v[i] != '\\' || i + 1 == v.size()) {
                out.push_back(v[i]);
                continue;
            }
            switch (v[++i]) {
                case 'n': out.push_back('\n'); break;
                case 't': out.push_back('\t'); break;
                case 'r': out.push_back('\r'); break;
                case '"': out.push_back('"'); break;
                case '\\': out.push_back('\\'); break;
                default: out.push_back('\\'); out.push_back(v[i]);
            }
        }
        return out;
    }

    void set(std::string key, std::string value) { values_[std::move(key)] = std::move(value); }
    bool contains(const std::string& key) const { return values_.contains(key); }
    const std::map<std::string, std::string>& values() const noexcept { return values_; }

    std::optional<std::string> get(const std::string& key) const {
        auto it = values_.find(key);
        if (it == values_.end()) return std::nullopt;
        return it->second;
    }

    std::optional<std::size_t> get_size(const std::string& key) const {
        auto v = get(key);
        if (!v || v->empty()) return std::nullopt;
        std::size_t used = 0;
        long long n = 0;
        try {
            n = std::stoll(*v, &used);
        } catch (const std::exception&) {
            used = 0;
        }
        if (used != v->size() || n < 0) throw Error(ErrorCode::InvalidConfig, key + " must be a non-negative integer");
        return static_cast<std::size_t>(n);
    }

    std::optional<double> get_double(const std::string& key) const {
        auto v = get(key);
        if (!v || v->empty()) return std::nullopt;
        std::size_t used = 0;
        double d = 0.0;
        try {
            d = std::stod(*v, &used);
        } catch (const std::exception&) {
            used = 0;
        }
        if (used != v->size()) throw Error(ErrorCode::InvalidConfig, key + " must be a number");
        return d;
    }

    /// Later layers win.
    void merge(const Settings& over) {
        for (const auto& [k, v] : over.values_) values_[k] = v;
    }

private:
    std::map<std::string, std::string> values_;
};

enum class EmbedProviderKind { Reference, Remote };
enum class GeneratorKind { Mock, Remote };

struct RunConfig {
    EmbedProviderKind embed_provider = EmbedProviderKind::Reference;
    RemoteEmbedderConfig embed;
    GeneratorKind generator = GeneratorKind::Mock;
    ChatGeneratorConfig chat;
    GenerationParams generation;
    ChunkingConfig chunking;
    std::optional<std::size_t> k;
    std::optional<double> min_score;
    AgentProfile profile;
    std::filesystem::path kb_path = "incident.gdkb";
    std::filesystem::path reports_dir = "reports";
};

inline constexpr std::string_view kKnownKeys[] = {
    "embed.provider",   "embed.endpoint",    "embed.model",      "embed.dimension",   "embed.token_capacity",
    "embed.batch_size", "embed.parallelism", "embed.timeout_s",  "llm.provider",      "llm.endpoint",
    "llm.model",        "llm.temperature",   "llm.max_tokens",   "llm.completions",   "llm.timeout_s",
    "chunk.splitter",   "chunk.max_length",  "chunk.c_avg",      "retrieval.k",       "retrieval.min_score",
    "agent.system_prompt", "agent.role_name", "paths.kb",        "paths.reports"};

/// Environment overrides for endpoints and the bearer token.
inline Settings environment_settings() {
    Settings s;
    if (const char* v = std::getenv("GENDFIR_EMBED_URL"); v && *v) s.set("embed.endpoint", v);
    if (const char* v = std::getenv("GENDFIR_LLM_URL"); v && *v) s.set("llm.endpoint", v);
    return s;
}

inline RunConfig resolve_config(const Settings& settings) {
    for (const auto& [key, _] : settings.values()) {
        bool known = false;
        for (auto k : kKnownKeys) known = known || key == k;
        if (!known) throw Error(ErrorCode::InvalidConfig, "unknown setting \"" + key + "\"");
    }
    RunConfig c;
    auto kind = [&](const std::string& key, std::string_view a, std::string_view b) {
        auto v = settings.get(key);
        if (!v || *v == a) return false;
        if (*v == b) return true;
        throw Error(ErrorCode::InvalidConfig,
                    key + " must be " + std::string(a) + " or " + std::string(b) + ", got \"" + *v + "\"");
    };
    c.embed_provider = kind("embed.provider", "reference", "remote") ? EmbedProviderKind::Remote
                                                                     : EmbedProviderKind::Reference;
    c.generator = kind("llm.provider", "mock", "remote") ? GeneratorKind::Remote : GeneratorKind::Mock;

    if (auto v = settings.get("embed.endpoint")) c.embed.url = *v;
    if (auto v = settings.get("embed.model")) c.embed.model = *v;
    if (auto v = settings.get_size("embed.dimension")) c.embed.dimension = *v;
    if (auto v = settings.get_size("embed.token_capacity")) c.embed.token_capacity = *v;
    if (auto v = settings.get_size("embed.batch_size")) c.embed.batch_size = *v;
    if (auto v = settings.get_size("embed.parallelism")) c.embed.parallelism = *v;
    if (auto v = settings.get_double("embed.timeout_s")) {
        c.embed.request.timeout = std::chrono::milliseconds(static_cast<long long>(*v * 1000.0));
    }
    if (c.embed.dimension == 0) throw Error(ErrorCode::InvalidConfig, "embed.dimension must be >= 1");

    if (auto v = settings.get("llm.endpoint")) c.chat.url = *v;
    if (auto v = settings.get("llm.model")) c.generation.model_name = *v;
    if (auto v = settings.get_double("llm.temperature")) c.generation.temperature = *v;
    if (auto v = settings.get_size("llm.max_tokens")) c.generation.max_tokens = *v;
    if (auto v = settings.get_size("llm.completions")) c.generation.completions = *v;
    if (auto v = settings.get_double("llm.timeout_s")) {
        c.chat.request.timeout = std::chrono::milliseconds(static_cast<long long>(*v * 1000.0));
    }
    c.generation.validate();

    if (auto v = settings.get("chunk.splitter")) c.chunking.splitter = *v;
    if (auto v = settings.get_size("chunk.max_length")) c.chunking.max_length = *v;
    if (auto v = settings.get_size("chunk.c_avg")) c.chunking.c_avg = *v;
    c.chunking.token_capacity = c.embed.token_capacity;
    c.chunking.validate();

    c.k = settings.get_size("retrieval.k");
    if (c.k && *c.k == 0) throw Error(ErrorCode::InvalidConfig, "retrieval.k must be >= 1");
    c.min_score = settings.get_double("retrieval.min_score");

    if (auto v = settings.get("agent.system_prompt")) c.profile.system_prompt = *v;
    if (auto v = settings.get("agent.role_name")) c.profile.role_name = *v;
    c.profile.max_tokens = c.generation.max_tokens;

    if (auto v = settings.get("paths.kb")) c.kb_path = *v;
    if (auto v = settings.get("paths.reports")) c.reports_dir = *v;
    return c;
}

/// defaults < file < environment < explicit overrides; the token comes from
/// GENDFIR_API_TOKEN only.
inline RunConfig load_config(const std::optional<std::filesystem::path>& file, const Settings& overrides) {
    Settings merged;
    if (file) merged = Settings::parse(read_file(*file), file->string());
    merged.merge(environment_settings());
    merged.merge(overrides);
    auto c = resolve_config(merged);
    if (const char* token = std::getenv("GENDFIR_API_TOKEN"); token && *token) {
        c.embed.request.bearer_token = token;
        c.chat.request.bearer_token = token;
    }
    return c;
}

}  // namespace gendfir
