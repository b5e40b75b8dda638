#pragma once

#include <algorithm>
#include <cstddef>
#include <optional>
#include <span>
#include <sstream>
#include <string>
#include <string_view>
#include <vector>

#include "gendfir/error.hpp"
#include "gendfir/event_model.hpp"
#include "gendfir/utf8.hpp"

namespace gendfir {

inline constexpr std::size_t kDefaultCharsPerToken = 4;
inline constexpr std::size_t kDefaultTokenCapacity = 512;

struct ChunkingConfig {
    // Unset means "derive from the longest event in the document".
    std::optional<std::size_t> max_length;
    std::size_t c_avg = kDefaultCharsPerToken;
    std::size_t token_capacity = kDefaultTokenCapacity;
    std::string splitter{kDefaultSplitter};

    /// Largest chunk, in characters, the embedding model can take.
    std::size_t max_embeddable_chars() const noexcept { return token_capacity * c_avg; }

    void validate() const {
        if (c_avg < 1) throw Error(ErrorCode::InvalidConfig, "c_avg must be >= 1");
        if (token_capacity < 1) throw Error(ErrorCode::InvalidConfig, "token_capacity must be >= 1");
        if (splitter.empty()) throw Error(ErrorCode::InvalidConfig, "splitter must be non-empty");
        if (max_length) {
            if (*max_length < 1) throw Error(ErrorCode::InvalidConfig, "max_length must be >= 1");
            if (*max_length > max_embeddable_chars()) {
                throw Error(ErrorCode::InvalidConfig,
                            "max_length " + std::to_string(*max_length) + " exceeds token_capacity * c_avg = " +
                                std::to_string(max_embeddable_chars()));
            }
        }
    }
};

struct Chunk {
    std::string text;           // stripped_text right-padded with spaces to max_length characters
    std::string stripped_text;
    std::size_t ordinal = 0;
    std::size_t char_count = 0;
    std::size_t token_estimate = 0;

    friend bool operator==(const Chunk&, const Chunk&) = default;
};

inline std::size_t event_length(std::string_view event_text) { return utf8::scalar_count(event_text); }

/// Rounded up so that the token budget check never under-counts.
inline std::size_t estimate_tokens(std::string_view text, std::size_t c_avg = kDefaultCharsPerToken) {
    if (c_avg < 1) throw Error(ErrorCode::InvalidArgument, "c_avg must be >= 1");
    std::size_t chars = event_length(text);
    return (chars + c_avg - 1) / c_avg;
}

template <typename Range>
std::size_t max_event_length(const Range& event_texts) {
    std::size_t best = 0;
    bool any = false;
    for (const auto& t : event_texts) {
        best = std::max(best, event_length(t));
        any = true;
    }
    if (!any) throw Error(ErrorCode::EmptyInput, "no events");
    return best;
}

inline std::string pad_to(std::string_view text, std::size_t chars) {
    std::string out(text);
    std::size_t have = utf8::scalar_count(text);
    if (have < chars) out.append(chars - have, ' ');
    return out;
}

/// One chunk per event segment, padded (never truncated) to max_length.
inline std::vector<Chunk> chunk_events(std::span<const std::string> segments, const ChunkingConfig& config) {
    config.validate();
    std::size_t max_length = config.max_length ? *config.max_length
                             : segments.empty() ? 0
                                                : max_event_length(segments);
    std::vector<Chunk> chunks;
    chunks.reserve(segments.size());
    for (std::size_t i = 0; i < segments.size(); ++i) {
        Chunk c;
        c.ordinal = i + 1;
        c.stripped_text = segments[i];
        c.char_count = event_length(c.stripped_text);
        c.token_estimate = (c.char_count + config.c_avg - 1) / config.c_avg;
        if (c.char_count > max_length) {
            throw Error(ErrorCode::EventTooLong, "event " + std::to_string(c.ordinal) + " has " +
                                                     std::to_string(c.char_count) +
                                                     " characters, max_length is " + std::to_string(max_length));
        }
        if (c.token_estimate > config.token_capacity) {
            throw Error(ErrorCode::TokenBudgetExceeded,
                        "event " + std::to_string(c.ordinal) + " needs ~" + std::to_string(c.token_estimate) +
                            " tokens, capacity is " + std::to_string(config.token_capacity));
        }
        c.text = pad_to(c.stripped_text, max_length);
        chunks.push_back(std::move(c));
    }
    return chunks;
}

inline std::vector<Chunk> chunk_document(std::string_view document_text, const ChunkingConfig& config) {
    config.validate();
    auto segments = parse_incident_document(document_text, config.splitter);
    return chunk_events(segments, config);
}

inline std::vector<Chunk> chunk_document(const IncidentDocument& document, ChunkingConfig config) {
    config.splitter = document.splitter;
    return chunk_document(document.text, config);
}

inline std::size_t incident_total_length(std::span<const Chunk> chunks) {
    std::size_t total = 0;
    for (const auto& c : chunks) total += c.char_count;
    return total;
}

/// Tab-separated: ordinal, char_count, token_estimate, stripped_text.
/// Tabs, newlines and backslashes in the text are backslash-escaped.
inline std::string serialize_chunks(std::span<const Chunk> chunks) {
    std::string out;
    for (const auto& c : chunks) {
        out += std::to_string(c.ordinal) + '\t' + std::to_string(c.char_count) + '\t' +
               std::to_string(c.token_estimate) + '\t';
        for (char ch : c.stripped_text) {
            switch (ch) {
                case '\\': out += "\\\\"; break;
                case '\t': out += "\\t"; break;
                case '\n': out += "\\n"; break;
                case '\r': out += "\\r"; break;
                default: out.push_back(ch);
            }
        }
        out.push_back('\n');
    }
    return out;
}

/// Inverse of serialize_chunks; padded text is rebuilt to `max_length`
/// (or to the longest record when unset).
inline std::vector<Chunk> deserialize_chunks(std::string_view data, std::optional<std::size_t> max_length = {},
                                             std::size_t c_avg = kDefaultCharsPerToken) {
    std::vector<Chunk> chunks;
    std::size_t line_no = 0;
    std::size_t pos = 0;
    while (pos < data.size()) {
        std::size_t eol = data.find('\n', pos);
        std::string_view line = data.substr(pos, eol == data.npos ? data.npos : eol - pos);
        pos = eol == data.npos ? data.size() : eol + 1;
        ++line_no;
        if (line.empty()) continue;
        std::size_t t1 = line.find('\t');
        std::size_t t2 = t1 == line.npos ? line.npos : line.find('\t', t1 + 1);
        std::size_t t3 = t2 == line.npos ? line.npos : line.find('\t', t2 + 1);
        if (t3 == line.npos) throw Error(ErrorCode::CorruptFile, "chunk record " + std::to_string(line_no) + " has too few fields");
        Chunk c;
        try {
            c.ordinal = std::stoul(std::string(line.substr(0, t1)));
            c.char_count = std::stoul(std::string(line.substr(t1 + 1, t2 - t1 - 1)));
            c.token_estimate = std::stoul(std::string(line.substr(t2 + 1, t3 - t2 - 1)));
        } catch (const std::exception&) {
            throw Error(ErrorCode::CorruptFile, "chunk record " + std::to_string(line_no) + " has a bad number");
        }
        std::string_view raw = line.substr(t3 + 1);
        for (std::size_t i = 0; i < raw.size(); ++i) {
            if (raw[i] == '\\' && i + 1 < raw.size()) {
                char n = raw[++i];
                c.stripped_text.push_back(n == 't' ? '\t' : n == 'n' ? '\n' : n == 'r' ? '\r' : n);
            } else {
                c.stripped_text.push_back(raw[i]);
            }
        }
        if (event_length(c.stripped_text) != c.char_count ||
            (c.char_count + c_avg - 1) / c_avg != c.token_estimate) {
            throw Error(ErrorCode::CorruptFile, "chunk record " + std::to_string(line_no) + " counts do not match its text");
        }
        chunks.push_back(std::move(c));
    }
    std::size_t width = 0;
    if (max_length) {
        width = *max_length;
    } else {
        for (const auto& c : chunks) width = std::max(width, c.char_count);
    }
    for (auto& c : chunks) c.text = pad_to(c.stripped_text, width);
    return chunks;
}

}  // namespace gendfir
