#pragma once

#include <cstddef>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <string_view>
#include <vector>

#include "gendfir/csv.hpp"
#include "gendfir/error.hpp"
#include "gendfir/utf8.hpp"

namespace gendfir {

inline constexpr std::string_view kDefaultAttributeSeparator = ", ";
inline constexpr std::string_view kKeyValueJoiner = ": ";
inline constexpr std::string_view kDefaultSplitter = ". ";

struct EventAttribute {
    std::string name;
    std::string value;

    friend bool operator==(const EventAttribute&, const EventAttribute&) = default;
};

struct Event {
    std::vector<EventAttribute> attributes;
    std::size_t ordinal = 0;  // 1-based position within the incident

    friend bool operator==(const Event&, const Event&) = default;
};

struct Incident {
    std::vector<Event> events;
    std::string source_label;
};

struct IncidentDocument {
    std::string text;
    std::string splitter{kDefaultSplitter};
    std::string attribute_separator{kDefaultAttributeSeparator};
};

/// One Event per data row, in row order. Without a header the attributes are
/// named col1..colN. Ragged rows are fatal and name the offending line.
inline Incident parse_incident_csv(std::string_view raw, bool has_header,
                                   std::string source_label = {}) {
    auto rows = csv::parse(raw);
    std::vector<std::string> names;
    std::size_t first_data = 0;
    if (has_header) {
        if (rows.empty()) throw Error(ErrorCode::EmptyInput, "no header row");
        names = rows.front().fields;
        first_data = 1;
    } else if (!rows.empty()) {
        names.resize(rows.front().fields.size());
    }
    for (std::size_t i = 0; i < names.size(); ++i) {
        if (utf8::trim(names[i]).empty()) names[i] = "col" + std::to_string(i + 1);
    }
    if (rows.size() <= first_data) throw Error(ErrorCode::EmptyInput, "zero data rows");

    Incident incident;
    incident.source_label = std::move(source_label);
    incident.events.reserve(rows.size() - first_data);
    for (std::size_t r = first_data; r < rows.size(); ++r) {
        const auto& row = rows[r];
        if (row.fields.size() != names.size()) {
            throw Error(ErrorCode::RaggedRow,
                        "row at line " + std::to_string(row.line) + " has " +
                            std::to_string(row.fields.size()) + " columns, expected " +
                            std::to_string(names.size()));
        }
        Event ev;
        ev.ordinal = incident.events.size() + 1;
        ev.attributes.reserve(names.size());
        for (std::size_t c = 0; c < names.size(); ++c) {
            ev.attributes.push_back({names[c], row.fields[c]});
        }
        incident.events.push_back(std::move(ev));
    }
    return incident;
}

inline std::string read_file(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw Error(ErrorCode::FileNotFound, "cannot open " + path.string());
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

inline void write_file(const std::filesystem::path& path, std::string_view content) {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw Error(ErrorCode::Io, "cannot write " + path.string());
    out.write(content.data(), static_cast<std::streamsize>(content.size()));
    if (!out) throw Error(ErrorCode::Io, "short write to " + path.string());
}

inline Incident read_incident_csv(const std::filesystem::path& path, bool has_header = true) {
    return parse_incident_csv(read_file(path), has_header, path.stem().string());
}

/// "Name1: value1, Name2: value2" with no trailing separator or terminator.
inline std::string render_event(const Event& event,
                                std::string_view attribute_separator = kDefaultAttributeSeparator) {
    if (event.attributes.empty()) {
        throw Error(ErrorCode::InvalidArgument, "event has no attributes");
    }
    std::string out;
    for (std::size_t i = 0; i < event.attributes.size(); ++i) {
        if (i != 0) out += attribute_separator;
        out += event.attributes[i].name;
        out += kKeyValueJoiner;
        out += event.attributes[i].value;
    }
    return out;
}

inline std::vector<std::string> parse_incident_document(std::string_view text,
                                                        std::string_view splitter) {
    if (splitter.empty()) throw Error(ErrorCode::InvalidArgument, "empty splitter");
    std::vector<std::string> segments;
    std::size_t pos = 0;
    while (pos <= text.size()) {
        std::size_t hit = text.find(splitter, pos);
        std::string_view seg = text.substr(pos, hit == std::string_view::npos ? text.npos : hit - pos);
        seg = utf8::trim(seg);
        if (!seg.empty()) segments.emplace_back(seg);
        if (hit == std::string_view::npos) break;
        pos = hit + splitter.size();
    }
    return segments;
}

/// Each rendered event followed by `splitter`. Throws SplitterCollision when a
/// rendered event would not split back out as exactly one segment.
inline IncidentDocument render_incident_document(
    const Incident& incident, std::string_view splitter = kDefaultSplitter,
    std::string_view attribute_separator = kDefaultAttributeSeparator) {
    if (splitter.empty()) throw Error(ErrorCode::InvalidArgument, "empty splitter");
    if (incident.events.empty()) throw Error(ErrorCode::EmptyInput, "incident has no events");

    IncidentDocument doc;
    doc.splitter = std::string(splitter);
    doc.attribute_separator = std::string(attribute_separator);
    for (const auto& ev : incident.events) {
        std::string rendered = render_event(ev, attribute_separator);
        // An overlap between the event's tail and the splitter's head counts too.
        std::string framed = rendered + std::string(splitter);
        if (framed.find(splitter) != rendered.size()) {
            throw Error(ErrorCode::SplitterCollision,
                        "event " + std::to_string(ev.ordinal) + " contains the splitter \"" +
                            std::string(splitter) + "\"");
        }
        doc.text += framed;
    }
    return doc;
}

}  // namespace gendfir
