#pragma once

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include <zlib.h>

#include "gendfir/chunker.hpp"
#include "gendfir/embedding.hpp"
#include "gendfir/error.hpp"

namespace gendfir {

struct EvidenceHit {
    std::size_t ordinal = 0;  // chunk ordinal, 1-based
    double score = 0.0;
    std::size_t rank = 0;     // 1-based

    friend bool operator==(const EvidenceHit&, const EvidenceHit&) = default;
};

using EvidenceSet = std::vector<EvidenceHit>;

/// Cosine similarity clamped to [-1, 1].
inline double cosine_similarity(std::span<const double> a, std::span<const double> b) {
    if (a.size() != b.size()) {
        throw Error(ErrorCode::DimensionMismatch,
                    "dimensions " + std::to_string(a.size()) + " and " + std::to_string(b.size()));
    }
    double dot = 0.0, na = 0.0, nb = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) {
        dot += a[i] * b[i];
        na += a[i] * a[i];
        nb += b[i] * b[i];
    }
    if (na == 0.0 || nb == 0.0) throw Error(ErrorCode::ZeroVector, "cosine similarity of a zero vector");
    return std::clamp(dot / (std::sqrt(na) * std::sqrt(nb)), -1.0, 1.0);
}

namespace detail {

inline std::vector<double> normalized(std::span<const double> v) {
    double sq = 0.0;
    for (double x : v) sq += x * x;
    if (sq == 0.0) throw Error(ErrorCode::ZeroVector, "cannot normalize a zero vector");
    double norm = std::sqrt(sq);
    std::vector<double> out(v.begin(), v.end());
    for (double& x : out) x /= norm;
    return out;
}

}  // namespace detail

/// Chunks plus their embedding rows. Immutable once built; rows are
/// normalized once here so scoring is a single matrix-vector pass.
class KnowledgeBase {
public:
    KnowledgeBase() = default;

    KnowledgeBase(std::vector<Chunk> chunks, EmbeddingMatrix matrix, std::string provider_fingerprint,
                  std::string scenario_label, ChunkingConfig chunking = {})
        : chunks_(std::move(chunks)),
          matrix_(std::move(matrix)),
          fingerprint_(std::move(provider_fingerprint)),
          label_(std::move(scenario_label)),
          chunking_(std::move(chunking)) {
        if (chunks_.size() != matrix_.rows()) {
            throw Error(ErrorCode::DimensionMismatch, std::to_string(chunks_.size()) + " chunks but " +
                                                          std::to_string(matrix_.rows()) + " matrix rows");
        }
        unit_rows_.reserve(matrix_.data().size());
        for (std::size_t i = 0; i < matrix_.rows(); ++i) {
            if (chunks_[i].ordinal != i + 1) {
                throw Error(ErrorCode::CorruptFile, "chunk at row " + std::to_string(i) + " has ordinal " +
                                                        std::to_string(chunks_[i].ordinal));
            }
            auto r = detail::normalized(matrix_.row(i));
            unit_rows_.insert(unit_rows_.end(), r.begin(), r.end());
        }
    }

    std::size_t size() const noexcept { return chunks_.size(); }
    bool empty() const noexcept { return chunks_.empty(); }
    std::size_t dimension() const noexcept { return matrix_.dimension(); }
    const std::vector<Chunk>& chunks() const noexcept { return chunks_; }
    const Chunk& chunk(std::size_t ordinal) const { return chunks_.at(ordinal - 1); }
    const EmbeddingMatrix& matrix() const noexcept { return matrix_; }
    const std::string& provider_fingerprint() const noexcept { return fingerprint_; }
    const std::string& scenario_label() const noexcept { return label_; }
    const ChunkingConfig& chunking() const noexcept { return chunking_; }

    std::span<const double> unit_row(std::size_t i) const {
        return std::span(unit_rows_).subspan(i * dimension(), dimension());
    }

    void check_query(std::span<const double> query, std::string_view query_fingerprint) const {
        if (!query_fingerprint.empty() && query_fingerprint != fingerprint_) {
            throw Error(ErrorCode::ProviderMismatch, "knowledge base built with " + fingerprint_ + ", query from " +
                                                         std::string(query_fingerprint));
        }
        if (!empty() && query.size() != dimension()) {
            throw Error(ErrorCode::DimensionMismatch, "query dimension " + std::to_string(query.size()) +
                                                          ", knowledge base dimension " + std::to_string(dimension()));
        }
    }

    friend bool operator==(const KnowledgeBase& a, const KnowledgeBase& b) {
        return a.chunks_ == b.chunks_ && a.matrix_ == b.matrix_ && a.fingerprint_ == b.fingerprint_ &&
               a.label_ == b.label_ && a.chunking_.max_length == b.chunking_.max_length &&
               a.chunking_.c_avg == b.chunking_.c_avg && a.chunking_.token_capacity == b.chunking_.token_capacity;
    }

private:
    std::vector<Chunk> chunks_;
    EmbeddingMatrix matrix_;
    std::vector<double> unit_rows_;
    std::string fingerprint_;
    std::string label_;
    ChunkingConfig chunking_;
};

inline KnowledgeBase build_kb(std::vector<Chunk> chunks, const EmbeddingProvider& provider, std::string label,
                              ChunkingConfig chunking = {}) {
    auto matrix = embed_chunks(provider, chunks, chunking.c_avg);
    if (!chunking.max_length && !chunks.empty()) chunking.max_length = utf8::scalar_count(chunks.front().text);
    return KnowledgeBase(std::move(chunks), std::move(matrix), provider.fingerprint(), std::move(label),
                         std::move(chunking));
}

/// Matrix form: one dot product per pre-normalized row against the unit query.
inline std::vector<double> score_all(const KnowledgeBase& kb, std::span<const double> query,
                                     std::string_view query_fingerprint = {}) {
    kb.check_query(query, query_fingerprint);
    if (kb.empty()) return {};
    auto q = detail::normalized(query);
    std::vector<double> scores(kb.size());
    for (std::size_t i = 0; i < kb.size(); ++i) {
        auto row = kb.unit_row(i);
        double dot = 0.0;
        for (std::size_t j = 0; j < q.size(); ++j) dot += row[j] * q[j];
        scores[i] = std::clamp(dot, -1.0, 1.0);
    }
    return scores;
}

/// Pairwise form: cosine_similarity of the raw row and raw query, row by row.
inline std::vector<double> score_all_pairwise(const KnowledgeBase& kb, std::span<const double> query,
                                              std::string_view query_fingerprint = {}) {
    kb.check_query(query, query_fingerprint);
    std::vector<double> scores(kb.size());
    for (std::size_t i = 0; i < kb.size(); ++i) scores[i] = cosine_similarity(kb.matrix().row(i), query);
    return scores;
}

/// Scores sorted descending, ties by ascending ordinal.
inline EvidenceSet rank_scores(std::span<const double> scores) {
    EvidenceSet hits(scores.size());
    for (std::size_t i = 0; i < scores.size(); ++i) hits[i] = {i + 1, scores[i], 0};
    std::stable_sort(hits.begin(), hits.end(), [](const EvidenceHit& a, const EvidenceHit& b) {
        return a.score > b.score;
    });
    for (std::size_t i = 0; i < hits.size(); ++i) hits[i].rank = i + 1;
    return hits;
}

struct TopKOptions {
    std::optional<std::size_t> k;      // unset: every event
    std::optional<double> min_score;   // optional floor, applied after the cut
    std::string_view query_fingerprint;
};

inline EvidenceSet top_k(const KnowledgeBase& kb, std::span<const double> query, const TopKOptions& opts = {}) {
    if (opts.k && *opts.k < 1) throw Error(ErrorCode::InvalidArgument, "k must be >= 1");
    auto hits = rank_scores(score_all(kb, query, opts.query_fingerprint));
    std::size_t k = std::min(opts.k.value_or(hits.size()), hits.size());
    hits.resize(k);
    if (opts.min_score) {
        std::erase_if(hits, [floor = *opts.min_score](const EvidenceHit& h) { return h.score < floor; });
    }
    return hits;
}

inline EvidenceSet top_k(const KnowledgeBase& kb, std::span<const double> query, std::size_t k) {
    TopKOptions opts;
    opts.k = k;
    return top_k(kb, query, opts);
}

// ---------------------------------------------------------------------------
// GDKB container, little-endian throughout (see docs/gdkb_format.md):
//   "GDKB" | u16 version | u32 dimension | u32 t | f64[t*dimension] matrix
//   | t x (u32 ordinal, u32 char_count, u32 token_estimate, u32 len, bytes)
//   | u32 max_length | u32 c_avg | u32 token_capacity
//   | u32 len, fingerprint | u32 len, label | u32 crc32(all previous bytes)
// ---------------------------------------------------------------------------

inline constexpr std::uint16_t kGdkbVersion = 1;
inline constexpr std::string_view kGdkbMagic = "GDKB";

namespace detail {

class ByteWriter {
public:
    void bytes(std::string_view s) { out_.append(s); }
    template <typename T>
    void le(T v) {
        for (std::size_t i = 0; i < sizeof(T); ++i) out_.push_back(static_cast<char>((static_cast<std::uint64_t>(v) >> (8 * i)) & 0xFF));
    }
    void f64(double v) { le(std::bit_cast<std::uint64_t>(v)); }
    void u32(std::size_t v, std::string_view what) {
        if (v > 0xFFFFFFFFu) throw Error(ErrorCode::OutOfRange, std::string(what) + " does not fit in u32");
        le(static_cast<std::uint32_t>(v));
    }
    void str(std::string_view s, std::string_view what) {
        u32(s.size(), what);
        bytes(s);
    }
    std::string& buffer() noexcept { return out_; }

private:
    std::string out_;
};

class ByteReader {
public:
    explicit ByteReader(std::string_view data) : data_(data) {}

    std::string_view take(std::size_t n) {
        if (n > data_.size() - pos_) throw Error(ErrorCode::CorruptFile, "truncated at byte " + std::to_string(pos_));
        auto s = data_.substr(pos_, n);
        pos_ += n;
        return s;
    }
    template <typename T>
    T le() {
        auto s = take(sizeof(T));
        std::uint64_t v = 0;
        for (std::size_t i = 0; i < sizeof(T); ++i) v |= std::uint64_t(static_cast<unsigned char>(s[i])) << (8 * i);
        return static_cast<T>(v);
    }
    double f64() { return std::bit_cast<double>(le<std::uint64_t>()); }
    std::string str() { return std::string(take(le<std::uint32_t>())); }
    std::size_t remaining() const noexcept { return data_.size() - pos_; }

private:
    std::string_view data_;
    std::size_t pos_ = 0;
};

inline std::uint32_t crc32_of(std::string_view bytes) {
    uLong crc = ::crc32(0L, Z_NULL, 0);
    // zlib takes uInt lengths; feed in slices for very large inputs
    std::size_t pos = 0;
    while (pos < bytes.size()) {
        std::size_t n = std::min<std::size_t>(bytes.size() - pos, 1u << 30);
        crc = ::crc32(crc, reinterpret_cast<const Bytef*>(bytes.data() + pos), static_cast<uInt>(n));
        pos += n;
    }
    return static_cast<std::uint32_t>(crc);
}

}  // namespace detail

inline std::string serialize_kb(const KnowledgeBase& kb) {
    detail::ByteWriter w;
    w.bytes(kGdkbMagic);
    w.le<std::uint16_t>(kGdkbVersion);
    w.u32(kb.dimension(), "dimension");
    w.u32(kb.size(), "event count");
    for (double x : kb.matrix().data()) w.f64(x);
    for (const auto& c : kb.chunks()) {
        w.u32(c.ordinal, "ordinal");
        w.u32(c.char_count, "char_count");
        w.u32(c.token_estimate, "token_estimate");
        w.str(c.stripped_text, "chunk text");
    }
    const auto& ck = kb.chunking();
    w.u32(ck.max_length.value_or(0), "max_length");
    w.u32(ck.c_avg, "c_avg");
    w.u32(ck.token_capacity, "token_capacity");
    w.str(kb.provider_fingerprint(), "fingerprint");
    w.str(kb.scenario_label(), "label");
    std::uint32_t crc = detail::crc32_of(w.buffer());
    w.le(crc);
    return std::move(w.buffer());
}

inline KnowledgeBase deserialize_kb(std::string_view data) {
    constexpr std::size_t kMinSize = 4 + 2 + 4 + 4 + 12 + 8 + 4;
    if (data.size() < kMinSize) throw Error(ErrorCode::CorruptFile, "file too short (" + std::to_string(data.size()) + " bytes)");
    if (data.substr(0, 4) != kGdkbMagic) throw Error(ErrorCode::CorruptFile, "bad magic");

    detail::ByteReader r(data);
    r.take(4);
    auto version = r.le<std::uint16_t>();
    if (version != kGdkbVersion) {
        throw Error(ErrorCode::CorruptFile, "unsupported version " + std::to_string(version) + " (expected " +
                                                std::to_string(kGdkbVersion) + ")");
    }
    auto body = data.substr(0, data.size() - 4);
    detail::ByteReader tail(data.substr(data.size() - 4));
    auto stored_crc = tail.le<std::uint32_t>();
    if (detail::crc32_of(body) != stored_crc) throw Error(ErrorCode::CorruptFile, "checksum mismatch");

    detail::ByteReader b(body);
    b.take(6);
    std::size_t dim = b.le<std::uint32_t>();
    std::size_t t = b.le<std::uint32_t>();
    if (t != 0 && dim == 0) throw Error(ErrorCode::CorruptFile, "zero dimension");
    if (dim != 0 && t > b.remaining() / 8 / dim) throw Error(ErrorCode::CorruptFile, "matrix larger than file");
    std::vector<double> values(t * dim);
    for (double& x : values) x = b.f64();

    std::vector<Chunk> chunks(t);
    for (auto& c : chunks) {
        c.ordinal = b.le<std::uint32_t>();
        c.char_count = b.le<std::uint32_t>();
        c.token_estimate = b.le<std::uint32_t>();
        c.stripped_text = b.str();
    }
    ChunkingConfig ck;
    std::size_t max_length = b.le<std::uint32_t>();
    if (max_length != 0) ck.max_length = max_length;
    ck.c_avg = b.le<std::uint32_t>();
    ck.token_capacity = b.le<std::uint32_t>();
    std::string fingerprint = b.str();
    std::string label = b.str();
    if (b.remaining() != 0) throw Error(ErrorCode::CorruptFile, "trailing bytes before checksum");

    for (auto& c : chunks) c.text = pad_to(c.stripped_text, max_length);
    return KnowledgeBase(std::move(chunks), EmbeddingMatrix(dim, std::move(values)), std::move(fingerprint),
                         std::move(label), std::move(ck));
}

inline void save_kb(const KnowledgeBase& kb, const std::filesystem::path& path) { write_file(path, serialize_kb(kb)); }

inline KnowledgeBase load_kb(const std::filesystem::path& path) { return deserialize_kb(read_file(path)); }

}  // namespace gendfir
