#pragma once

#include <cmath>
#include <cstddef>
#include <cstdint>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "gendfir/chunker.hpp"
#include "gendfir/error.hpp"
#include "gendfir/utf8.hpp"

namespace gendfir {

inline constexpr std::size_t kDefaultEmbeddingDimension = 1024;

struct EmbeddingVector {
    std::vector<double> values;

    std::size_t dimension() const noexcept { return values.size(); }
    std::span<const double> span() const noexcept { return values; }

    friend bool operator==(const EmbeddingVector&, const EmbeddingVector&) = default;
};

/// Row-major, one row per chunk; row i belongs to chunk ordinal i + 1.
class EmbeddingMatrix {
public:
    EmbeddingMatrix() = default;
    explicit EmbeddingMatrix(std::size_t dimension) : dimension_(dimension) {}
    EmbeddingMatrix(std::size_t dimension, std::vector<double> data) : dimension_(dimension), data_(std::move(data)) {
        if (dimension_ == 0 ? !data_.empty() : data_.size() % dimension_ != 0) {
            throw Error(ErrorCode::DimensionMismatch, "matrix data is not a whole number of rows");
        }
    }

    std::size_t dimension() const noexcept { return dimension_; }
    std::size_t rows() const noexcept { return dimension_ == 0 ? 0 : data_.size() / dimension_; }
    bool empty() const noexcept { return data_.empty(); }

    std::span<const double> row(std::size_t i) const { return std::span(data_).subspan(i * dimension_, dimension_); }
    const std::vector<double>& data() const noexcept { return data_; }

    void append(std::span<const double> v) {
        if (rows() == 0 && dimension_ == 0) dimension_ = v.size();
        if (v.size() != dimension_) {
            throw Error(ErrorCode::DimensionMismatch,
                        "row has dimension " + std::to_string(v.size()) + ", matrix has " + std::to_string(dimension_));
        }
        data_.insert(data_.end(), v.begin(), v.end());
    }

    friend bool operator==(const EmbeddingMatrix&, const EmbeddingMatrix&) = default;

private:
    std::size_t dimension_ = 0;
    std::vector<double> data_;
};

class EmbeddingProvider {
public:
    virtual ~EmbeddingProvider() = default;

    virtual std::string name() const = 0;
    virtual std::size_t dimension() const = 0;
    virtual std::size_t token_capacity() const { return kDefaultTokenCapacity; }

    /// One vector per input, in input order. Inputs are already validated.
    virtual std::vector<EmbeddingVector> embed_batch(std::span<const std::string> texts) const = 0;

    /// Recorded in knowledge bases; queries must come from the same provider.
    std::string fingerprint() const { return name() + "/" + std::to_string(dimension()); }
};

constexpr std::uint64_t kFnvOffsetBasis = 14695981039346656037ULL;
constexpr std::uint64_t kFnvPrime = 1099511628211ULL;

constexpr std::uint64_t fnv1a64(std::string_view bytes) noexcept {
    std::uint64_t h = kFnvOffsetBasis;
    for (char c : bytes) {
        h ^= static_cast<unsigned char>(c);
        h *= kFnvPrime;
    }
    return h;
}

/// Deterministic offline embedder: ASCII-lowercase the text, hash every
/// overlapping character trigram with FNV-1a 64 into `dimension` buckets,
/// then L2-normalize. Texts shorter than three characters form one gram.
class ReferenceEmbedder final : public EmbeddingProvider {
public:
    explicit ReferenceEmbedder(std::size_t dimension = kDefaultEmbeddingDimension,
                               std::size_t token_capacity = kDefaultTokenCapacity)
        : dimension_(dimension), token_capacity_(token_capacity) {
        if (dimension_ == 0) throw Error(ErrorCode::InvalidConfig, "dimension must be >= 1");
    }

    std::string name() const override { return "reference-trigram-fnv1a"; }
    std::size_t dimension() const override { return dimension_; }
    std::size_t token_capacity() const override { return token_capacity_; }

    EmbeddingVector embed(std::string_view text) const {
        std::string lowered = utf8::ascii_lower(text);
        auto offs = utf8::scalar_offsets(lowered);
        std::size_t chars = offs.size() - 1;

        std::vector<double> acc(dimension_, 0.0);
        if (chars < 3) {
            acc[fnv1a64(lowered) % dimension_] += 1.0;
        } else {
            std::string_view view(lowered);
            for (std::size_t i = 0; i + 3 <= chars; ++i) {
                auto gram = view.substr(offs[i], offs[i + 3] - offs[i]);
                acc[fnv1a64(gram) % dimension_] += 1.0;
            }
        }
        double sq = 0.0;
        for (double v : acc) sq += v * v;
        double norm = std::sqrt(sq);
        for (double& v : acc) v /= norm;
        return {std::move(acc)};
    }

    std::vector<EmbeddingVector> embed_batch(std::span<const std::string> texts) const override {
        std::vector<EmbeddingVector> out;
        out.reserve(texts.size());
        for (const auto& t : texts) out.push_back(embed(t));
        return out;
    }

private:
    std::size_t dimension_;
    std::size_t token_capacity_;
};

namespace detail {

inline void check_embeddable(const EmbeddingProvider& provider, std::string_view text, std::size_t c_avg) {
    if (text.empty()) throw Error(ErrorCode::EmptyText, "cannot embed empty text");
    std::size_t tokens = estimate_tokens(text, c_avg);
    if (tokens > provider.token_capacity()) {
        throw Error(ErrorCode::TokenBudgetExceeded, "text needs ~" + std::to_string(tokens) +
                                                        " tokens, provider capacity is " +
                                                        std::to_string(provider.token_capacity()));
    }
}

inline void check_vector(const EmbeddingProvider& provider, const EmbeddingVector& v) {
    if (v.dimension() != provider.dimension()) {
        throw Error(ErrorCode::DimensionMismatch, "provider returned dimension " + std::to_string(v.dimension()) +
                                                      ", declared " + std::to_string(provider.dimension()));
    }
    for (double x : v.values) {
        if (!std::isfinite(x)) throw Error(ErrorCode::NonFiniteValue, "provider returned a non-finite value");
    }
}

}  // namespace detail

inline EmbeddingVector embed_text(const EmbeddingProvider& provider, std::string_view text,
                                  std::size_t c_avg = kDefaultCharsPerToken) {
    detail::check_embeddable(provider, text, c_avg);
    std::string owned(text);
    auto out = provider.embed_batch(std::span<const std::string>(&owned, 1));
    if (out.size() != 1) throw Error(ErrorCode::MalformedResponse, "provider returned wrong number of vectors");
    detail::check_vector(provider, out.front());
    return std::move(out.front());
}

/// Embeds each chunk's stripped text; errors name the failing chunk ordinal.
inline EmbeddingMatrix embed_chunks(const EmbeddingProvider& provider, std::span<const Chunk> chunks,
                                    std::size_t c_avg = kDefaultCharsPerToken) {
    EmbeddingMatrix matrix(provider.dimension());
    if (chunks.empty()) return matrix;

    std::vector<std::string> texts;
    texts.reserve(chunks.size());
    for (const auto& c : chunks) {
        try {
            detail::check_embeddable(provider, c.stripped_text, c_avg);
        } catch (const Error& e) {
            throw e.tagged("chunk " + std::to_string(c.ordinal));
        }
        texts.push_back(c.stripped_text);
    }
    auto vectors = provider.embed_batch(texts);
    if (vectors.size() != chunks.size()) {
        throw Error(ErrorCode::MalformedResponse, "provider returned " + std::to_string(vectors.size()) +
                                                      " vectors for " + std::to_string(chunks.size()) + " chunks");
    }
    for (std::size_t i = 0; i < vectors.size(); ++i) {
        try {
            detail::check_vector(provider, vectors[i]);
        } catch (const Error& e) {
            throw e.tagged("chunk " + std::to_string(chunks[i].ordinal));
        }
        matrix.append(vectors[i].values);
    }
    return matrix;
}

}  // namespace gendfir
