#pragma once

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <cstddef>
#include <numeric>
#include <span>
#include <string>
#include <vector>

#include "gendfir/embedding.hpp"
#include "gendfir/error.hpp"
#include "gendfir/knowledge_base.hpp"

namespace gendfir {

struct AttentionWeights {
    std::vector<double> weights;  // index-aligned with the evidence set
    std::size_t d = 0;
};

struct ContextEntry {
    std::size_t ordinal = 0;
    std::string text;  // stripped chunk text
    double score = 0.0;
    double weight = 0.0;
};

struct ContextBundle {
    std::vector<ContextEntry> entries;  // attention descending, ties by ordinal
    EmbeddingVector context_vector;
    std::string query_text;
};

/// Numerically stable softmax; exposed for the logit-level properties.
inline std::vector<double> softmax(std::span<const double> logits) {
    if (logits.empty()) throw Error(ErrorCode::EmptyEvidence, "softmax of nothing");
    double top = *std::max_element(logits.begin(), logits.end());
    std::vector<double> w(logits.size());
    double sum = 0.0;
    for (std::size_t i = 0; i < logits.size(); ++i) {
        w[i] = std::exp(logits[i] - top);
        sum += w[i];
    }
    for (double& x : w) x /= sum;
    return w;
}

/// Scaled softmax of query.v_i / sqrt(d) over the evidence vectors,
/// stabilized by subtracting the largest logit.
inline AttentionWeights attention_weights(std::span<const double> query,
                                          std::span<const std::span<const double>> evidence, std::size_t d) {
    if (evidence.empty()) throw Error(ErrorCode::EmptyEvidence, "attention over an empty evidence set");
    if (d < 1) throw Error(ErrorCode::InvalidArgument, "d must be >= 1");
    if (query.size() != d) throw Error(ErrorCode::DimensionMismatch, "query dimension differs from d");

    const double scale = 1.0 / std::sqrt(static_cast<double>(d));
    std::vector<double> logits(evidence.size());
    for (std::size_t i = 0; i < evidence.size(); ++i) {
        if (evidence[i].size() != d) {
            throw Error(ErrorCode::DimensionMismatch, "evidence vector " + std::to_string(i) + " has dimension " +
                                                          std::to_string(evidence[i].size()));
        }
        double dot = 0.0;
        for (std::size_t j = 0; j < d; ++j) dot += query[j] * evidence[i][j];
        logits[i] = dot * scale;
    }
    return {softmax(logits), d};
}

/// c = sum_i alpha_i v_i
inline EmbeddingVector weighted_context(std::span<const double> weights,
                                        std::span<const std::span<const double>> evidence) {
    if (weights.size() != evidence.size()) {
        throw Error(ErrorCode::DimensionMismatch, std::to_string(weights.size()) + " weights for " +
                                                      std::to_string(evidence.size()) + " vectors");
    }
    if (evidence.empty()) throw Error(ErrorCode::EmptyEvidence, "no evidence vectors");
    std::size_t d = evidence.front().size();
    std::vector<double> c(d, 0.0);
    for (std::size_t i = 0; i < evidence.size(); ++i) {
        if (evidence[i].size() != d) throw Error(ErrorCode::DimensionMismatch, "ragged evidence vectors");
        for (std::size_t j = 0; j < d; ++j) c[j] += weights[i] * evidence[i][j];
    }
    return {std::move(c)};
}

/// Raw provider rows of the knowledge base for each hit, in hit order.
inline std::vector<std::span<const double>> evidence_vectors(const KnowledgeBase& kb, const EvidenceSet& hits) {
    std::vector<std::span<const double>> rows;
    rows.reserve(hits.size());
    for (const auto& h : hits) {
        if (h.ordinal < 1 || h.ordinal > kb.size()) {
            throw Error(ErrorCode::OutOfRange, "hit ordinal " + std::to_string(h.ordinal) + " not in knowledge base");
        }
        rows.push_back(kb.matrix().row(h.ordinal - 1));
    }
    return rows;
}

inline ContextBundle assemble_context(const EvidenceSet& evidence, const AttentionWeights& weights,
                                      const KnowledgeBase& kb, std::string query_text) {
    if (evidence.empty()) throw Error(ErrorCode::EmptyEvidence, "no evidence to assemble");
    if (weights.weights.size() != evidence.size()) {
        throw Error(ErrorCode::DimensionMismatch, "attention weights not aligned with evidence");
    }
    auto rows = evidence_vectors(kb, evidence);

    ContextBundle bundle;
    bundle.query_text = std::move(query_text);
    bundle.context_vector = weighted_context(weights.weights, rows);
    bundle.entries.reserve(evidence.size());
    for (std::size_t i = 0; i < evidence.size(); ++i) {
        bundle.entries.push_back(
            {evidence[i].ordinal, kb.chunk(evidence[i].ordinal).stripped_text, evidence[i].score, weights.weights[i]});
    }
    std::sort(bundle.entries.begin(), bundle.entries.end(), [](const ContextEntry& a, const ContextEntry& b) {
        if (a.weight != b.weight) return a.weight > b.weight;
        return a.ordinal < b.ordinal;
    });
    return bundle;
}

/// Convenience: attention over the hits using the knowledge base's raw rows.
inline ContextBundle enrich(const KnowledgeBase& kb, const EvidenceSet& evidence, std::span<const double> query,
                            std::string query_text) {
    auto rows = evidence_vectors(kb, evidence);
    auto weights = attention_weights(query, rows, kb.dimension());
    return assemble_context(evidence, weights, kb, std::move(query_text));
}

/// Tab-separated export: rank, ordinal, score, weight, text (one entry per line).
inline std::string export_bundle(const ContextBundle& bundle) {
    std::string out = "# query\t" + bundle.query_text + "\nrank\tordinal\tscore\tweight\ttext\n";
    char buf[64];
    for (std::size_t i = 0; i < bundle.entries.size(); ++i) {
        const auto& e = bundle.entries[i];
        out += std::to_string(i + 1) + '\t' + std::to_string(e.ordinal) + '\t';
        std::snprintf(buf, sizeof buf, "%.17g\t%.17g\t", e.score, e.weight);
        out += buf;
        out += e.text;
        out += '\n';
    }
    return out;
}

}  // namespace gendfir
