#pragma once

#include <algorithm>
#include <cstddef>
#include <future>
#include <span>
#include <string>
#include <vector>

#include "gendfir/embedding.hpp"
#include "gendfir/http.hpp"

namespace gendfir {

struct RemoteEmbedderConfig {
    std::string url = "http://localhost:11434/v1/embeddings";
    std::string model = "mxbai-embed-large";
    std::size_t dimension = kDefaultEmbeddingDimension;
    std::size_t token_capacity = kDefaultTokenCapacity;
    std::size_t batch_size = 16;
    std::size_t parallelism = 4;
    http::RequestOptions request{};
};

/// Embeddings over HTTP: {"model", "input": [...]} -> {"data": [{"embedding": [...]}, ...]}.
/// Vectors are returned exactly as the server sends them.
class RemoteEmbedder final : public EmbeddingProvider {
public:
    explicit RemoteEmbedder(RemoteEmbedderConfig config) : config_(std::move(config)) {
        if (config_.batch_size == 0) config_.batch_size = 1;
        if (config_.parallelism == 0) config_.parallelism = 1;
        http::parse_url(config_.url);
    }

    std::string name() const override { return "remote:" + config_.model; }
    std::size_t dimension() const override { return config_.dimension; }
    std::size_t token_capacity() const override { return config_.token_capacity; }
    const RemoteEmbedderConfig& config() const noexcept { return config_; }

    static http::Json request_body(const std::string& model, std::span<const std::string> texts) {
        http::Json body;
        body["model"] = model;
        body["input"] = http::Json::array();
        for (const auto& t : texts) body["input"].push_back(t);
        return body;
    }

    static std::vector<EmbeddingVector> parse_response(const http::Json& response, std::size_t expected) {
        if (!response.contains("data") || !response["data"].is_array()) {
            throw Error(ErrorCode::MalformedResponse, "embeddings response has no \"data\" list");
        }
        const auto& data = response["data"];
        if (data.size() != expected) {
            throw Error(ErrorCode::MalformedResponse, "expected " + std::to_string(expected) + " embeddings, got " +
                                                          std::to_string(data.size()));
        }
        std::vector<EmbeddingVector> out(expected);
        for (std::size_t i = 0; i < expected; ++i) {
            const auto& item = data[i];
            std::size_t slot = i;
            if (item.contains("index") && item["index"].is_number_unsigned()) slot = item["index"].get<std::size_t>();
            if (slot >= expected || !item.contains("embedding") || !item["embedding"].is_array()) {
                throw Error(ErrorCode::MalformedResponse, "bad embedding entry " + std::to_string(i));
            }
            for (const auto& x : item["embedding"]) {
                if (!x.is_number()) throw Error(ErrorCode::MalformedResponse, "non-numeric embedding value");
                out[slot].values.push_back(x.get<double>());
            }
        }
        return out;
    }

    std::vector<EmbeddingVector> embed_batch(std::span<const std::string> texts) const override {
        std::vector<std::span<const std::string>> batches;
        for (std::size_t i = 0; i < texts.size(); i += config_.batch_size) {
            batches.push_back(texts.subspan(i, std::min(config_.batch_size, texts.size() - i)));
        }
        std::vector<std::vector<EmbeddingVector>> results(batches.size());
        for (std::size_t wave = 0; wave < batches.size(); wave += config_.parallelism) {
            std::vector<std::future<std::vector<EmbeddingVector>>> inflight;
            std::size_t end = std::min(batches.size(), wave + config_.parallelism);
            for (std::size_t b = wave; b < end; ++b) {
                inflight.push_back(std::async(std::launch::async, [this, batch = batches[b]] {
                    auto reply = http::post_json(config_.url, request_body(config_.model, batch), config_.request,
                                                 ErrorCode::ProviderUnavailable);
                    return parse_response(reply, batch.size());
                }));
            }
            for (std::size_t b = wave; b < end; ++b) results[b] = inflight[b - wave].get();
        }
        std::vector<EmbeddingVector> out;
        out.reserve(texts.size());
        for (auto& r : results) {
            for (auto& v : r) out.push_back(std::move(v));
        }
        return out;
    }

private:
    RemoteEmbedderConfig config_;
};

}  // namespace gendfir
