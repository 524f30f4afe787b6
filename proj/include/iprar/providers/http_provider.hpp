#pragma once

#include "iprar/providers/provider.hpp"

#include <string>

namespace iprar::providers {

/// Connection settings for an OpenAI-compatible HTTP backend.
struct HttpBackendConfig {
    std::string base_url;     // e.g. "http://localhost:8000"
    std::string model;
    std::string api_key_env;  // name of the env var holding the key; may be unset
    int max_attempts = 3;     // 1 initial try + retries
    int backoff_ms = 1000;    // 1s, then 2s, then 4s
    int timeout_s = 60;
};

/// Chat-completions client. Retries transport failures with exponential
/// backoff; anything else surfaces as a typed error, never a truncated reply.
class HttpGenerator : public Generator {
public:
    explicit HttpGenerator(HttpBackendConfig config);
    std::string generate(const GenerationRequest& req) override;

private:
    HttpBackendConfig config_;
};

/// Embeddings client against the same endpoint family.
class HttpEmbedder : public Embedder {
public:
    HttpEmbedder(HttpBackendConfig config, std::size_t expected_dims);
    EmbeddingVector embed(std::string_view)  override;
    std::size_t dims() const override { return dims_; }
    std::string id() const override { return "http:" + config_.model; }

private:
    HttpBackendConfig config_;
    std::size_t dims_;
};

}  // namespace iprar::providers
