#include "iprar/providers/http_provider.hpp"

#include "iprar/util/error.hpp"

#include <httplib.h>
#include <json.hpp>

#include <chrono>
#include <cstdlib>
#include <thread>

namespace iprar::providers {

namespace {

using nlohmann::json;

struct SplitUrl {
    std::string host;  // scheme://host[:port]
    std::string path_prefix;
};

SplitUrl split_base_url(const std::string& base_url) {
    // httplib's Client takes scheme://host:port; path components must be
    // carried separately.
    auto scheme_end = base_url.find("://");
    std::size_t path_start =
        base_url.find('/', scheme_end == std::string::npos ? 0 : scheme_end + 3);
    if (path_start == std::string::npos) return {base_url, ""};
    std::string prefix = base_url.substr(path_start);
    while (!prefix.empty() && prefix.back() == '/') prefix.pop_back();
    return {base_url.substr(0, path_start), prefix};
}

httplib::Headers auth_headers(const HttpBackendConfig& config) {
    httplib::Headers headers{{"Content-Type", "application/json"}};
    if (!config.api_key_env.empty()) {
        if (const char* key = std::getenv(config.api_key_env.c_str())) {
            headers.emplace("Authorization", std::string("Bearer ") + key);
        }
    }
    return headers;
}

/// POSTs `body` to base_url + path, retrying transport failures and 5xx
/// replies up to max_attempts with exponential backoff.
json post_json(const HttpBackendConfig& config, const std::string& path, const json& body) {
    if (config.base_url.empty()) {
        throw ProviderError("no backend configured (empty base_url)");
    }
    SplitUrl url = split_base_url(config.base_url);
    std::string payload = body.dump();
    std::string last_error;

    for (int attempt = 1; attempt <= config.max_attempts; ++attempt) {
        if (attempt > 1) {
            int delay = config.backoff_ms << (attempt - 2);
            std::this_thread::sleep_for(std::chrono::milliseconds(delay));
        }
        httplib::Client client(url.host);
        client.set_connection_timeout(config.timeout_s, 0);
        client.set_read_timeout(config.timeout_s, 0);
        auto res = client.Post(url.path_prefix + path, auth_headers(config), payload,
                               "application/json");
        if (!res) {
            last_error = "transport failure: " + httplib::to_string(res.error());
            continue;
        }
        if (res->status >= 500) {
            last_error = "server error: HTTP " + std::to_string(res->status);
            continue;
        }
        if (res->status != 200) {
            throw ProviderError("backend rejected request: HTTP " + std::to_string(res->status) +
                                " " + res->body.substr(0, 200));
        }
        json parsed = json::parse(res->body, nullptr, false);
        if (parsed.is_discarded()) {
            throw ProviderError("backend returned malformed JSON");
        }
        return parsed;
    }
    throw ProviderError(last_error + " after " + std::to_string(config.max_attempts) +
                        " attempts");
}

}  // namespace

HttpGenerator::HttpGenerator(HttpBackendConfig config) : config_(std::move(config)) {}

std::string HttpGenerator::generate(const GenerationRequest& req) {
    json body = {
        {"model", config_.model},
        {"messages",
         json::array({{{"role", "system"}, {"content", req.prompt.system}},
                      {{"role", "user"}, {"content", req.prompt.user}}})},
        {"temperature", req.temperature},
        {"max_tokens", req.max_output},
    };
    json reply = post_json(config_, "/v1/chat/completions", body);
    try {
        std::string content = reply.at("choices").at(0).at("message").at("content");
        if (content.empty()) throw ProviderError("backend returned an empty completion");
        return content;
    } catch (const json::exception&) {
        throw ProviderError("unexpected completion response shape");
    }
}

HttpEmbedder::HttpEmbedder(HttpBackendConfig config, std::size_t expected_dims)
    : config_(std::move(config)), dims_(expected_dims) {
    if (dims_ == 0) throw InvalidArgumentError("embedder dims must be > 0");
}

EmbeddingVector HttpEmbedder::embed(std::string_view input) {
    if (input.empty()) throw InvalidArgumentError("embed: empty text");
    json body = {
        {"model", config_.model},
        {"input", json::array({std::string(input)})},
    };
    json reply = post_json(config_, "/v1/embeddings", body);
    EmbeddingVector v;
    try {
        const auto& values = reply.at("data").at(0).at("embedding");
        v.values.reserve(values.size());
        for (const auto& x : values) v.values.push_back(x.get<float>());
    } catch (const json::exception&) {
        throw ProviderError("unexpected embedding response shape");
    }
    if (v.dims() != dims_) {
        throw ProviderError("embedding dims mismatch: expected " + std::to_string(dims_) +
                            ", got " + std::to_string(v.dims()));
    }
    l2_normalize(v);
    return v;
}

}  // namespace iprar::providers
