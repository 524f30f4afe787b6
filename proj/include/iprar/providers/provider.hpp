#pragma once

#include "iprar/util/error.hpp"

#include <atomic>
#include <filesystem>
#include <functional>
#include <map>
#include <memory>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace iprar::providers {

/// Which configured backend serves a request. Mirrors the pipeline's split
/// between a general reasoning model, a dedicated deep-thinking model, a
/// grading model and an extraction model.
enum class Role { Reasoner, DeepThinker, Judge, Extractor };

const char* to_string(Role role);
Role role_from_string(const std::string& s);

struct Prompt {
    std::string system;
    std::string user;
};

struct GenerationRequest {
    Role role = Role::Reasoner;
    std::string template_id;  // which prompt template produced this request
    std::string key;          // stable identity of the call site's inputs (mock matching)
    Prompt prompt;
    int max_output = 1024;
    double temperature = 0.0;
};

class Generator {
public:
    virtual ~Generator() = default;
    /// Returns non-empty response text or throws ProviderError.
    virtual std::string generate(const GenerationRequest& req) = 0;
};

/// Audit record of one generator call; answer traces embed these verbatim.
struct Exchange {
    std::string role;
    std::string template_id;
    std::string key;
    Prompt prompt;
    std::string reply;
};

/** Issues `req`, parses the reply with `parse`, and on a parse failure asks
 * once more — same key, template_id suffixed "__retry", user prompt extended
 * with the unparseable reply plus `format_hint` — before giving up with a
 * ParseError. Both exchanges land in `log` when it is non-null.
 */
template <typename T>
T request_parsed(Generator& gen, GenerationRequest req,
                 const std::function<std::optional<T>(const std::string&)>& parse,
                 const std::string& format_hint, std::vector<Exchange>* log) {
    std::string reply = gen.generate(req);
    if (log) log->push_back({to_string(req.role), req.template_id, req.key, req.prompt, reply});
    if (std::optional<T> parsed = parse(reply)) return std::move(*parsed);

    GenerationRequest retry = req;
    retry.template_id += "__retry";
    retry.prompt.user += "\n\nYour previous reply could not be used:\n" + reply + "\n\n" +
                         format_hint;
    std::string second = gen.generate(retry);
    if (log) {
        log->push_back({to_string(retry.role), retry.template_id, retry.key, retry.prompt, second});
    }
    if (std::optional<T> parsed = parse(second)) return std::move(*parsed);
    throw ParseError("reply for " + req.template_id + " (key '" + req.key +
                     "') was unusable even after a reformat retry");
}

struct EmbeddingVector {
    std::vector<float> values;

    std::size_t dims() const { return values.size(); }
    bool is_zero() const;
    double l2_norm() const;
};

/// Normalizes in place to unit L2 norm. The all-zero vector is left alone.
void l2_normalize(EmbeddingVector& v);

/// Standard cosine similarity in [-1, 1]. Throws InvalidArgumentError on a
/// dimension mismatch or an all-zero argument.
double cosine_similarity(const EmbeddingVector& u, const EmbeddingVector& v);

class Embedder {
public:
    virtual ~Embedder() = default;
    /// Unit-normalized vector of fixed dims. Throws on empty text.
    virtual EmbeddingVector embed(std::string_view text) = 0;
    virtual std::size_t dims() const = 0;
    /// Identifies the embedding space; indexes record it and searches check it.
    virtual std::string id() const = 0;
};

/** Deterministic offline embedder: feature-hashes word unigrams and bigrams
 * into `dims` signed buckets and L2-normalizes. Texts sharing vocabulary get
 * genuinely higher cosine, which gives retrieval tests usable geometry, and
 * identical texts always embed identically. Never yields the zero vector.
 */
class HashingEmbedder : public Embedder {
public:
    explicit HashingEmbedder(std::size_t dims = 64);

    EmbeddingVector embed(std::string_view text) override;
    std::size_t dims() const override { return dims_; }
    std::string id() const override;

private:
    std::size_t dims_;
};

/// One canned reply: exact (role, template_id, key) match, with an optional
/// per-(role, template_id) wildcard entry under key "*".
class ProviderScript {
public:
    static ProviderScript load(const std::filesystem::path& path);

    /// Throws ProviderError when no entry (exact or wildcard) matches.
    const std::string& lookup(Role role, const std::string& template_id,
                              const std::string& key) const;

    std::size_t size() const { return entries_.size(); }

private:
    // key: role|template_id|key
    std::map<std::string, std::string> entries_;
};

/// Mock generator: a pure function of the request, backed by a ProviderScript.
class ScriptedGenerator : public Generator {
public:
    explicit ScriptedGenerator(std::shared_ptr<const ProviderScript> script)
        : script_(std::move(script)) {}

    std::string generate(const GenerationRequest& req) override;

    /// Number of generate() calls served; used by scan-budget tests.
    std::size_t calls() const { return calls_.load(); }

private:
    std::shared_ptr<const ProviderScript> script_;
    std::atomic<std::size_t> calls_{0};
};

/// Fails every call with "no backend for role"; stands in for roles that
/// were never configured.
class UnconfiguredGenerator : public Generator {
public:
    std::string generate(const GenerationRequest& req) override;
};

}  // namespace iprar::providers
