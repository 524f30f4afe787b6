#include "iprar/providers/provider.hpp"

#include "iprar/util/error.hpp"
#include "iprar/util/io.hpp"
#include "iprar/util/text.hpp"

#include <algorithm>
#include <cmath>

namespace iprar::providers {

const char* to_string(Role role) {
    switch (role) {
        case Role::Reasoner: return "reasoner";
        case Role::DeepThinker: return "deep_thinker";
        case Role::Judge: return "judge";
        case Role::Extractor: return "extractor";
    }
    return "?";
}

Role role_from_string(const std::string& s) {
    if (s == "reasoner") return Role::Reasoner;
    if (s == "deep_thinker") return Role::DeepThinker;
    if (s == "judge") return Role::Judge;
    if (s == "extractor") return Role::Extractor;
    throw InvalidArgumentError("unknown provider role: " + s);
}

bool EmbeddingVector::is_zero() const {
    return std::all_of(values.begin(), values.end(), [](float x) { return x == 0.0f; });
}

double EmbeddingVector::l2_norm() const {
    double acc = 0.0;
    for (float x : values) acc += static_cast<double>(x) * x;
    return std::sqrt(acc);
}

void l2_normalize(EmbeddingVector& v) {
    double norm = v.l2_norm();
    if (norm == 0.0) return;
    for (float& x : v.values) x = static_cast<float>(x / norm);
}

double cosine_similarity(const EmbeddingVector& u, const EmbeddingVector& v) {
    if (u.dims() != v.dims()) {
        throw InvalidArgumentError("cosine: dimension mismatch (" + std::to_string(u.dims()) +
                                   " vs " + std::to_string(v.dims()) + ")");
    }
    if (u.is_zero() || v.is_zero()) {
        throw InvalidArgumentError("cosine: zero vector");
    }
    double dot = 0.0;
    for (std::size_t i = 0; i < u.dims(); ++i) {
        dot += static_cast<double>(u.values[i]) * v.values[i];
    }
    double sim = dot / (u.l2_norm() * v.l2_norm());
    return std::clamp(sim, -1.0, 1.0);
}

HashingEmbedder::HashingEmbedder(std::size_t dims) : dims_(dims) {
    if (dims == 0) throw InvalidArgumentError("embedder dims must be > 0");
}

std::string HashingEmbedder::id() const {
    return "hash-ngram-v1-d" + std::to_string(dims_);
}

EmbeddingVector HashingEmbedder::embed(std::string_view input) {
    if (input.empty()) throw InvalidArgumentError("embed: empty text");
    EmbeddingVector v;
    v.values.assign(dims_, 0.0f);

    auto bump = [&](std::uint64_t h) {
        float sign = ((h >> 32) & 1) ? 1.0f : -1.0f;
        v.values[h % dims_] += sign;
    };
    const auto tokens = text::tokenize(input);
    for (std::size_t i = 0; i < tokens.size(); ++i) {
        bump(text::fnv1a64(tokens[i]));
        if (i + 1 < tokens.size()) {
            bump(text::fnv1a64(tokens[i] + '\x1f' + tokens[i + 1]));
        }
    }
    // Signed buckets can cancel; a zero vector would break cosine downstream.
    if (v.is_zero()) v.values[0] = 1.0f;
    l2_normalize(v);
    return v;
}

ProviderScript ProviderScript::load(const std::filesystem::path& path) {
    ProviderScript script;
    for (const auto& j : io::read_jsonl(path)) {
        if (!j.is_object() || !j.contains("role") || !j.contains("template_id") ||
            !j.contains("key") || !j.contains("response")) {
            throw IoError("provider script " + path.string() +
                          ": entries need role/template_id/key/response");
        }
        Role role = role_from_string(j["role"].get<std::string>());
        std::string k = std::string(to_string(role)) + '|' + j["template_id"].get<std::string>() +
                        '|' + j["key"].get<std::string>();
        auto [it, inserted] = script.entries_.emplace(k, j["response"].get<std::string>());
        if (!inserted) {
            throw IoError("provider script " + path.string() + ": duplicate entry for " + k);
        }
    }
    return script;
}

const std::string& ProviderScript::lookup(Role role, const std::string& template_id,
                                          const std::string& key) const {
    std::string prefix = std::string(to_string(role)) + '|' + template_id + '|';
    auto it = entries_.find(prefix + key);
    if (it != entries_.end()) return it->second;
    it = entries_.find(prefix + "*");
    if (it != entries_.end()) return it->second;
    throw ProviderError("mock miss: no script entry for (" + std::string(to_string(role)) + ", " +
                        template_id + ", " + key + ")");
}

std::string ScriptedGenerator::generate(const GenerationRequest& req) {
    ++calls_;
    const std::string& reply = script_->lookup(req.role, req.template_id, req.key);
    if (reply.empty()) {
        throw ProviderError("mock script entry is empty for template " + req.template_id);
    }
    return reply;
}

std::string UnconfiguredGenerator::generate(const GenerationRequest& req) {
    throw ProviderError(std::string("no backend for role ") + to_string(req.role));
}

}  // namespace iprar::providers
