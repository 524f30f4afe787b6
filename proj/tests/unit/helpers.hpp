#pragma once

#include "iprar/providers/provider.hpp"
#include "iprar/util/io.hpp"

#include <atomic>
#include <filesystem>
#include <functional>
#include <map>
#include <random>
#include <string>
#include <vector>

namespace testutil {

/// Generator backed by a plain function; the simplest possible test double.
class FnGenerator : public iprar::providers::Generator {
public:
    using Fn = std::function<std::string(const iprar::providers::GenerationRequest&)>;
    explicit FnGenerator(Fn fn) : fn_(std::move(fn)) {}

    std::string generate(const iprar::providers::GenerationRequest& req) override {
        ++calls_;
        return fn_(req);
    }

    std::size_t calls() const { return calls_.load(); }

private:
    Fn fn_;
    std::atomic<std::size_t> calls_{0};
};

/// Embedder returning preset vectors per exact text; lets tests pin cosine
/// similarities precisely. Unknown texts get a fixed fallback direction.
class StubEmbedder : public iprar::providers::Embedder {
public:
    StubEmbedder(std::size_t dims, std::map<std::string, std::vector<float>> table)
        : dims_(dims), table_(std::move(table)) {}

    iprar::providers::EmbeddingVector embed(std::string_view text) override {
        auto it = table_.find(std::string(text));
        if (it != table_.end()) return {it->second};
        std::vector<float> v(dims_, 0.0f);
        v[0] = 1.0f;
        return {v};
    }

    std::size_t dims() const override { return dims_; }
    std::string id() const override { return "stub"; }

private:
    std::size_t dims_;
    std::map<std::string, std::vector<float>> table_;
};

/// Fresh scratch directory under the system temp root.
inline std::filesystem::path scratch_dir(const std::string& tag) {
    static std::atomic<int> counter{0};
    auto dir = std::filesystem::temp_directory_path() /
               ("iprar_test_" + tag + "_" + std::to_string(::getpid()) + "_" +
                std::to_string(counter.fetch_add(1)));
    std::filesystem::remove_all(dir);
    std::filesystem::create_directories(dir);
    return dir;
}

struct ScriptEntry {
    std::string role;
    std::string template_id;
    std::string key;
    std::string response;
};

/// Writes entries as a script file and loads it back.
inline std::shared_ptr<const iprar::providers::ProviderScript> make_script(
    const std::vector<ScriptEntry>& entries) {
    auto path = scratch_dir("script") / "script.jsonl";
    std::vector<iprar::io::ordered_json> rows;
    for (const auto& e : entries) {
        rows.push_back({{"role", e.role},
                        {"template_id", e.template_id},
                        {"key", e.key},
                        {"response", e.response}});
    }
    iprar::io::write_jsonl(path, rows);
    return std::make_shared<iprar::providers::ProviderScript>(
        iprar::providers::ProviderScript::load(path));
}

}  // namespace testutil
