#include "iprar/index/index.hpp"

#include "iprar/kern/simd.hpp"
#include "iprar/util/error.hpp"
#include "iprar/util/io.hpp"
#include "iprar/util/text.hpp"

#include <algorithm>
#include <cstring>
#include <numeric>
#include <unordered_map>
#include <unordered_set>

namespace iprar::index {

using corpus::Chunk;
using corpus::ChunkLevel;
using io::ordered_json;

const char* to_string(Channel c) {
    switch (c) {
        case Channel::QuestionAbstract: return "question_abstract";
        case Channel::QuestionFullText: return "question_fulltext";
        case Channel::VirtualAnswerAbstract: return "virtual_answer_abstract";
        case Channel::VirtualAnswerFullText: return "virtual_answer_fulltext";
        case Channel::KeywordAbstract: return "keyword_abstract";
        case Channel::KeywordFullText: return "keyword_fulltext";
    }
    return "?";
}

Channel channel_from_string(const std::string& s) {
    for (Channel c : kAllChannels) {
        if (s == to_string(c)) return c;
    }
    throw InvalidArgumentError("unknown channel: " + s);
}

namespace {

std::string level_tag(ChunkLevel level) {
    return corpus::to_string(level);
}

constexpr int kIndexFormatVersion = 1;

}  // namespace

VectorIndex VectorIndex::build(std::span<const Chunk* const> chunks, ChunkLevel level,
                               providers::Embedder& embedder) {
    if (chunks.empty()) {
        throw InvalidArgumentError(std::string("cannot build an empty ") + level_tag(level) +
                                   " vector index");
    }
    VectorIndex idx;
    idx.level_ = level;
    idx.embedder_id_ = embedder.id();
    idx.dims_ = embedder.dims();
    idx.chunk_ids_.reserve(chunks.size());
    idx.vectors_.reserve(chunks.size() * idx.dims_);

    std::unordered_set<std::string> seen;
    for (const Chunk* chunk : chunks) {
        if (chunk->level != level) {
            throw InvalidArgumentError("chunk " + chunk->chunk_id + " is not at level " +
                                       level_tag(level));
        }
        if (!seen.insert(chunk->chunk_id).second) {
            throw InvalidArgumentError("duplicate chunk_id in index build: " + chunk->chunk_id);
        }
        providers::EmbeddingVector v = embedder.embed(chunk->text);
        idx.chunk_ids_.push_back(chunk->chunk_id);
        idx.vectors_.insert(idx.vectors_.end(), v.values.begin(), v.values.end());
    }
    return idx;
}

void VectorIndex::save(const std::filesystem::path& dir) const {
    std::filesystem::create_directories(dir);
    const std::string tag = level_tag(level_);

    ordered_json manifest;
    manifest["format_version"] = kIndexFormatVersion;
    manifest["level"] = tag;
    manifest["embedder_id"] = embedder_id_;
    manifest["dims"] = dims_;
    manifest["count"] = chunk_ids_.size();
    io::write_file(dir / ("manifest_" + tag + ".json"), manifest.dump(2) + "\n");

    // Row-major float32, little-endian (native on every supported target).
    static_assert(sizeof(float) == 4);
    std::string blob(vectors_.size() * sizeof(float), '\0');
    std::memcpy(blob.data(), vectors_.data(), blob.size());
    io::write_file(dir / ("vectors_" + tag + ".f32"), blob);

    std::string ids;
    for (const auto& id : chunk_ids_) {
        ids += ordered_json(id).dump();
        ids += '\n';
    }
    io::write_file(dir / ("chunk_ids_" + tag + ".jsonl"), ids);
}

VectorIndex VectorIndex::load(const std::filesystem::path& dir, ChunkLevel level) {
    const std::string tag = level_tag(level);
    const auto manifest_path = dir / ("manifest_" + tag + ".json");
    if (!std::filesystem::exists(manifest_path)) {
        throw MissingArtifactError(tag + " vector index not found at " + manifest_path.string() +
                                   " (run `index` first)");
    }
    ordered_json manifest = ordered_json::parse(io::read_file(manifest_path));
    if (manifest.at("format_version").get<int>() != kIndexFormatVersion) {
        throw IoError("unsupported index format version in " + manifest_path.string());
    }

    VectorIndex idx;
    idx.level_ = level;
    idx.embedder_id_ = manifest.at("embedder_id").get<std::string>();
    idx.dims_ = manifest.at("dims").get<std::size_t>();
    const auto count = manifest.at("count").get<std::size_t>();

    for (const auto& j : io::read_jsonl(dir / ("chunk_ids_" + tag + ".jsonl"))) {
        idx.chunk_ids_.push_back(j.get<std::string>());
    }
    std::string blob = io::read_file(dir / ("vectors_" + tag + ".f32"));
    if (idx.chunk_ids_.size() != count || blob.size() != count * idx.dims_ * sizeof(float)) {
        throw IoError("vector index at " + dir.string() + " is inconsistent with its manifest");
    }
    idx.vectors_.resize(count * idx.dims_);
    std::memcpy(idx.vectors_.data(), blob.data(), blob.size());
    return idx;
}

std::vector<RetrievalHit> vector_search(const VectorIndex& index, const std::string& query_text,
                                        std::size_t k, providers::Embedder& embedder,
                                        Channel channel) {
    if (k == 0) throw InvalidArgumentError("vector_search: k must be > 0");
    if (embedder.id() != index.embedder_id()) {
        throw InvalidArgumentError("embedder mismatch: index built with '" + index.embedder_id() +
                                   "', query uses '" + embedder.id() + "'");
    }
    providers::EmbeddingVector q = embedder.embed(query_text);

    const std::size_t n = index.size();
    std::vector<float> scores(n);
    kern::score_rows(index.vectors().data(), n, index.dims(), q.values.data(), scores.data());

    std::vector<std::size_t> order(n);
    std::iota(order.begin(), order.end(), 0);
    auto better = [&](std::size_t a, std::size_t b) {
        float sa = std::max(scores[a], 0.0f);
        float sb = std::max(scores[b], 0.0f);
        if (sa != sb) return sa > sb;
        return index.chunk_ids()[a] < index.chunk_ids()[b];
    };
    const std::size_t take = std::min(k, n);
    std::partial_sort(order.begin(), order.begin() + take, order.end(), better);

    std::vector<RetrievalHit> hits;
    hits.reserve(take);
    for (std::size_t i = 0; i < take; ++i) {
        double sim = std::max(static_cast<double>(scores[order[i]]), 0.0);
        hits.push_back({index.chunk_ids()[order[i]], channel, std::min(sim, 1.0),
                        static_cast<int>(i + 1)});
    }
    return hits;
}

KeywordIndex KeywordIndex::build(std::span<const Chunk* const> chunks, ChunkLevel level) {
    KeywordIndex idx;
    idx.level_ = level;
    std::map<std::string, std::set<std::string>> acc;
    for (const Chunk* chunk : chunks) {
        if (chunk->level != level) {
            throw InvalidArgumentError("chunk " + chunk->chunk_id + " is not at level " +
                                       level_tag(level));
        }
        for (auto& token : text::tokenize(chunk->text)) {
            acc[std::move(token)].insert(chunk->chunk_id);
        }
    }
    for (auto& [token, ids] : acc) {
        idx.postings_[token] = std::vector<std::string>(ids.begin(), ids.end());
    }
    return idx;
}

void KeywordIndex::save(const std::filesystem::path& dir) const {
    std::filesystem::create_directories(dir);
    std::string out;
    for (const auto& [token, ids] : postings_) {
        ordered_json j;
        j["token"] = token;
        j["chunks"] = ids;
        out += j.dump();
        out += '\n';
    }
    io::write_file(dir / ("keywords_" + level_tag(level_) + ".jsonl"), out);
}

KeywordIndex KeywordIndex::load(const std::filesystem::path& dir, ChunkLevel level) {
    const auto path = dir / ("keywords_" + level_tag(level) + ".jsonl");
    if (!std::filesystem::exists(path)) {
        throw MissingArtifactError(level_tag(level) + " keyword index not found at " +
                                   path.string() + " (run `index` first)");
    }
    KeywordIndex idx;
    idx.level_ = level;
    for (const auto& j : io::read_jsonl(path)) {
        idx.postings_[j.at("token").get<std::string>()] =
            j.at("chunks").get<std::vector<std::string>>();
    }
    return idx;
}

const std::vector<std::string>* KeywordIndex::postings(const std::string& token) const {
    auto it = postings_.find(token);
    return it == postings_.end() ? nullptr : &it->second;
}

std::vector<RetrievalHit> keyword_search(
    const KeywordIndex& index, const std::vector<std::string>& keywords,
    const std::map<std::string, std::vector<std::string>>& synonyms, std::size_t k,
    Channel channel) {
    if (k == 0) throw InvalidArgumentError("keyword_search: k must be > 0");
    if (keywords.empty()) throw InvalidArgumentError("keyword_search: no keywords");

    // Chunks matching one term = intersection of its tokens' postings.
    auto term_matches = [&](const std::string& term) {
        std::vector<std::string> out;
        const auto tokens = text::tokenize(term);
        if (tokens.empty()) return out;
        const std::vector<std::string>* base = index.postings(tokens[0]);
        if (!base) return out;
        out = *base;
        for (std::size_t i = 1; i < tokens.size() && !out.empty(); ++i) {
            const std::vector<std::string>* next = index.postings(tokens[i]);
            if (!next) return std::vector<std::string>{};
            std::vector<std::string> merged;
            std::set_intersection(out.begin(), out.end(), next->begin(), next->end(),
                                  std::back_inserter(merged));
            out = std::move(merged);
        }
        return out;
    };

    const std::size_t n_groups = keywords.size();
    std::unordered_map<std::string, std::size_t> matched_groups;
    for (const auto& keyword : keywords) {
        std::set<std::string> group_chunks;
        for (const auto& id : term_matches(keyword)) group_chunks.insert(id);
        if (auto it = synonyms.find(keyword); it != synonyms.end()) {
            for (const auto& synonym : it->second) {
                for (const auto& id : term_matches(synonym)) group_chunks.insert(id);
            }
        }
        for (const auto& id : group_chunks) ++matched_groups[id];
    }

    std::vector<std::pair<std::string, std::size_t>> scored(matched_groups.begin(),
                                                            matched_groups.end());
    std::sort(scored.begin(), scored.end(), [](const auto& a, const auto& b) {
        if (a.second != b.second) return a.second > b.second;
        return a.first < b.first;
    });
    if (scored.size() > k) scored.resize(k);

    std::vector<RetrievalHit> hits;
    hits.reserve(scored.size());
    for (std::size_t i = 0; i < scored.size(); ++i) {
        hits.push_back({scored[i].first, channel,
                        static_cast<double>(scored[i].second) / static_cast<double>(n_groups),
                        static_cast<int>(i + 1)});
    }
    return hits;
}

}  // namespace iprar::index
