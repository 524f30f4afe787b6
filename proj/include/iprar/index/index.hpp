#pragma once

#include "iprar/corpus/corpus.hpp"
#include "iprar/providers/provider.hpp"

#include <filesystem>
#include <map>
#include <set>
#include <span>
#include <string>
#include <vector>

namespace iprar::index {

/// One retrieval run: (query granularity) x (chunk level).
enum class Channel {
    QuestionAbstract,
    QuestionFullText,
    VirtualAnswerAbstract,
    VirtualAnswerFullText,
    KeywordAbstract,
    KeywordFullText,
};

inline constexpr Channel kAllChannels[] = {
    Channel::QuestionAbstract,     Channel::QuestionFullText,
    Channel::VirtualAnswerAbstract, Channel::VirtualAnswerFullText,
    Channel::KeywordAbstract,      Channel::KeywordFullText,
};

const char* to_string(Channel c);
Channel channel_from_string(const std::string& s);

struct RetrievalHit {
    std::string chunk_id;
    Channel channel = Channel::QuestionAbstract;
    double similarity = 0.0;  // in [0, 1]
    int rank = 0;             // 1-based within the channel
};

/// Brute-force dense index over one chunk level. Immutable after build;
/// vectors are stored row-major and unit-normalized.
class VectorIndex {
public:
    VectorIndex() = default;

    static VectorIndex build(std::span<const corpus::Chunk* const> chunks,
                             corpus::ChunkLevel level, providers::Embedder& embedder);

    static VectorIndex load(const std::filesystem::path& dir, corpus::ChunkLevel level);
    void save(const std::filesystem::path& dir) const;

    corpus::ChunkLevel level() const { return level_; }
    const std::string& embedder_id() const { return embedder_id_; }
    std::size_t dims() const { return dims_; }
    std::size_t size() const { return chunk_ids_.size(); }
    const std::vector<std::string>& chunk_ids() const { return chunk_ids_; }
    const std::vector<float>& vectors() const { return vectors_; }

private:
    corpus::ChunkLevel level_ = corpus::ChunkLevel::Abstract;
    std::string embedder_id_;
    std::size_t dims_ = 0;
    std::vector<std::string> chunk_ids_;
    std::vector<float> vectors_;  // row-major, size() * dims_
};

/** Exact top-k by cosine similarity (negative cosines clamp to 0 before
 * ranking). Ties break by ascending chunk_id; fewer than k hits come back
 * only when the index is smaller than k. Throws on k = 0 or an embedder
 * whose id differs from the one the index was built with.
 */
std::vector<RetrievalHit> vector_search(const VectorIndex& index, const std::string& query_text,
                                        std::size_t k, providers::Embedder& embedder,
                                        Channel channel);

/// Token -> chunk postings over one chunk level. Tokens are case-folded
/// (see text::tokenize); postings are sorted and deduplicated.
class KeywordIndex {
public:
    KeywordIndex() = default;

    static KeywordIndex build(std::span<const corpus::Chunk* const> chunks,
                              corpus::ChunkLevel level);

    static KeywordIndex load(const std::filesystem::path& dir, corpus::ChunkLevel level);
    void save(const std::filesystem::path& dir) const;

    corpus::ChunkLevel level() const { return level_; }
    std::size_t token_count() const { return postings_.size(); }
    const std::vector<std::string>* postings(const std::string& token) const;

private:
    corpus::ChunkLevel level_ = corpus::ChunkLevel::Abstract;
    std::map<std::string, std::vector<std::string>> postings_;
};

/** Scores each chunk by the fraction of keyword groups it matches, where a
 * group is a keyword plus its synonyms and a term matches when every one of
 * its tokens occurs in the chunk. Similarity is that fraction (always in
 * (0, 1]); chunks matching no group are never returned. Top-k by score,
 * ties by ascending chunk_id.
 */
std::vector<RetrievalHit> keyword_search(
    const KeywordIndex& index, const std::vector<std::string>& keywords,
    const std::map<std::string, std::vector<std::string>>& synonyms, std::size_t k,
    Channel channel);

}  // namespace iprar::index
