#pragma once

#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <vector>

namespace iprar::corpus {

struct Document {
    std::string doc_id;
    std::string title;
    std::string abstract_text;
    std::string body;  // markdown, kept verbatim
    std::optional<int> year;
    std::vector<std::string> keywords;
    std::vector<std::string> cited_doc_ids;

    bool has_text() const { return !abstract_text.empty() || !body.empty(); }
};

enum class ChunkLevel { Abstract, FullText };

const char* to_string(ChunkLevel level);
ChunkLevel chunk_level_from_string(const std::string& s);

struct Chunk {
    std::string chunk_id;
    std::string doc_id;
    ChunkLevel level = ChunkLevel::FullText;
    std::string text;
    int ordinal = 0;
};

/// chunk_id is a pure function of (doc_id, level, ordinal):
/// "<doc_id>#a0000" for the abstract, "<doc_id>#f<ordinal, zero-padded>".
std::string make_chunk_id(const std::string& doc_id, ChunkLevel level, int ordinal);

struct ChunkPolicy {
    int target_words = 300;
    int overlap_words = 50;
    bool paragraph_aligned = true;

    void validate() const;  // overlap_words < target_words, both sane
};

/** Splits a document into retrieval chunks.
 *
 * The abstract (when non-empty) becomes exactly one Abstract-level chunk.
 * The body is covered by FullText windows of `target_words` words advancing
 * by (target - overlap); when `paragraph_aligned` is set, a window's end is
 * pulled back to the nearest paragraph boundary so chunks end where
 * paragraphs do (the next window still starts `overlap_words` before that
 * end, so consecutive overlap never exceeds the policy). Chunk text is a
 * byte slice of the original body, so markdown survives verbatim.
 *
 * Throws InvalidArgumentError for a document with no text at either level.
 */
std::vector<Chunk> chunk_document(const Document& doc, const ChunkPolicy& policy);

struct IngestRejection {
    std::string where;   // file or file:line
    std::string doc_id;  // empty when the id itself was unreadable
    std::string reason;
};

struct IngestReport {
    std::size_t accepted = 0;
    std::vector<IngestRejection> rejections;
};

enum class CorpusFormat { Auto, Jsonl, Directory };

/// Immutable after ingestion; safe for concurrent readers.
class Corpus {
public:
    static Corpus ingest(const std::filesystem::path& source, CorpusFormat format,
                         IngestReport& report);

    static Corpus load(const std::filesystem::path& path);
    void save(const std::filesystem::path& path) const;

    const std::vector<Document>& documents() const { return docs_; }
    const Document* find(const std::string& doc_id) const;
    std::size_t size() const { return docs_.size(); }

    /// Deterministic chunking of every document under one policy.
    std::vector<Chunk> chunk_all(const ChunkPolicy& policy) const;

private:
    bool add(Document doc);  // false on duplicate id

    std::vector<Document> docs_;
    std::map<std::string, std::size_t> by_id_;
};

/// Resolves chunk texts and the chunk -> document mapping after indexing.
class ChunkStore {
public:
    explicit ChunkStore(std::vector<Chunk> chunks);

    static ChunkStore load(const std::filesystem::path& path);
    void save(const std::filesystem::path& path) const;

    const std::vector<Chunk>& chunks() const { return chunks_; }
    const Chunk& get(const std::string& chunk_id) const;
    const std::string& doc_of(const std::string& chunk_id) const;
    std::vector<const Chunk*> at_level(ChunkLevel level) const;

private:
    std::vector<Chunk> chunks_;
    std::map<std::string, std::size_t> by_id_;
};

}  // namespace iprar::corpus
