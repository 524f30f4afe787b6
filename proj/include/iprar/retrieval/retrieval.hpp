#pragma once

#include "iprar/index/index.hpp"
#include "iprar/prompts/prompts.hpp"
#include "iprar/providers/provider.hpp"

#include <functional>
#include <map>
#include <string>
#include <vector>

namespace iprar::retrieval {

/// What the reasoner produces before any retrieval happens: search keywords,
/// optional synonyms per keyword, and a hypothetical ("virtual") answer used
/// as a query surrogate.
struct PreRetrievalOutput {
    std::vector<std::string> keywords;
    std::map<std::string, std::vector<std::string>> synonyms;
    std::string virtual_answer;
};

struct AggregatorWeights {
    double w_s = 5.0;
    double w_m = 3.0;
    double w_r = 1.0;

    /// Throws InvalidArgumentError on negative or all-zero weights.
    void validate() const;
};

/// One fused candidate: s_sim is the best similarity across channels, m the
/// number of distinct channels that returned the chunk, r the number of
/// distinct retrieved chunks sharing the chunk's document (itself included).
struct AggregatedCandidate {
    std::string chunk_id;
    double s_sim = 0.0;
    int m = 0;
    int r = 0;
    double score = 0.0;
};

/** Asks the reasoner for keywords, synonyms and a virtual answer, parsed from
 * a strict JSON reply (one reformat retry). Validates: keywords non-empty,
 * every synonym key is a keyword, virtual answer non-empty.
 */
PreRetrievalOutput pre_retrieval_reason(const std::string& question,
                                        providers::Generator& reasoner,
                                        const prompts::PromptLibrary& prompts,
                                        std::vector<providers::Exchange>* log = nullptr);

/// The four indexes the fan-out searches.
struct IndexSet {
    const index::VectorIndex* abstract_vectors = nullptr;
    const index::VectorIndex* fulltext_vectors = nullptr;
    const index::KeywordIndex* abstract_keywords = nullptr;
    const index::KeywordIndex* fulltext_keywords = nullptr;
};

/** Runs all six channels — question and virtual answer against both vector
 * indexes, keywords (with synonyms) against both keyword indexes — each
 * top-k_per_channel, and returns the concatenated union with channel
 * provenance. No cross-channel deduplication here.
 */
std::vector<index::RetrievalHit> multi_channel_retrieve(const std::string& question,
                                                        const PreRetrievalOutput& pre,
                                                        const IndexSet& indexes,
                                                        std::size_t k_per_channel,
                                                        providers::Embedder& embedder);

/** Fuses channel hits into one ranked list: per chunk take the max
 * similarity, the distinct-channel count m and the same-document chunk count
 * r, normalize each factor by its maximum over the pool, and combine with the
 * weights. A factor whose pool maximum is zero contributes zero. Sorted by
 * score descending, ties by ascending (document, chunk_id); `doc_of` maps a
 * chunk id to its document id.
 */
std::vector<AggregatedCandidate> aggregate(
    const std::vector<index::RetrievalHit>& hits, const AggregatorWeights& weights,
    const std::function<std::string(const std::string&)>& doc_of);

}  // namespace iprar::retrieval
