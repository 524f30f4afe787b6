#pragma once

#include "iprar/corpus/corpus.hpp"
#include "iprar/prompts/prompts.hpp"
#include "iprar/providers/provider.hpp"
#include "iprar/util/io.hpp"

#include <filesystem>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <utility>
#include <vector>

namespace iprar::kg {

/// Biomedical entity types (what triple extraction may emit) plus the
/// document-level types of the paper/method/dataset/direction stratum.
enum class EntityType { Gene, Protein, Drug, Disease, Paper, Method, Dataset, ResearchDirection };

const char* to_string(EntityType t);
EntityType entity_type_from_string(const std::string& s);
/// True for the four types triple extraction is allowed to produce.
bool is_biomedical(EntityType t);

struct EntityRef {
    std::string surface;
    EntityType type = EntityType::Gene;
    std::optional<std::string> canonical_id;
    std::optional<std::string> canonical_name;
    bool non_canonical = false;  // set when vocabulary adjudication answered NONE

    const std::string& effective_name() const {
        return canonical_name ? *canonical_name : surface;
    }
};

struct Triple {
    EntityRef head;
    std::string relation;
    EntityRef tail;
    std::string provenance_doc_id;
};

/// The closed relation set the graph accepts: a configurable entity-level
/// vocabulary plus the fixed document-level relations.
class RelationVocabulary {
public:
    explicit RelationVocabulary(const std::vector<std::string>& entity_relations);

    bool contains(const std::string& relation) const;
    bool is_entity_relation(const std::string& relation) const;
    const std::set<std::string>& entity_relations() const { return entity_; }

    /// usesMethod, usesDataset, inDirection, sharesEntity, sharesMethod,
    /// sharesDataset, cites.
    static const std::vector<std::string>& doc_relations();

private:
    std::set<std::string> entity_;
};

struct GraphNode {
    std::string node_id;
    EntityType label = EntityType::Gene;
    std::string name;
    std::set<std::string> aliases;  // every surface form seen for this node
};

struct GraphEdge {
    std::string edge_id;
    std::string src;  // node_id
    std::string dst;  // node_id
    std::string relation;
    std::set<std::string> provenance;  // doc ids asserting this edge
};

struct MutationReport {
    int nodes_created = 0;
    int nodes_matched = 0;
    int edges_created = 0;
    int edges_merged = 0;       // assertions folded into an existing (src,dst,relation)
    int self_loops_skipped = 0;

    MutationReport& operator+=(const MutationReport& o);
};

struct Subgraph {
    std::vector<GraphNode> nodes;       // ordered by (hop, node_id)
    std::vector<GraphEdge> edges;       // ordered by edge_id
    std::map<std::string, int> hops;    // node_id → hop distance from the seed set
};

struct Path {
    std::vector<std::string> node_ids;   // length = relations.size() + 1
    std::vector<std::string> relations;
};

/** Deduplicating property graph. Nodes are keyed by (label, name); edges by
 * (src, dst, relation) — re-asserting an existing edge merges provenance.
 * Ids are zero-padded creation-order counters, so identical build sequences
 * yield identical stores.
 */
class Graph {
public:
    /// Find-or-create; `surface` joins the node's alias set. Returns the node
    /// id and whether the node was created.
    std::pair<std::string, bool> upsert_node(EntityType label, const std::string& name,
                                             const std::string& surface);

    /// Validates relations against `vocab`; self-loops (head and tail landing
    /// on the same node) are skipped and counted, not inserted.
    MutationReport upsert_triples(const std::vector<Triple>& triples,
                                  const RelationVocabulary& vocab);

    /** Adds the paper-to-paper stratum: sharesEntity / sharesMethod /
     * sharesDataset between Paper nodes whose provenance overlaps on a common
     * node, and cites edges from `citations` (doc_id → cited doc_ids; pairs
     * without Paper nodes in the graph are ignored). Idempotent like every
     * upsert.
     */
    MutationReport link_documents(const std::map<std::string, std::vector<std::string>>& citations);

    const GraphNode* find_node(EntityType label, const std::string& name) const;
    const GraphNode& node(const std::string& node_id) const;  // throws on unknown id
    std::size_t node_count() const { return nodes_.size(); }
    std::size_t edge_count() const { return edges_.size(); }
    const std::map<std::string, GraphNode>& nodes() const { return nodes_; }
    const std::map<std::string, GraphEdge>& edges() const { return edges_; }

    /** Renames a node, updating its (label, name) key atomically. If the new
     * key already belongs to another node the two merge: aliases union, edges
     * re-pointed, parallel duplicates folded by provenance union.
     */
    void rename_node(const std::string& node_id, const std::string& new_name);

    /// Breadth-first expansion from the seeds, treating edges as undirected
    /// and traversing only relations in `relation_filter` (empty = all).
    /// Edges returned are every passing edge with both endpoints reached.
    Subgraph query_subgraph(const std::vector<std::string>& seed_node_ids, int max_hops,
                            const std::set<std::string>& relation_filter = {}) const;

    /// All simple directed paths src → dst of at most `max_len` edges,
    /// sorted by (length, node sequence, relation sequence). Parallel edges
    /// yield distinct paths. src must differ from dst.
    std::vector<Path> query_paths(const std::string& src_node_id, const std::string& dst_node_id,
                                  int max_len) const;

    /// nodes.jsonl + edges.jsonl + graph_meta.json into `dir`.
    void save(const std::filesystem::path& dir) const;
    /// Reads nodes.jsonl + edges.jsonl; graph_meta.json, when present, is
    /// validated. Throws MissingArtifactError when the files are absent.
    static Graph load(const std::filesystem::path& dir);

    /// nodes.jsonl + edges.jsonl only (the jsonl export format; load() reads
    /// these back).
    void export_nodes_edges(const std::filesystem::path& dir) const;
    /// One MERGE statement per node, then one per edge; statement count is
    /// exactly node_count() + edge_count().
    void export_graphscript(const std::filesystem::path& file) const;

    /// Structural equality on keys: same (node_id, label, name, aliases) set
    /// and same (src, dst, relation, provenance) set.
    bool equivalent(const Graph& other) const;

private:
    std::string node_key(EntityType label, const std::string& name) const;
    GraphEdge& upsert_edge(const std::string& src, const std::string& dst,
                           const std::string& relation, const std::string& provenance_doc,
                           MutationReport& report);

    std::map<std::string, GraphNode> nodes_;       // node_id → node
    std::map<std::string, std::string> node_key_;  // label|name → node_id
    std::map<std::string, GraphEdge> edges_;       // edge_id → edge
    std::map<std::string, std::string> edge_key_;  // src|dst|relation → edge_id
    long long next_node_ = 1;
    long long next_edge_ = 1;
};

struct ExtractionResult {
    std::vector<Triple> triples;
    std::vector<std::string> warnings;  // dropped-item diagnostics
};

/** Asks the extractor for entity triples over the document's abstract,
 * parsed from a strict JSON array (one reformat retry). Malformed items, the
 * non-biomedical entity types, out-of-vocabulary relations and self-loops
 * are dropped with warnings rather than failing the document.
 */
ExtractionResult extract_triples(const corpus::Document& doc, providers::Generator& extractor,
                                 const prompts::PromptLibrary& prompts,
                                 const RelationVocabulary& vocab,
                                 std::vector<providers::Exchange>* log = nullptr);

/// Paper→usesMethod/usesDataset/inDirection triples from a strict JSON
/// object reply; empty lists are valid.
ExtractionResult extract_doc_meta(const corpus::Document& doc, providers::Generator& extractor,
                                  const prompts::PromptLibrary& prompts,
                                  std::vector<providers::Exchange>* log = nullptr);

/// A controlled vocabulary: terms with ids, embedded once at load time so
/// candidate retrieval is a cosine scan.
class Lexicon {
public:
    struct Term {
        std::string term;
        std::string id;
        providers::EmbeddingVector vec;
    };

    /// File format: `term<TAB>id` per line (id optional; defaults to the
    /// term itself). Blank lines and #-comments are skipped.
    static Lexicon load(const std::filesystem::path& path, providers::Embedder& embedder);

    bool empty() const { return terms_.empty(); }
    std::size_t size() const { return terms_.size(); }
    const std::vector<Term>& terms() const { return terms_; }

    /// Top-k by cosine to `query`, ties by ascending term.
    std::vector<const Term*> top_k(const providers::EmbeddingVector& query, int k) const;

private:
    std::vector<Term> terms_;
};

/** Two-stage normalization of one extracted entity: embed the surface form,
 * shortlist the top-k lexicon terms by cosine, and let the extractor pick
 * one (returned canonicalized) or answer NONE (returned unchanged but
 * flagged). The reply must be a shortlisted term verbatim; one reformat
 * retry, then error.
 */
EntityRef normalize_entity(const EntityRef& ref, const Lexicon& lexicon,
                           providers::Embedder& embedder, providers::Generator& extractor,
                           const prompts::PromptLibrary& prompts, int k,
                           std::vector<providers::Exchange>* log = nullptr);

/** Incremental name canonicalization for the document-level stratum. Names
 * arrive one at a time; a name merges into the best-matching existing entry
 * iff that cosine similarity strictly exceeds the threshold, else it seeds a
 * new entry. Merges are sticky: a name stored as an alias always resolves to
 * its entry, regardless of later insertions.
 */
class CanonRegistry {
public:
    struct Entry {
        std::string canonical_name;
        providers::EmbeddingVector vec;  // embedding of the seeding name
        std::set<std::string> aliases;   // includes the canonical name
    };

    std::string canonicalize_incremental(const std::string& name, providers::Embedder& embedder,
                                         double threshold);

    /// Canonical name for a stored alias, or nullptr.
    const std::string* lookup_alias(const std::string& alias) const;
    const std::vector<Entry>& entries() const { return entries_; }

    /** Optional refinement pass: for every entry with multiple aliases the
     * extractor may choose a better canonical name among them. Replies that
     * are not an alias of the entry leave it unchanged. Returns the applied
     * (old_name, new_name) renames.
     */
    std::vector<std::pair<std::string, std::string>> refine(
        providers::Generator& extractor, const prompts::PromptLibrary& prompts,
        std::vector<providers::Exchange>* log = nullptr);

private:
    std::vector<Entry> entries_;
    std::map<std::string, std::size_t> alias_to_entry_;
};

struct BuildOptions {
    RelationVocabulary vocab;
    int normalize_top_k = 5;
    double merge_threshold = 0.5;
    bool canon_refine = false;
    const Lexicon* disease_drug = nullptr;  // null disables Drug/Disease normalization
    const Lexicon* gene_protein = nullptr;  // null disables Gene/Protein normalization
};

struct BuildReport {
    MutationReport mutations;
    std::vector<std::string> warnings;
    int docs_processed = 0;
    int entity_triples = 0;
    int meta_triples = 0;
};

/** The full dual-layer build over a corpus, in ascending doc_id order: per
 * document, entity triples (extracted, normalized where a lexicon is
 * supplied, upserted) and document-level meta triples (names canonicalized
 * through per-type registries at the merge threshold), then the optional
 * canonical-name refinement pass, then cross-document linking.
 */
BuildReport build_graph(Graph& graph, const corpus::Corpus& corpus,
                        providers::Generator& extractor, providers::Embedder& embedder,
                        const prompts::PromptLibrary& prompts, const BuildOptions& options,
                        std::vector<providers::Exchange>* log = nullptr);

}  // namespace iprar::kg
