#pragma once

#include "iprar/config/config.hpp"
#include "iprar/corpus/corpus.hpp"
#include "iprar/eval/eval.hpp"
#include "iprar/generation/generation.hpp"
#include "iprar/index/index.hpp"
#include "iprar/kg/kg.hpp"
#include "iprar/prompts/prompts.hpp"
#include "iprar/providers/provider.hpp"

#include <filesystem>
#include <memory>
#include <optional>
#include <string>

namespace iprar::engine {

/** Ties the whole pipeline to one configuration: owns the providers and the
 * prompt library, loads persisted artifacts on demand, and exposes one
 * method per command. All artifact writes stay inside the configured paths,
 * and every run with the same inputs produces identical bytes under mock
 * providers.
 */
class Engine {
public:
    explicit Engine(config::EngineConfig cfg);

    /// Reads documents from `source`, validates them, persists the corpus.
    corpus::IngestReport ingest(const std::filesystem::path& source,
                                corpus::CorpusFormat format = corpus::CorpusFormat::Auto);

    /// Chunks the persisted corpus and writes the chunk store plus the four
    /// retrieval indexes. Requires `ingest` to have run.
    void build_indexes();

    /// Answers one question end to end and writes the trace file (also on
    /// failure, with the error recorded). Requires `index` to have run.
    /// Returns the completed trace and the path it was written to.
    std::pair<generation::AnswerTrace, std::filesystem::path> ask(const std::string& question);

    /// Where ask() will write the trace for `question` (a pure function of
    /// the question text, so reruns overwrite).
    std::filesystem::path trace_path(const std::string& question) const;

    /// Runs the benchmark dataset through the pipeline and writes
    /// <stem>_report.json / <stem>_report.txt under the report dir.
    std::pair<eval::MetricReport, std::filesystem::path> run_eval(
        const std::filesystem::path& dataset_path);

    /// Builds the dual-layer graph from the persisted corpus and saves it.
    kg::BuildReport kg_build();

    /// Exports the saved graph: "jsonl" writes nodes/edges files, and
    /// "graphscript" one MERGE-statement script, under <graph_dir>/export.
    std::filesystem::path kg_export(const std::string& format);

    const config::EngineConfig& cfg() const { return cfg_; }
    const prompts::PromptLibrary& prompts() const { return prompts_; }

    /// The generator backing a role: scripted when a mock script is
    /// configured, HTTP when an endpoint is, otherwise a stub that fails.
    providers::Generator& generator_for(providers::Role role);
    providers::Embedder& embedder();

private:
    corpus::Corpus& corpus();           // loads lazily; throws MissingArtifactError
    corpus::ChunkStore& chunks();       // ditto
    generation::PipelineHandles pipeline_handles();
    generation::PipelineParams pipeline_params() const;

    config::EngineConfig cfg_;
    prompts::PromptLibrary prompts_;
    std::shared_ptr<const providers::ProviderScript> script_;
    std::unique_ptr<providers::Generator> generators_[4];
    std::unique_ptr<providers::Embedder> embedder_;

    std::optional<corpus::Corpus> corpus_;
    std::optional<corpus::ChunkStore> chunks_;
    std::optional<index::VectorIndex> abstract_vectors_;
    std::optional<index::VectorIndex> fulltext_vectors_;
    std::optional<index::KeywordIndex> abstract_keywords_;
    std::optional<index::KeywordIndex> fulltext_keywords_;
};

}  // namespace iprar::engine
