#pragma once

#include "iprar/corpus/corpus.hpp"
#include "iprar/retrieval/retrieval.hpp"
#include "iprar/util/io.hpp"

#include <functional>
#include <memory>
#include <string>
#include <utility>
#include <vector>

namespace iprar::generation {

struct RelevanceVerdict {
    std::string chunk_id;
    bool relevant = false;
    std::string rationale;
};

struct SupportScore {
    std::string chunk_id;
    int score = 0;  // on the configured 0..max scale
};

/// Complete audit record of one question's run, serializable to one JSON
/// document. Built append-only; on an aborted run the fields up to the
/// failing stage are populated and `error` is set.
struct AnswerTrace {
    int schema_version = 1;
    std::string question;
    io::ordered_json config_snapshot;  // engine configuration the run used
    retrieval::PreRetrievalOutput pre;
    std::vector<index::RetrievalHit> channel_hits;
    std::vector<retrieval::AggregatedCandidate> candidates;  // ranked
    std::vector<RelevanceVerdict> verdicts;                  // in scan order
    std::vector<std::string> selected;                       // ⊆ scanned chunk ids
    std::string draft;
    std::vector<SupportScore> support;                 // one per selected chunk
    std::vector<std::string> final_support_chunk_ids;  // ⊆ selected, what deep thinking saw
    std::string final_answer;
    std::vector<providers::Exchange> exchanges;  // every provider call, in order
    std::string error;                           // empty on success

    io::ordered_json to_json() const;
};

/// Raised when a pipeline stage fails; carries the partial trace (with
/// `error` set) so callers can still persist the audit record.
class PipelineError : public Error {
public:
    PipelineError(const Error& cause, AnswerTrace trace)
        : Error(cause.category(), cause.what()),
          trace_(std::make_shared<AnswerTrace>(std::move(trace))) {}

    const AnswerTrace& trace() const { return *trace_; }

private:
    std::shared_ptr<AnswerTrace> trace_;  // shared: exceptions must stay copyable
};

/// Maps a chunk id to its text. Throws InvalidArgumentError on unknown ids.
using ChunkTextFn = std::function<std::string(const std::string&)>;

/** Walks candidates in rank order asking the reasoner for a RELEVANT /
 * IRRELEVANT verdict per chunk, stopping as soon as `target` relevant chunks
 * are found. If the list runs out with at least one but fewer than `target`
 * relevant, only those are selected; with zero relevant, the top `target`
 * candidates by score are selected regardless of verdicts. Verdicts append to
 * `verdicts_out` as they arrive, so a mid-scan provider failure leaves the
 * partial record behind. Returns the selected chunk ids in scan order.
 */
std::vector<std::string> relevance_scan(
    const std::vector<retrieval::AggregatedCandidate>& candidates, const std::string& question,
    const ChunkTextFn& chunk_text, providers::Generator& reasoner,
    const prompts::PromptLibrary& prompts, int target,
    std::vector<RelevanceVerdict>& verdicts_out,
    std::vector<providers::Exchange>* log = nullptr);

/// One draft answer over the question plus every selected chunk, presented as
/// labeled context blocks in selection order.
std::string draft_answer(const std::string& question, const std::vector<std::string>& selected,
                         const ChunkTextFn& chunk_text, providers::Generator& reasoner,
                         const prompts::PromptLibrary& prompts,
                         std::vector<providers::Exchange>* log = nullptr);

/** One support score per selected chunk: how strongly the chunk backs the
 * draft answer, an integer on [0, scale_max]. Scores append to `scores_out`
 * as they arrive. Malformed or out-of-range replies get one reformat retry,
 * then error.
 */
void self_reflect(const std::string& question, const std::string& draft,
                  const std::vector<std::string>& selected, const ChunkTextFn& chunk_text,
                  providers::Generator& reasoner, const prompts::PromptLibrary& prompts,
                  int scale_max, std::vector<SupportScore>& scores_out,
                  std::vector<providers::Exchange>* log = nullptr);

/** Final synthesis: chunks scoring at least `threshold` pass to the deep
 * thinker, ordered by score descending then chunk_id; when none qualify, all
 * selected chunks pass (same ordering). Returns the final answer and the
 * passed chunk ids.
 */
std::pair<std::string, std::vector<std::string>> deep_think(
    const std::string& question, const std::vector<std::string>& selected,
    const std::vector<SupportScore>& support, const ChunkTextFn& chunk_text,
    providers::Generator& deep_thinker, const prompts::PromptLibrary& prompts, int threshold,
    std::vector<providers::Exchange>* log = nullptr);

/// Everything answer_pipeline needs to run one question.
struct PipelineHandles {
    retrieval::IndexSet indexes;
    const corpus::ChunkStore* chunks = nullptr;
    providers::Generator* reasoner = nullptr;
    providers::Generator* deep_thinker = nullptr;
    providers::Embedder* embedder = nullptr;
    const prompts::PromptLibrary* prompts = nullptr;
};

struct PipelineParams {
    std::size_t k_per_channel = 10;
    retrieval::AggregatorWeights weights;
    int relevance_target = 5;
    int support_scale_max = 100;
    int support_threshold = 50;
};

/** The full per-question run: pre-retrieval reasoning → six-channel
 * retrieval → aggregation → relevance scan → draft → support scoring → deep
 * thinking. Deterministic under scripted providers and the hashing embedder.
 * A stage failure throws PipelineError carrying the partial trace.
 */
AnswerTrace answer_pipeline(const std::string& question, const PipelineHandles& handles,
                            const PipelineParams& params,
                            io::ordered_json config_snapshot = io::ordered_json::object());

}  // namespace iprar::generation
