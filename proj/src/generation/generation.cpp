#include "iprar/generation/generation.hpp"

#include "iprar/util/text.hpp"

#include <algorithm>
#include <cctype>
#include <charconv>
#include <optional>

namespace iprar::generation {

using io::ordered_json;
using providers::Exchange;

namespace {

ordered_json hits_json(const std::vector<index::RetrievalHit>& hits) {
    ordered_json arr = ordered_json::array();
    for (const auto& h : hits) {
        arr.push_back({{"chunk_id", h.chunk_id},
                       {"channel", index::to_string(h.channel)},
                       {"similarity", h.similarity},
                       {"rank", h.rank}});
    }
    return arr;
}

ordered_json candidates_json(const std::vector<retrieval::AggregatedCandidate>& cs) {
    ordered_json arr = ordered_json::array();
    for (const auto& c : cs) {
        arr.push_back({{"chunk_id", c.chunk_id},
                       {"s_sim", c.s_sim},
                       {"m", c.m},
                       {"r", c.r},
                       {"score", c.score}});
    }
    return arr;
}

std::string context_blocks(const std::vector<std::string>& chunk_ids,
                           const ChunkTextFn& chunk_text) {
    std::string out;
    for (std::size_t i = 0; i < chunk_ids.size(); ++i) {
        if (i > 0) out += "\n\n";
        out += "[" + chunk_ids[i] + "]\n" + chunk_text(chunk_ids[i]);
    }
    return out;
}

}  // namespace

ordered_json AnswerTrace::to_json() const {
    ordered_json j;
    j["schema_version"] = schema_version;
    j["question"] = question;
    j["config"] = config_snapshot;

    ordered_json pre_j;
    pre_j["keywords"] = pre.keywords;
    pre_j["synonyms"] = ordered_json::object();
    for (const auto& [k, v] : pre.synonyms) pre_j["synonyms"][k] = v;
    pre_j["virtual_answer"] = pre.virtual_answer;
    j["pre_retrieval"] = std::move(pre_j);

    j["channel_hits"] = hits_json(channel_hits);
    j["candidates"] = candidates_json(candidates);

    ordered_json verdicts_j = ordered_json::array();
    for (const auto& v : verdicts) {
        verdicts_j.push_back(
            {{"chunk_id", v.chunk_id}, {"relevant", v.relevant}, {"rationale", v.rationale}});
    }
    j["verdicts"] = std::move(verdicts_j);
    j["selected"] = selected;
    j["draft"] = draft;

    ordered_json support_j = ordered_json::array();
    for (const auto& s : support) {
        support_j.push_back({{"chunk_id", s.chunk_id}, {"score", s.score}});
    }
    j["support"] = std::move(support_j);
    j["final_support_chunk_ids"] = final_support_chunk_ids;
    j["final_answer"] = final_answer;

    ordered_json ex_j = ordered_json::array();
    for (const auto& e : exchanges) {
        ex_j.push_back({{"role", e.role},
                        {"template_id", e.template_id},
                        {"key", e.key},
                        {"system", e.prompt.system},
                        {"user", e.prompt.user},
                        {"reply", e.reply}});
    }
    j["exchanges"] = std::move(ex_j);
    j["error"] = error;
    return j;
}

std::vector<std::string> relevance_scan(
    const std::vector<retrieval::AggregatedCandidate>& candidates, const std::string& question,
    const ChunkTextFn& chunk_text, providers::Generator& reasoner,
    const prompts::PromptLibrary& prompts, int target,
    std::vector<RelevanceVerdict>& verdicts_out, std::vector<Exchange>* log) {
    if (target <= 0) throw InvalidArgumentError("relevance target must be positive");
    if (candidates.empty()) throw InvalidArgumentError("relevance_scan: no candidates");

    auto parse_verdict = [](const std::string& reply)
        -> std::optional<std::pair<bool, std::string>> {
        std::string trimmed(text::trim(reply));
        if (trimmed.empty()) return std::nullopt;
        std::size_t word_end = 0;
        while (word_end < trimmed.size() && !std::isspace(static_cast<unsigned char>(
                                                trimmed[word_end]))) {
            ++word_end;
        }
        std::string head = text::to_lower_ascii(trimmed.substr(0, word_end));
        // strip trailing punctuation like "RELEVANT." or "RELEVANT:"
        while (!head.empty() && (head.back() == '.' || head.back() == ':' || head.back() == ',')) {
            head.pop_back();
        }
        if (head != "relevant" && head != "irrelevant") return std::nullopt;
        std::string rationale(text::trim(trimmed.substr(word_end)));
        return std::make_pair(head == "relevant", rationale);
    };

    std::vector<std::string> selected;
    for (const auto& candidate : candidates) {
        auto req = prompts.make_request("relevance_check",
                                        question + "||" + candidate.chunk_id,
                                        {{"question", question},
                                         {"chunk_id", candidate.chunk_id},
                                         {"chunk", chunk_text(candidate.chunk_id)}});
        auto [relevant, rationale] =
            providers::request_parsed<std::pair<bool, std::string>>(
                reasoner, std::move(req), parse_verdict,
                "Reply with RELEVANT or IRRELEVANT on the first line, followed by a one-sentence "
                "rationale.",
                log);
        verdicts_out.push_back({candidate.chunk_id, relevant, rationale});
        if (relevant) {
            selected.push_back(candidate.chunk_id);
            if (static_cast<int>(selected.size()) == target) break;
        }
    }

    if (selected.empty()) {
        // Nothing passed the screen: fall back to the top candidates by score.
        const std::size_t take = std::min<std::size_t>(target, candidates.size());
        for (std::size_t i = 0; i < take; ++i) selected.push_back(candidates[i].chunk_id);
    }
    return selected;
}

std::string draft_answer(const std::string& question, const std::vector<std::string>& selected,
                         const ChunkTextFn& chunk_text, providers::Generator& reasoner,
                         const prompts::PromptLibrary& prompts, std::vector<Exchange>* log) {
    if (selected.empty()) throw InvalidArgumentError("draft_answer: empty selection");
    auto req = prompts.make_request(
        "draft_answer", question,
        {{"question", question}, {"context", context_blocks(selected, chunk_text)}});
    std::string reply = reasoner.generate(req);
    if (log) log->push_back({providers::to_string(req.role), req.template_id, req.key, req.prompt,
                             reply});
    return reply;
}

void self_reflect(const std::string& question, const std::string& draft,
                  const std::vector<std::string>& selected, const ChunkTextFn& chunk_text,
                  providers::Generator& reasoner, const prompts::PromptLibrary& prompts,
                  int scale_max, std::vector<SupportScore>& scores_out,
                  std::vector<Exchange>* log) {
    if (draft.empty()) throw InvalidArgumentError("self_reflect: empty draft");
    if (scale_max <= 0) throw InvalidArgumentError("self_reflect: scale_max must be positive");

    auto parse_score = [scale_max](const std::string& reply) -> std::optional<int> {
        std::string trimmed(text::trim(reply));
        int value = 0;
        auto [p, ec] = std::from_chars(trimmed.data(), trimmed.data() + trimmed.size(), value);
        if (ec != std::errc() || p != trimmed.data() + trimmed.size()) return std::nullopt;
        if (value < 0 || value > scale_max) return std::nullopt;
        return value;
    };

    for (const std::string& chunk_id : selected) {
        auto req = prompts.make_request("support_score", question + "||" + chunk_id,
                                        {{"question", question},
                                         {"draft", draft},
                                         {"chunk_id", chunk_id},
                                         {"chunk", chunk_text(chunk_id)}});
        int score = providers::request_parsed<int>(
            reasoner, std::move(req), parse_score,
            "Reply with a single integer between 0 and " + std::to_string(scale_max) + ".", log);
        scores_out.push_back({chunk_id, score});
    }
}

std::pair<std::string, std::vector<std::string>> deep_think(
    const std::string& question, const std::vector<std::string>& selected,
    const std::vector<SupportScore>& support, const ChunkTextFn& chunk_text,
    providers::Generator& deep_thinker, const prompts::PromptLibrary& prompts, int threshold,
    std::vector<Exchange>* log) {
    if (selected.empty()) throw InvalidArgumentError("deep_think: empty selection");
    if (support.size() != selected.size()) {
        throw InvalidArgumentError("deep_think: support scores must cover the selection");
    }

    std::vector<SupportScore> ranked(support.begin(), support.end());
    std::sort(ranked.begin(), ranked.end(), [](const SupportScore& a, const SupportScore& b) {
        if (a.score != b.score) return a.score > b.score;
        return a.chunk_id < b.chunk_id;
    });

    std::vector<std::string> passed;
    for (const auto& s : ranked) {
        if (s.score >= threshold) passed.push_back(s.chunk_id);
    }
    if (passed.empty()) {
        for (const auto& s : ranked) passed.push_back(s.chunk_id);  // fallback: everything
    }

    auto req = prompts.make_request(
        "deep_think", question,
        {{"question", question}, {"context", context_blocks(passed, chunk_text)}});
    std::string reply = deep_thinker.generate(req);
    if (log) log->push_back({providers::to_string(req.role), req.template_id, req.key, req.prompt,
                             reply});
    return {reply, passed};
}

AnswerTrace answer_pipeline(const std::string& question, const PipelineHandles& handles,
                            const PipelineParams& params, ordered_json config_snapshot) {
    if (!handles.chunks || !handles.reasoner || !handles.deep_thinker || !handles.embedder ||
        !handles.prompts) {
        throw InvalidArgumentError("answer_pipeline: incomplete handles");
    }

    AnswerTrace trace;
    trace.question = question;
    trace.config_snapshot = std::move(config_snapshot);

    const corpus::ChunkStore& chunks = *handles.chunks;
    ChunkTextFn chunk_text = [&chunks](const std::string& id) { return chunks.get(id).text; };
    auto doc_of = [&chunks](const std::string& id) { return chunks.doc_of(id); };

    try {
        trace.pre = retrieval::pre_retrieval_reason(question, *handles.reasoner, *handles.prompts,
                                                    &trace.exchanges);
        trace.channel_hits = retrieval::multi_channel_retrieve(
            question, trace.pre, handles.indexes, params.k_per_channel, *handles.embedder);
        trace.candidates = retrieval::aggregate(trace.channel_hits, params.weights, doc_of);
        trace.selected = relevance_scan(trace.candidates, question, chunk_text, *handles.reasoner,
                                        *handles.prompts, params.relevance_target, trace.verdicts,
                                        &trace.exchanges);
        trace.draft = draft_answer(question, trace.selected, chunk_text, *handles.reasoner,
                                   *handles.prompts, &trace.exchanges);
        self_reflect(question, trace.draft, trace.selected, chunk_text, *handles.reasoner,
                     *handles.prompts, params.support_scale_max, trace.support, &trace.exchanges);
        auto [final_text, passed] =
            deep_think(question, trace.selected, trace.support, chunk_text, *handles.deep_thinker,
                       *handles.prompts, params.support_threshold, &trace.exchanges);
        trace.final_answer = std::move(final_text);
        trace.final_support_chunk_ids = std::move(passed);
    } catch (const Error& e) {
        trace.error = e.category() + ": " + e.what();
        throw PipelineError(e, std::move(trace));
    }
    return trace;
}

}  // namespace iprar::generation
