#include "iprar/retrieval/retrieval.hpp"

#include "iprar/util/error.hpp"
#include "iprar/util/io.hpp"

#include <algorithm>
#include <optional>

namespace iprar::retrieval {

using index::Channel;
using index::RetrievalHit;
using io::ordered_json;

void AggregatorWeights::validate() const {
    if (w_s < 0 || w_m < 0 || w_r < 0) {
        throw InvalidArgumentError("aggregator weights must be non-negative");
    }
    if (w_s + w_m + w_r == 0) {
        throw InvalidArgumentError("aggregator weights must not all be zero");
    }
}

namespace {

std::optional<PreRetrievalOutput> parse_pre_retrieval(const std::string& reply) {
    ordered_json j = ordered_json::parse(reply, nullptr, false);
    if (j.is_discarded() || !j.is_object()) return std::nullopt;
    if (!j.contains("keywords") || !j.contains("synonyms") || !j.contains("virtual_answer")) {
        return std::nullopt;
    }
    if (!j["keywords"].is_array() || !j["synonyms"].is_object() ||
        !j["virtual_answer"].is_string()) {
        return std::nullopt;
    }
    PreRetrievalOutput out;
    for (const auto& k : j["keywords"]) {
        if (!k.is_string() || k.get<std::string>().empty()) return std::nullopt;
        out.keywords.push_back(k.get<std::string>());
    }
    if (out.keywords.empty()) return std::nullopt;
    for (const auto& [key, val] : j["synonyms"].items()) {
        if (std::find(out.keywords.begin(), out.keywords.end(), key) == out.keywords.end()) {
            return std::nullopt;
        }
        if (!val.is_array()) return std::nullopt;
        std::vector<std::string> syns;
        for (const auto& s : val) {
            if (!s.is_string()) return std::nullopt;
            syns.push_back(s.get<std::string>());
        }
        out.synonyms[key] = std::move(syns);
    }
    out.virtual_answer = j["virtual_answer"].get<std::string>();
    if (out.virtual_answer.empty()) return std::nullopt;
    return out;
}

}  // namespace

PreRetrievalOutput pre_retrieval_reason(const std::string& question,
                                        providers::Generator& reasoner,
                                        const prompts::PromptLibrary& prompts,
                                        std::vector<providers::Exchange>* log) {
    if (question.empty()) throw InvalidArgumentError("question must be non-empty");
    auto req = prompts.make_request("pre_retrieval", question, {{"question", question}});
    return providers::request_parsed<PreRetrievalOutput>(
        reasoner, std::move(req), parse_pre_retrieval,
        "Reply with exactly one JSON object of the form "
        R"({"keywords": ["..."], "synonyms": {"<keyword>": ["..."]}, "virtual_answer": "..."})"
        " and nothing else.",
        log);
}

std::vector<RetrievalHit> multi_channel_retrieve(const std::string& question,
                                                 const PreRetrievalOutput& pre,
                                                 const IndexSet& indexes,
                                                 std::size_t k_per_channel,
                                                 providers::Embedder& embedder) {
    if (question.empty()) throw InvalidArgumentError("question must be non-empty");
    if (pre.keywords.empty() || pre.virtual_answer.empty()) {
        throw InvalidArgumentError("pre-retrieval output is incomplete");
    }
    if (!indexes.abstract_vectors || !indexes.fulltext_vectors || !indexes.abstract_keywords ||
        !indexes.fulltext_keywords) {
        throw MissingArtifactError("all four indexes are required for multi-channel retrieval");
    }

    std::vector<RetrievalHit> hits;
    auto append = [&hits](std::vector<RetrievalHit> run) {
        hits.insert(hits.end(), std::make_move_iterator(run.begin()),
                    std::make_move_iterator(run.end()));
    };
    append(index::vector_search(*indexes.abstract_vectors, question, k_per_channel, embedder,
                                Channel::QuestionAbstract));
    append(index::vector_search(*indexes.fulltext_vectors, question, k_per_channel, embedder,
                                Channel::QuestionFullText));
    append(index::vector_search(*indexes.abstract_vectors, pre.virtual_answer, k_per_channel,
                                embedder, Channel::VirtualAnswerAbstract));
    append(index::vector_search(*indexes.fulltext_vectors, pre.virtual_answer, k_per_channel,
                                embedder, Channel::VirtualAnswerFullText));
    append(index::keyword_search(*indexes.abstract_keywords, pre.keywords, pre.synonyms,
                                 k_per_channel, Channel::KeywordAbstract));
    append(index::keyword_search(*indexes.fulltext_keywords, pre.keywords, pre.synonyms,
                                 k_per_channel, Channel::KeywordFullText));
    return hits;
}

std::vector<AggregatedCandidate> aggregate(
    const std::vector<RetrievalHit>& hits, const AggregatorWeights& weights,
    const std::function<std::string(const std::string&)>& doc_of) {
    if (hits.empty()) throw InvalidArgumentError("aggregate: empty hit list");
    weights.validate();

    struct Partial {
        double s_sim = 0.0;
        std::set<Channel> channels;
        std::string doc_id;
    };
    std::map<std::string, Partial> pool;  // keyed by chunk_id (dedup)
    for (const RetrievalHit& h : hits) {
        Partial& p = pool[h.chunk_id];
        p.s_sim = std::max(p.s_sim, h.similarity);
        p.channels.insert(h.channel);
        if (p.doc_id.empty()) p.doc_id = doc_of(h.chunk_id);
    }

    std::map<std::string, int> chunks_per_doc;
    for (const auto& [chunk_id, p] : pool) ++chunks_per_doc[p.doc_id];

    double s_max = 0.0;
    int m_max = 0;
    int r_max = 0;
    for (const auto& [chunk_id, p] : pool) {
        s_max = std::max(s_max, p.s_sim);
        m_max = std::max(m_max, static_cast<int>(p.channels.size()));
        r_max = std::max(r_max, chunks_per_doc[p.doc_id]);
    }

    std::vector<AggregatedCandidate> out;
    out.reserve(pool.size());
    for (const auto& [chunk_id, p] : pool) {
        AggregatedCandidate c;
        c.chunk_id = chunk_id;
        c.s_sim = p.s_sim;
        c.m = static_cast<int>(p.channels.size());
        c.r = chunks_per_doc[p.doc_id];
        double score = 0.0;
        if (s_max > 0) score += weights.w_s * (c.s_sim / s_max);
        if (m_max > 0) score += weights.w_m * (static_cast<double>(c.m) / m_max);
        if (r_max > 0) score += weights.w_r * (static_cast<double>(c.r) / r_max);
        c.score = score;
        out.push_back(std::move(c));
    }

    std::stable_sort(out.begin(), out.end(),
                     [&](const AggregatedCandidate& a, const AggregatedCandidate& b) {
                         if (a.score != b.score) return a.score > b.score;
                         const std::string& da = pool.at(a.chunk_id).doc_id;
                         const std::string& db = pool.at(b.chunk_id).doc_id;
                         if (da != db) return da < db;
                         return a.chunk_id < b.chunk_id;
                     });
    return out;
}

}  // namespace iprar::retrieval
