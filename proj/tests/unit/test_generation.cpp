#include "iprar/generation/generation.hpp"

#include "helpers.hpp"
#include "iprar/util/error.hpp"

#include <doctest.h>

#include <map>

using namespace iprar;
using generation::RelevanceVerdict;
using generation::SupportScore;
using retrieval::AggregatedCandidate;

namespace {

AggregatedCandidate cand(const std::string& id, double score) {
    AggregatedCandidate c;
    c.chunk_id = id;
    c.score = score;
    return c;
}

generation::ChunkTextFn text_table(std::map<std::string, std::string> table) {
    return [table = std::move(table)](const std::string& id) {
        auto it = table.find(id);
        if (it == table.end()) throw InvalidArgumentError("unknown chunk: " + id);
        return it->second;
    };
}

const std::string kQ = "what drives resistance?";

}  // namespace

TEST_CASE("relevance scan stops as soon as the target is met") {
    std::vector<AggregatedCandidate> candidates = {cand("c1", 9.0), cand("c2", 8.0),
                                                   cand("c3", 7.0), cand("c4", 6.0)};
    // c1 relevant, c2 irrelevant, c3 relevant → target 2 stops before c4.
    testutil::FnGenerator reasoner([&](const providers::GenerationRequest& req) {
        if (req.key == kQ + "||c1") return std::string("RELEVANT\nOn point.");
        if (req.key == kQ + "||c2") return std::string("IRRELEVANT\nOff topic.");
        if (req.key == kQ + "||c3") return std::string("Relevant. matches the question");
        FAIL("scanned past the stopping point: ", req.key);
        return std::string();
    });
    auto lib = prompts::PromptLibrary::builtin();
    auto chunk_text = text_table(
        {{"c1", "t1"}, {"c2", "t2"}, {"c3", "t3"}, {"c4", "t4"}});

    std::vector<RelevanceVerdict> verdicts;
    auto selected = generation::relevance_scan(candidates, kQ, chunk_text, reasoner, lib,
                                               /*target=*/2, verdicts);
    CHECK(selected == std::vector<std::string>{"c1", "c3"});
    REQUIRE(verdicts.size() == 3);
    CHECK(verdicts[0].chunk_id == "c1");
    CHECK(verdicts[0].relevant);
    CHECK(verdicts[0].rationale == "On point.");
    CHECK_FALSE(verdicts[1].relevant);
    CHECK(verdicts[2].relevant);  // lowercase + trailing period both accepted
    // Provider calls = number of scanned candidates, never more.
    CHECK(reasoner.calls() == 3);
}

TEST_CASE("relevance scan keeps a short list when the pool runs dry") {
    std::vector<AggregatedCandidate> candidates = {cand("c1", 9.0), cand("c2", 8.0),
                                                   cand("c3", 7.0)};
    testutil::FnGenerator reasoner([&](const providers::GenerationRequest& req) {
        return req.key == kQ + "||c2" ? std::string("RELEVANT\nyes")
                                      : std::string("IRRELEVANT\nno");
    });
    auto lib = prompts::PromptLibrary::builtin();
    auto chunk_text = text_table({{"c1", "t"}, {"c2", "t"}, {"c3", "t"}});

    std::vector<RelevanceVerdict> verdicts;
    auto selected = generation::relevance_scan(candidates, kQ, chunk_text, reasoner, lib,
                                               /*target=*/5, verdicts);
    CHECK(selected == std::vector<std::string>{"c2"});
    CHECK(verdicts.size() == 3);  // the whole pool was scanned
    CHECK(reasoner.calls() == 3);
}

TEST_CASE("relevance scan falls back to top-scored when nothing passes") {
    std::vector<AggregatedCandidate> candidates = {cand("c1", 9.0), cand("c2", 8.0),
                                                   cand("c3", 7.0)};
    testutil::FnGenerator reasoner(
        [](const providers::GenerationRequest&) { return std::string("IRRELEVANT\nno"); });
    auto lib = prompts::PromptLibrary::builtin();
    auto chunk_text = text_table({{"c1", "t"}, {"c2", "t"}, {"c3", "t"}});

    std::vector<RelevanceVerdict> verdicts;
    auto selected = generation::relevance_scan(candidates, kQ, chunk_text, reasoner, lib,
                                               /*target=*/2, verdicts);
    // Top 2 by rank despite all-negative verdicts; the verdicts stay recorded.
    CHECK(selected == std::vector<std::string>{"c1", "c2"});
    CHECK(verdicts.size() == 3);
    for (const auto& v : verdicts) CHECK_FALSE(v.relevant);
}

TEST_CASE("relevance scan rejects gibberish verdicts after one retry") {
    std::vector<AggregatedCandidate> candidates = {cand("c1", 9.0)};
    testutil::FnGenerator reasoner(
        [](const providers::GenerationRequest&) { return std::string("maybe?"); });
    auto lib = prompts::PromptLibrary::builtin();
    auto chunk_text = text_table({{"c1", "t"}});

    std::vector<RelevanceVerdict> verdicts;
    CHECK_THROWS_AS(generation::relevance_scan(candidates, kQ, chunk_text, reasoner, lib, 1,
                                               verdicts),
                    ParseError);
    CHECK(reasoner.calls() == 2);  // original + one reformat retry
    CHECK(verdicts.empty());
}

TEST_CASE("draft sees every selected chunk as a labeled block") {
    std::string seen_user;
    testutil::FnGenerator reasoner([&](const providers::GenerationRequest& req) {
        seen_user = req.prompt.user;
        return std::string("drafted");
    });
    auto lib = prompts::PromptLibrary::builtin();
    auto chunk_text = text_table({{"c1", "first text"}, {"c2", "second text"}});

    auto draft = generation::draft_answer(kQ, {"c1", "c2"}, chunk_text, reasoner, lib);
    CHECK(draft == "drafted");
    CHECK(seen_user.find("[c1]\nfirst text") != std::string::npos);
    CHECK(seen_user.find("[c2]\nsecond text") != std::string::npos);
    CHECK(seen_user.find("[c1]") < seen_user.find("[c2]"));

    CHECK_THROWS_AS(generation::draft_answer(kQ, {}, chunk_text, reasoner, lib),
                    InvalidArgumentError);
}

TEST_CASE("support scoring parses integers and enforces the scale") {
    auto lib = prompts::PromptLibrary::builtin();
    auto chunk_text = text_table({{"c1", "t"}, {"c2", "t"}, {"c3", "t"}});

    testutil::FnGenerator reasoner([&](const providers::GenerationRequest& req) {
        if (req.key == kQ + "||c1") return std::string("85");
        if (req.key == kQ + "||c2") return std::string("  0\n");  // whitespace tolerated
        return std::string("100");
    });
    std::vector<SupportScore> scores;
    generation::self_reflect(kQ, "draft", {"c1", "c2", "c3"}, chunk_text, reasoner, lib,
                             /*scale_max=*/100, scores);
    REQUIRE(scores.size() == 3);
    CHECK(scores[0].chunk_id == "c1");
    CHECK(scores[0].score == 85);
    CHECK(scores[1].score == 0);
    CHECK(scores[2].score == 100);

    // Out-of-range and non-numeric replies burn the retry and then fail,
    // keeping the scores gathered so far.
    testutil::FnGenerator bad(
        [](const providers::GenerationRequest&) { return std::string("120"); });
    std::vector<SupportScore> partial;
    CHECK_THROWS_AS(generation::self_reflect(kQ, "draft", {"c1"}, chunk_text, bad, lib, 100,
                                             partial),
                    ParseError);
    CHECK(bad.calls() == 2);
    CHECK(partial.empty());

    testutil::FnGenerator retried([](const providers::GenerationRequest& req) {
        return req.template_id == "support_score" ? std::string("very supportive")
                                                  : std::string("70");
    });
    std::vector<SupportScore> recovered;
    generation::self_reflect(kQ, "draft", {"c1"}, chunk_text, retried, lib, 100, recovered);
    REQUIRE(recovered.size() == 1);
    CHECK(recovered[0].score == 70);
    CHECK(retried.calls() == 2);
}

TEST_CASE("deep think takes chunks at or above the threshold, sorted") {
    auto lib = prompts::PromptLibrary::builtin();
    auto chunk_text =
        text_table({{"c1", "t1"}, {"c2", "t2"}, {"c3", "t3"}, {"c4", "t4"}});
    std::string seen_user;
    testutil::FnGenerator thinker([&](const providers::GenerationRequest& req) {
        seen_user = req.prompt.user;
        return std::string("final");
    });

    std::vector<SupportScore> support = {
        {"c1", 50}, {"c2", 49}, {"c3", 90}, {"c4", 90}};
    auto [answer, passed] = generation::deep_think(kQ, {"c1", "c2", "c3", "c4"}, support,
                                                   chunk_text, thinker, lib,
                                                   /*threshold=*/50);
    CHECK(answer == "final");
    // 90s first (tie broken by chunk id), the exact-threshold 50 passes, 49
    // does not.
    CHECK(passed == std::vector<std::string>{"c3", "c4", "c1"});
    CHECK(seen_user.find("[c3]") < seen_user.find("[c4]"));
    CHECK(seen_user.find("[c4]") < seen_user.find("[c1]"));
    CHECK(seen_user.find("[c2]") == std::string::npos);
}

TEST_CASE("deep think falls back to every selected chunk when none qualify") {
    auto lib = prompts::PromptLibrary::builtin();
    auto chunk_text = text_table({{"c1", "t1"}, {"c2", "t2"}});
    testutil::FnGenerator thinker(
        [](const providers::GenerationRequest&) { return std::string("final"); });

    std::vector<SupportScore> support = {{"c1", 10}, {"c2", 20}};
    auto [answer, passed] =
        generation::deep_think(kQ, {"c1", "c2"}, support, chunk_text, thinker, lib, 50);
    CHECK(answer == "final");
    CHECK(passed == std::vector<std::string>{"c2", "c1"});  // still score-ordered
}

namespace {

/// In-memory fixture: two docs, indexes over both levels, and a script
/// covering every provider call of one full pipeline run.
struct PipelineFixture {
    corpus::ChunkStore store{{
        {"d1#a0000", "d1", corpus::ChunkLevel::Abstract, "alpha beta", 0},
        {"d1#f0000", "d1", corpus::ChunkLevel::FullText, "alpha gamma", 0},
        {"d2#a0000", "d2", corpus::ChunkLevel::Abstract, "delta beta", 0},
        {"d2#f0000", "d2", corpus::ChunkLevel::FullText, "delta epsilon", 0},
    }};
    index::VectorIndex av, fv;
    index::KeywordIndex ak, fk;
    testutil::StubEmbedder embedder{8, {}};
    prompts::PromptLibrary lib = prompts::PromptLibrary::builtin();
    std::shared_ptr<const providers::ProviderScript> script;
    std::unique_ptr<providers::ScriptedGenerator> reasoner;
    std::unique_ptr<providers::ScriptedGenerator> thinker;

    PipelineFixture() {
        av = index::VectorIndex::build(store.at_level(corpus::ChunkLevel::Abstract),
                                       corpus::ChunkLevel::Abstract, embedder);
        fv = index::VectorIndex::build(store.at_level(corpus::ChunkLevel::FullText),
                                       corpus::ChunkLevel::FullText, embedder);
        ak = index::KeywordIndex::build(store.at_level(corpus::ChunkLevel::Abstract),
                                        corpus::ChunkLevel::Abstract);
        fk = index::KeywordIndex::build(store.at_level(corpus::ChunkLevel::FullText),
                                        corpus::ChunkLevel::FullText);

        const std::string q = "q";
        script = testutil::make_script({
            {"reasoner", "pre_retrieval", q,
             R"({"keywords": ["alpha"], "synonyms": {}, "virtual_answer": "va"})"},
            {"reasoner", "relevance_check", q + "||d1#a0000", "RELEVANT\nyes"},
            {"reasoner", "relevance_check", q + "||d1#f0000", "RELEVANT\nyes"},
            {"reasoner", "relevance_check", "*", "IRRELEVANT\nno"},
            {"reasoner", "draft_answer", q, "the draft"},
            {"reasoner", "support_score", q + "||d1#a0000", "80"},
            {"reasoner", "support_score", q + "||d1#f0000", "40"},
            {"deep_thinker", "deep_think", q, "the final answer"},
        });
        reasoner = std::make_unique<providers::ScriptedGenerator>(script);
        thinker = std::make_unique<providers::ScriptedGenerator>(script);
    }

    generation::PipelineHandles handles() {
        generation::PipelineHandles h;
        h.indexes = {&av, &fv, &ak, &fk};
        h.chunks = &store;
        h.reasoner = reasoner.get();
        h.deep_thinker = thinker.get();
        h.embedder = &embedder;
        h.prompts = &lib;
        return h;
    }
};

}  // namespace

TEST_CASE("the full pipeline produces a coherent trace") {
    PipelineFixture fx;
    generation::PipelineParams params;
    params.k_per_channel = 4;
    params.relevance_target = 2;
    params.support_threshold = 50;

    auto trace = generation::answer_pipeline("q", fx.handles(), params,
                                             io::ordered_json{{"marker", 42}});
    CHECK(trace.question == "q");
    CHECK(trace.config_snapshot.at("marker") == 42);
    CHECK(trace.pre.keywords == std::vector<std::string>{"alpha"});
    CHECK(trace.channel_hits.size() > 0);
    CHECK(trace.candidates.size() == 4);  // every chunk reached some channel
    CHECK(trace.selected == std::vector<std::string>{"d1#a0000", "d1#f0000"});
    CHECK(trace.draft == "the draft");
    REQUIRE(trace.support.size() == 2);
    CHECK(trace.support[0].score == 80);
    CHECK(trace.support[1].score == 40);
    // Only d1#a0000 clears the threshold, so deep thinking saw exactly it.
    CHECK(trace.final_support_chunk_ids == std::vector<std::string>{"d1#a0000"});
    CHECK(trace.final_answer == "the final answer");
    CHECK(trace.error.empty());
    CHECK(trace.exchanges.size() ==
          1 + trace.verdicts.size() + 1 + trace.support.size() + 1);

    // The trace serializes with every section present.
    auto j = trace.to_json();
    CHECK(j.at("schema_version") == 1);
    CHECK(j.at("final_answer") == "the final answer");
    CHECK(j.at("exchanges").size() == trace.exchanges.size());
}

TEST_CASE("a mid-pipeline failure carries the partial trace") {
    PipelineFixture fx;
    // Re-script the run to break at the draft stage.
    auto broken = testutil::make_script({
        {"reasoner", "pre_retrieval", "q",
         R"({"keywords": ["alpha"], "synonyms": {}, "virtual_answer": "va"})"},
        {"reasoner", "relevance_check", "*", "RELEVANT\nyes"},
    });
    providers::ScriptedGenerator reasoner(broken);
    auto handles = fx.handles();
    handles.reasoner = &reasoner;

    generation::PipelineParams params;
    params.k_per_channel = 4;
    params.relevance_target = 1;

    try {
        generation::answer_pipeline("q", handles, params);
        FAIL("expected a pipeline failure");
    } catch (const generation::PipelineError& e) {
        CHECK(e.category() == std::string("provider"));
        const auto& trace = e.trace();
        CHECK_FALSE(trace.error.empty());
        CHECK(trace.pre.keywords == std::vector<std::string>{"alpha"});
        CHECK(trace.selected.size() == 1);   // the scan finished
        CHECK(trace.draft.empty());          // the draft never arrived
        CHECK(trace.final_answer.empty());
        CHECK(trace.to_json().at("error") == trace.error);
    }
}
