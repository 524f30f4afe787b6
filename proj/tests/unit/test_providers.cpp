#include "iprar/providers/provider.hpp"

#include "helpers.hpp"
#include "iprar/util/error.hpp"

#include <doctest.h>

#include <cmath>

using namespace iprar;

TEST_CASE("role names round-trip") {
    for (auto role : {providers::Role::Reasoner, providers::Role::DeepThinker,
                      providers::Role::Judge, providers::Role::Extractor}) {
        CHECK(providers::role_from_string(providers::to_string(role)) == role);
    }
    CHECK_THROWS_AS(providers::role_from_string("poet"), InvalidArgumentError);
}

TEST_CASE("hashing embedder is deterministic, unit-norm and never zero") {
    providers::HashingEmbedder emb(64);
    CHECK(emb.id() == "hash-ngram-v1-d64");
    CHECK(emb.dims() == 64);

    auto a1 = emb.embed("cisplatin resistance in gastric cancer");
    auto a2 = emb.embed("cisplatin resistance in gastric cancer");
    CHECK(a1.values == a2.values);
    CHECK(a1.dims() == 64);
    CHECK(a1.l2_norm() == doctest::Approx(1.0).epsilon(1e-5));
    CHECK_FALSE(a1.is_zero());

    // Single unusual token still embeds to something non-zero.
    CHECK_FALSE(emb.embed("zzzqqqxxx").is_zero());
    CHECK_THROWS_AS(emb.embed(""), InvalidArgumentError);
}

TEST_CASE("shared vocabulary raises cosine") {
    providers::HashingEmbedder emb(64);
    auto q = emb.embed("EGFR mutations in lung cancer");
    auto close = emb.embed("lung cancer patients with EGFR mutations respond");
    auto far = emb.embed("carboplatin dosing in ovarian carcinoma trials");
    CHECK(providers::cosine_similarity(q, close) > providers::cosine_similarity(q, far));
}

TEST_CASE("cosine similarity validates inputs") {
    providers::EmbeddingVector a{{1.0f, 0.0f}};
    providers::EmbeddingVector b{{1.0f, 0.0f, 0.0f}};
    CHECK_THROWS_AS(providers::cosine_similarity(a, b), InvalidArgumentError);
    providers::EmbeddingVector z{{0.0f, 0.0f}};
    CHECK_THROWS_AS(providers::cosine_similarity(a, z), InvalidArgumentError);
    providers::EmbeddingVector c{{0.0f, 2.0f}};
    providers::l2_normalize(c);
    CHECK(c.values[1] == doctest::Approx(1.0f));
    CHECK(providers::cosine_similarity(a, c) == doctest::Approx(0.0));
}

TEST_CASE("provider script matches exact keys first, then the wildcard") {
    auto script = testutil::make_script({
        {"reasoner", "draft_answer", "q1", "exact reply"},
        {"reasoner", "draft_answer", "*", "wildcard reply"},
        {"judge", "judge_five_point", "q1", "4"},
    });
    providers::ScriptedGenerator gen(script);

    providers::GenerationRequest req;
    req.role = providers::Role::Reasoner;
    req.template_id = "draft_answer";
    req.key = "q1";
    CHECK(gen.generate(req) == "exact reply");
    req.key = "anything else";
    CHECK(gen.generate(req) == "wildcard reply");

    req.role = providers::Role::Judge;  // no wildcard for this template
    req.template_id = "judge_five_point";
    req.key = "q2";
    CHECK_THROWS_AS(gen.generate(req), ProviderError);
    CHECK(gen.calls() == 3);  // the throwing call still counted
}

TEST_CASE("script load rejects duplicates and malformed rows") {
    auto dir = testutil::scratch_dir("badscript");
    std::vector<io::ordered_json> rows = {
        {{"role", "reasoner"}, {"template_id", "t"}, {"key", "k"}, {"response", "a"}},
        {{"role", "reasoner"}, {"template_id", "t"}, {"key", "k"}, {"response", "b"}},
    };
    io::write_jsonl(dir / "dup.jsonl", rows);
    CHECK_THROWS_AS(providers::ProviderScript::load(dir / "dup.jsonl"), IoError);

    io::write_jsonl(dir / "short.jsonl", {io::ordered_json{{"role", "reasoner"}}});
    CHECK_THROWS_AS(providers::ProviderScript::load(dir / "short.jsonl"), IoError);
}

TEST_CASE("request_parsed retries once with the retry template id, then fails") {
    int attempts = 0;
    testutil::FnGenerator gen([&](const providers::GenerationRequest& req) {
        ++attempts;
        if (attempts == 1) {
            CHECK(req.template_id == "support_score");
            return std::string("not a number");
        }
        CHECK(req.template_id == "support_score__retry");
        CHECK(req.prompt.user.find("not a number") != std::string::npos);
        CHECK(req.prompt.user.find("integer only") != std::string::npos);
        return std::string("42");
    });

    providers::GenerationRequest req;
    req.role = providers::Role::Reasoner;
    req.template_id = "support_score";
    req.key = "k";
    req.prompt.user = "score this";

    std::vector<providers::Exchange> log;
    auto parse = [](const std::string& s) -> std::optional<int> {
        try {
            std::size_t used = 0;
            int v = std::stoi(s, &used);
            if (used != s.size()) return std::nullopt;
            return v;
        } catch (...) {
            return std::nullopt;
        }
    };
    int v = providers::request_parsed<int>(gen, req, parse, "integer only", &log);
    CHECK(v == 42);
    REQUIRE(log.size() == 2);
    CHECK(log[0].template_id == "support_score");
    CHECK(log[1].template_id == "support_score__retry");
    CHECK(log[1].reply == "42");

    // A parseable first reply does not retry.
    testutil::FnGenerator ok([](const providers::GenerationRequest&) { return "7"; });
    CHECK(providers::request_parsed<int>(ok, req, parse, "integer only", nullptr) == 7);
    CHECK(ok.calls() == 1);

    // Two unusable replies surface as a parse error.
    testutil::FnGenerator bad([](const providers::GenerationRequest&) { return "nope"; });
    CHECK_THROWS_AS(
        providers::request_parsed<int>(bad, req, parse, "integer only", nullptr), ParseError);
    CHECK(bad.calls() == 2);
}

TEST_CASE("unconfigured generator always fails") {
    providers::UnconfiguredGenerator gen;
    providers::GenerationRequest req;
    req.role = providers::Role::DeepThinker;
    CHECK_THROWS_WITH_AS(gen.generate(req),
                         doctest::Contains("no backend for role"), ProviderError);
}
