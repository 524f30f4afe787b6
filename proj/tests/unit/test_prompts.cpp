#include "iprar/prompts/prompts.hpp"

#include "helpers.hpp"
#include "iprar/util/error.hpp"
#include "iprar/util/io.hpp"

#include <doctest.h>

#include <algorithm>

using namespace iprar;

TEST_CASE("render substitutes placeholders") {
    CHECK(prompts::PromptLibrary::render("Q: {{question}}  K: {{keywords}}",
                                         {{"question", "why"}, {"keywords", "a, b"}}) ==
          "Q: why  K: a, b");
    // The same placeholder may appear more than once.
    CHECK(prompts::PromptLibrary::render("{{x}}/{{x}}", {{"x", "1"}}) == "1/1");
    // Unused substitutions are fine.
    CHECK(prompts::PromptLibrary::render("plain", {{"x", "1"}}) == "plain");
}

TEST_CASE("render rejects unresolved and unterminated placeholders") {
    CHECK_THROWS_WITH_AS(prompts::PromptLibrary::render("{{missing}}", {}),
                         doctest::Contains("{{missing}}"), InvalidArgumentError);
    CHECK_THROWS_AS(prompts::PromptLibrary::render("{{open", {{"open", "x"}}),
                    InvalidArgumentError);
}

TEST_CASE("builtin library serves the full template set") {
    auto lib = prompts::PromptLibrary::builtin();
    auto ids = lib.ids();
    std::vector<std::string> expected = {
        "canon_refine",   "deep_think",       "draft_answer", "extract_doc_meta",
        "extract_triples", "judge_em",        "judge_five_point", "normalize_entity",
        "pre_retrieval",  "relevance_check",  "support_score",
    };
    std::sort(expected.begin(), expected.end());
    CHECK(ids == expected);
    CHECK_THROWS_AS(lib.get("nonexistent"), InvalidArgumentError);
}

TEST_CASE("templates carry their serving role") {
    auto lib = prompts::PromptLibrary::builtin();
    CHECK(lib.get("pre_retrieval").role == providers::Role::Reasoner);
    CHECK(lib.get("deep_think").role == providers::Role::DeepThinker);
    CHECK(lib.get("judge_five_point").role == providers::Role::Judge);
    CHECK(lib.get("extract_triples").role == providers::Role::Extractor);
    CHECK(lib.get("normalize_entity").role == providers::Role::Extractor);
}

TEST_CASE("make_request renders both halves and wires the key") {
    auto lib = prompts::PromptLibrary::builtin();
    auto req = lib.make_request(
        "relevance_check", "q||c1",
        {{"question", "what?"}, {"chunk_id", "c1"}, {"chunk", "the text"}});
    CHECK(req.template_id == "relevance_check");
    CHECK(req.key == "q||c1");
    CHECK(req.role == providers::Role::Reasoner);
    CHECK(req.prompt.user.find("what?") != std::string::npos);
    CHECK(req.prompt.user.find("the text") != std::string::npos);
    CHECK(req.prompt.user.find("{{") == std::string::npos);
    CHECK(req.prompt.system.find("{{") == std::string::npos);
}

TEST_CASE("template file format round-trips") {
    auto [sys, user] = prompts::PromptLibrary::parse_template_file(
        "[system]\nYou are terse.\n[user]\nAnswer {{q}}.\n", "test");
    CHECK(sys == "You are terse.");
    CHECK(user == "Answer {{q}}.");

    CHECK_THROWS_AS(prompts::PromptLibrary::parse_template_file("no header\n", "test"),
                    ParseError);
    CHECK_THROWS_AS(
        prompts::PromptLibrary::parse_template_file("[system]\nonly system\n", "test"),
        ParseError);
}

TEST_CASE("overrides replace text but keep the role") {
    auto dir = testutil::scratch_dir("prompts");
    io::write_file(dir / "draft_answer.txt",
                   "[system]\nShort answers only.\n[user]\n{{question}}\n{{context}}\n");
    auto lib = prompts::PromptLibrary::with_overrides(dir);
    CHECK(lib.get("draft_answer").system == "Short answers only.");
    CHECK(lib.get("draft_answer").role == providers::Role::Reasoner);
    // Untouched templates keep the builtin text.
    CHECK(lib.get("pre_retrieval").user ==
          prompts::PromptLibrary::builtin().get("pre_retrieval").user);
}

TEST_CASE("override directory with an unknown template name errors") {
    auto dir = testutil::scratch_dir("badprompts");
    io::write_file(dir / "mystery.txt", "[system]\nx\n[user]\ny\n");
    CHECK_THROWS_AS(prompts::PromptLibrary::with_overrides(dir), ConfigError);
    CHECK_THROWS_AS(prompts::PromptLibrary::with_overrides(dir / "missing"), ConfigError);
}

// The prompts/ directory in the source tree must stay byte-equivalent to the
// compiled-in templates, so that editing a file there is a faithful starting
// point for customization.
TEST_CASE("shipped prompt files mirror the builtin templates") {
    auto shipped = prompts::PromptLibrary::with_overrides(
        std::filesystem::path(IPRAR_SOURCE_DIR) / "prompts");
    auto builtin = prompts::PromptLibrary::builtin();
    for (const auto& id : builtin.ids()) {
        CAPTURE(id);
        CHECK(shipped.get(id).system == builtin.get(id).system);
        CHECK(shipped.get(id).user == builtin.get(id).user);
        CHECK(shipped.get(id).role == builtin.get(id).role);
    }
}
