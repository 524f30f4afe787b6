#include "iprar/util/text.hpp"

#include <doctest.h>

using namespace iprar;

TEST_CASE("split_words returns byte spans of whitespace-separated words") {
    auto spans = text::split_words("  alpha\tbeta\n gamma ");
    REQUIRE(spans.size() == 3);
    CHECK(spans[0].begin == 2);
    CHECK(spans[0].end == 7);
    CHECK(spans[2].begin == 14);
    CHECK(spans[2].end == 19);
    CHECK(text::split_words("").empty());
    CHECK(text::split_words(" \n\t ").empty());
}

TEST_CASE("tokenize lowercases and splits on non-word characters") {
    auto toks = text::tokenize("Non-small CELL lung-cancer (NSCLC), 2nd line!");
    std::vector<std::string> expect = {"non", "small", "cell",  "lung", "cancer",
                                       "nsclc", "2nd",  "line"};
    CHECK(toks == expect);
    CHECK(text::tokenize("...").empty());
}

TEST_CASE("paragraph_starts finds blank-line boundaries") {
    std::string body = "first para\nstill first\n\nsecond para\n \t\nthird";
    auto starts = text::paragraph_starts(body);
    REQUIRE(starts.size() == 3);
    CHECK(starts[0] == 0);
    CHECK(body.substr(starts[1], 6) == "second");
    CHECK(body.substr(starts[2], 5) == "third");

    CHECK(text::paragraph_starts("").empty());
    CHECK(text::paragraph_starts("one paragraph only") == std::vector<std::size_t>{0});
    // A trailing blank line opens no empty paragraph.
    CHECK(text::paragraph_starts("para\n\n") == std::vector<std::size_t>{0});
}

TEST_CASE("normalize_for_match folds case and collapses whitespace") {
    CHECK(text::normalize_for_match("  Gastric\t CANCER \n") == "gastric cancer");
    CHECK(text::normalize_for_match("abc") == "abc");
    CHECK(text::normalize_for_match("") == "");
    CHECK(text::normalize_for_match(" \t ") == "");
}

TEST_CASE("trim strips surrounding whitespace only") {
    CHECK(text::trim("  x y  ") == "x y");
    CHECK(text::trim("") == "");
    CHECK(text::trim(" \n ") == "");
}

TEST_CASE("fnv1a64 matches reference values") {
    // Published check values for 64-bit FNV-1a.
    CHECK(text::fnv1a64("") == 14695981039346656037ull);
    CHECK(text::fnv1a64("a") == 0xaf63dc4c8601ec8cull);
    CHECK(text::fnv1a64("hello") == 0xa430d84680aabd0bull);
    CHECK(text::fnv1a64("x") != text::fnv1a64("y"));
}

TEST_CASE("to_lower_ascii leaves non-letters alone") {
    CHECK(text::to_lower_ascii("MiR-375!") == "mir-375!");
}
