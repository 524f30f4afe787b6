#pragma once

#include <cstddef>
#include <cstdint>
#include <string>
#include <string_view>
#include <vector>

namespace iprar::text {

/// Byte span of one whitespace-delimited word inside a larger string.
struct WordSpan {
    std::size_t begin = 0;
    std::size_t end = 0;  // one past the last byte
};

/// Splits on ASCII whitespace and returns the byte spans of the words.
/// This is the "word" notion used by the chunker (word counts, windows).
std::vector<WordSpan> split_words(std::string_view s);

/// Index tokenization: case-folded word tokens. A word character is an ASCII
/// alphanumeric or any non-ASCII byte (so Greek letters, accented names and
/// CJK text survive as tokens); everything else is a boundary. No stemming.
std::vector<std::string> tokenize(std::string_view s);

/// Byte offsets (into `s`) at which a new paragraph starts. Paragraphs are
/// separated by blank lines. Offset 0 is always included for non-empty input.
std::vector<std::size_t> paragraph_starts(std::string_view s);

/// Lowercases ASCII letters, collapses whitespace runs to single spaces and
/// trims. Used by the default list-answer matcher.
std::string normalize_for_match(std::string_view s);

std::string to_lower_ascii(std::string_view s);

/// Trims ASCII whitespace from both ends.
std::string_view trim(std::string_view s);

/// FNV-1a 64-bit over raw bytes. Stable across platforms, unlike std::hash.
std::uint64_t fnv1a64(std::string_view s);

}  // namespace iprar::text
