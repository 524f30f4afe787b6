#include "iprar/util/text.hpp"

#include <cctype>

namespace iprar::text {

namespace {

bool is_space(unsigned char c) {
    return c == ' ' || c == '\t' || c == '\n' || c == '\r' || c == '\f' || c == '\v';
}

bool is_word_char(unsigned char c) {
    return (c >= '0' && c <= '9') || (c >= 'a' && c <= 'z') || (c >= 'A' && c <= 'Z') ||
           c >= 0x80;
}

char fold(unsigned char c) {
    if (c >= 'A' && c <= 'Z') return static_cast<char>(c - 'A' + 'a');
    return static_cast<char>(c);
}

}  // namespace

std::vector<WordSpan> split_words(std::string_view s) {
    std::vector<WordSpan> out;
    std::size_t i = 0;
    const std::size_t n = s.size();
    while (i < n) {
        while (i < n && is_space(static_cast<unsigned char>(s[i]))) ++i;
        if (i >= n) break;
        std::size_t start = i;
        while (i < n && !is_space(static_cast<unsigned char>(s[i]))) ++i;
        out.push_back({start, i});
    }
    return out;
}

std::vector<std::string> tokenize(std::string_view s) {
    std::vector<std::string> out;
    std::string cur;
    for (unsigned char c : s) {
        if (is_word_char(c)) {
            cur.push_back(fold(c));
        } else if (!cur.empty()) {
            out.push_back(std::move(cur));
            cur.clear();
        }
    }
    if (!cur.empty()) out.push_back(std::move(cur));
    return out;
}

std::vector<std::size_t> paragraph_starts(std::string_view s) {
    std::vector<std::size_t> out;
    if (s.empty()) return out;
    out.push_back(0);
    std::size_t i = 0;
    const std::size_t n = s.size();
    while (i < n) {
        // A blank line: newline, optional horizontal whitespace, newline.
        if (s[i] == '\n') {
            std::size_t j = i + 1;
            bool saw_second = false;
            while (j < n) {
                char c = s[j];
                if (c == '\n') {
                    saw_second = true;
                    ++j;
                } else if (c == ' ' || c == '\t' || c == '\r') {
                    ++j;
                } else {
                    break;
                }
            }
            if (saw_second && j < n) out.push_back(j);
            i = j > i + 1 ? j : i + 1;
        } else {
            ++i;
        }
    }
    return out;
}

std::string to_lower_ascii(std::string_view s) {
    std::string out;
    out.reserve(s.size());
    for (unsigned char c : s) out.push_back(fold(c));
    return out;
}

std::string normalize_for_match(std::string_view s) {
    std::string out;
    out.reserve(s.size());
    bool pending_space = false;
    for (unsigned char c : s) {
        if (is_space(c)) {
            pending_space = !out.empty();
        } else {
            if (pending_space) out.push_back(' ');
            pending_space = false;
            out.push_back(fold(c));
        }
    }
    return out;
}

std::string_view trim(std::string_view s) {
    std::size_t b = 0;
    std::size_t e = s.size();
    while (b < e && is_space(static_cast<unsigned char>(s[b]))) ++b;
    while (e > b && is_space(static_cast<unsigned char>(s[e - 1]))) --e;
    return s.substr(b, e - b);
}

std::uint64_t fnv1a64(std::string_view s) {
    std::uint64_t h = 14695981039346656037ull;
    for (unsigned char c : s) {
        h ^= c;
        h *= 1099511628211ull;
    }
    return h;
}

}  // namespace iprar::text
