#include "iprar/corpus/corpus.hpp"

#include "iprar/util/error.hpp"
#include "iprar/util/io.hpp"
#include "iprar/util/text.hpp"

#include <algorithm>
#include <cstdio>

namespace iprar::corpus {

using io::ordered_json;

const char* to_string(ChunkLevel level) {
    return level == ChunkLevel::Abstract ? "abstract" : "fulltext";
}

ChunkLevel chunk_level_from_string(const std::string& s) {
    if (s == "abstract") return ChunkLevel::Abstract;
    if (s == "fulltext") return ChunkLevel::FullText;
    throw InvalidArgumentError("unknown chunk level: " + s);
}

std::string make_chunk_id(const std::string& doc_id, ChunkLevel level, int ordinal) {
    char buf[16];
    std::snprintf(buf, sizeof(buf), "#%c%04d", level == ChunkLevel::Abstract ? 'a' : 'f',
                  ordinal);
    return doc_id + buf;
}

void ChunkPolicy::validate() const {
    if (target_words <= 0) throw InvalidArgumentError("chunk policy: target_words must be > 0");
    if (overlap_words < 0 || overlap_words >= target_words) {
        throw InvalidArgumentError("chunk policy: overlap_words must be in [0, target_words)");
    }
}

std::vector<Chunk> chunk_document(const Document& doc, const ChunkPolicy& policy) {
    policy.validate();
    if (!doc.has_text()) {
        throw InvalidArgumentError("document has no text at either level: " + doc.doc_id);
    }

    std::vector<Chunk> out;
    if (!doc.abstract_text.empty()) {
        out.push_back({make_chunk_id(doc.doc_id, ChunkLevel::Abstract, 0), doc.doc_id,
                       ChunkLevel::Abstract, doc.abstract_text, 0});
    }
    if (doc.body.empty()) return out;

    const auto words = text::split_words(doc.body);
    const std::size_t n = words.size();
    if (n == 0) return out;

    // Word indices at which a paragraph starts (first word at or after each
    // paragraph's byte offset).
    std::vector<std::size_t> para_word_idx;
    if (policy.paragraph_aligned) {
        auto starts = text::paragraph_starts(doc.body);
        std::size_t w = 0;
        for (std::size_t byte : starts) {
            while (w < n && words[w].begin < byte) ++w;
            if (w < n) para_word_idx.push_back(w);
        }
    }

    const std::size_t target = static_cast<std::size_t>(policy.target_words);
    const std::size_t overlap = static_cast<std::size_t>(policy.overlap_words);

    int ordinal = 0;
    std::size_t start = 0;
    while (start < n) {
        std::size_t end = std::min(start + target, n);
        if (end < n && policy.paragraph_aligned) {
            // Pull the window end back to the last paragraph boundary inside
            // it, but only while the next window (end - overlap) still makes
            // progress past `start`.
            auto it = std::upper_bound(para_word_idx.begin(), para_word_idx.end(), end);
            if (it != para_word_idx.begin()) {
                std::size_t snapped = *(it - 1);
                if (snapped > start + overlap) end = snapped;
            }
        }
        const std::size_t byte_begin = words[start].begin;
        const std::size_t byte_end = words[end - 1].end;
        out.push_back({make_chunk_id(doc.doc_id, ChunkLevel::FullText, ordinal), doc.doc_id,
                       ChunkLevel::FullText, doc.body.substr(byte_begin, byte_end - byte_begin),
                       ordinal});
        ++ordinal;
        if (end == n) break;
        start = end - overlap;
    }
    return out;
}

namespace {

ordered_json doc_to_json(const Document& d) {
    ordered_json j;
    j["id"] = d.doc_id;
    j["title"] = d.title;
    j["abstract"] = d.abstract_text;
    j["body_markdown"] = d.body;
    if (d.year) j["year"] = *d.year;
    j["keywords"] = d.keywords;
    j["citations"] = d.cited_doc_ids;
    return j;
}

struct ParsedRecord {
    Document doc;
    std::string error;  // non-empty if invalid
};

ParsedRecord parse_record(const ordered_json& j) {
    ParsedRecord r;
    if (!j.is_object()) {
        r.error = "record is not a JSON object";
        return r;
    }
    if (!j.contains("id") || !j["id"].is_string() || j["id"].get<std::string>().empty()) {
        r.error = "missing or empty id";
        return r;
    }
    r.doc.doc_id = j["id"].get<std::string>();
    auto str_or_empty = [&](const char* key) -> std::string {
        if (j.contains(key) && j[key].is_string()) return j[key].get<std::string>();
        return {};
    };
    r.doc.title = str_or_empty("title");
    r.doc.abstract_text = str_or_empty("abstract");
    r.doc.body = str_or_empty("body_markdown");
    if (j.contains("year") && j["year"].is_number_integer()) {
        r.doc.year = j["year"].get<int>();
    }
    auto str_list = [&](const char* key) -> std::vector<std::string> {
        std::vector<std::string> out;
        if (j.contains(key) && j[key].is_array()) {
            for (const auto& e : j[key]) {
                if (e.is_string()) out.push_back(e.get<std::string>());
            }
        }
        return out;
    };
    r.doc.keywords = str_list("keywords");
    r.doc.cited_doc_ids = str_list("citations");
    if (!r.doc.has_text()) r.error = "record has neither abstract nor body";
    return r;
}

}  // namespace

bool Corpus::add(Document doc) {
    auto [it, inserted] = by_id_.try_emplace(doc.doc_id, docs_.size());
    if (!inserted) return false;
    docs_.push_back(std::move(doc));
    return true;
}

Corpus Corpus::ingest(const std::filesystem::path& source, CorpusFormat format,
                      IngestReport& report) {
    namespace fs = std::filesystem;
    if (!fs::exists(source)) throw IoError("corpus source does not exist: " + source.string());
    if (format == CorpusFormat::Auto) {
        format = fs::is_directory(source) ? CorpusFormat::Directory : CorpusFormat::Jsonl;
    }

    Corpus corpus;
    auto take = [&](const ordered_json& j, const std::string& where) {
        ParsedRecord r = parse_record(j);
        if (!r.error.empty()) {
            report.rejections.push_back({where, r.doc.doc_id, r.error});
            return;
        }
        std::string id = r.doc.doc_id;
        if (!corpus.add(std::move(r.doc))) {
            report.rejections.push_back({where, id, "duplicate doc_id"});
            return;
        }
        ++report.accepted;
    };

    if (format == CorpusFormat::Jsonl) {
        std::string raw = io::read_file(source);
        std::size_t lineno = 0;
        std::size_t pos = 0;
        while (pos <= raw.size()) {
            std::size_t nl = raw.find('\n', pos);
            std::string line = raw.substr(pos, nl == std::string::npos ? nl : nl - pos);
            pos = nl == std::string::npos ? raw.size() + 1 : nl + 1;
            ++lineno;
            if (!line.empty() && line.back() == '\r') line.pop_back();
            if (line.find_first_not_of(" \t") == std::string::npos) continue;
            std::string where = source.string() + ":" + std::to_string(lineno);
            ordered_json j = ordered_json::parse(line, nullptr, false);
            if (j.is_discarded()) {
                report.rejections.push_back({where, "", "malformed JSON"});
                continue;
            }
            take(j, where);
        }
    } else {
        std::vector<fs::path> files;
        for (const auto& entry : fs::directory_iterator(source)) {
            if (entry.is_regular_file() && entry.path().extension() == ".json") {
                files.push_back(entry.path());
            }
        }
        std::sort(files.begin(), files.end());
        for (const auto& file : files) {
            ordered_json j = ordered_json::parse(io::read_file(file), nullptr, false);
            if (j.is_discarded()) {
                report.rejections.push_back({file.string(), "", "malformed JSON"});
                continue;
            }
            take(j, file.string());
        }
    }
    return corpus;
}

Corpus Corpus::load(const std::filesystem::path& path) {
    if (!std::filesystem::exists(path)) {
        throw MissingArtifactError("corpus not found at " + path.string() +
                                   " (run `ingest` first)");
    }
    Corpus corpus;
    for (const auto& j : io::read_jsonl(path)) {
        ParsedRecord r = parse_record(j);
        if (!r.error.empty()) {
            throw IoError("corrupt corpus file " + path.string() + ": " + r.error);
        }
        if (!corpus.add(std::move(r.doc))) {
            throw IoError("corrupt corpus file " + path.string() + ": duplicate doc_id");
        }
    }
    return corpus;
}

void Corpus::save(const std::filesystem::path& path) const {
    std::vector<ordered_json> rows;
    rows.reserve(docs_.size());
    for (const auto& d : docs_) rows.push_back(doc_to_json(d));
    io::write_jsonl(path, rows);
}

const Document* Corpus::find(const std::string& doc_id) const {
    auto it = by_id_.find(doc_id);
    return it == by_id_.end() ? nullptr : &docs_[it->second];
}

std::vector<Chunk> Corpus::chunk_all(const ChunkPolicy& policy) const {
    std::vector<Chunk> out;
    for (const auto& doc : docs_) {
        auto chunks = chunk_document(doc, policy);
        out.insert(out.end(), std::make_move_iterator(chunks.begin()),
                   std::make_move_iterator(chunks.end()));
    }
    return out;
}

ChunkStore::ChunkStore(std::vector<Chunk> chunks) : chunks_(std::move(chunks)) {
    for (std::size_t i = 0; i < chunks_.size(); ++i) {
        auto [it, inserted] = by_id_.try_emplace(chunks_[i].chunk_id, i);
        if (!inserted) throw InvalidArgumentError("duplicate chunk_id: " + chunks_[i].chunk_id);
    }
}

ChunkStore ChunkStore::load(const std::filesystem::path& path) {
    if (!std::filesystem::exists(path)) {
        throw MissingArtifactError("chunk store not found at " + path.string() +
                                   " (run `index` first)");
    }
    std::vector<Chunk> chunks;
    for (const auto& j : io::read_jsonl(path)) {
        Chunk c;
        c.chunk_id = j.at("chunk_id").get<std::string>();
        c.doc_id = j.at("doc_id").get<std::string>();
        c.level = chunk_level_from_string(j.at("level").get<std::string>());
        c.ordinal = j.at("ordinal").get<int>();
        c.text = j.at("text").get<std::string>();
        chunks.push_back(std::move(c));
    }
    return ChunkStore(std::move(chunks));
}

void ChunkStore::save(const std::filesystem::path& path) const {
    std::vector<ordered_json> rows;
    rows.reserve(chunks_.size());
    for (const auto& c : chunks_) {
        ordered_json j;
        j["chunk_id"] = c.chunk_id;
        j["doc_id"] = c.doc_id;
        j["level"] = to_string(c.level);
        j["ordinal"] = c.ordinal;
        j["text"] = c.text;
        rows.push_back(std::move(j));
    }
    io::write_jsonl(path, rows);
}

const Chunk& ChunkStore::get(const std::string& chunk_id) const {
    auto it = by_id_.find(chunk_id);
    if (it == by_id_.end()) throw InvalidArgumentError("unknown chunk_id: " + chunk_id);
    return chunks_[it->second];
}

const std::string& ChunkStore::doc_of(const std::string& chunk_id) const {
    return get(chunk_id).doc_id;
}

std::vector<const Chunk*> ChunkStore::at_level(ChunkLevel level) const {
    std::vector<const Chunk*> out;
    for (const auto& c : chunks_) {
        if (c.level == level) out.push_back(&c);
    }
    return out;
}

}  // namespace iprar::corpus
