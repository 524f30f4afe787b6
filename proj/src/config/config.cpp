#include "iprar/config/config.hpp"

#include "iprar/util/error.hpp"
#include "iprar/util/text.hpp"

#include <charconv>
#include <cmath>
#include <functional>
#include <map>
#include <variant>

namespace iprar::config {

namespace fs = std::filesystem;
using io::ordered_json;

void EngineConfig::resolve_paths() {
    auto fill = [&](std::string& field, const char* leaf) {
        if (field.empty()) field = (fs::path(data_dir) / leaf).string();
    };
    fill(corpus_file, "corpus.jsonl");
    fill(chunks_file, "chunks.jsonl");
    fill(index_dir, "index");
    fill(graph_dir, "graph");
    fill(trace_dir, "traces");
    fill(report_dir, "reports");
}

void EngineConfig::validate() const {
    auto require = [](bool ok, const std::string& what) {
        if (!ok) throw ConfigError(what);
    };
    require(chunk_target_words > 0, "chunking.target_words must be positive");
    require(chunk_overlap_words >= 0, "chunking.overlap_words must be non-negative");
    require(chunk_overlap_words < chunk_target_words,
            "chunking.overlap_words must be smaller than chunking.target_words");
    require(k_per_channel > 0, "retrieval.k_per_channel must be positive");
    require(w_s >= 0 && w_m >= 0 && w_r >= 0, "aggregator weights must be non-negative");
    require(w_s + w_m + w_r > 0, "aggregator weights must not all be zero");
    require(relevance_target > 0, "generation.relevance_target must be positive");
    require(support_scale_max > 0, "generation.support_scale_max must be positive");
    require(support_threshold >= 0 && support_threshold <= support_scale_max,
            "generation.support_threshold must lie on the support scale");
    require(!kg_relations.empty(), "kg.relations must not be empty");
    require(normalize_top_k > 0, "kg.normalize_top_k must be positive");
    require(merge_threshold >= -1.0 && merge_threshold <= 1.0,
            "kg.merge_threshold must be a cosine value in [-1, 1]");
    require(gmap_epsilon >= 0, "eval.gmap_epsilon must be non-negative");
    require(judge_mode == "five_point" || judge_mode == "exact_match",
            "eval.judge_mode must be 'five_point' or 'exact_match'");
    require(embedder_backend == "hash" || embedder_backend == "http",
            "providers.embedder must be 'hash' or 'http'");
    require(embed_dims > 0, "providers.embed_dims must be positive");
    require(provider_max_attempts > 0, "providers.max_attempts must be positive");
    require(provider_backoff_ms >= 0, "providers.backoff_ms must be non-negative");
    require(provider_timeout_s > 0, "providers.timeout_s must be positive");
    require(workers > 0, "run.workers must be positive");
}

ordered_json EngineConfig::to_json() const {
    ordered_json j;
    j["paths"] = {{"data_dir", data_dir},     {"corpus_file", corpus_file},
                  {"chunks_file", chunks_file}, {"index_dir", index_dir},
                  {"graph_dir", graph_dir},   {"trace_dir", trace_dir},
                  {"report_dir", report_dir}, {"prompt_dir", prompt_dir}};
    j["chunking"] = {{"target_words", chunk_target_words},
                     {"overlap_words", chunk_overlap_words},
                     {"paragraph_aligned", chunk_paragraph_aligned}};
    j["retrieval"] = {{"k_per_channel", k_per_channel}};
    j["aggregator"] = {{"w_s", w_s}, {"w_m", w_m}, {"w_r", w_r}};
    j["generation"] = {{"relevance_target", relevance_target},
                       {"support_scale_max", support_scale_max},
                       {"support_threshold", support_threshold}};
    j["kg"] = {{"relations", kg_relations},
               {"normalize_top_k", normalize_top_k},
               {"merge_threshold", merge_threshold},
               {"canon_refine", canon_refine},
               {"lexicon_disease_drug", lexicon_disease_drug},
               {"lexicon_gene_protein", lexicon_gene_protein}};
    j["eval"] = {{"gmap_epsilon", gmap_epsilon}, {"judge_mode", judge_mode}};
    j["providers"] = {{"embedder", embedder_backend},
                      {"embed_dims", embed_dims},
                      {"llm_base_url", llm_base_url},
                      {"llm_model", llm_model},
                      {"llm_api_key_env", llm_api_key_env},
                      {"embed_base_url", embed_base_url},
                      {"embed_model", embed_model},
                      {"embed_api_key_env", embed_api_key_env},
                      {"max_attempts", provider_max_attempts},
                      {"backoff_ms", provider_backoff_ms},
                      {"timeout_s", provider_timeout_s}};
    // workers and verbose steer the process, not the result, so they stay out
    // of the snapshot: reruns at different parallelism must emit identical
    // artifacts. The script path is provenance for every mock reply.
    j["run"] = {{"mock_script", mock_script}};
    return j;
}

EngineConfig default_config() {
    EngineConfig cfg;
    cfg.resolve_paths();
    return cfg;
}

namespace {

using Value = std::variant<std::string, long long, double, bool, std::vector<std::string>>;

struct ValueParser {
    const std::string& line;
    std::size_t pos;
    const std::string context;  // "path:lineno" for error messages

    [[noreturn]] void fail(const std::string& what) const {
        throw ConfigError(context + ": " + what);
    }
    void skip_spaces() {
        while (pos < line.size() && (line[pos] == ' ' || line[pos] == '\t')) ++pos;
    }
    bool at_end() {
        skip_spaces();
        return pos >= line.size() || line[pos] == '#';
    }

    std::string parse_quoted() {
        if (line[pos] != '"') fail("expected a quoted string");
        ++pos;
        std::string out;
        while (pos < line.size() && line[pos] != '"') {
            char c = line[pos++];
            if (c == '\\') {
                if (pos >= line.size()) fail("dangling escape in string");
                char e = line[pos++];
                switch (e) {
                    case '"': out += '"'; break;
                    case '\\': out += '\\'; break;
                    case 'n': out += '\n'; break;
                    case 't': out += '\t'; break;
                    default: fail(std::string("unsupported escape \\") + e);
                }
            } else {
                out += c;
            }
        }
        if (pos >= line.size()) fail("unterminated string");
        ++pos;  // closing quote
        return out;
    }

    Value parse_value() {
        skip_spaces();
        if (pos >= line.size()) fail("missing value");
        char c = line[pos];
        if (c == '"') return parse_quoted();
        if (c == '[') {
            ++pos;
            std::vector<std::string> items;
            skip_spaces();
            if (pos < line.size() && line[pos] == ']') {
                ++pos;
                return items;
            }
            while (true) {
                skip_spaces();
                items.push_back(parse_quoted());
                skip_spaces();
                if (pos < line.size() && line[pos] == ',') {
                    ++pos;
                    continue;
                }
                if (pos < line.size() && line[pos] == ']') {
                    ++pos;
                    return items;
                }
                fail("expected ',' or ']' in array");
            }
        }
        // bare token: boolean or number
        std::size_t start = pos;
        while (pos < line.size() && line[pos] != ' ' && line[pos] != '\t' && line[pos] != '#') {
            ++pos;
        }
        std::string tok = line.substr(start, pos - start);
        if (tok == "true") return true;
        if (tok == "false") return false;
        long long iv = 0;
        auto [ip, iec] = std::from_chars(tok.data(), tok.data() + tok.size(), iv);
        if (iec == std::errc() && ip == tok.data() + tok.size()) return iv;
        try {
            std::size_t used = 0;
            double dv = std::stod(tok, &used);
            if (used == tok.size() && std::isfinite(dv)) return dv;
        } catch (const std::exception&) {
        }
        fail("cannot parse value '" + tok + "'");
    }
};

struct Field {
    std::function<void(EngineConfig&, const Value&, const std::string& ctx)> set;
};

[[noreturn]] void type_error(const std::string& ctx, const char* want) {
    throw ConfigError(ctx + ": expected a " + want + " value");
}

Field string_field(std::string EngineConfig::* member) {
    return {[member](EngineConfig& c, const Value& v, const std::string& ctx) {
        if (const auto* s = std::get_if<std::string>(&v)) {
            c.*member = *s;
        } else {
            type_error(ctx, "string");
        }
    }};
}

Field int_field(int EngineConfig::* member) {
    return {[member](EngineConfig& c, const Value& v, const std::string& ctx) {
        if (const auto* i = std::get_if<long long>(&v)) {
            c.*member = static_cast<int>(*i);
        } else {
            type_error(ctx, "integer");
        }
    }};
}

Field double_field(double EngineConfig::* member) {
    return {[member](EngineConfig& c, const Value& v, const std::string& ctx) {
        if (const auto* d = std::get_if<double>(&v)) {
            c.*member = *d;
        } else if (const auto* i = std::get_if<long long>(&v)) {
            c.*member = static_cast<double>(*i);
        } else {
            type_error(ctx, "number");
        }
    }};
}

Field bool_field(bool EngineConfig::* member) {
    return {[member](EngineConfig& c, const Value& v, const std::string& ctx) {
        if (const auto* b = std::get_if<bool>(&v)) {
            c.*member = *b;
        } else {
            type_error(ctx, "boolean");
        }
    }};
}

Field string_list_field(std::vector<std::string> EngineConfig::* member) {
    return {[member](EngineConfig& c, const Value& v, const std::string& ctx) {
        if (const auto* a = std::get_if<std::vector<std::string>>(&v)) {
            c.*member = *a;
        } else {
            type_error(ctx, "string-array");
        }
    }};
}

const std::map<std::string, Field>& field_table() {
    static const std::map<std::string, Field> table = {
        {"paths.data_dir", string_field(&EngineConfig::data_dir)},
        {"paths.corpus_file", string_field(&EngineConfig::corpus_file)},
        {"paths.chunks_file", string_field(&EngineConfig::chunks_file)},
        {"paths.index_dir", string_field(&EngineConfig::index_dir)},
        {"paths.graph_dir", string_field(&EngineConfig::graph_dir)},
        {"paths.trace_dir", string_field(&EngineConfig::trace_dir)},
        {"paths.report_dir", string_field(&EngineConfig::report_dir)},
        {"paths.prompt_dir", string_field(&EngineConfig::prompt_dir)},
        {"chunking.target_words", int_field(&EngineConfig::chunk_target_words)},
        {"chunking.overlap_words", int_field(&EngineConfig::chunk_overlap_words)},
        {"chunking.paragraph_aligned", bool_field(&EngineConfig::chunk_paragraph_aligned)},
        {"retrieval.k_per_channel", int_field(&EngineConfig::k_per_channel)},
        {"aggregator.w_s", double_field(&EngineConfig::w_s)},
        {"aggregator.w_m", double_field(&EngineConfig::w_m)},
        {"aggregator.w_r", double_field(&EngineConfig::w_r)},
        {"generation.relevance_target", int_field(&EngineConfig::relevance_target)},
        {"generation.support_scale_max", int_field(&EngineConfig::support_scale_max)},
        {"generation.support_threshold", int_field(&EngineConfig::support_threshold)},
        {"kg.relations", string_list_field(&EngineConfig::kg_relations)},
        {"kg.normalize_top_k", int_field(&EngineConfig::normalize_top_k)},
        {"kg.merge_threshold", double_field(&EngineConfig::merge_threshold)},
        {"kg.canon_refine", bool_field(&EngineConfig::canon_refine)},
        {"kg.lexicon_disease_drug", string_field(&EngineConfig::lexicon_disease_drug)},
        {"kg.lexicon_gene_protein", string_field(&EngineConfig::lexicon_gene_protein)},
        {"eval.gmap_epsilon", double_field(&EngineConfig::gmap_epsilon)},
        {"eval.judge_mode", string_field(&EngineConfig::judge_mode)},
        {"providers.embedder", string_field(&EngineConfig::embedder_backend)},
        {"providers.embed_dims", int_field(&EngineConfig::embed_dims)},
        {"providers.llm_base_url", string_field(&EngineConfig::llm_base_url)},
        {"providers.llm_model", string_field(&EngineConfig::llm_model)},
        {"providers.llm_api_key_env", string_field(&EngineConfig::llm_api_key_env)},
        {"providers.embed_base_url", string_field(&EngineConfig::embed_base_url)},
        {"providers.embed_model", string_field(&EngineConfig::embed_model)},
        {"providers.embed_api_key_env", string_field(&EngineConfig::embed_api_key_env)},
        {"providers.max_attempts", int_field(&EngineConfig::provider_max_attempts)},
        {"providers.backoff_ms", int_field(&EngineConfig::provider_backoff_ms)},
        {"providers.timeout_s", int_field(&EngineConfig::provider_timeout_s)},
        {"run.workers", int_field(&EngineConfig::workers)},
        {"run.verbose", bool_field(&EngineConfig::verbose)},
        {"run.mock_script", string_field(&EngineConfig::mock_script)},
    };
    return table;
}

void set_key(EngineConfig& cfg, const std::string& dotted, const Value& value,
             const std::string& ctx) {
    auto it = field_table().find(dotted);
    if (it == field_table().end()) throw ConfigError(ctx + ": unknown config key '" + dotted + "'");
    it->second.set(cfg, value, ctx);
}

}  // namespace

EngineConfig load_config_unresolved(const fs::path& path) {
    if (!fs::exists(path)) throw ConfigError("config file not found: " + path.string());
    EngineConfig cfg;  // start from defaults, overlay file values
    std::string contents = io::read_file(path);

    std::string section;
    std::size_t lineno = 0;
    std::size_t start = 0;
    while (start <= contents.size()) {
        std::size_t nl = contents.find('\n', start);
        std::string line = contents.substr(
            start, nl == std::string::npos ? std::string::npos : nl - start);
        start = nl == std::string::npos ? contents.size() + 1 : nl + 1;
        ++lineno;

        const std::string ctx = path.string() + ":" + std::to_string(lineno);
        std::string stripped(text::trim(line));
        if (stripped.empty() || stripped[0] == '#') continue;

        if (stripped[0] == '[') {
            auto close = stripped.find(']');
            if (close == std::string::npos) throw ConfigError(ctx + ": unterminated section");
            std::string rest(text::trim(stripped.substr(close + 1)));
            if (!rest.empty() && rest[0] != '#') {
                throw ConfigError(ctx + ": trailing content after section header");
            }
            section = std::string(text::trim(stripped.substr(1, close - 1)));
            if (section.empty()) throw ConfigError(ctx + ": empty section name");
            continue;
        }

        auto eq = line.find('=');
        if (eq == std::string::npos) throw ConfigError(ctx + ": expected `key = value`");
        std::string key(text::trim(line.substr(0, eq)));
        if (key.empty()) throw ConfigError(ctx + ": empty key");
        if (section.empty()) throw ConfigError(ctx + ": key outside any [section]");

        ValueParser vp{line, eq + 1, ctx};
        Value value = vp.parse_value();
        if (!vp.at_end()) throw ConfigError(ctx + ": trailing content after value");
        set_key(cfg, section + "." + key, value, ctx);
    }

    return cfg;
}

EngineConfig load_config(const fs::path& path) {
    EngineConfig cfg = load_config_unresolved(path);
    cfg.resolve_paths();
    cfg.validate();
    return cfg;
}

void apply_override(EngineConfig& cfg, const std::string& assignment) {
    const std::string ctx = "--set " + assignment;
    auto eq = assignment.find('=');
    if (eq == std::string::npos) throw ConfigError(ctx + ": expected section.key=value");
    std::string dotted(text::trim(assignment.substr(0, eq)));
    std::string raw(text::trim(assignment.substr(eq + 1)));
    if (dotted.find('.') == std::string::npos) {
        throw ConfigError(ctx + ": key must be section.key");
    }

    Value value;
    if (!raw.empty() && (raw[0] == '"' || raw[0] == '[' || raw == "true" || raw == "false")) {
        ValueParser vp{raw, 0, ctx};
        value = vp.parse_value();
        if (!vp.at_end()) throw ConfigError(ctx + ": trailing content after value");
    } else {
        long long iv = 0;
        auto [ip, iec] = std::from_chars(raw.data(), raw.data() + raw.size(), iv);
        if (iec == std::errc() && ip == raw.data() + raw.size()) {
            value = iv;
        } else {
            try {
                std::size_t used = 0;
                double dv = std::stod(raw, &used);
                if (used == raw.size() && std::isfinite(dv)) {
                    value = dv;
                } else {
                    value = raw;  // bare string
                }
            } catch (const std::exception&) {
                value = raw;  // bare string
            }
        }
    }
    set_key(cfg, dotted, value, ctx);
}

}  // namespace iprar::config
