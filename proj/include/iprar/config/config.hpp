#pragma once

#include "iprar/util/io.hpp"

#include <filesystem>
#include <string>
#include <vector>

namespace iprar::config {

/// Every knob of the engine, flattened. Defaults match the published
/// operating point of the pipeline; see config/default.toml for the same
/// values in file form.
struct EngineConfig {
    // [paths]
    std::string data_dir = "data";
    std::string corpus_file;   // default: <data_dir>/corpus.jsonl
    std::string chunks_file;   // default: <data_dir>/chunks.jsonl
    std::string index_dir;     // default: <data_dir>/index
    std::string graph_dir;     // default: <data_dir>/graph
    std::string trace_dir;     // default: <data_dir>/traces
    std::string report_dir;    // default: <data_dir>/reports
    std::string prompt_dir;    // empty: use built-in templates

    // [chunking]
    int chunk_target_words = 300;
    int chunk_overlap_words = 50;
    bool chunk_paragraph_aligned = true;

    // [retrieval]
    int k_per_channel = 10;

    // [aggregator]
    double w_s = 5.0;
    double w_m = 3.0;
    double w_r = 1.0;

    // [generation]
    int relevance_target = 5;
    int support_scale_max = 100;
    int support_threshold = 50;

    // [kg]
    std::vector<std::string> kg_relations = {
        "treats",       "inhibits",       "promotes",      "associated_with",
        "interacts_with", "targets",      "biomarker_for", "regulates",
    };
    int normalize_top_k = 5;
    double merge_threshold = 0.5;
    bool canon_refine = false;
    std::string lexicon_disease_drug;  // path; empty disables Drug/Disease normalization
    std::string lexicon_gene_protein;  // path; empty disables Gene/Protein normalization

    // [eval]
    double gmap_epsilon = 0.01;
    std::string judge_mode = "five_point";  // five_point | exact_match

    // [providers]
    std::string embedder_backend = "hash";  // hash | http
    int embed_dims = 64;
    std::string llm_base_url;
    std::string llm_model;
    std::string llm_api_key_env = "IPRAR_LLM_API_KEY";
    std::string embed_base_url;
    std::string embed_model;
    std::string embed_api_key_env = "IPRAR_EMBED_API_KEY";
    int provider_max_attempts = 3;
    int provider_backoff_ms = 1000;
    int provider_timeout_s = 60;

    // [run] — process-level knobs, also settable by CLI flags
    int workers = 1;
    bool verbose = false;
    std::string mock_script;  // path; non-empty switches every provider to scripted mode

    /// Fills the path fields that default relative to data_dir.
    void resolve_paths();
    /// Throws ConfigError on any out-of-range knob.
    void validate() const;
    /// Full snapshot, section-keyed exactly like the file format.
    io::ordered_json to_json() const;
};

/// Parses the strict TOML subset used for config files: `[section]` headers,
/// `key = value` with string / integer / float / boolean / string-array
/// values, `#` comments. Unknown sections or keys are errors.
EngineConfig load_config(const std::filesystem::path& path);

/// Same parse, but leaves derived paths unfilled and skips validation, so
/// overrides can still retarget data_dir before resolution.
EngineConfig load_config_unresolved(const std::filesystem::path& path);

/// Built-in defaults, paths resolved.
EngineConfig default_config();

/// Applies one `section.key=value` override (the CLI's --set flag). The value
/// grammar matches the file format, with bare strings allowed for
/// convenience. Throws ConfigError on unknown keys or bad values.
void apply_override(EngineConfig& cfg, const std::string& assignment);

}  // namespace iprar::config
