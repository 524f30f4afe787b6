// Command-line front end: one subcommand per pipeline stage, a config file
// with flag overrides, and machine-parseable one-line errors.

#include "iprar/engine/engine.hpp"
#include "iprar/util/error.hpp"

#include <CLI11.hpp>

#include <cstdio>
#include <iostream>
#include <string>
#include <vector>

namespace {

iprar::corpus::CorpusFormat parse_format(const std::string& s) {
    if (s == "auto") return iprar::corpus::CorpusFormat::Auto;
    if (s == "jsonl") return iprar::corpus::CorpusFormat::Jsonl;
    if (s == "dir") return iprar::corpus::CorpusFormat::Directory;
    throw iprar::InvalidArgumentError("unknown corpus format '" + s + "'");
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"iprar: corpus question answering through multi-channel retrieval, "
                 "staged reasoning, and a document knowledge graph"};
    app.require_subcommand(1);

    std::string config_path;
    std::string mock_script;
    int workers = 0;
    bool verbose = false;
    std::vector<std::string> overrides;
    app.add_option("--config", config_path, "Config file (strict TOML subset)");
    auto* mock_opt = app.add_option("--mock-script", mock_script,
                                    "Scripted-provider replies; forces offline mode");
    auto* workers_opt = app.add_option("--workers", workers, "Worker-thread cap");
    app.add_flag("--verbose", verbose, "Progress details on stderr");
    app.add_option("--set", overrides, "Config override, section.key=value (repeatable)");

    auto* cmd_ingest = app.add_subcommand("ingest", "Validate documents and persist the corpus");
    std::string source;
    std::string format = "auto";
    cmd_ingest->add_option("source", source, "JSONL file or directory of documents")->required();
    cmd_ingest->add_option("--format", format, "auto | jsonl | dir");

    auto* cmd_index = app.add_subcommand("index", "Chunk the corpus and build all indexes");

    auto* cmd_ask = app.add_subcommand("ask", "Answer one question; print it and write a trace");
    std::string question;
    cmd_ask->add_option("question", question, "The question text")->required();

    auto* cmd_eval = app.add_subcommand("eval", "Score the pipeline on a benchmark dataset");
    std::string dataset;
    cmd_eval->add_option("dataset", dataset, "Benchmark JSONL file")->required();

    auto* cmd_kg = app.add_subcommand("kg", "Knowledge-graph construction and export");
    cmd_kg->require_subcommand(1);
    auto* cmd_kg_build = cmd_kg->add_subcommand("build", "Extract the dual-layer graph");
    auto* cmd_kg_export = cmd_kg->add_subcommand("export", "Write graph export files");
    std::string export_format = "jsonl";
    cmd_kg_export->add_option("--format", export_format, "jsonl | graphscript");

    CLI11_PARSE(app, argc, argv);

    try {
        iprar::config::EngineConfig cfg;
        if (!config_path.empty()) cfg = iprar::config::load_config_unresolved(config_path);
        for (const std::string& assignment : overrides) {
            iprar::config::apply_override(cfg, assignment);
        }
        // Flags outrank both the file and --set.
        if (mock_opt->count() > 0) cfg.mock_script = mock_script;
        if (workers_opt->count() > 0) cfg.workers = workers;
        if (verbose) cfg.verbose = true;
        cfg.resolve_paths();
        cfg.validate();

        iprar::engine::Engine engine(cfg);

        if (*cmd_ingest) {
            iprar::corpus::IngestReport report = engine.ingest(source, parse_format(format));
            std::cout << "ingested " << report.accepted << " documents ("
                      << report.rejections.size() << " rejected) -> " << cfg.corpus_file << "\n";
            for (const auto& r : report.rejections) {
                std::cerr << "rejected " << (r.doc_id.empty() ? r.where : r.doc_id) << ": "
                          << r.reason << "\n";
            }
        } else if (*cmd_index) {
            engine.build_indexes();
            std::cout << "indexed -> " << cfg.index_dir << "\n";
        } else if (*cmd_ask) {
            try {
                auto [trace, path] = engine.ask(question);
                if (cfg.verbose) std::cerr << "trace written to " << path.string() << "\n";
                std::cout << trace.final_answer << "\n";
            } catch (const iprar::generation::PipelineError& e) {
                // ask() already wrote the partial trace.
                if (cfg.verbose) {
                    std::cerr << "trace written to " << engine.trace_path(question).string()
                              << "\n";
                }
                throw;
            }
        } else if (*cmd_eval) {
            auto [report, path] = engine.run_eval(dataset);
            std::cout << report.to_table();
            std::cout << "report written to " << path.string() << "\n";
        } else if (*cmd_kg_build) {
            iprar::kg::BuildReport report = engine.kg_build();
            std::cout << "graph built from " << report.docs_processed << " documents: "
                      << report.mutations.nodes_created << " nodes, "
                      << report.mutations.edges_created << " edges -> " << cfg.graph_dir << "\n";
            if (cfg.verbose) {
                for (const auto& w : report.warnings) std::cerr << "warning: " << w << "\n";
            }
        } else if (*cmd_kg_export) {
            std::filesystem::path out = engine.kg_export(export_format);
            std::cout << "exported " << export_format << " -> " << out.string() << "\n";
        }
        return 0;
    } catch (const iprar::Error& e) {
        std::cerr << "error: " << e.category() << ": " << e.what() << "\n";
        return std::string(e.category()) == "missing_artifact" ? 2 : 1;
    } catch (const std::exception& e) {
        std::cerr << "error: internal: " << e.what() << "\n";
        return 1;
    }
}
