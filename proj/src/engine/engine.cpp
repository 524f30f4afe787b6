#include "iprar/engine/engine.hpp"

#include "iprar/providers/http_provider.hpp"
#include "iprar/util/error.hpp"
#include "iprar/util/text.hpp"

#include <cstdio>
#include <utility>

namespace iprar::engine {

namespace fs = std::filesystem;

Engine::Engine(config::EngineConfig cfg)
    : cfg_(std::move(cfg)), prompts_(prompts::PromptLibrary::builtin()) {
    cfg_.validate();
    if (!cfg_.prompt_dir.empty()) {
        prompts_ = prompts::PromptLibrary::with_overrides(cfg_.prompt_dir);
    }
    if (!cfg_.mock_script.empty()) {
        script_ = std::make_shared<providers::ProviderScript>(
            providers::ProviderScript::load(cfg_.mock_script));
    }
}

providers::Generator& Engine::generator_for(providers::Role role) {
    auto& slot = generators_[static_cast<int>(role)];
    if (!slot) {
        if (script_) {
            slot = std::make_unique<providers::ScriptedGenerator>(script_);
        } else if (!cfg_.llm_base_url.empty()) {
            providers::HttpBackendConfig hc;
            hc.base_url = cfg_.llm_base_url;
            hc.model = cfg_.llm_model;
            hc.api_key_env = cfg_.llm_api_key_env;
            hc.max_attempts = cfg_.provider_max_attempts;
            hc.backoff_ms = cfg_.provider_backoff_ms;
            hc.timeout_s = cfg_.provider_timeout_s;
            slot = std::make_unique<providers::HttpGenerator>(hc);
        } else {
            slot = std::make_unique<providers::UnconfiguredGenerator>();
        }
    }
    return *slot;
}

providers::Embedder& Engine::embedder() {
    if (!embedder_) {
        // A mock script pins the run offline, so it also forces the hashing
        // embedder regardless of the configured backend.
        if (script_ || cfg_.embedder_backend == "hash") {
            embedder_ = std::make_unique<providers::HashingEmbedder>(
                static_cast<std::size_t>(cfg_.embed_dims));
        } else {
            providers::HttpBackendConfig hc;
            hc.base_url = cfg_.embed_base_url;
            hc.model = cfg_.embed_model;
            hc.api_key_env = cfg_.embed_api_key_env;
            hc.max_attempts = cfg_.provider_max_attempts;
            hc.backoff_ms = cfg_.provider_backoff_ms;
            hc.timeout_s = cfg_.provider_timeout_s;
            embedder_ = std::make_unique<providers::HttpEmbedder>(
                hc, static_cast<std::size_t>(cfg_.embed_dims));
        }
    }
    return *embedder_;
}

corpus::Corpus& Engine::corpus() {
    if (!corpus_) {
        if (!fs::exists(cfg_.corpus_file)) {
            throw MissingArtifactError("corpus file not found at " + cfg_.corpus_file +
                                       " (run `ingest` first)");
        }
        corpus_ = corpus::Corpus::load(cfg_.corpus_file);
    }
    return *corpus_;
}

corpus::ChunkStore& Engine::chunks() {
    if (!chunks_) {
        if (!fs::exists(cfg_.chunks_file)) {
            throw MissingArtifactError("chunk store not found at " + cfg_.chunks_file +
                                       " (run `index` first)");
        }
        chunks_ = corpus::ChunkStore::load(cfg_.chunks_file);
    }
    return *chunks_;
}

corpus::IngestReport Engine::ingest(const fs::path& source, corpus::CorpusFormat format) {
    corpus::IngestReport report;
    corpus::Corpus ingested = corpus::Corpus::ingest(source, format, report);
    ingested.save(cfg_.corpus_file);
    corpus_ = std::move(ingested);
    return report;
}

void Engine::build_indexes() {
    corpus::ChunkPolicy policy;
    policy.target_words = cfg_.chunk_target_words;
    policy.overlap_words = cfg_.chunk_overlap_words;
    policy.paragraph_aligned = cfg_.chunk_paragraph_aligned;

    corpus::ChunkStore store(corpus().chunk_all(policy));
    store.save(cfg_.chunks_file);
    chunks_ = std::move(store);

    auto abstracts = chunks_->at_level(corpus::ChunkLevel::Abstract);
    auto fulltexts = chunks_->at_level(corpus::ChunkLevel::FullText);

    abstract_vectors_ =
        index::VectorIndex::build(abstracts, corpus::ChunkLevel::Abstract, embedder());
    fulltext_vectors_ =
        index::VectorIndex::build(fulltexts, corpus::ChunkLevel::FullText, embedder());
    abstract_keywords_ = index::KeywordIndex::build(abstracts, corpus::ChunkLevel::Abstract);
    fulltext_keywords_ = index::KeywordIndex::build(fulltexts, corpus::ChunkLevel::FullText);

    abstract_vectors_->save(cfg_.index_dir);
    fulltext_vectors_->save(cfg_.index_dir);
    abstract_keywords_->save(cfg_.index_dir);
    fulltext_keywords_->save(cfg_.index_dir);
}

generation::PipelineHandles Engine::pipeline_handles() {
    if (!abstract_vectors_) {
        abstract_vectors_ = index::VectorIndex::load(cfg_.index_dir, corpus::ChunkLevel::Abstract);
        fulltext_vectors_ = index::VectorIndex::load(cfg_.index_dir, corpus::ChunkLevel::FullText);
        abstract_keywords_ =
            index::KeywordIndex::load(cfg_.index_dir, corpus::ChunkLevel::Abstract);
        fulltext_keywords_ =
            index::KeywordIndex::load(cfg_.index_dir, corpus::ChunkLevel::FullText);
    }
    generation::PipelineHandles handles;
    handles.indexes.abstract_vectors = &*abstract_vectors_;
    handles.indexes.fulltext_vectors = &*fulltext_vectors_;
    handles.indexes.abstract_keywords = &*abstract_keywords_;
    handles.indexes.fulltext_keywords = &*fulltext_keywords_;
    handles.chunks = &chunks();
    handles.reasoner = &generator_for(providers::Role::Reasoner);
    handles.deep_thinker = &generator_for(providers::Role::DeepThinker);
    handles.embedder = &embedder();
    handles.prompts = &prompts_;
    return handles;
}

generation::PipelineParams Engine::pipeline_params() const {
    generation::PipelineParams params;
    params.k_per_channel = static_cast<std::size_t>(cfg_.k_per_channel);
    params.weights = {cfg_.w_s, cfg_.w_m, cfg_.w_r};
    params.relevance_target = cfg_.relevance_target;
    params.support_scale_max = cfg_.support_scale_max;
    params.support_threshold = cfg_.support_threshold;
    return params;
}

fs::path Engine::trace_path(const std::string& question) const {
    char name[32];
    std::snprintf(name, sizeof(name), "trace_%016llx.json",
                  static_cast<unsigned long long>(text::fnv1a64(question)));
    return fs::path(cfg_.trace_dir) / name;
}

std::pair<generation::AnswerTrace, fs::path> Engine::ask(const std::string& question) {
    generation::PipelineHandles handles = pipeline_handles();
    const fs::path path = trace_path(question);
    try {
        generation::AnswerTrace trace = generation::answer_pipeline(
            question, handles, pipeline_params(), cfg_.to_json());
        io::write_file(path, trace.to_json().dump(2) + "\n");
        return {std::move(trace), path};
    } catch (const generation::PipelineError& e) {
        io::write_file(path, e.trace().to_json().dump(2) + "\n");
        throw;
    }
}

std::pair<eval::MetricReport, fs::path> Engine::run_eval(const fs::path& dataset_path) {
    std::vector<eval::EvalRecord> dataset = eval::load_dataset(dataset_path);
    generation::PipelineHandles handles = pipeline_handles();

    // With neither a script nor an HTTP endpoint there is no judge to call;
    // retrieval metrics still run.
    providers::Generator* judge = nullptr;
    if (script_ || !cfg_.llm_base_url.empty()) {
        judge = &generator_for(providers::Role::Judge);
    }
    const eval::JudgeMode mode = cfg_.judge_mode == "exact_match" ? eval::JudgeMode::ExactMatch
                                                                  : eval::JudgeMode::FivePoint;

    eval::MetricReport report =
        eval::run_eval(dataset, handles, pipeline_params(), judge, mode, cfg_.gmap_epsilon,
                       cfg_.workers, cfg_.to_json());

    const std::string stem = dataset_path.stem().string();
    const fs::path json_path = fs::path(cfg_.report_dir) / (stem + "_report.json");
    io::write_file(json_path, report.to_json(cfg_.to_json()).dump(2) + "\n");
    io::write_file(fs::path(cfg_.report_dir) / (stem + "_report.txt"), report.to_table());
    return {std::move(report), json_path};
}

kg::BuildReport Engine::kg_build() {
    corpus::Corpus& docs = corpus();

    std::optional<kg::Lexicon> disease_drug;
    std::optional<kg::Lexicon> gene_protein;
    if (!cfg_.lexicon_disease_drug.empty()) {
        disease_drug = kg::Lexicon::load(cfg_.lexicon_disease_drug, embedder());
    }
    if (!cfg_.lexicon_gene_protein.empty()) {
        gene_protein = kg::Lexicon::load(cfg_.lexicon_gene_protein, embedder());
    }

    kg::BuildOptions options{kg::RelationVocabulary(cfg_.kg_relations)};
    options.normalize_top_k = cfg_.normalize_top_k;
    options.merge_threshold = cfg_.merge_threshold;
    options.canon_refine = cfg_.canon_refine;
    options.disease_drug = disease_drug ? &*disease_drug : nullptr;
    options.gene_protein = gene_protein ? &*gene_protein : nullptr;

    kg::Graph graph;
    kg::BuildReport report =
        kg::build_graph(graph, docs, generator_for(providers::Role::Extractor), embedder(),
                        prompts_, options);
    graph.save(cfg_.graph_dir);
    return report;
}

fs::path Engine::kg_export(const std::string& format) {
    kg::Graph graph = kg::Graph::load(cfg_.graph_dir);
    const fs::path out_dir = fs::path(cfg_.graph_dir) / "export";
    if (format == "jsonl") {
        graph.export_nodes_edges(out_dir);
        return out_dir;
    }
    if (format == "graphscript") {
        const fs::path file = out_dir / "graph.cypher";
        graph.export_graphscript(file);
        return file;
    }
    throw InvalidArgumentError("unknown export format '" + format +
                               "' (expected jsonl or graphscript)");
}

}  // namespace iprar::engine
