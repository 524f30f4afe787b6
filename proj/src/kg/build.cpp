#include "iprar/kg/kg.hpp"

#include "iprar/util/error.hpp"
#include "iprar/util/text.hpp"

#include <algorithm>
#include <optional>

namespace iprar::kg {

using io::ordered_json;
using providers::Exchange;

namespace {

std::string join(const std::vector<std::string>& items, const std::string& sep) {
    std::string out;
    for (std::size_t i = 0; i < items.size(); ++i) {
        if (i > 0) out += sep;
        out += items[i];
    }
    return out;
}

std::optional<ordered_json> parse_json_array(const std::string& reply) {
    ordered_json j = ordered_json::parse(reply, nullptr, false);
    if (j.is_discarded() || !j.is_array()) return std::nullopt;
    return j;
}

std::optional<ordered_json> parse_json_object(const std::string& reply) {
    ordered_json j = ordered_json::parse(reply, nullptr, false);
    if (j.is_discarded() || !j.is_object()) return std::nullopt;
    return j;
}

}  // namespace

ExtractionResult extract_triples(const corpus::Document& doc, providers::Generator& extractor,
                                 const prompts::PromptLibrary& prompts,
                                 const RelationVocabulary& vocab, std::vector<Exchange>* log) {
    if (doc.abstract_text.empty()) {
        throw InvalidArgumentError("extract_triples: document " + doc.doc_id +
                                   " has no abstract");
    }
    std::vector<std::string> relations(vocab.entity_relations().begin(),
                                       vocab.entity_relations().end());
    auto req = prompts.make_request(
        "extract_triples", doc.doc_id,
        {{"abstract", doc.abstract_text}, {"relations", join(relations, ", ")}});
    ordered_json items = providers::request_parsed<ordered_json>(
        extractor, std::move(req), parse_json_array,
        "Reply with exactly one JSON array of objects with keys h, ht, r, t, tt and nothing "
        "else.",
        log);

    ExtractionResult result;
    int index = 0;
    for (const auto& item : items) {
        ++index;
        auto warn = [&](const std::string& why) {
            result.warnings.push_back(doc.doc_id + ": triple " + std::to_string(index) +
                                      " dropped: " + why);
        };
        if (!item.is_object() || !item.contains("h") || !item.contains("ht") ||
            !item.contains("r") || !item.contains("t") || !item.contains("tt") ||
            !item["h"].is_string() || !item["ht"].is_string() || !item["r"].is_string() ||
            !item["t"].is_string() || !item["tt"].is_string()) {
            warn("malformed item");
            continue;
        }
        const std::string h = item["h"].get<std::string>();
        const std::string ht = item["ht"].get<std::string>();
        const std::string r = item["r"].get<std::string>();
        const std::string t = item["t"].get<std::string>();
        const std::string tt = item["tt"].get<std::string>();
        if (h.empty() || t.empty()) {
            warn("empty entity name");
            continue;
        }
        EntityType head_type, tail_type;
        try {
            head_type = entity_type_from_string(ht);
            tail_type = entity_type_from_string(tt);
        } catch (const InvalidArgumentError&) {
            warn("unknown entity type '" + ht + "'/'" + tt + "'");
            continue;
        }
        if (!is_biomedical(head_type) || !is_biomedical(tail_type)) {
            warn("entity type outside Gene/Protein/Drug/Disease");
            continue;
        }
        if (!vocab.is_entity_relation(r)) {
            warn("relation '" + r + "' outside the vocabulary");
            continue;
        }
        if (head_type == tail_type && h == t) {
            warn("self-loop");
            continue;
        }
        Triple triple;
        triple.head = {h, head_type, std::nullopt, std::nullopt, false};
        triple.relation = r;
        triple.tail = {t, tail_type, std::nullopt, std::nullopt, false};
        triple.provenance_doc_id = doc.doc_id;
        result.triples.push_back(std::move(triple));
    }
    return result;
}

ExtractionResult extract_doc_meta(const corpus::Document& doc, providers::Generator& extractor,
                                  const prompts::PromptLibrary& prompts,
                                  std::vector<Exchange>* log) {
    if (!doc.has_text()) {
        throw InvalidArgumentError("extract_doc_meta: document " + doc.doc_id + " has no text");
    }
    auto req = prompts.make_request("extract_doc_meta", doc.doc_id,
                                    {{"title", doc.title}, {"abstract", doc.abstract_text}});
    ordered_json obj = providers::request_parsed<ordered_json>(
        extractor, std::move(req), parse_json_object,
        R"(Reply with exactly one JSON object of the form {"methods": [], "datasets": [], "directions": []} and nothing else.)",
        log);

    ExtractionResult result;
    auto collect = [&](const char* field, const std::string& relation, EntityType type) {
        if (!obj.contains(field)) return;
        if (!obj[field].is_array()) {
            result.warnings.push_back(doc.doc_id + ": '" + field + "' is not an array; ignored");
            return;
        }
        for (const auto& item : obj[field]) {
            if (!item.is_string() || item.get<std::string>().empty()) {
                result.warnings.push_back(doc.doc_id + ": non-string entry in '" + field +
                                          "' dropped");
                continue;
            }
            Triple triple;
            triple.head = {doc.doc_id, EntityType::Paper, std::nullopt, std::nullopt, false};
            triple.relation = relation;
            triple.tail = {item.get<std::string>(), type, std::nullopt, std::nullopt, false};
            triple.provenance_doc_id = doc.doc_id;
            result.triples.push_back(std::move(triple));
        }
    };
    collect("methods", "usesMethod", EntityType::Method);
    collect("datasets", "usesDataset", EntityType::Dataset);
    collect("directions", "inDirection", EntityType::ResearchDirection);
    return result;
}

Lexicon Lexicon::load(const std::filesystem::path& path, providers::Embedder& embedder) {
    if (!std::filesystem::exists(path)) {
        throw IoError("lexicon file not found: " + path.string());
    }
    Lexicon lex;
    std::string contents = io::read_file(path);
    std::size_t start = 0;
    std::size_t lineno = 0;
    std::set<std::string> seen;
    while (start < contents.size()) {
        std::size_t nl = contents.find('\n', start);
        std::string line = contents.substr(
            start, nl == std::string::npos ? std::string::npos : nl - start);
        start = nl == std::string::npos ? contents.size() : nl + 1;
        ++lineno;
        std::string stripped(text::trim(line));
        if (stripped.empty() || stripped[0] == '#') continue;
        auto tab = stripped.find('\t');
        Term term;
        if (tab == std::string::npos) {
            term.term = stripped;
            term.id = stripped;
        } else {
            term.term = std::string(text::trim(stripped.substr(0, tab)));
            term.id = std::string(text::trim(stripped.substr(tab + 1)));
            if (term.id.empty()) term.id = term.term;
        }
        if (term.term.empty()) {
            throw IoError(path.string() + ":" + std::to_string(lineno) + ": empty term");
        }
        if (!seen.insert(term.term).second) continue;  // keep the first occurrence
        term.vec = embedder.embed(term.term);
        lex.terms_.push_back(std::move(term));
    }
    return lex;
}

std::vector<const Lexicon::Term*> Lexicon::top_k(const providers::EmbeddingVector& query,
                                                 int k) const {
    if (k <= 0) throw InvalidArgumentError("lexicon top_k: k must be positive");
    std::vector<std::pair<double, const Term*>> scored;
    scored.reserve(terms_.size());
    for (const Term& t : terms_) {
        scored.emplace_back(providers::cosine_similarity(query, t.vec), &t);
    }
    std::sort(scored.begin(), scored.end(), [](const auto& a, const auto& b) {
        if (a.first != b.first) return a.first > b.first;
        return a.second->term < b.second->term;
    });
    if (static_cast<int>(scored.size()) > k) scored.resize(k);
    std::vector<const Term*> out;
    out.reserve(scored.size());
    for (const auto& [cos, term] : scored) out.push_back(term);
    return out;
}

EntityRef normalize_entity(const EntityRef& ref, const Lexicon& lexicon,
                           providers::Embedder& embedder, providers::Generator& extractor,
                           const prompts::PromptLibrary& prompts, int k,
                           std::vector<Exchange>* log) {
    if (lexicon.empty()) throw InvalidArgumentError("normalize_entity: empty lexicon");
    if (ref.surface.empty()) throw InvalidArgumentError("normalize_entity: empty surface form");

    providers::EmbeddingVector query = embedder.embed(ref.surface);
    std::vector<const Lexicon::Term*> candidates = lexicon.top_k(query, k);

    std::string candidate_block;
    for (std::size_t i = 0; i < candidates.size(); ++i) {
        if (i > 0) candidate_block += '\n';
        candidate_block += std::to_string(i + 1) + ". " + candidates[i]->term + " (id: " +
                           candidates[i]->id + ")";
    }

    auto parse_pick = [&candidates](const std::string& reply)
        -> std::optional<const Lexicon::Term*> {
        std::string trimmed(text::trim(reply));
        if (trimmed == "NONE") return static_cast<const Lexicon::Term*>(nullptr);
        for (const Lexicon::Term* t : candidates) {
            if (t->term == trimmed) return t;
        }
        return std::nullopt;
    };

    auto req = prompts.make_request(
        "normalize_entity", ref.surface + "||" + to_string(ref.type),
        {{"surface", ref.surface},
         {"entity_type", to_string(ref.type)},
         {"candidates", candidate_block}});
    const Lexicon::Term* pick = providers::request_parsed<const Lexicon::Term*>(
        extractor, std::move(req), parse_pick,
        "Reply with one of the listed candidate terms exactly as written, or NONE.", log);

    EntityRef out = ref;
    if (pick) {
        out.canonical_id = pick->id;
        out.canonical_name = pick->term;
        out.non_canonical = false;
    } else {
        out.non_canonical = true;
    }
    return out;
}

std::string CanonRegistry::canonicalize_incremental(const std::string& name,
                                                    providers::Embedder& embedder,
                                                    double threshold) {
    if (name.empty()) throw InvalidArgumentError("canonicalize: empty name");

    // Sticky merges: a name that is already somebody's alias stays there.
    if (auto it = alias_to_entry_.find(name); it != alias_to_entry_.end()) {
        return entries_[it->second].canonical_name;
    }

    providers::EmbeddingVector vec = embedder.embed(name);
    double best = -2.0;
    std::size_t best_idx = 0;
    for (std::size_t i = 0; i < entries_.size(); ++i) {
        double cos = providers::cosine_similarity(vec, entries_[i].vec);
        if (cos > best) {
            best = cos;
            best_idx = i;
        }
    }
    if (!entries_.empty() && best > threshold) {
        entries_[best_idx].aliases.insert(name);
        alias_to_entry_[name] = best_idx;
        return entries_[best_idx].canonical_name;
    }
    Entry entry;
    entry.canonical_name = name;
    entry.vec = std::move(vec);
    entry.aliases.insert(name);
    entries_.push_back(std::move(entry));
    alias_to_entry_[name] = entries_.size() - 1;
    return name;
}

const std::string* CanonRegistry::lookup_alias(const std::string& alias) const {
    auto it = alias_to_entry_.find(alias);
    return it == alias_to_entry_.end() ? nullptr : &entries_[it->second].canonical_name;
}

std::vector<std::pair<std::string, std::string>> CanonRegistry::refine(
    providers::Generator& extractor, const prompts::PromptLibrary& prompts,
    std::vector<Exchange>* log) {
    std::vector<std::pair<std::string, std::string>> renames;
    for (Entry& entry : entries_) {
        if (entry.aliases.size() < 2) continue;
        std::string alias_block;
        for (const auto& alias : entry.aliases) {
            if (!alias_block.empty()) alias_block += '\n';
            alias_block += "- " + alias;
        }
        auto req = prompts.make_request(
            "canon_refine", entry.canonical_name,
            {{"name", entry.canonical_name}, {"aliases", alias_block}});
        std::string reply = extractor.generate(req);
        if (log) {
            log->push_back(
                {providers::to_string(req.role), req.template_id, req.key, req.prompt, reply});
        }
        std::string choice(text::trim(reply));
        if (choice == entry.canonical_name || entry.aliases.count(choice) == 0) continue;
        renames.emplace_back(entry.canonical_name, choice);
        entry.canonical_name = choice;
    }
    return renames;
}

BuildReport build_graph(Graph& graph, const corpus::Corpus& corpus,
                        providers::Generator& extractor, providers::Embedder& embedder,
                        const prompts::PromptLibrary& prompts, const BuildOptions& options,
                        std::vector<Exchange>* log) {
    BuildReport report;

    std::vector<const corpus::Document*> docs;
    for (const auto& doc : corpus.documents()) docs.push_back(&doc);
    std::sort(docs.begin(), docs.end(), [](const corpus::Document* a, const corpus::Document* b) {
        return a->doc_id < b->doc_id;
    });

    auto lexicon_for = [&](EntityType type) -> const Lexicon* {
        if (type == EntityType::Drug || type == EntityType::Disease) return options.disease_drug;
        if (type == EntityType::Gene || type == EntityType::Protein) return options.gene_protein;
        return nullptr;
    };

    // One registry per document-level type: methods never merge into
    // datasets just because the names embed similarly.
    CanonRegistry method_registry, dataset_registry, direction_registry;
    auto registry_for = [&](EntityType type) -> CanonRegistry& {
        switch (type) {
            case EntityType::Method: return method_registry;
            case EntityType::Dataset: return dataset_registry;
            default: return direction_registry;
        }
    };

    std::map<std::string, std::vector<std::string>> citations;

    for (const corpus::Document* doc : docs) {
        ++report.docs_processed;
        citations[doc->doc_id] = doc->cited_doc_ids;
        auto [paper_id, paper_created] =
            graph.upsert_node(EntityType::Paper, doc->doc_id, doc->doc_id);
        (void)paper_id;
        if (paper_created) {
            ++report.mutations.nodes_created;
        } else {
            ++report.mutations.nodes_matched;
        }

        if (!doc->abstract_text.empty()) {
            ExtractionResult extracted =
                extract_triples(*doc, extractor, prompts, options.vocab, log);
            report.warnings.insert(report.warnings.end(), extracted.warnings.begin(),
                                   extracted.warnings.end());
            for (Triple& t : extracted.triples) {
                for (EntityRef* ref : {&t.head, &t.tail}) {
                    const Lexicon* lex = lexicon_for(ref->type);
                    if (lex && !lex->empty()) {
                        *ref = normalize_entity(*ref, *lex, embedder, extractor, prompts,
                                                options.normalize_top_k, log);
                    }
                }
            }
            report.entity_triples += static_cast<int>(extracted.triples.size());
            report.mutations += graph.upsert_triples(extracted.triples, options.vocab);
        }

        if (doc->has_text()) {
            ExtractionResult meta = extract_doc_meta(*doc, extractor, prompts, log);
            report.warnings.insert(report.warnings.end(), meta.warnings.begin(),
                                   meta.warnings.end());
            for (Triple& t : meta.triples) {
                CanonRegistry& registry = registry_for(t.tail.type);
                std::string canonical = registry.canonicalize_incremental(
                    t.tail.surface, embedder, options.merge_threshold);
                t.tail.canonical_name = canonical;
            }
            report.meta_triples += static_cast<int>(meta.triples.size());
            report.mutations += graph.upsert_triples(meta.triples, options.vocab);
        }
    }

    if (options.canon_refine) {
        struct TypedRegistry {
            CanonRegistry* registry;
            EntityType type;
        };
        for (auto [registry, type] : {TypedRegistry{&method_registry, EntityType::Method},
                                      TypedRegistry{&dataset_registry, EntityType::Dataset},
                                      TypedRegistry{&direction_registry,
                                                    EntityType::ResearchDirection}}) {
            for (auto& [old_name, new_name] : registry->refine(extractor, prompts, log)) {
                if (const GraphNode* node = graph.find_node(type, old_name)) {
                    graph.rename_node(node->node_id, new_name);
                }
            }
        }
    }

    report.mutations += graph.link_documents(citations);
    return report;
}

}  // namespace iprar::kg
