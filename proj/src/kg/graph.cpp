#include "iprar/kg/kg.hpp"

#include "iprar/util/error.hpp"

#include <algorithm>
#include <cstdio>
#include <cstdlib>
#include <deque>
#include <functional>

namespace iprar::kg {

using io::ordered_json;

const char* to_string(EntityType t) {
    switch (t) {
        case EntityType::Gene: return "Gene";
        case EntityType::Protein: return "Protein";
        case EntityType::Drug: return "Drug";
        case EntityType::Disease: return "Disease";
        case EntityType::Paper: return "Paper";
        case EntityType::Method: return "Method";
        case EntityType::Dataset: return "Dataset";
        case EntityType::ResearchDirection: return "ResearchDirection";
    }
    return "?";
}

EntityType entity_type_from_string(const std::string& s) {
    static const std::map<std::string, EntityType> table = {
        {"Gene", EntityType::Gene},     {"Protein", EntityType::Protein},
        {"Drug", EntityType::Drug},     {"Disease", EntityType::Disease},
        {"Paper", EntityType::Paper},   {"Method", EntityType::Method},
        {"Dataset", EntityType::Dataset}, {"ResearchDirection", EntityType::ResearchDirection},
    };
    auto it = table.find(s);
    if (it == table.end()) throw InvalidArgumentError("unknown entity type: " + s);
    return it->second;
}

bool is_biomedical(EntityType t) {
    return t == EntityType::Gene || t == EntityType::Protein || t == EntityType::Drug ||
           t == EntityType::Disease;
}

RelationVocabulary::RelationVocabulary(const std::vector<std::string>& entity_relations)
    : entity_(entity_relations.begin(), entity_relations.end()) {
    if (entity_.empty()) throw InvalidArgumentError("relation vocabulary must not be empty");
}

const std::vector<std::string>& RelationVocabulary::doc_relations() {
    static const std::vector<std::string> rels = {
        "usesMethod",  "usesDataset",  "inDirection", "sharesEntity",
        "sharesMethod", "sharesDataset", "cites",
    };
    return rels;
}

bool RelationVocabulary::is_entity_relation(const std::string& relation) const {
    return entity_.count(relation) > 0;
}

bool RelationVocabulary::contains(const std::string& relation) const {
    if (is_entity_relation(relation)) return true;
    const auto& doc = doc_relations();
    return std::find(doc.begin(), doc.end(), relation) != doc.end();
}

MutationReport& MutationReport::operator+=(const MutationReport& o) {
    nodes_created += o.nodes_created;
    nodes_matched += o.nodes_matched;
    edges_created += o.edges_created;
    edges_merged += o.edges_merged;
    self_loops_skipped += o.self_loops_skipped;
    return *this;
}

namespace {

std::string counter_id(char prefix, long long n) {
    char buf[16];
    std::snprintf(buf, sizeof(buf), "%c%06lld", prefix, n);
    return buf;
}

}  // namespace

std::string Graph::node_key(EntityType label, const std::string& name) const {
    return std::string(to_string(label)) + "|" + name;
}

std::pair<std::string, bool> Graph::upsert_node(EntityType label, const std::string& name,
                                                const std::string& surface) {
    if (name.empty()) throw InvalidArgumentError("node name must be non-empty");
    const std::string key = node_key(label, name);
    auto it = node_key_.find(key);
    if (it != node_key_.end()) {
        GraphNode& node = nodes_.at(it->second);
        if (!surface.empty()) node.aliases.insert(surface);
        return {it->second, false};
    }
    GraphNode node;
    node.node_id = counter_id('n', next_node_++);
    node.label = label;
    node.name = name;
    if (!surface.empty()) node.aliases.insert(surface);
    const std::string id = node.node_id;
    nodes_.emplace(id, std::move(node));
    node_key_.emplace(key, id);
    return {id, true};
}

GraphEdge& Graph::upsert_edge(const std::string& src, const std::string& dst,
                              const std::string& relation, const std::string& provenance_doc,
                              MutationReport& report) {
    const std::string key = src + "|" + dst + "|" + relation;
    auto it = edge_key_.find(key);
    if (it != edge_key_.end()) {
        GraphEdge& edge = edges_.at(it->second);
        if (!provenance_doc.empty()) edge.provenance.insert(provenance_doc);
        ++report.edges_merged;
        return edge;
    }
    GraphEdge edge;
    edge.edge_id = counter_id('e', next_edge_++);
    edge.src = src;
    edge.dst = dst;
    edge.relation = relation;
    if (!provenance_doc.empty()) edge.provenance.insert(provenance_doc);
    const std::string id = edge.edge_id;
    auto [pos, inserted] = edges_.emplace(id, std::move(edge));
    edge_key_.emplace(key, id);
    ++report.edges_created;
    return pos->second;
}

MutationReport Graph::upsert_triples(const std::vector<Triple>& triples,
                                     const RelationVocabulary& vocab) {
    MutationReport report;
    for (const Triple& t : triples) {
        if (!vocab.contains(t.relation)) {
            throw InvalidArgumentError("relation '" + t.relation +
                                       "' is outside the configured vocabulary");
        }
        auto [src_id, src_created] =
            upsert_node(t.head.type, t.head.effective_name(), t.head.surface);
        (src_created ? report.nodes_created : report.nodes_matched) += 1;
        auto [dst_id, dst_created] =
            upsert_node(t.tail.type, t.tail.effective_name(), t.tail.surface);
        (dst_created ? report.nodes_created : report.nodes_matched) += 1;
        if (src_id == dst_id) {
            ++report.self_loops_skipped;
            continue;
        }
        upsert_edge(src_id, dst_id, t.relation, t.provenance_doc_id, report);
    }
    return report;
}

MutationReport Graph::link_documents(
    const std::map<std::string, std::vector<std::string>>& citations) {
    MutationReport report;

    // doc_id → Paper node_id, for the papers present in the graph.
    std::map<std::string, std::string> paper_nodes;
    for (const auto& [id, node] : nodes_) {
        if (node.label == EntityType::Paper) paper_nodes[node.name] = id;
    }

    auto link_pairs = [&](const std::set<std::string>& docs, const std::string& relation) {
        std::vector<std::string> sorted(docs.begin(), docs.end());
        for (std::size_t i = 0; i < sorted.size(); ++i) {
            auto a = paper_nodes.find(sorted[i]);
            if (a == paper_nodes.end()) continue;
            for (std::size_t j = i + 1; j < sorted.size(); ++j) {
                auto b = paper_nodes.find(sorted[j]);
                if (b == paper_nodes.end()) continue;
                GraphEdge& edge = upsert_edge(a->second, b->second, relation, "", report);
                edge.provenance.insert(sorted[i]);
                edge.provenance.insert(sorted[j]);
            }
        }
    };

    // Which papers assert each node, per stratum. For entity nodes that is
    // the union of provenance over incident edges; for Method/Dataset nodes
    // the sources of their usesMethod/usesDataset edges.
    std::map<std::string, std::set<std::string>> entity_docs;   // node_id → doc ids
    std::map<std::string, std::set<std::string>> method_docs;   // Method node_id → doc ids
    std::map<std::string, std::set<std::string>> dataset_docs;  // Dataset node_id → doc ids
    for (const auto& [id, edge] : edges_) {
        const GraphNode& src = nodes_.at(edge.src);
        const GraphNode& dst = nodes_.at(edge.dst);
        if (is_biomedical(src.label)) {
            entity_docs[edge.src].insert(edge.provenance.begin(), edge.provenance.end());
        }
        if (is_biomedical(dst.label)) {
            entity_docs[edge.dst].insert(edge.provenance.begin(), edge.provenance.end());
        }
        if (edge.relation == "usesMethod" && src.label == EntityType::Paper) {
            method_docs[edge.dst].insert(src.name);
        }
        if (edge.relation == "usesDataset" && src.label == EntityType::Paper) {
            dataset_docs[edge.dst].insert(src.name);
        }
    }

    for (const auto& [node_id, docs] : entity_docs) link_pairs(docs, "sharesEntity");
    for (const auto& [node_id, docs] : method_docs) link_pairs(docs, "sharesMethod");
    for (const auto& [node_id, docs] : dataset_docs) link_pairs(docs, "sharesDataset");

    for (const auto& [doc, cited_list] : citations) {
        auto a = paper_nodes.find(doc);
        if (a == paper_nodes.end()) continue;
        for (const std::string& cited : cited_list) {
            auto b = paper_nodes.find(cited);
            if (b == paper_nodes.end()) continue;
            if (a->second == b->second) continue;  // self-citation guards
            upsert_edge(a->second, b->second, "cites", doc, report);
        }
    }
    return report;
}

const GraphNode* Graph::find_node(EntityType label, const std::string& name) const {
    auto it = node_key_.find(node_key(label, name));
    return it == node_key_.end() ? nullptr : &nodes_.at(it->second);
}

const GraphNode& Graph::node(const std::string& node_id) const {
    auto it = nodes_.find(node_id);
    if (it == nodes_.end()) throw InvalidArgumentError("unknown node id: " + node_id);
    return it->second;
}

void Graph::rename_node(const std::string& node_id, const std::string& new_name) {
    auto it = nodes_.find(node_id);
    if (it == nodes_.end()) throw InvalidArgumentError("unknown node id: " + node_id);
    GraphNode& node = it->second;
    if (node.name == new_name) return;
    if (new_name.empty()) throw InvalidArgumentError("node name must be non-empty");

    const std::string old_key = node_key(node.label, node.name);
    const std::string new_key = node_key(node.label, new_name);
    auto clash = node_key_.find(new_key);

    if (clash == node_key_.end()) {
        node_key_.erase(old_key);
        node.aliases.insert(node.name);
        node.aliases.insert(new_name);
        node.name = new_name;
        node_key_.emplace(new_key, node_id);
        return;
    }

    // Merge `node` into the node that already owns the new name.
    const std::string keep_id = clash->second;
    GraphNode& keep = nodes_.at(keep_id);
    keep.aliases.insert(node.aliases.begin(), node.aliases.end());
    keep.aliases.insert(node.name);

    std::vector<std::string> doomed_edges;
    for (auto& [eid, edge] : edges_) {
        if (edge.src != node_id && edge.dst != node_id) continue;
        const std::string old_edge_key = edge.src + "|" + edge.dst + "|" + edge.relation;
        std::string src = edge.src == node_id ? keep_id : edge.src;
        std::string dst = edge.dst == node_id ? keep_id : edge.dst;
        if (src == dst) {  // re-pointing produced a self-loop; drop it
            edge_key_.erase(old_edge_key);
            doomed_edges.push_back(eid);
            continue;
        }
        const std::string new_edge_key = src + "|" + dst + "|" + edge.relation;
        auto dup = edge_key_.find(new_edge_key);
        if (dup != edge_key_.end() && dup->second != eid) {
            GraphEdge& survivor = edges_.at(dup->second);
            survivor.provenance.insert(edge.provenance.begin(), edge.provenance.end());
            edge_key_.erase(old_edge_key);
            doomed_edges.push_back(eid);
            continue;
        }
        edge_key_.erase(old_edge_key);
        edge.src = src;
        edge.dst = dst;
        edge_key_.emplace(new_edge_key, eid);
    }
    for (const std::string& eid : doomed_edges) edges_.erase(eid);
    node_key_.erase(old_key);
    nodes_.erase(node_id);
}

Subgraph Graph::query_subgraph(const std::vector<std::string>& seed_node_ids, int max_hops,
                               const std::set<std::string>& relation_filter) const {
    if (seed_node_ids.empty()) throw InvalidArgumentError("query_subgraph: no seed nodes");
    if (max_hops < 0) throw InvalidArgumentError("query_subgraph: max_hops must be >= 0");
    for (const auto& seed : seed_node_ids) node(seed);  // validates existence

    auto passes = [&](const GraphEdge& e) {
        return relation_filter.empty() || relation_filter.count(e.relation) > 0;
    };

    // Undirected adjacency over passing edges.
    std::map<std::string, std::vector<const GraphEdge*>> adjacency;
    for (const auto& [eid, edge] : edges_) {
        if (!passes(edge)) continue;
        adjacency[edge.src].push_back(&edge);
        adjacency[edge.dst].push_back(&edge);
    }

    std::map<std::string, int> hops;
    std::deque<std::string> frontier;
    for (const auto& seed : seed_node_ids) {
        if (hops.emplace(seed, 0).second) frontier.push_back(seed);
    }
    while (!frontier.empty()) {
        std::string current = frontier.front();
        frontier.pop_front();
        int hop = hops.at(current);
        if (hop == max_hops) continue;
        auto adj = adjacency.find(current);
        if (adj == adjacency.end()) continue;
        for (const GraphEdge* edge : adj->second) {
            const std::string& other = edge->src == current ? edge->dst : edge->src;
            if (hops.emplace(other, hop + 1).second) frontier.push_back(other);
        }
    }

    Subgraph result;
    result.hops = hops;
    std::vector<std::pair<int, std::string>> ordering;
    ordering.reserve(hops.size());
    for (const auto& [id, hop] : hops) ordering.emplace_back(hop, id);
    std::sort(ordering.begin(), ordering.end());
    for (const auto& [hop, id] : ordering) result.nodes.push_back(nodes_.at(id));
    for (const auto& [eid, edge] : edges_) {
        if (passes(edge) && hops.count(edge.src) && hops.count(edge.dst)) {
            result.edges.push_back(edge);
        }
    }
    return result;
}

std::vector<Path> Graph::query_paths(const std::string& src_node_id,
                                     const std::string& dst_node_id, int max_len) const {
    node(src_node_id);
    node(dst_node_id);
    if (src_node_id == dst_node_id) {
        throw InvalidArgumentError("query_paths: endpoints must differ");
    }
    if (max_len <= 0) throw InvalidArgumentError("query_paths: max_len must be positive");

    std::map<std::string, std::vector<const GraphEdge*>> out_edges;
    for (const auto& [eid, edge] : edges_) out_edges[edge.src].push_back(&edge);

    std::vector<Path> results;
    std::vector<std::string> node_stack{src_node_id};
    std::vector<std::string> rel_stack;
    std::set<std::string> on_path{src_node_id};

    std::function<void(const std::string&)> dfs = [&](const std::string& current) {
        if (static_cast<int>(rel_stack.size()) >= max_len) return;
        auto it = out_edges.find(current);
        if (it == out_edges.end()) return;
        for (const GraphEdge* edge : it->second) {
            if (on_path.count(edge->dst)) continue;
            node_stack.push_back(edge->dst);
            rel_stack.push_back(edge->relation);
            if (edge->dst == dst_node_id) {
                results.push_back({node_stack, rel_stack});
            } else {
                on_path.insert(edge->dst);
                dfs(edge->dst);
                on_path.erase(edge->dst);
            }
            node_stack.pop_back();
            rel_stack.pop_back();
        }
    };
    dfs(src_node_id);

    std::sort(results.begin(), results.end(), [](const Path& a, const Path& b) {
        if (a.node_ids.size() != b.node_ids.size()) return a.node_ids.size() < b.node_ids.size();
        if (a.node_ids != b.node_ids) return a.node_ids < b.node_ids;
        return a.relations < b.relations;
    });
    return results;
}

namespace {

constexpr int kGraphFormatVersion = 1;

ordered_json node_json(const GraphNode& n) {
    ordered_json j;
    j["node_id"] = n.node_id;
    j["label"] = to_string(n.label);
    j["name"] = n.name;
    j["aliases"] = std::vector<std::string>(n.aliases.begin(), n.aliases.end());
    return j;
}

ordered_json edge_json(const GraphEdge& e) {
    ordered_json j;
    j["src"] = e.src;
    j["dst"] = e.dst;
    j["relation"] = e.relation;
    j["provenance"] = std::vector<std::string>(e.provenance.begin(), e.provenance.end());
    return j;
}

std::string cypher_escape(const std::string& s) {
    std::string out;
    out.reserve(s.size());
    for (char c : s) {
        if (c == '\\' || c == '"') out += '\\';
        out += c;
    }
    return out;
}

std::string cypher_string_list(const std::set<std::string>& items) {
    std::string out = "[";
    bool first = true;
    for (const auto& item : items) {
        if (!first) out += ", ";
        out += "\"" + cypher_escape(item) + "\"";
        first = false;
    }
    out += "]";
    return out;
}

}  // namespace

void Graph::export_nodes_edges(const std::filesystem::path& dir) const {
    std::filesystem::create_directories(dir);
    std::string nodes_out;
    for (const auto& [id, n] : nodes_) {
        nodes_out += node_json(n).dump();
        nodes_out += '\n';
    }
    io::write_file(dir / "nodes.jsonl", nodes_out);

    std::string edges_out;
    for (const auto& [id, e] : edges_) {
        edges_out += edge_json(e).dump();
        edges_out += '\n';
    }
    io::write_file(dir / "edges.jsonl", edges_out);
}

void Graph::save(const std::filesystem::path& dir) const {
    export_nodes_edges(dir);
    ordered_json meta;
    meta["format_version"] = kGraphFormatVersion;
    meta["nodes"] = node_count();
    meta["edges"] = edge_count();
    io::write_file(dir / "graph_meta.json", meta.dump(2) + "\n");
}

Graph Graph::load(const std::filesystem::path& dir) {
    const auto nodes_path = dir / "nodes.jsonl";
    const auto edges_path = dir / "edges.jsonl";
    if (!std::filesystem::exists(nodes_path) || !std::filesystem::exists(edges_path)) {
        throw MissingArtifactError("graph not found under " + dir.string() +
                                   " (run `kg build` first)");
    }

    Graph g;
    long long max_node = 0;
    for (const auto& j : io::read_jsonl(nodes_path)) {
        GraphNode n;
        n.node_id = j.at("node_id").get<std::string>();
        n.label = entity_type_from_string(j.at("label").get<std::string>());
        n.name = j.at("name").get<std::string>();
        for (const auto& a : j.at("aliases")) n.aliases.insert(a.get<std::string>());
        const std::string key = g.node_key(n.label, n.name);
        if (g.node_key_.count(key) || g.nodes_.count(n.node_id)) {
            throw IoError("duplicate node in " + nodes_path.string() + ": " + n.node_id);
        }
        if (n.node_id.size() > 1) {
            max_node = std::max(max_node, std::strtoll(n.node_id.c_str() + 1, nullptr, 10));
        }
        g.node_key_.emplace(key, n.node_id);
        g.nodes_.emplace(n.node_id, std::move(n));
    }
    g.next_node_ = max_node + 1;

    for (const auto& j : io::read_jsonl(edges_path)) {
        GraphEdge e;
        e.edge_id = counter_id('e', g.next_edge_++);
        e.src = j.at("src").get<std::string>();
        e.dst = j.at("dst").get<std::string>();
        e.relation = j.at("relation").get<std::string>();
        for (const auto& p : j.at("provenance")) e.provenance.insert(p.get<std::string>());
        if (!g.nodes_.count(e.src) || !g.nodes_.count(e.dst)) {
            throw IoError("edge references unknown node in " + edges_path.string());
        }
        const std::string key = e.src + "|" + e.dst + "|" + e.relation;
        if (g.edge_key_.count(key)) {
            throw IoError("duplicate edge key in " + edges_path.string() + ": " + key);
        }
        const std::string id = e.edge_id;
        g.edge_key_.emplace(key, id);
        g.edges_.emplace(id, std::move(e));
    }

    const auto meta_path = dir / "graph_meta.json";
    if (std::filesystem::exists(meta_path)) {
        ordered_json meta = ordered_json::parse(io::read_file(meta_path));
        if (meta.at("format_version").get<int>() != kGraphFormatVersion) {
            throw IoError("unsupported graph format version in " + meta_path.string());
        }
        if (meta.at("nodes").get<std::size_t>() != g.node_count() ||
            meta.at("edges").get<std::size_t>() != g.edge_count()) {
            throw IoError("graph files disagree with " + meta_path.string());
        }
    }
    return g;
}

void Graph::export_graphscript(const std::filesystem::path& file) const {
    std::string out;
    for (const auto& [id, n] : nodes_) {
        out += "MERGE (:" + std::string(to_string(n.label)) + " {node_id: \"" +
               cypher_escape(n.node_id) + "\", name: \"" + cypher_escape(n.name) +
               "\", aliases: " + cypher_string_list(n.aliases) + "});\n";
    }
    for (const auto& [id, e] : edges_) {
        const GraphNode& src = nodes_.at(e.src);
        const GraphNode& dst = nodes_.at(e.dst);
        out += "MERGE (a:" + std::string(to_string(src.label)) + " {node_id: \"" +
               cypher_escape(e.src) + "\"})-[:" + e.relation +
               " {provenance: " + cypher_string_list(e.provenance) + "}]->(b:" +
               std::string(to_string(dst.label)) + " {node_id: \"" + cypher_escape(e.dst) +
               "\"});\n";
    }
    io::write_file(file, out);
}

bool Graph::equivalent(const Graph& other) const {
    if (node_count() != other.node_count() || edge_count() != other.edge_count()) return false;
    for (const auto& [id, n] : nodes_) {
        auto it = other.nodes_.find(id);
        if (it == other.nodes_.end()) return false;
        const GraphNode& o = it->second;
        if (o.label != n.label || o.name != n.name || o.aliases != n.aliases) return false;
    }
    // Edge identity is the (src, dst, relation) key plus provenance; ids may
    // be renumbered by an import.
    auto edge_signature = [](const Graph& g) {
        std::map<std::string, std::set<std::string>> sig;
        for (const auto& [id, e] : g.edges_) {
            sig[e.src + "|" + e.dst + "|" + e.relation] = e.provenance;
        }
        return sig;
    };
    return edge_signature(*this) == edge_signature(other);
}

}  // namespace iprar::kg
