#include "iprar/prompts/prompts.hpp"

#include "iprar/util/error.hpp"
#include "iprar/util/io.hpp"

#include <algorithm>
#include <utility>

namespace iprar::prompts {

using providers::Role;

namespace {

std::map<std::string, Template> make_builtin() {
    std::map<std::string, Template> t;

    t["pre_retrieval"] = {
        Role::Reasoner,
        "You are a biomedical research assistant preparing a literature search.",
        R"PROMPT(Question: {{question}}

Before any retrieval, reason about the question and produce search material.
Reply with exactly one JSON object and nothing else:
{"keywords": ["..."], "synonyms": {"<keyword>": ["..."]}, "virtual_answer": "..."}

Rules:
- keywords: the key biomedical entities and concepts in the question (non-empty).
- synonyms: optional alternative names per keyword; every key must be one of the keywords.
- virtual_answer: a short hypothetical answer written as if you already knew it, used to find passages that resemble the answer.)PROMPT"};

    t["relevance_check"] = {
        Role::Reasoner,
        "You screen retrieved passages for a biomedical question.",
        R"PROMPT(Question: {{question}}

Passage [{{chunk_id}}]:
{{chunk}}

Does this passage contain information that helps answer the question?
Reply with RELEVANT or IRRELEVANT on the first line, followed by a one-sentence rationale.)PROMPT"};

    t["draft_answer"] = {
        Role::Reasoner,
        "You answer biomedical questions strictly from the provided passages.",
        R"PROMPT(Question: {{question}}

Passages:
{{context}}

Write an initial answer to the question using only the passages above.)PROMPT"};

    t["support_score"] = {
        Role::Reasoner,
        "You grade how strongly a passage supports a draft answer.",
        R"PROMPT(Question: {{question}}

Draft answer:
{{draft}}

Passage [{{chunk_id}}]:
{{chunk}}

On a scale from 0 to 100, where 0 means the passage is irrelevant to or contradicts the draft answer and 100 means it gives maximal support, how strongly does this passage support the draft answer? Reply with the integer only.)PROMPT"};

    t["deep_think"] = {
        Role::DeepThinker,
        "You are a careful biomedical reasoner. Think step by step about the evidence before "
        "answering.",
        R"PROMPT(Question: {{question}}

Evidence passages:
{{context}}

Reason deeply over the evidence and give the final answer to the question.)PROMPT"};

    t["extract_triples"] = {
        Role::Extractor,
        "You extract biomedical knowledge triples from paper abstracts.",
        R"PROMPT(Abstract:
{{abstract}}

Extract subject-relation-object triples. Entity types must be one of Gene, Protein, Drug, Disease. Relations must be one of: {{relations}}.
Reply with exactly one JSON array and nothing else, one object per triple:
[{"h": "<head entity>", "ht": "<head type>", "r": "<relation>", "t": "<tail entity>", "tt": "<tail type>"}]
Reply with [] if the abstract contains no such triples.)PROMPT"};

    t["extract_doc_meta"] = {
        Role::Extractor,
        "You catalogue the methods, datasets and research direction of papers.",
        R"PROMPT(Title: {{title}}

Abstract:
{{abstract}}

Identify the research methods the paper uses, the datasets it uses, and its overall research direction.
Reply with exactly one JSON object and nothing else:
{"methods": ["..."], "datasets": ["..."], "directions": ["..."]}
Use empty arrays when nothing applies.)PROMPT"};

    t["normalize_entity"] = {
        Role::Extractor,
        "You map extracted entity names onto a controlled vocabulary.",
        R"PROMPT(Entity: {{surface}}
Entity type: {{entity_type}}

Candidate vocabulary terms:
{{candidates}}

If one candidate denotes the same entity, reply with that candidate term verbatim. If none does, reply with NONE.)PROMPT"};

    t["canon_refine"] = {
        Role::Extractor,
        "You choose the clearest canonical name for a merged entity.",
        R"PROMPT(A set of name variants was merged into one entity currently named "{{name}}".
Variants:
{{aliases}}

Reply with the single variant (verbatim) that should be the canonical name.)PROMPT"};

    t["judge_five_point"] = {
        Role::Judge,
        "You grade answers to biomedical questions against a reference answer.",
        R"PROMPT(Question: {{question}}

Reference answer:
{{gold}}

Candidate answer:
{{predicted}}

Rate the candidate on a five-point scale: 1 = entirely wrong, 2 = mostly wrong, 3 = partially correct, 4 = mostly correct, 5 = fully correct and complete. Reply with the integer only.)PROMPT"};

    t["judge_em"] = {
        Role::Judge,
        "You grade answers to biomedical questions against a reference answer.",
        R"PROMPT(Question: {{question}}

Reference answer:
{{gold}}

Candidate answer:
{{predicted}}

Reply with 1 only if the candidate answer exactly matches the meaning of the reference answer; otherwise reply with 0. Reply with the integer only.)PROMPT"};

    return t;
}

}  // namespace

PromptLibrary PromptLibrary::builtin() {
    PromptLibrary lib;
    lib.templates_ = make_builtin();
    return lib;
}

std::pair<std::string, std::string> PromptLibrary::parse_template_file(const std::string& contents,
                                                                       const std::string& origin) {
    std::vector<std::string> lines;
    std::size_t start = 0;
    while (start < contents.size()) {
        std::size_t nl = contents.find('\n', start);
        if (nl == std::string::npos) {
            lines.push_back(contents.substr(start));
            break;
        }
        lines.push_back(contents.substr(start, nl - start));
        start = nl + 1;
    }
    if (lines.empty() || lines[0] != "[system]") {
        throw ParseError(origin + ": template file must start with a [system] line");
    }
    std::size_t user_at = 0;
    for (std::size_t i = 1; i < lines.size(); ++i) {
        if (lines[i] == "[user]") {
            user_at = i;
            break;
        }
    }
    if (user_at == 0) throw ParseError(origin + ": template file has no [user] line");

    auto join = [&](std::size_t from, std::size_t to) {
        std::string out;
        for (std::size_t i = from; i < to; ++i) {
            if (i > from) out += '\n';
            out += lines[i];
        }
        return out;
    };
    return {join(1, user_at), join(user_at + 1, lines.size())};
}

PromptLibrary PromptLibrary::with_overrides(const std::filesystem::path& dir) {
    PromptLibrary lib = builtin();
    if (!std::filesystem::is_directory(dir)) {
        throw ConfigError("prompt directory not found: " + dir.string());
    }
    std::vector<std::filesystem::path> files;
    for (const auto& entry : std::filesystem::directory_iterator(dir)) {
        if (entry.path().extension() == ".txt") files.push_back(entry.path());
    }
    std::sort(files.begin(), files.end());
    for (const auto& path : files) {
        const std::string id = path.stem().string();
        auto it = lib.templates_.find(id);
        if (it == lib.templates_.end()) {
            throw ConfigError("prompt file " + path.string() +
                              " does not correspond to any known template");
        }
        auto [system, user] = parse_template_file(io::read_file(path), path.string());
        it->second.system = std::move(system);
        it->second.user = std::move(user);
    }
    return lib;
}

const Template& PromptLibrary::get(const std::string& template_id) const {
    auto it = templates_.find(template_id);
    if (it == templates_.end()) {
        throw InvalidArgumentError("unknown prompt template: " + template_id);
    }
    return it->second;
}

std::vector<std::string> PromptLibrary::ids() const {
    std::vector<std::string> out;
    out.reserve(templates_.size());
    for (const auto& [id, tmpl] : templates_) out.push_back(id);
    return out;
}

std::string PromptLibrary::render(const std::string& text,
                                  const std::map<std::string, std::string>& subs) {
    std::string out;
    out.reserve(text.size());
    std::size_t pos = 0;
    while (pos < text.size()) {
        std::size_t open = text.find("{{", pos);
        if (open == std::string::npos) {
            out.append(text, pos, std::string::npos);
            break;
        }
        std::size_t close = text.find("}}", open + 2);
        if (close == std::string::npos) {
            throw InvalidArgumentError("unterminated {{placeholder}} in prompt template");
        }
        out.append(text, pos, open - pos);
        const std::string name = text.substr(open + 2, close - open - 2);
        auto it = subs.find(name);
        if (it == subs.end()) {
            throw InvalidArgumentError("prompt placeholder {{" + name + "}} has no substitution");
        }
        out += it->second;
        pos = close + 2;
    }
    return out;
}

providers::GenerationRequest PromptLibrary::make_request(
    const std::string& id, const std::string& key,
    const std::map<std::string, std::string>& subs) const {
    const Template& t = get(id);
    providers::GenerationRequest req;
    req.role = t.role;
    req.template_id = id;
    req.key = key;
    req.prompt = {render(t.system, subs), render(t.user, subs)};
    return req;
}

}  // namespace iprar::prompts
