#include "iprar/eval/eval.hpp"

#include "iprar/util/error.hpp"
#include "iprar/util/text.hpp"

#include <algorithm>
#include <atomic>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <thread>

namespace iprar::eval {

using io::ordered_json;

const char* to_string(QuestionType t) {
    switch (t) {
        case QuestionType::Factual: return "factual";
        case QuestionType::Extraction: return "extraction";
        case QuestionType::Discovery: return "discovery";
        case QuestionType::YesNo: return "yesno";
        case QuestionType::Factoid: return "factoid";
        case QuestionType::List: return "list";
    }
    return "?";
}

QuestionType question_type_from_string(const std::string& s) {
    static const std::map<std::string, QuestionType> table = {
        {"factual", QuestionType::Factual},   {"extraction", QuestionType::Extraction},
        {"discovery", QuestionType::Discovery}, {"yesno", QuestionType::YesNo},
        {"factoid", QuestionType::Factoid},   {"list", QuestionType::List},
    };
    auto it = table.find(s);
    if (it == table.end()) throw InvalidArgumentError("unknown question type: " + s);
    return it->second;
}

std::vector<std::string> EvalRecord::gold_answers() const {
    std::vector<std::string> out;
    if (gold_answer.is_string()) {
        out.push_back(gold_answer.get<std::string>());
    } else if (gold_answer.is_array()) {
        for (const auto& item : gold_answer) {
            if (item.is_string()) out.push_back(item.get<std::string>());
        }
    }
    return out;
}

std::vector<EvalRecord> load_dataset(const std::filesystem::path& path) {
    if (!std::filesystem::exists(path)) {
        throw IoError("dataset file not found: " + path.string());
    }
    std::vector<EvalRecord> records;
    std::set<std::string> ids;
    for (const auto& j : io::read_jsonl(path)) {
        EvalRecord r;
        r.question_id = j.at("id").get<std::string>();
        r.question = j.at("question").get<std::string>();
        r.type = question_type_from_string(j.at("type").get<std::string>());
        r.gold_answer = j.at("gold_answer");
        for (const auto& d : j.at("gold_doc_ids")) r.gold_doc_ids.insert(d.get<std::string>());
        if (r.question_id.empty() || !ids.insert(r.question_id).second) {
            throw ParseError(path.string() + ": missing or duplicate question id '" +
                             r.question_id + "'");
        }
        if (r.question.empty()) {
            throw ParseError(path.string() + ": record " + r.question_id + " has no question");
        }
        if (r.gold_doc_ids.empty()) {
            throw ParseError(path.string() + ": record " + r.question_id +
                             " has no gold_doc_ids");
        }
        if (r.type == QuestionType::YesNo) {
            std::string gold = r.gold_answer.is_string()
                                   ? text::normalize_for_match(r.gold_answer.get<std::string>())
                                   : std::string();
            if (gold != "yes" && gold != "no") {
                throw ParseError(path.string() + ": record " + r.question_id +
                                 " is yesno but gold_answer is not yes/no");
            }
        }
        records.push_back(std::move(r));
    }
    return records;
}

Prf doc_prf(const std::set<std::string>& predicted, const std::set<std::string>& gold) {
    if (gold.empty()) throw InvalidArgumentError("doc_prf: empty gold set");
    if (predicted.empty()) return {0.0, 0.0, 0.0};
    std::size_t hits = 0;
    for (const auto& p : predicted) hits += gold.count(p);
    Prf out;
    out.precision = static_cast<double>(hits) / static_cast<double>(predicted.size());
    out.recall = static_cast<double>(hits) / static_cast<double>(gold.size());
    out.f1 = (out.precision + out.recall) == 0.0
                 ? 0.0
                 : 2.0 * out.precision * out.recall / (out.precision + out.recall);
    return out;
}

double average_precision(const std::vector<std::string>& ranked,
                         const std::set<std::string>& gold) {
    if (gold.empty()) throw InvalidArgumentError("average_precision: empty gold set");
    double sum = 0.0;
    std::size_t hits = 0;
    std::set<std::string> seen;
    for (std::size_t i = 0; i < ranked.size(); ++i) {
        if (!seen.insert(ranked[i]).second) continue;  // ranked lists are dedup'd defensively
        if (gold.count(ranked[i])) {
            ++hits;
            sum += static_cast<double>(hits) / static_cast<double>(i + 1);
        }
    }
    return sum / static_cast<double>(gold.size());
}

std::pair<double, double> map_gmap(const std::vector<double>& aps, double epsilon) {
    if (aps.empty()) throw InvalidArgumentError("map_gmap: empty ap list");
    double sum = 0.0;
    double log_sum = 0.0;
    for (double ap : aps) {
        sum += ap;
        log_sum += std::log(ap + epsilon);
    }
    const double n = static_cast<double>(aps.size());
    return {sum / n, std::exp(log_sum / n)};
}

double reciprocal_rank(const std::vector<std::string>& ranked,
                       const std::set<std::string>& gold) {
    if (gold.empty()) throw InvalidArgumentError("reciprocal_rank: empty gold set");
    for (std::size_t i = 0; i < ranked.size(); ++i) {
        if (gold.count(ranked[i])) return 1.0 / static_cast<double>(i + 1);
    }
    return 0.0;
}

bool normalized_equal(const std::string& a, const std::string& b) {
    return text::normalize_for_match(a) == text::normalize_for_match(b);
}

Prf list_prf(const std::vector<std::string>& predicted, const std::vector<std::string>& gold,
             const Matcher& matcher) {
    if (gold.empty()) throw InvalidArgumentError("list_prf: empty gold list");
    std::vector<bool> gold_used(gold.size(), false);
    std::size_t matched = 0;
    for (const auto& p : predicted) {
        for (std::size_t g = 0; g < gold.size(); ++g) {
            if (!gold_used[g] && matcher(p, gold[g])) {
                gold_used[g] = true;
                ++matched;
                break;
            }
        }
    }
    Prf out;
    if (!predicted.empty()) {
        out.precision = static_cast<double>(matched) / static_cast<double>(predicted.size());
    }
    out.recall = static_cast<double>(matched) / static_cast<double>(gold.size());
    out.f1 = (out.precision + out.recall) == 0.0
                 ? 0.0
                 : 2.0 * out.precision * out.recall / (out.precision + out.recall);
    return out;
}

namespace {

std::string strip_list_marker(const std::string& s) {
    std::size_t pos = 0;
    while (pos < s.size() && (s[pos] == ' ' || s[pos] == '\t')) ++pos;
    std::size_t mark = pos;
    if (mark < s.size() && (s[mark] == '-' || s[mark] == '*')) {
        ++mark;
    } else {
        std::size_t digits = mark;
        while (digits < s.size() && std::isdigit(static_cast<unsigned char>(s[digits]))) {
            ++digits;
        }
        if (digits > mark && digits < s.size() && (s[digits] == '.' || s[digits] == ')')) {
            mark = digits + 1;
        } else {
            mark = pos;  // no marker
        }
    }
    if (mark > pos && (mark >= s.size() || s[mark] == ' ' || s[mark] == '\t')) {
        return std::string(text::trim(s.substr(mark)));
    }
    return std::string(text::trim(s));
}

}  // namespace

std::vector<std::string> answer_lines(const std::string& answer, std::size_t max_items) {
    std::vector<std::string> out;
    std::size_t start = 0;
    while (start <= answer.size() && out.size() < max_items) {
        std::size_t nl = answer.find('\n', start);
        std::string line = answer.substr(
            start, nl == std::string::npos ? std::string::npos : nl - start);
        start = nl == std::string::npos ? answer.size() + 1 : nl + 1;
        std::string item = strip_list_marker(line);
        if (!item.empty()) out.push_back(std::move(item));
    }
    return out;
}

std::vector<std::string> answer_list_items(const std::string& answer) {
    std::vector<std::string> out;
    std::set<std::string> seen;
    std::string current;
    auto flush = [&] {
        std::string item = strip_list_marker(current);
        current.clear();
        if (item.empty()) return;
        std::string norm = text::normalize_for_match(item);
        if (seen.insert(norm).second) out.push_back(std::move(item));
    };
    for (char c : answer) {
        if (c == '\n' || c == ';' || c == ',') {
            flush();
        } else {
            current += c;
        }
    }
    flush();
    return out;
}

double llm_judge(const std::string& question, const std::string& gold_answer,
                 const std::string& predicted_answer, providers::Generator& judge,
                 const prompts::PromptLibrary& prompts, JudgeMode mode,
                 std::vector<providers::Exchange>* log) {
    const bool five = mode == JudgeMode::FivePoint;
    const int lo = five ? 1 : 0;
    const int hi = five ? 5 : 1;
    auto parse = [lo, hi](const std::string& reply) -> std::optional<int> {
        std::string trimmed(text::trim(reply));
        int value = 0;
        auto [p, ec] = std::from_chars(trimmed.data(), trimmed.data() + trimmed.size(), value);
        if (ec != std::errc() || p != trimmed.data() + trimmed.size()) return std::nullopt;
        if (value < lo || value > hi) return std::nullopt;
        return value;
    };
    auto req = prompts.make_request(five ? "judge_five_point" : "judge_em", question,
                                    {{"question", question},
                                     {"gold", gold_answer},
                                     {"predicted", predicted_answer}});
    int score = providers::request_parsed<int>(
        judge, std::move(req), parse,
        "Reply with a single integer between " + std::to_string(lo) + " and " +
            std::to_string(hi) + ".",
        log);
    return five ? (score - 1) / 4.0 : static_cast<double>(score);
}

YesNoStats yesno_stats(const std::vector<std::pair<std::string, std::string>>& pred_gold) {
    YesNoStats stats;
    stats.n = static_cast<int>(pred_gold.size());
    if (pred_gold.empty()) return stats;
    int correct = 0;
    auto f1_for = [&](const std::string& cls) {
        int tp = 0, fp = 0, fn = 0;
        for (const auto& [pred, gold] : pred_gold) {
            if (pred == cls && gold == cls) ++tp;
            if (pred == cls && gold != cls) ++fp;
            if (gold == cls && pred != cls) ++fn;
        }
        const int denom = 2 * tp + fp + fn;
        return denom == 0 ? 0.0 : 2.0 * tp / denom;
    };
    for (const auto& [pred, gold] : pred_gold) correct += pred == gold ? 1 : 0;
    stats.accuracy = static_cast<double>(correct) / pred_gold.size();
    stats.macro_f1 = (f1_for("yes") + f1_for("no")) / 2.0;
    return stats;
}

namespace {

std::string yesno_label(const std::string& answer) {
    std::string norm = text::normalize_for_match(answer);
    std::string head = norm.substr(0, norm.find(' '));
    while (!head.empty() && !std::isalnum(static_cast<unsigned char>(head.back()))) {
        head.pop_back();  // "yes." / "no," style leads still count
    }
    if (head == "yes" || head == "no") return head;
    return "other";
}

void score_answer(QuestionResult& result, const EvalRecord& record) {
    switch (record.type) {
        case QuestionType::YesNo: {
            result.yesno_gold = text::normalize_for_match(record.gold_answer.get<std::string>());
            result.yesno_predicted =
                result.error.empty() ? yesno_label(result.final_answer) : "other";
            break;
        }
        case QuestionType::Factoid: {
            std::vector<std::string> candidates =
                result.error.empty() ? answer_lines(result.final_answer, 5)
                                     : std::vector<std::string>{};
            const std::vector<std::string> gold = record.gold_answers();
            bool strict = false;
            double rr_val = 0.0;
            for (std::size_t i = 0; i < candidates.size(); ++i) {
                bool hit = false;
                for (const auto& g : gold) {
                    if (normalized_equal(candidates[i], g)) {
                        hit = true;
                        break;
                    }
                }
                if (hit) {
                    if (i == 0) strict = true;
                    rr_val = 1.0 / static_cast<double>(i + 1);
                    break;
                }
            }
            result.factoid_strict = strict;
            result.factoid_rr = rr_val;
            break;
        }
        case QuestionType::List:
        case QuestionType::Extraction: {
            std::vector<std::string> predicted =
                result.error.empty() ? answer_list_items(result.final_answer)
                                     : std::vector<std::string>{};
            result.list_scores = list_prf(predicted, record.gold_answers());
            break;
        }
        case QuestionType::Factual:
        case QuestionType::Discovery:
            break;  // judge-scored only
    }
}

}  // namespace

MetricReport run_eval(const std::vector<EvalRecord>& dataset,
                      const generation::PipelineHandles& handles,
                      const generation::PipelineParams& params, providers::Generator* judge,
                      JudgeMode judge_mode, double gmap_epsilon, int workers,
                      const ordered_json& config_snapshot) {
    if (dataset.empty()) throw InvalidArgumentError("empty dataset");
    if (workers <= 0) throw InvalidArgumentError("run_eval: workers must be positive");

    std::vector<QuestionResult> results(dataset.size());
    std::atomic<std::size_t> next{0};

    auto evaluate_one = [&](std::size_t i) {
        const EvalRecord& record = dataset[i];
        QuestionResult& result = results[i];
        result.question_id = record.question_id;
        result.type = record.type;
        try {
            generation::AnswerTrace trace =
                generation::answer_pipeline(record.question, handles, params, config_snapshot);
            result.final_answer = trace.final_answer;
            std::set<std::string> seen;
            for (const auto& chunk_id : trace.selected) {
                const std::string& doc = handles.chunks->doc_of(chunk_id);
                if (seen.insert(doc).second) result.ranked_docs.push_back(doc);
            }
        } catch (const generation::PipelineError& e) {
            result.error = std::string(e.category()) + ": " + e.what();
        } catch (const Error& e) {
            result.error = std::string(e.category()) + ": " + e.what();
        }

        std::set<std::string> predicted_docs(result.ranked_docs.begin(),
                                             result.ranked_docs.end());
        result.docs = doc_prf(predicted_docs, record.gold_doc_ids);
        result.ap = average_precision(result.ranked_docs, record.gold_doc_ids);
        result.rr = reciprocal_rank(result.ranked_docs, record.gold_doc_ids);
        score_answer(result, record);

        if (judge && result.error.empty()) {
            std::vector<std::string> gold = record.gold_answers();
            std::string gold_text;
            for (std::size_t g = 0; g < gold.size(); ++g) {
                if (g > 0) gold_text += ", ";
                gold_text += gold[g];
            }
            try {
                result.judge_score = llm_judge(record.question, gold_text, result.final_answer,
                                               *judge, *handles.prompts, judge_mode);
            } catch (const Error& e) {
                result.error = std::string(e.category()) + ": " + e.what();
                result.judge_score = std::nullopt;
            }
        }
    };

    auto worker_loop = [&] {
        while (true) {
            std::size_t i = next.fetch_add(1);
            if (i >= dataset.size()) return;
            evaluate_one(i);
        }
    };
    const int n_threads = std::min<int>(workers, static_cast<int>(dataset.size()));
    if (n_threads <= 1) {
        worker_loop();
    } else {
        std::vector<std::thread> pool;
        pool.reserve(n_threads);
        for (int t = 0; t < n_threads; ++t) pool.emplace_back(worker_loop);
        for (auto& t : pool) t.join();
    }

    MetricReport report;
    report.per_question = std::move(results);

    std::vector<double> aps;
    double sum_p = 0, sum_r = 0, sum_f1 = 0, sum_rr = 0;
    double judge_sum = 0;
    int judge_n = 0;
    std::vector<std::pair<std::string, std::string>> yesno_pairs;
    double factoid_strict_sum = 0, factoid_rr_sum = 0;
    int factoid_n = 0;
    Prf list_sum;
    int list_n = 0;

    for (const QuestionResult& r : report.per_question) {
        if (!r.error.empty()) ++report.failed;
        sum_p += r.docs.precision;
        sum_r += r.docs.recall;
        sum_f1 += r.docs.f1;
        sum_rr += r.rr;
        aps.push_back(r.ap);
        if (judge) {
            judge_sum += r.judge_score.value_or(0.0);  // failures count as zero
            ++judge_n;
        }
        if (r.type == QuestionType::YesNo) {
            yesno_pairs.emplace_back(r.yesno_predicted, r.yesno_gold);
        }
        if (r.factoid_strict.has_value()) {
            factoid_strict_sum += *r.factoid_strict ? 1.0 : 0.0;
            factoid_rr_sum += r.factoid_rr.value_or(0.0);
            ++factoid_n;
        }
        if (r.list_scores.has_value()) {
            list_sum.precision += r.list_scores->precision;
            list_sum.recall += r.list_scores->recall;
            list_sum.f1 += r.list_scores->f1;
            ++list_n;
        }
    }

    const double n = static_cast<double>(report.per_question.size());
    report.mean_precision = sum_p / n;
    report.mean_recall = sum_r / n;
    report.mean_f1 = sum_f1 / n;
    report.mean_rr = sum_rr / n;
    std::tie(report.map, report.gmap) = map_gmap(aps, gmap_epsilon);
    if (judge_n > 0) report.mean_judge = judge_sum / judge_n;
    if (!yesno_pairs.empty()) report.yesno = yesno_stats(yesno_pairs);
    if (factoid_n > 0) {
        report.factoid = FactoidStats{factoid_strict_sum / factoid_n,
                                      factoid_rr_sum / factoid_n, factoid_n};
    }
    if (list_n > 0) {
        report.list = ListStats{{list_sum.precision / list_n, list_sum.recall / list_n,
                                 list_sum.f1 / list_n},
                                list_n};
    }
    return report;
}

ordered_json MetricReport::to_json(const ordered_json& config_snapshot) const {
    ordered_json j;
    j["schema_version"] = 1;
    j["config"] = config_snapshot;

    ordered_json summary;
    summary["questions"] = per_question.size();
    summary["failed"] = failed;
    summary["mean_precision"] = mean_precision;
    summary["mean_recall"] = mean_recall;
    summary["mean_f1"] = mean_f1;
    summary["map"] = map;
    summary["gmap"] = gmap;
    summary["mean_rr"] = mean_rr;
    summary["mean_judge"] = mean_judge.has_value() ? ordered_json(*mean_judge)
                                                   : ordered_json(nullptr);
    if (yesno) {
        summary["yesno"] = {{"accuracy", yesno->accuracy},
                            {"macro_f1", yesno->macro_f1},
                            {"n", yesno->n}};
    } else {
        summary["yesno"] = nullptr;
    }
    if (factoid) {
        summary["factoid"] = {{"strict_accuracy", factoid->strict_accuracy},
                              {"mrr", factoid->mrr},
                              {"n", factoid->n}};
    } else {
        summary["factoid"] = nullptr;
    }
    if (list) {
        summary["list"] = {{"precision", list->mean.precision},
                           {"recall", list->mean.recall},
                           {"f1", list->mean.f1},
                           {"n", list->n}};
    } else {
        summary["list"] = nullptr;
    }
    j["summary"] = std::move(summary);

    ordered_json per = ordered_json::array();
    for (const QuestionResult& r : per_question) {
        ordered_json q;
        q["id"] = r.question_id;
        q["type"] = to_string(r.type);
        q["error"] = r.error;
        q["final_answer"] = r.final_answer;
        q["ranked_docs"] = r.ranked_docs;
        q["precision"] = r.docs.precision;
        q["recall"] = r.docs.recall;
        q["f1"] = r.docs.f1;
        q["ap"] = r.ap;
        q["rr"] = r.rr;
        q["judge_score"] = r.judge_score.has_value() ? ordered_json(*r.judge_score)
                                                     : ordered_json(nullptr);
        if (r.list_scores) {
            q["list"] = {{"precision", r.list_scores->precision},
                         {"recall", r.list_scores->recall},
                         {"f1", r.list_scores->f1}};
        }
        if (r.factoid_strict.has_value()) {
            q["factoid"] = {{"strict", *r.factoid_strict}, {"rr", r.factoid_rr.value_or(0.0)}};
        }
        if (r.type == QuestionType::YesNo) {
            q["yesno"] = {{"predicted", r.yesno_predicted}, {"gold", r.yesno_gold}};
        }
        per.push_back(std::move(q));
    }
    j["per_question"] = std::move(per);
    return j;
}

std::string MetricReport::to_table() const {
    std::string out;
    char buf[256];
    auto row = [&](const std::string& id, const std::string& type, const std::string& p,
                   const std::string& r, const std::string& f1, const std::string& ap,
                   const std::string& rr, const std::string& judge) {
        std::snprintf(buf, sizeof(buf), "%-12s %-11s %7s %7s %7s %7s %7s %7s\n", id.c_str(),
                      type.c_str(), p.c_str(), r.c_str(), f1.c_str(), ap.c_str(), rr.c_str(),
                      judge.c_str());
        out += buf;
    };
    auto num = [&](double v) {
        std::snprintf(buf, sizeof(buf), "%.4f", v);
        return std::string(buf);
    };

    out += "                         |------- document retrieval ------|---- answer ----\n";
    row("question", "type", "prec", "rec", "f1", "ap", "rr", "judge");
    row("--------", "----", "----", "---", "--", "--", "--", "-----");
    for (const QuestionResult& r : per_question) {
        row(r.question_id, to_string(r.type), num(r.docs.precision), num(r.docs.recall),
            num(r.docs.f1), num(r.ap), num(r.rr),
            r.judge_score.has_value() ? num(*r.judge_score) : "-");
    }
    row("--------", "----", "----", "---", "--", "--", "--", "-----");
    row("mean", "", num(mean_precision), num(mean_recall), num(mean_f1), num(map), num(mean_rr),
        mean_judge.has_value() ? num(*mean_judge) : "-");

    std::snprintf(buf, sizeof(buf), "\nmap %.4f   gmap %.4f   failed %d/%zu\n", map, gmap,
                  failed, per_question.size());
    out += buf;
    if (yesno) {
        std::snprintf(buf, sizeof(buf), "yesno    accuracy %.4f   macro_f1 %.4f   (n=%d)\n",
                      yesno->accuracy, yesno->macro_f1, yesno->n);
        out += buf;
    }
    if (factoid) {
        std::snprintf(buf, sizeof(buf), "factoid  strict %.4f     mrr %.4f        (n=%d)\n",
                      factoid->strict_accuracy, factoid->mrr, factoid->n);
        out += buf;
    }
    if (list) {
        std::snprintf(buf, sizeof(buf),
                      "list     precision %.4f  recall %.4f    f1 %.4f  (n=%d)\n",
                      list->mean.precision, list->mean.recall, list->mean.f1, list->n);
        out += buf;
    }
    return out;
}

}  // namespace iprar::eval
