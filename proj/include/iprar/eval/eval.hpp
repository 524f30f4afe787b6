#pragma once

#include "iprar/generation/generation.hpp"

#include <filesystem>
#include <functional>
#include <optional>
#include <set>
#include <string>
#include <utility>
#include <vector>

namespace iprar::eval {

enum class QuestionType { Factual, Extraction, Discovery, YesNo, Factoid, List };

const char* to_string(QuestionType t);
QuestionType question_type_from_string(const std::string& s);

struct EvalRecord {
    std::string question_id;
    std::string question;
    QuestionType type = QuestionType::Factual;
    io::ordered_json gold_answer;  // string, or array of strings for list-like gold
    std::set<std::string> gold_doc_ids;

    /// gold_answer flattened to strings (a lone string becomes one element).
    std::vector<std::string> gold_answers() const;
};

/// Line-delimited JSON: {id, question, type, gold_answer, gold_doc_ids,
/// gold_sentences?}. Validates ids unique, gold_doc_ids non-empty, and
/// yes/no gold being "yes" or "no".
std::vector<EvalRecord> load_dataset(const std::filesystem::path& path);

struct Prf {
    double precision = 0.0;
    double recall = 0.0;
    double f1 = 0.0;
};

/// Standard set precision/recall with harmonic F1; empty predicted gives
/// (0,0,0). Throws on empty gold.
Prf doc_prf(const std::set<std::string>& predicted, const std::set<std::string>& gold);

/// Sum of precision-at-each-gold-hit divided by |gold| (so gold documents
/// never retrieved contribute zero). Throws on empty gold.
double average_precision(const std::vector<std::string>& ranked,
                         const std::set<std::string>& gold);

/// Arithmetic mean of the APs, and the geometric mean of (ap + epsilon).
/// Throws on an empty list.
std::pair<double, double> map_gmap(const std::vector<double>& aps, double epsilon);

/// 1/rank of the first gold hit; 0 when no gold document appears.
double reciprocal_rank(const std::vector<std::string>& ranked, const std::set<std::string>& gold);

using Matcher = std::function<bool(const std::string&, const std::string&)>;

/// Case-folded, whitespace-normalized exact match — the default list matcher.
bool normalized_equal(const std::string& a, const std::string& b);

/// List metrics under one-to-one greedy matching: each prediction may claim
/// at most one unmatched gold item.
Prf list_prf(const std::vector<std::string>& predicted, const std::vector<std::string>& gold,
             const Matcher& matcher = normalized_equal);

/// Splits an answer into factoid candidates: the first `max_items` non-empty
/// lines, with leading list markers ("1.", "-", "*") stripped.
std::vector<std::string> answer_lines(const std::string& answer, std::size_t max_items);

/// Splits an answer into list items on newlines, semicolons and commas;
/// strips list markers; deduplicates under normalization, keeping first
/// occurrences.
std::vector<std::string> answer_list_items(const std::string& answer);

enum class JudgeMode { FivePoint, ExactMatch };

/** Five-point mode parses an integer 1..5 from the judge and maps it to
 * [0,1] via (score-1)/4; exact-match mode asks for 0/1 and returns it
 * directly. One reformat retry, then error.
 */
double llm_judge(const std::string& question, const std::string& gold_answer,
                 const std::string& predicted_answer, providers::Generator& judge,
                 const prompts::PromptLibrary& prompts, JudgeMode mode,
                 std::vector<providers::Exchange>* log = nullptr);

struct QuestionResult {
    std::string question_id;
    QuestionType type = QuestionType::Factual;
    std::string error;  // non-empty: the pipeline failed; all metrics score 0
    std::string final_answer;
    std::vector<std::string> ranked_docs;  // selected chunks' documents, first-appearance order
    Prf docs;
    double ap = 0.0;
    double rr = 0.0;
    std::optional<double> judge_score;
    std::optional<Prf> list_scores;                    // List and Extraction records
    std::optional<bool> factoid_strict;                // Factoid records
    std::optional<double> factoid_rr;
    std::string yesno_predicted;  // "yes", "no" or "other"; YesNo records only
    std::string yesno_gold;
};

struct YesNoStats {
    double accuracy = 0.0;
    double macro_f1 = 0.0;
    int n = 0;
};

struct FactoidStats {
    double strict_accuracy = 0.0;
    double mrr = 0.0;
    int n = 0;
};

struct ListStats {
    Prf mean;
    int n = 0;
};

struct MetricReport {
    std::vector<QuestionResult> per_question;
    int failed = 0;
    double mean_precision = 0.0;
    double mean_recall = 0.0;
    double mean_f1 = 0.0;
    double map = 0.0;
    double gmap = 0.0;
    double mean_rr = 0.0;
    std::optional<double> mean_judge;
    std::optional<YesNoStats> yesno;
    std::optional<FactoidStats> factoid;
    std::optional<ListStats> list;

    io::ordered_json to_json(const io::ordered_json& config_snapshot) const;
    /// Aligned plain-text table: one row per question with the document
    /// retrieval and answer column groups, then the aggregate block.
    std::string to_table() const;
};

/// Accuracy and macro F1 over (predicted, gold) yes/no label pairs;
/// predictions outside {yes, no} count as wrong for both classes.
YesNoStats yesno_stats(const std::vector<std::pair<std::string, std::string>>& pred_gold);

/** Runs the answer pipeline per record (parallel up to `workers`), scores
 * retrieval per question and answers per question type, and aggregates. A
 * record whose pipeline fails is recorded with its error and scores zero
 * everywhere; the run continues. Pass a null judge to skip judge scoring.
 */
MetricReport run_eval(const std::vector<EvalRecord>& dataset,
                      const generation::PipelineHandles& handles,
                      const generation::PipelineParams& params, providers::Generator* judge,
                      JudgeMode judge_mode, double gmap_epsilon, int workers,
                      const io::ordered_json& config_snapshot = io::ordered_json::object());

}  // namespace iprar::eval
