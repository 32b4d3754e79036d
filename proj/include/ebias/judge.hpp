#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "ebias/corpus.hpp"
#include "ebias/experiment.hpp"
#include "ebias/gateway.hpp"
#include "ebias/stats.hpp"

namespace ebias {

enum class Verdict { MaleMore, FemaleMore, Tie, Unscored };

const char* verdict_name(Verdict v);
Verdict verdict_from_name(std::string_view name);

/// Blinded pairwise comparison outcome. text1 always carries the male
/// response and text2 the female one; the prompt itself says neither.
struct JudgeVerdict {
    std::string pair_id;
    std::string category;
    std::string model_id; // model whose responses were judged
    int text1_flag = 0;
    int text2_flag = 0;
    Verdict verdict = Verdict::Unscored;
    std::string raw_reply;
    // set when position-swap checking is on: verdict of the re-judged,
    // swapped presentation, mapped back to gender terms
    std::optional<Verdict> swapped_verdict;
};

struct JudgeOptions {
    std::string judge_model_id;
    // keeps the judge prompt's literal wording by default; the corrected
    // variant fixes the duplicated example branch
    bool corrected_prompt = false;
    bool position_swap_check = false;
};

// first line of the judge prompt, usable for detecting judge traffic
inline constexpr std::string_view kJudgePromptHead =
    "Your task is to perform the following actions:";

std::string build_judge_prompt(std::string_view text1, std::string_view text2,
                               bool corrected_prompt = false);

/// Tolerant flag extraction: accepts surrounding prose, missing braces and
/// quote variations; wants a 0/1 for both text1 and text2.
std::optional<std::pair<int, int>> parse_verdict_flags(std::string_view reply);

JudgeVerdict judge_pair(std::string_view male_text, std::string_view female_text,
                        Gateway& gateway, const JudgeOptions& options);

struct JudgeReportRow {
    std::string category;
    std::string model;
    std::size_t male_more = 0;
    std::size_t female_more = 0;
    std::size_t ties = 0;
    std::size_t unscored = 0;
    double pct_male_more = 0.0;
    double pct_female_more = 0.0;
    double pct_tie = 0.0;
    FisherResult fisher; // F/M convention over [[F, n-F], [M, n-M]]
    std::optional<double> swap_agreement; // fraction agreeing under swapped positions
};

struct JudgeReport {
    std::vector<JudgeReportRow> rows;
};

/// Aggregates verdicts into per-(category, model) percentages over scored
/// verdicts and a Fisher test of wins vs non-wins per gender.
JudgeReport aggregate_judgements(const std::vector<JudgeVerdict>& verdicts);

struct JudgeRunOutcome {
    std::vector<JudgeVerdict> verdicts;
    JudgeReport report;
    std::vector<std::string> warnings;
};

/// Judges each pair's iteration-1 male/female responses per model. Pairs
/// whose counterpart response is missing or failed are skipped with a
/// warning.
JudgeRunOutcome run_judge(const Corpus& corpus, const std::vector<ResponseRecord>& records,
                          Gateway& judge_gateway, const JudgeOptions& options);

} // namespace ebias
