#pragma once

#include <string>
#include <vector>

#include "ebias/corpus.hpp"
#include "ebias/debias.hpp"
#include "ebias/experiment.hpp"
#include "ebias/judge.hpp"
#include "ebias/stats.hpp"

namespace ebias {

/// Formatting conventions shared by all tables: statistics to two decimals,
/// p-values two decimals or scientific below 0.01, percentages "12.34%".
std::string format_stat(double value);
std::string format_p(double p);
std::string format_pct(double pct);
std::string format_metric(double value); // six significant digits

std::string welch_cell(const WelchResult& welch);

void write_metrics_csv(const std::string& path, const std::vector<MetricsTableRow>& rows);
std::vector<MetricsTableRow> read_metrics_csv(const std::string& path);

void write_category_tests_csv(const std::string& path, const CategoryTestReport& report);
void write_variability_csv(const std::string& path, const VariabilityReport& report);
void write_judge_csv(const std::string& path, const JudgeReport& report);
void write_debias_csv(const std::string& path, const std::vector<DebiasSummaryRow>& rows);

void write_verdicts_jsonl(const std::string& path, const std::vector<JudgeVerdict>& verdicts);
std::vector<JudgeVerdict> load_verdicts(const std::string& path);

void write_debias_runs_jsonl(const std::string& path, const std::vector<DebiasRun>& runs);
std::vector<DebiasRun> load_debias_runs(const std::string& path);

struct ReportInputs {
    RunManifest manifest;
    Corpus corpus;
    Granularity granularity = Granularity::Word;
    CategoryTestReport category_tests;
    bool has_category_tests = false;
    VariabilityReport variability;
    bool has_variability = false;
    JudgeReport judge;
    bool has_judge = false;
    std::vector<DebiasSummaryRow> debias_rows;
    bool has_debias = false;
    std::vector<std::string> warnings;
};

/// Markdown summary: manifest echo, corpus counts, every available table,
/// and the metric conventions (tokenization, entropy base 2, Maas base 10).
void write_markdown_report(const std::string& path, const ReportInputs& inputs);

} // namespace ebias
