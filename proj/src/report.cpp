#include "ebias/report.hpp"

#include <charconv>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <map>

#include <json.hpp>

#include "ebias/csv.hpp"
#include "ebias/errors.hpp"

namespace ebias {

std::string format_stat(double value) {
    if (std::isinf(value)) return value > 0 ? "inf" : "-inf";
    if (std::isnan(value)) return "nan";
    char buf[32];
    std::snprintf(buf, sizeof(buf), "%.2f", value);
    return buf;
}

std::string format_p(double p) {
    if (std::isnan(p)) return "nan";
    char buf[32];
    if (p >= 0.01 || p == 0.0) {
        std::snprintf(buf, sizeof(buf), "%.2f", p);
    } else {
        std::snprintf(buf, sizeof(buf), "%.2e", p);
    }
    return buf;
}

std::string format_pct(double pct) {
    char buf[32];
    std::snprintf(buf, sizeof(buf), "%.2f%%", pct);
    return buf;
}

std::string format_metric(double value) {
    if (std::isnan(value)) return "nan";
    if (std::isinf(value)) return value > 0 ? "inf" : "-inf";
    // shortest representation that parses back to the same double, so csv
    // round trips are lossless
    char buf[40];
    const auto result = std::to_chars(buf, buf + sizeof(buf), value);
    return std::string(buf, result.ptr);
}

std::string welch_cell(const WelchResult& welch) {
    return format_stat(welch.t_stat) + " (p=" + format_p(welch.p_value) + ")";
}

void write_metrics_csv(const std::string& path, const std::vector<MetricsTableRow>& rows) {
    csv::Table table;
    table.header = {"id",    "pair_id",   "category", "gender", "model",
                    "iteration", "w",     "t",        "entropy", "cttr", "maas"};
    for (const auto& row : rows) {
        const std::string id = row.pair_id + ":" + gender_name(row.gender) + ":" + row.model_id +
                               ":" + std::to_string(row.iteration);
        table.rows.push_back({id, row.pair_id, row.category, gender_name(row.gender),
                              row.model_id, std::to_string(row.iteration), std::to_string(row.w),
                              std::to_string(row.t), format_metric(row.metrics.entropy),
                              format_metric(row.metrics.cttr), format_metric(row.metrics.maas)});
    }
    csv::write_file(path, table);
}

std::vector<MetricsTableRow> read_metrics_csv(const std::string& path) {
    const csv::Table table = csv::read_file(path);
    for (const char* key :
         {"pair_id", "category", "gender", "model", "iteration", "w", "t", "entropy", "cttr", "maas"}) {
        if (table.column(key) < 0) {
            throw Error(ErrorCode::MissingColumn, path + ": missing column '" + key + "'");
        }
    }
    auto col = [&](const char* name) { return static_cast<std::size_t>(table.column(name)); };
    std::vector<MetricsTableRow> rows;
    for (const auto& r : table.rows) {
        MetricsTableRow row;
        row.pair_id = r[col("pair_id")];
        row.category = r[col("category")];
        row.gender = gender_from_name(r[col("gender")]);
        row.model_id = r[col("model")];
        row.iteration = std::stoi(r[col("iteration")]);
        row.w = std::stoull(r[col("w")]);
        row.t = std::stoull(r[col("t")]);
        row.metrics.entropy = std::stod(r[col("entropy")]);
        row.metrics.cttr = std::stod(r[col("cttr")]);
        row.metrics.maas = std::stod(r[col("maas")]);
        rows.push_back(std::move(row));
    }
    return rows;
}

namespace {

// rows arrive keyed (category, model, metric); emit one line per
// (category, model) with the three metric columns
template <typename Row, typename CellFn>
csv::Table three_metric_table(const std::vector<Row>& rows, CellFn cell) {
    csv::Table table;
    table.header = {"Category", "LLM", "Shannon Entropy", "CTTR", "Maas"};
    std::map<std::pair<std::string, std::string>, std::map<Metric, std::string>> grouped;
    std::vector<std::pair<std::string, std::string>> order;
    for (const auto& row : rows) {
        const auto key = std::make_pair(row.category, row.model);
        if (!grouped.count(key)) order.push_back(key);
        grouped[key][row.metric] = cell(row);
    }
    // keep first-appearance order (cells are generated category-major)
    for (const auto& key : order) {
        auto& cells = grouped[key];
        table.rows.push_back({key.first, key.second, cells[Metric::Entropy], cells[Metric::Cttr],
                              cells[Metric::Maas]});
    }
    return table;
}

} // namespace

void write_category_tests_csv(const std::string& path, const CategoryTestReport& report) {
    csv::write_file(path, three_metric_table(report.rows, [](const CategoryTestRow& row) {
                        return welch_cell(row.welch);
                    }));
}

void write_variability_csv(const std::string& path, const VariabilityReport& report) {
    csv::write_file(path, three_metric_table(report.rows, [](const VariabilityRow& row) {
                        return format_pct(100.0 * row.fraction);
                    }));
}

void write_judge_csv(const std::string& path, const JudgeReport& report) {
    csv::Table table;
    table.header = {"Category", "LLM", "Male more Information", "Female more Information",
                    "No difference", "Fisher Test F/M Odds Ratio"};
    for (const auto& row : report.rows) {
        table.rows.push_back({row.category, row.model, format_pct(row.pct_male_more),
                              format_pct(row.pct_female_more), format_pct(row.pct_tie),
                              format_stat(row.fisher.odds_ratio) + " (p=" +
                                  format_p(row.fisher.p_value) + ")"});
    }
    csv::write_file(path, table);
}

void write_debias_csv(const std::string& path, const std::vector<DebiasSummaryRow>& rows) {
    csv::Table table;
    table.header = {"Category",
                    "Male Origin Entropy Higher than Both",
                    "Male Origin Entropy Between",
                    "Male Origin Entropy Lower",
                    "Female Origin Entropy Higher than Both",
                    "Female Origin Entropy Between",
                    "Female Origin Entropy Lower",
                    "T-Test Debiased (Female vs Male)"};
    for (const auto& row : rows) {
        table.rows.push_back({row.category, format_pct(row.male_pct_higher),
                              format_pct(row.male_pct_between), format_pct(row.male_pct_lower),
                              format_pct(row.female_pct_higher), format_pct(row.female_pct_between),
                              format_pct(row.female_pct_lower),
                              row.welch_valid ? welch_cell(row.welch) : "n/a"});
    }
    csv::write_file(path, table);
}

void write_verdicts_jsonl(const std::string& path, const std::vector<JudgeVerdict>& verdicts) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw Error(ErrorCode::Io, "cannot write " + path);
    for (const auto& v : verdicts) {
        nlohmann::json obj{
            {"pair_id", v.pair_id},     {"category", v.category},
            {"model", v.model_id},      {"text1_flag", v.text1_flag},
            {"text2_flag", v.text2_flag}, {"verdict", verdict_name(v.verdict)},
            {"raw_reply", v.raw_reply},
        };
        if (v.swapped_verdict) obj["swapped_verdict"] = verdict_name(*v.swapped_verdict);
        out << obj.dump() << '\n';
    }
}

std::vector<JudgeVerdict> load_verdicts(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw Error(ErrorCode::Io, "cannot open " + path);
    std::vector<JudgeVerdict> verdicts;
    std::string line;
    while (std::getline(in, line)) {
        if (line.empty()) continue;
        const nlohmann::json obj = nlohmann::json::parse(line);
        JudgeVerdict v;
        v.pair_id = obj.value("pair_id", "");
        v.category = obj.value("category", "");
        v.model_id = obj.value("model", "");
        v.text1_flag = obj.value("text1_flag", 0);
        v.text2_flag = obj.value("text2_flag", 0);
        v.verdict = verdict_from_name(obj.value("verdict", "unscored"));
        v.raw_reply = obj.value("raw_reply", "");
        if (obj.contains("swapped_verdict")) {
            v.swapped_verdict = verdict_from_name(obj["swapped_verdict"].get<std::string>());
        }
        verdicts.push_back(std::move(v));
    }
    return verdicts;
}

void write_debias_runs_jsonl(const std::string& path, const std::vector<DebiasRun>& runs) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw Error(ErrorCode::Io, "cannot write " + path);
    for (const auto& run : runs) {
        nlohmann::json obj{
            {"pair_id", run.pair_id},
            {"origin", gender_name(run.origin)},
            {"failed", run.failed},
        };
        if (run.failed) {
            obj["failure"] = run.failure;
        } else {
            nlohmann::json candidates = nlohmann::json::array();
            for (const auto& c : run.outcome.candidates) {
                candidates.push_back({{"level", c.level}, {"entropy", c.entropy}, {"text", c.text}});
            }
            obj["question"] = run.outcome.question;
            obj["detected_gender"] = run.outcome.detected_gender;
            obj["question_female"] = run.outcome.question_female;
            obj["question_male"] = run.outcome.question_male;
            obj["response_female"] = run.outcome.response_female;
            obj["response_male"] = run.outcome.response_male;
            obj["entropy_female"] = run.outcome.entropy_female;
            obj["entropy_male"] = run.outcome.entropy_male;
            obj["entropy_base"] = run.outcome.entropy_base;
            obj["candidates"] = std::move(candidates);
            obj["final_text"] = run.outcome.final_text;
            obj["final_entropy"] = run.outcome.final_entropy;
            obj["selected_level"] = run.outcome.selected_level;
            obj["early_stop"] = run.outcome.early_stop;
            obj["entropy_class"] = entropy_class_name(run.entropy_class);
        }
        out << obj.dump() << '\n';
    }
}

std::vector<DebiasRun> load_debias_runs(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw Error(ErrorCode::Io, "cannot open " + path);
    std::vector<DebiasRun> runs;
    std::string line;
    while (std::getline(in, line)) {
        if (line.empty()) continue;
        const nlohmann::json obj = nlohmann::json::parse(line);
        DebiasRun run;
        run.pair_id = obj.value("pair_id", "");
        run.origin = gender_from_name(obj.value("origin", "male"));
        run.failed = obj.value("failed", false);
        if (run.failed) {
            run.failure = obj.value("failure", "");
        } else {
            run.outcome.question = obj.value("question", "");
            run.outcome.detected_gender = obj.value("detected_gender", "none");
            run.outcome.question_female = obj.value("question_female", "");
            run.outcome.question_male = obj.value("question_male", "");
            run.outcome.response_female = obj.value("response_female", "");
            run.outcome.response_male = obj.value("response_male", "");
            run.outcome.entropy_female = obj.value("entropy_female", 0.0);
            run.outcome.entropy_male = obj.value("entropy_male", 0.0);
            run.outcome.entropy_base = obj.value("entropy_base", 0.0);
            if (obj.contains("candidates")) {
                for (const auto& c : obj["candidates"]) {
                    run.outcome.candidates.push_back({c.value("text", ""), c.value("entropy", 0.0),
                                                      c.value("level", 0)});
                }
            }
            run.outcome.final_text = obj.value("final_text", "");
            run.outcome.final_entropy = obj.value("final_entropy", 0.0);
            run.outcome.selected_level = obj.value("selected_level", 0);
            run.outcome.early_stop = obj.value("early_stop", false);
            run.entropy_class = classify_entropy(run.outcome.final_entropy,
                                                 run.outcome.entropy_female,
                                                 run.outcome.entropy_male);
        }
        runs.push_back(std::move(run));
    }
    return runs;
}

namespace {

void markdown_table(std::ofstream& out, const csv::Table& table) {
    out << "|";
    for (const auto& h : table.header) out << " " << h << " |";
    out << "\n|";
    for (std::size_t i = 0; i < table.header.size(); ++i) out << " --- |";
    out << "\n";
    for (const auto& row : table.rows) {
        out << "|";
        for (const auto& cell : row) out << " " << cell << " |";
        out << "\n";
    }
    out << "\n";
}

} // namespace

void write_markdown_report(const std::string& path, const ReportInputs& inputs) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw Error(ErrorCode::Io, "cannot write " + path);

    out << "# Gender entropy bias audit report\n\n";

    out << "## Run\n\n";
    out << "- corpus: " << inputs.manifest.corpus_path << " (checksum "
        << inputs.manifest.corpus_checksum << ", " << inputs.corpus.provenance.row_count
        << " gendered rows, " << inputs.corpus.pairs.size() << " pairs)\n";
    out << "- seed: " << inputs.manifest.seed << "\n";
    out << "- temperature: " << format_metric(inputs.manifest.temperature) << "\n";
    out << "- iterations: " << inputs.manifest.max_iterations << "\n";
    out << "- models:";
    for (const auto& m : inputs.manifest.models) out << " " << m;
    out << "\n";
    out << "- tokenization: " << granularity_name(inputs.granularity)
        << " (lowercase, whitespace split, edge punctuation stripped)\n";
    out << "- entropy log base: 2 (bits); Maas log base: 10\n\n";

    out << "## Corpus\n\n";
    {
        csv::Table table;
        table.header = {"Category", "Pairs", "Gendered questions"};
        const auto counts = inputs.corpus.category_counts();
        std::size_t total = 0;
        for (Category c : kAllCategories) {
            const std::size_t n = counts.at(c);
            total += n;
            table.rows.push_back({category_name(c), std::to_string(n), std::to_string(2 * n)});
        }
        table.rows.push_back({"Total", std::to_string(total), std::to_string(2 * total)});
        markdown_table(out, table);
    }

    if (inputs.has_category_tests) {
        out << "## Category-level t-tests (single iteration, female vs male)\n\n";
        markdown_table(out, three_metric_table(inputs.category_tests.rows,
                                               [](const CategoryTestRow& row) {
                                                   return welch_cell(row.welch);
                                               }));
    }

    if (inputs.has_variability) {
        out << "## Per-question variability (share of questions with p <= "
            << format_metric(inputs.variability.alpha) << ")\n\n";
        markdown_table(out, three_metric_table(inputs.variability.rows,
                                               [](const VariabilityRow& row) {
                                                   return format_pct(100.0 * row.fraction);
                                               }));
    }

    if (inputs.has_judge) {
        out << "## Pairwise judge evaluation\n\n";
        csv::Table table;
        table.header = {"Category", "LLM", "Male more Information", "Female more Information",
                        "No difference", "Fisher Test F/M Odds Ratio"};
        for (const auto& row : inputs.judge.rows) {
            table.rows.push_back({row.category, row.model, format_pct(row.pct_male_more),
                                  format_pct(row.pct_female_more), format_pct(row.pct_tie),
                                  format_stat(row.fisher.odds_ratio) + " (p=" +
                                      format_p(row.fisher.p_value) + ")"});
        }
        markdown_table(out, table);
        out << "Fisher table per row: wins vs non-wins for each gender over scored verdicts, "
               "odds ratio in F/M convention.\n\n";
    }

    if (inputs.has_debias) {
        out << "## Debiasing chain outcomes\n\n";
        csv::Table table;
        table.header = {"Category", "M-origin higher", "M-origin between", "M-origin lower",
                        "F-origin higher", "F-origin between", "F-origin lower",
                        "T-test (F vs M)"};
        for (const auto& row : inputs.debias_rows) {
            table.rows.push_back({row.category, format_pct(row.male_pct_higher),
                                  format_pct(row.male_pct_between), format_pct(row.male_pct_lower),
                                  format_pct(row.female_pct_higher),
                                  format_pct(row.female_pct_between),
                                  format_pct(row.female_pct_lower),
                                  row.welch_valid ? welch_cell(row.welch) : "n/a"});
        }
        markdown_table(out, table);
    }

    if (!inputs.warnings.empty()) {
        out << "## Warnings\n\n";
        for (const auto& w : inputs.warnings) out << "- " << w << "\n";
        out << "\n";
    }
}

} // namespace ebias
