// ebias: batch audit toolkit for gender entropy bias in chat-model outputs.
//
// Subcommands: corpus validate, run, metrics, ttest, variability, judge,
// debias, report. Exit codes: 0 ok, 1 validation/usage error, 2 gateway or
// IO failure.

#include <algorithm>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <set>
#include <sstream>

#include <CLI11.hpp>
#include <json.hpp>

#include "ebias/config.hpp"
#include "ebias/corpus.hpp"
#include "ebias/csv.hpp"
#include "ebias/debias.hpp"
#include "ebias/errors.hpp"
#include "ebias/experiment.hpp"
#include "ebias/judge.hpp"
#include "ebias/lexmetrics.hpp"
#include "ebias/report.hpp"
#include "ebias/stats.hpp"

namespace fs = std::filesystem;
using namespace ebias;

namespace {

int exit_code_for(const Error& e) {
    switch (e.code()) {
        case ErrorCode::Transport:
        case ErrorCode::RateLimited:
        case ErrorCode::MalformedReply:
        case ErrorCode::AuthFailure:
        case ErrorCode::FixtureMiss:
        case ErrorCode::Io:
            return 2;
        default:
            return 1;
    }
}

std::size_t question_words(const std::string& text) {
    return tokenize(text).w;
}

// per-(category, source) counts with question-length statistics
void print_corpus_summary(const Corpus& corpus) {
    std::printf("%-14s %-12s %10s %12s %12s %12s\n", "Category", "Source", "Questions",
                "Mean words", "Max words", "Min words");
    std::size_t total = 0;
    for (Category category : kAllCategories) {
        for (Forum forum : {Forum::Reddit, Forum::Quora, Forum::MarketWatch}) {
            std::size_t count = 0;
            std::size_t sum = 0, max_words = 0;
            std::size_t min_words = SIZE_MAX;
            for (const auto& pair : corpus.pairs) {
                if (pair.category != category || pair.forum != forum) continue;
                ++count;
                for (Gender g : {Gender::Male, Gender::Female}) {
                    const std::size_t w = question_words(pair.text_for(g));
                    sum += w;
                    max_words = std::max(max_words, w);
                    min_words = std::min(min_words, w);
                }
            }
            if (count == 0) continue;
            total += count;
            std::printf("%-14s %-12s %10zu %12.0f %12zu %12zu\n", category_name(category),
                        forum_name(forum), count,
                        static_cast<double>(sum) / static_cast<double>(2 * count), max_words,
                        min_words);
        }
    }
    std::printf("%-14s %-12s %10zu   (%zu gendered questions)\n", "Total", "", total, 2 * total);
    std::printf("source: %s\nchecksum: %s\nrows: %llu\n", corpus.provenance.source_path.c_str(),
                corpus.provenance.checksum.c_str(),
                static_cast<unsigned long long>(corpus.provenance.row_count));
}

// metrics input: plain {id, text} JSONL or a responses.jsonl
struct MetricsInput {
    std::vector<std::string> ids;
    std::vector<std::string> texts;
};

MetricsInput read_texts_jsonl(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw Error(ErrorCode::Io, "cannot open " + path);
    MetricsInput input;
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (line.empty()) continue;
        const nlohmann::json obj = nlohmann::json::parse(line);
        if (obj.contains("response")) {
            const ResponseRecord r = record_from_json(line);
            input.ids.push_back(r.pair_id + ":" + gender_name(r.gender) + ":" + r.model_id + ":" +
                                std::to_string(r.iteration));
            input.texts.push_back(r.response_text);
        } else if (obj.contains("text")) {
            input.ids.push_back(obj.contains("id")
                                    ? (obj["id"].is_string() ? obj["id"].get<std::string>()
                                                             : obj["id"].dump())
                                    : std::to_string(line_no));
            input.texts.push_back(obj["text"].get<std::string>());
        } else {
            throw Error(ErrorCode::MissingColumn,
                        path + ":" + std::to_string(line_no) + ": no text/response key");
        }
    }
    return input;
}

Clock pick_clock(const ToolConfig& config) {
    return config.all_mock() ? deterministic_clock() : system_clock_utc();
}

struct AnalysisBundle {
    Corpus corpus;
    RunManifest manifest;
    std::vector<ResponseRecord> records;
    Granularity granularity = Granularity::Word;
    AnalysisTables tables;
};

AnalysisBundle load_analysis(const std::string& dir, const std::string& granularity_flag) {
    AnalysisBundle bundle;
    const std::string manifest_path = (fs::path(dir) / "manifest.json").string();
    std::ifstream mf(manifest_path, std::ios::binary);
    if (!mf) throw Error(ErrorCode::Io, "cannot open " + manifest_path);
    std::ostringstream buf;
    buf << mf.rdbuf();
    bundle.manifest = RunManifest::from_json(buf.str());
    bundle.corpus = load_corpus(bundle.manifest.corpus_path);
    bundle.records = load_records((fs::path(dir) / "responses.jsonl").string());
    bundle.granularity = granularity_from_name(
        granularity_flag.empty() ? bundle.manifest.granularity : granularity_flag);
    bundle.tables = export_for_analysis(bundle.corpus, bundle.records, bundle.granularity);
    return bundle;
}

// rebuilds pivot cells from a previously written metrics csv
std::vector<CellSamples> cells_from_metric_rows(const Corpus& corpus,
                                                const std::vector<MetricsTableRow>& rows,
                                                bool only_first_iteration) {
    std::map<std::string, const MetricsTableRow*> by_key;
    std::vector<std::string> models;
    std::set<int> iterations;
    auto key_of = [](const std::string& pair_id, const char* gender, const std::string& model,
                     int iteration) {
        return pair_id + "\x1f" + gender + "\x1f" + model + "\x1f" + std::to_string(iteration);
    };
    for (const auto& row : rows) {
        by_key[key_of(row.pair_id, gender_name(row.gender), row.model_id, row.iteration)] = &row;
        if (std::find(models.begin(), models.end(), row.model_id) == models.end()) {
            models.push_back(row.model_id);
        }
        iterations.insert(row.iteration);
    }
    std::sort(models.begin(), models.end());

    std::vector<CellSamples> cells;
    for (Category category : kAllCategories) {
        std::vector<const QuestionPair*> category_pairs;
        for (const auto& pair : corpus.pairs) {
            if (pair.category == category) category_pairs.push_back(&pair);
        }
        if (category_pairs.empty()) continue;
        for (const auto& model : models) {
            for (Metric metric : kAllMetrics) {
                CellSamples cell;
                cell.category = category_name(category);
                cell.model = model;
                cell.metric = metric;
                for (const QuestionPair* pair : category_pairs) {
                    PairSamples samples;
                    samples.pair_id = pair->pair_id;
                    for (int iteration : iterations) {
                        if (only_first_iteration && iteration != 1) continue;
                        const auto f = by_key.find(key_of(pair->pair_id, "female", model, iteration));
                        const auto m = by_key.find(key_of(pair->pair_id, "male", model, iteration));
                        if (f == by_key.end() || m == by_key.end()) continue;
                        samples.female.push_back(metric_value(f->second->metrics, metric));
                        samples.male.push_back(metric_value(m->second->metrics, metric));
                    }
                    if (!samples.female.empty()) cell.pairs.push_back(std::move(samples));
                }
                if (!cell.pairs.empty()) cells.push_back(std::move(cell));
            }
        }
    }
    return cells;
}

Gateway* find_gateway(std::vector<NamedGateway>& gateways, const std::string& name) {
    for (auto& g : gateways) {
        if (g.name == name) return g.gateway.get();
    }
    throw Error(ErrorCode::Config, "model '" + name + "' is not configured");
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"gender entropy bias audit toolkit"};
    app.require_subcommand(1);

    std::uint64_t seed = 0;
    app.add_option("--seed", seed, "seed for all randomness")->capture_default_str();

    auto* cmd_corpus = app.add_subcommand("corpus", "corpus utilities");
    cmd_corpus->require_subcommand(1);
    auto* cmd_validate = cmd_corpus->add_subcommand("validate", "ingest and print counts");
    std::string corpus_path;
    cmd_validate->add_option("path", corpus_path, "corpus jsonl/csv")->required();

    auto* cmd_run = app.add_subcommand("run", "drive questions through configured models");
    std::string run_corpus, run_config, run_out;
    int run_iterations = 1;
    double run_temperature = 1.0;
    cmd_run->add_option("--corpus", run_corpus)->required();
    cmd_run->add_option("--config", run_config)->required();
    cmd_run->add_option("--out", run_out)->required();
    cmd_run->add_option("--iterations", run_iterations, "Max-Iter")->capture_default_str();
    cmd_run->add_option("--temperature", run_temperature)->capture_default_str();
    bool run_parallel = false;
    cmd_run->add_flag("--parallel-endpoints", run_parallel,
                      "send each question to all endpoints concurrently");

    auto* cmd_metrics = app.add_subcommand("metrics", "score texts into a csv");
    std::string metrics_in, metrics_out, metrics_corpus, metrics_granularity = "word";
    cmd_metrics->add_option("input", metrics_in, "jsonl of {id, text} or responses.jsonl")
        ->required();
    cmd_metrics->add_option("--out", metrics_out, "output csv (default stdout)");
    cmd_metrics->add_option("--corpus", metrics_corpus,
                            "corpus path; adds category/gender/model columns for response input");
    cmd_metrics->add_option("--granularity", metrics_granularity)->capture_default_str();

    auto* cmd_ttest = app.add_subcommand("ttest", "category-level female-vs-male Welch tests");
    std::string ttest_in, ttest_out, ttest_granularity, ttest_corpus;
    cmd_ttest->add_option("--in", ttest_in, "run output dir or metrics csv")->required();
    cmd_ttest->add_option("--out", ttest_out, "output csv")->required();
    cmd_ttest->add_option("--granularity", ttest_granularity);
    cmd_ttest->add_option("--corpus", ttest_corpus, "corpus path (csv input only)");

    auto* cmd_var = app.add_subcommand("variability", "per-question significance fractions");
    std::string var_in, var_out, var_granularity, var_corpus;
    double var_alpha = 0.05;
    cmd_var->add_option("--in", var_in, "run output dir or metrics csv")->required();
    cmd_var->add_option("--out", var_out, "output csv")->required();
    cmd_var->add_option("--alpha", var_alpha)->capture_default_str();
    cmd_var->add_option("--granularity", var_granularity);
    cmd_var->add_option("--corpus", var_corpus, "corpus path (csv input only)");

    auto* cmd_judge = app.add_subcommand("judge", "pairwise blinded comparisons");
    std::string judge_responses, judge_corpus, judge_config, judge_model, judge_out;
    bool judge_corrected = false, judge_swap = false;
    cmd_judge->add_option("--responses", judge_responses, "responses.jsonl from a run")
        ->required();
    cmd_judge->add_option("--corpus", judge_corpus,
                          "corpus path (default: from manifest.json next to the responses)");
    cmd_judge->add_option("--config", judge_config)->required();
    cmd_judge->add_option("--judge-model", judge_model, "endpoint name of the judge")->required();
    cmd_judge->add_option("--out", judge_out, "output dir")->required();
    cmd_judge->add_flag("--corrected-prompt", judge_corrected,
                        "fix the duplicated example branch in the prompt");
    cmd_judge->add_flag("--swap-check", judge_swap, "re-judge with swapped positions");

    auto* cmd_debias = app.add_subcommand("debias", "entropy-maximizing merge chain");
    std::string debias_question, debias_corpus, debias_config, debias_model, debias_out;
    cmd_debias->add_option("--question", debias_question, "single question");
    cmd_debias->add_option("--corpus", debias_corpus, "corpus path (table mode)");
    cmd_debias->add_option("--config", debias_config)->required();
    cmd_debias->add_option("--model", debias_model, "endpoint name")->required();
    cmd_debias->add_option("--out", debias_out, "output dir (corpus mode)");
    std::string debias_markers;
    cmd_debias->add_option("--markers", debias_markers,
                           "marker lexicon csv (default: built-in set, see data/)");

    auto* cmd_report = app.add_subcommand("report", "bundle all tables + markdown summary");
    std::string report_in, report_out, report_granularity;
    cmd_report->add_option("--in", report_in, "run output dir")->required();
    cmd_report->add_option("--out", report_out, "bundle dir (default --in)");
    cmd_report->add_option("--granularity", report_granularity);

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        // usage problems exit 1; --help exits 0
        const int code = app.exit(e);
        return code == 0 ? 0 : 1;
    }

    try {
        if (*cmd_validate) {
            const Corpus corpus = load_corpus(corpus_path);
            print_corpus_summary(corpus);
            return 0;
        }

        if (*cmd_run) {
            const Corpus corpus = load_corpus(run_corpus);
            const ToolConfig config = load_config(run_config);
            auto gateways = make_gateways(config, seed);

            RunManifest manifest;
            manifest.corpus_path = run_corpus;
            manifest.corpus_checksum = corpus.provenance.checksum;
            manifest.seed = seed;
            manifest.temperature = run_temperature;
            for (const auto& g : gateways) manifest.models.push_back(g.name);
            manifest.max_iterations = run_iterations;
            manifest.delay_seconds = config.delay_seconds;

            std::vector<ModelEndpoint> endpoints;
            for (auto& g : gateways) endpoints.push_back({g.name, g.gateway.get()});

            RunOptions options;
            options.clock = pick_clock(config);
            options.parallel_endpoints = run_parallel;
            const RunSummary summary =
                run_experiment(corpus, manifest, endpoints, run_out, options);
            std::cout << "completed " << summary.completed << ", skipped " << summary.skipped
                      << ", failed " << summary.failed << "\n";
            return summary.failed == 0 ? 0 : 2;
        }

        if (*cmd_metrics) {
            const Granularity granularity = granularity_from_name(metrics_granularity);

            // with a corpus at hand, response records gain the pivot columns
            if (!metrics_corpus.empty()) {
                if (metrics_out.empty()) {
                    throw Error(ErrorCode::Config, "--corpus output needs --out");
                }
                const Corpus corpus = load_corpus(metrics_corpus);
                const auto records = load_records(metrics_in);
                const AnalysisTables tables = export_for_analysis(corpus, records, granularity);
                for (const auto& w : tables.warnings) std::cerr << "warning: " << w << "\n";
                write_metrics_csv(metrics_out, tables.metric_rows);
                return 0;
            }

            const MetricsInput input = read_texts_jsonl(metrics_in);
            const auto rows = score_texts(input.texts, granularity);
            csv::Table table;
            table.header = {"id", "w", "t", "entropy", "cttr", "maas"};
            for (std::size_t i = 0; i < rows.size(); ++i) {
                const auto& row = rows[i];
                table.rows.push_back({input.ids[i], std::to_string(row.w), std::to_string(row.t),
                                      row.ok ? format_metric(row.metrics.entropy) : "",
                                      row.ok ? format_metric(row.metrics.cttr) : "",
                                      row.ok ? format_metric(row.metrics.maas) : ""});
            }
            if (metrics_out.empty()) {
                std::cout << csv::join_row(table.header) << "\n";
                for (const auto& r : table.rows) std::cout << csv::join_row(r) << "\n";
            } else {
                csv::write_file(metrics_out, table);
            }
            return 0;
        }

        if (*cmd_ttest || *cmd_var) {
            const std::string in = *cmd_ttest ? ttest_in : var_in;
            const std::string out = *cmd_ttest ? ttest_out : var_out;
            const std::string gran_flag = *cmd_ttest ? ttest_granularity : var_granularity;
            const std::string corpus_flag = *cmd_ttest ? ttest_corpus : var_corpus;

            std::vector<CellSamples> cells_all, cells_first;
            if (fs::is_directory(in)) {
                AnalysisBundle bundle = load_analysis(in, gran_flag);
                cells_all = std::move(bundle.tables.cells_all_iterations);
                cells_first = std::move(bundle.tables.cells_iteration1);
                for (const auto& w : bundle.tables.warnings) std::cerr << "warning: " << w << "\n";
            } else {
                if (corpus_flag.empty()) {
                    throw Error(ErrorCode::Config, "--corpus is required with a metrics csv");
                }
                const Corpus corpus = load_corpus(corpus_flag);
                const auto rows = read_metrics_csv(in);
                cells_all = cells_from_metric_rows(corpus, rows, false);
                cells_first = cells_from_metric_rows(corpus, rows, true);
            }

            if (*cmd_ttest) {
                write_category_tests_csv(out, category_level_tests(cells_first));
            } else {
                const std::size_t dropped = drop_underpowered_pairs(cells_all);
                if (dropped > 0) {
                    std::cerr << "warning: " << dropped
                              << " pair entries lack 2 iterations per gender and were dropped\n";
                }
                write_variability_csv(out, per_question_variability(cells_all, var_alpha));
            }
            return 0;
        }

        if (*cmd_judge) {
            const auto records = load_records(judge_responses);
            std::string corpus_path = judge_corpus;
            if (corpus_path.empty()) {
                const auto manifest_path =
                    fs::path(judge_responses).parent_path() / "manifest.json";
                std::ifstream mf(manifest_path, std::ios::binary);
                if (!mf) {
                    throw Error(ErrorCode::Config,
                                "pass --corpus or keep manifest.json beside the responses");
                }
                std::ostringstream buf;
                buf << mf.rdbuf();
                corpus_path = RunManifest::from_json(buf.str()).corpus_path;
            }
            const Corpus corpus = load_corpus(corpus_path);
            const ToolConfig config = load_config(judge_config);
            auto gateways = make_gateways(config, seed);

            JudgeOptions options;
            options.judge_model_id = judge_model;
            options.corrected_prompt = judge_corrected;
            options.position_swap_check = judge_swap;

            const JudgeRunOutcome outcome =
                run_judge(corpus, records, *find_gateway(gateways, judge_model), options);
            for (const auto& w : outcome.warnings) std::cerr << "warning: " << w << "\n";

            fs::create_directories(judge_out);
            write_verdicts_jsonl((fs::path(judge_out) / "verdicts.jsonl").string(),
                                 outcome.verdicts);
            write_judge_csv((fs::path(judge_out) / "judge_summary.csv").string(), outcome.report);
            return 0;
        }

        if (*cmd_debias) {
            const ToolConfig config = load_config(debias_config);
            auto gateways = make_gateways(config, seed);
            Gateway* gateway = find_gateway(gateways, debias_model);

            DebiasOptions options;
            options.model_id = debias_model;
            if (!debias_markers.empty()) options.lexicon = load_marker_lexicon(debias_markers);

            if (!debias_question.empty()) {
                const DebiasOutcome outcome = debias(debias_question, *gateway, options);
                nlohmann::json trace = nlohmann::json::array();
                for (const auto& c : outcome.candidates) {
                    trace.push_back({{"level", c.level}, {"entropy", c.entropy}});
                }
                const nlohmann::json summary{
                    {"final_entropy", outcome.final_entropy},
                    {"entropy_female", outcome.entropy_female},
                    {"entropy_male", outcome.entropy_male},
                    {"selected_level", outcome.selected_level},
                    {"early_stop", outcome.early_stop},
                    {"trace", trace},
                };
                std::cout << summary.dump(2) << "\n" << outcome.final_text << "\n";
                return 0;
            }
            if (debias_corpus.empty() || debias_out.empty()) {
                throw Error(ErrorCode::Config, "debias needs --question, or --corpus with --out");
            }

            const Corpus corpus = load_corpus(debias_corpus);
            const DebiasEvaluation evaluation = debias_evaluation(corpus, *gateway, options);
            fs::create_directories(debias_out);
            write_debias_runs_jsonl((fs::path(debias_out) / "outcomes.jsonl").string(),
                                    evaluation.runs);
            write_debias_csv((fs::path(debias_out) / "debias_summary.csv").string(), evaluation.rows);
            return 0;
        }

        if (*cmd_report) {
            const std::string out_dir = report_out.empty() ? report_in : report_out;
            fs::create_directories(out_dir);

            AnalysisBundle bundle = load_analysis(report_in, report_granularity);

            ReportInputs inputs;
            inputs.manifest = bundle.manifest;
            inputs.corpus = bundle.corpus;
            inputs.granularity = bundle.granularity;
            inputs.warnings = bundle.tables.warnings;

            write_metrics_csv((fs::path(out_dir) / "metrics.csv").string(),
                              bundle.tables.metric_rows);

            inputs.category_tests = category_level_tests(bundle.tables.cells_iteration1);
            inputs.has_category_tests = true;
            write_category_tests_csv((fs::path(out_dir) / "category_tests.csv").string(),
                                     inputs.category_tests);

            // per-question tests need at least 2 iterations
            bool multi_iteration = false;
            for (const auto& r : bundle.records) multi_iteration |= r.iteration > 1;
            if (multi_iteration) {
                auto cells = bundle.tables.cells_all_iterations;
                const std::size_t dropped = drop_underpowered_pairs(cells);
                if (dropped > 0) {
                    inputs.warnings.push_back(std::to_string(dropped) +
                                              " pair entries lacked 2 iterations per gender");
                }
                inputs.variability = per_question_variability(cells);
                inputs.has_variability = true;
                write_variability_csv((fs::path(out_dir) / "variability.csv").string(),
                                      inputs.variability);
            }

            const std::string verdicts_path = (fs::path(report_in) / "verdicts.jsonl").string();
            if (fs::exists(verdicts_path)) {
                inputs.judge = aggregate_judgements(load_verdicts(verdicts_path));
                inputs.has_judge = true;
                write_judge_csv((fs::path(out_dir) / "judge_summary.csv").string(), inputs.judge);
            }

            const std::string outcomes_path = (fs::path(report_in) / "outcomes.jsonl").string();
            if (fs::exists(outcomes_path)) {
                const auto runs = load_debias_runs(outcomes_path);
                inputs.debias_rows = debias_rows_from_runs(bundle.corpus, runs);
                inputs.has_debias = true;
                write_debias_csv((fs::path(out_dir) / "debias_summary.csv").string(), inputs.debias_rows);
            }

            write_markdown_report((fs::path(out_dir) / "report.md").string(), inputs);
            std::cout << "report written to " << out_dir << "\n";
            return 0;
        }
    } catch (const Error& e) {
        std::cerr << "error: " << e.what() << "\n";
        return exit_code_for(e);
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }

    return 1;
}
