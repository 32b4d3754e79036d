#include "ebias/experiment.hpp"

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <future>
#include <map>
#include <set>
#include <sstream>

#include <json.hpp>

#include "ebias/errors.hpp"

namespace ebias {

std::string record_to_json(const ResponseRecord& r) {
    const nlohmann::json obj{
        {"pair_id", r.pair_id},       {"gender", gender_name(r.gender)},
        {"model", r.model_id},        {"iteration", r.iteration},
        {"question", r.question_text}, {"response", r.response_text},
        {"created_at", r.created_at}, {"status", r.status},
    };
    return obj.dump();
}

ResponseRecord record_from_json(const std::string& line) {
    const nlohmann::json obj = nlohmann::json::parse(line);
    ResponseRecord r;
    r.pair_id = obj.at("pair_id").get<std::string>();
    r.gender = gender_from_name(obj.at("gender").get<std::string>());
    r.model_id = obj.at("model").get<std::string>();
    r.iteration = obj.at("iteration").get<int>();
    r.question_text = obj.value("question", "");
    r.response_text = obj.value("response", "");
    r.created_at = obj.value("created_at", "");
    r.status = obj.value("status", "ok");
    return r;
}

std::vector<ResponseRecord> load_records(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw Error(ErrorCode::Io, "cannot open " + path);
    std::vector<ResponseRecord> records;
    std::string line;
    while (std::getline(in, line)) {
        if (line.empty()) continue;
        records.push_back(record_from_json(line));
    }
    return records;
}

std::string RunManifest::to_json() const {
    const nlohmann::json obj{
        {"corpus_path", corpus_path},
        {"corpus_checksum", corpus_checksum},
        {"seed", seed},
        {"temperature", temperature},
        {"models", models},
        {"max_iterations", max_iterations},
        {"delay_seconds", delay_seconds},
        {"system_prompt_template", system_prompt_template},
        {"granularity", granularity},
    };
    return obj.dump(2) + "\n";
}

RunManifest RunManifest::from_json(const std::string& text) {
    const nlohmann::json obj = nlohmann::json::parse(text);
    RunManifest m;
    m.corpus_path = obj.value("corpus_path", "");
    m.corpus_checksum = obj.value("corpus_checksum", "");
    m.seed = obj.value("seed", std::uint64_t{0});
    m.temperature = obj.value("temperature", 1.0);
    if (obj.contains("models")) m.models = obj["models"].get<std::vector<std::string>>();
    m.max_iterations = obj.value("max_iterations", 1);
    m.delay_seconds = obj.value("delay_seconds", 60.0);
    m.system_prompt_template =
        obj.value("system_prompt_template", std::string(kDefaultSystemPromptTemplate));
    m.granularity = obj.value("granularity", "word");
    return m;
}

std::string render_system_prompt(std::string_view prompt_template, Category category) {
    std::string out(prompt_template);
    std::string name = category_name(category);
    std::transform(name.begin(), name.end(), name.begin(),
                   [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
    const std::string placeholder = "<category>";
    const std::size_t pos = out.find(placeholder);
    if (pos != std::string::npos) out.replace(pos, placeholder.size(), name);
    return out;
}

Clock system_clock_utc() {
    return [] {
        const auto now = std::chrono::system_clock::now();
        const std::time_t t = std::chrono::system_clock::to_time_t(now);
        std::tm tm{};
        gmtime_r(&t, &tm);
        char buf[80];
        std::snprintf(buf, sizeof(buf), "%04d-%02d-%02dT%02d:%02d:%02dZ", tm.tm_year + 1900,
                      tm.tm_mon + 1, tm.tm_mday, tm.tm_hour, tm.tm_min, tm.tm_sec);
        return std::string(buf);
    };
}

Clock deterministic_clock() {
    auto counter = std::make_shared<std::atomic<std::uint64_t>>(0);
    return [counter] {
        const std::uint64_t n = counter->fetch_add(1);
        char buf[40];
        std::snprintf(buf, sizeof(buf), "2025-01-01T00:00:00Z#%06llu",
                      static_cast<unsigned long long>(n));
        return std::string(buf);
    };
}

namespace {

std::string tuple_key(std::string_view pair_id, Gender gender, std::string_view model,
                      int iteration) {
    std::string key(pair_id);
    key += '\x1f';
    key += gender_name(gender);
    key += '\x1f';
    key += model;
    key += '\x1f';
    key += std::to_string(iteration);
    return key;
}

} // namespace

namespace {

struct PendingCall {
    ChatRequest request;
    ResponseRecord record;
    Gateway* gateway = nullptr;
    std::string key;
};

void finish_call(PendingCall& call) {
    try {
        call.record.response_text = call.gateway->complete(call.request).text;
        call.record.status = "ok";
    } catch (const Error& e) {
        call.record.status = error_code_name(e.code());
    }
}

} // namespace

RunSummary run_experiment(const Corpus& corpus, const RunManifest& manifest,
                          std::span<const ModelEndpoint> endpoints, const std::string& out_dir,
                          const RunOptions& options) {
    namespace fs = std::filesystem;
    fs::create_directories(out_dir);
    const std::string responses_path = (fs::path(out_dir) / "responses.jsonl").string();
    const std::string manifest_path = (fs::path(out_dir) / "manifest.json").string();

    {
        std::ofstream mf(manifest_path, std::ios::binary);
        if (!mf) throw Error(ErrorCode::Io, "cannot write " + manifest_path);
        mf << manifest.to_json();
    }

    RunSummary summary;
    std::set<std::string> done;
    if (fs::exists(responses_path)) {
        summary.records = load_records(responses_path);
        for (const auto& r : summary.records) {
            done.insert(tuple_key(r.pair_id, r.gender, r.model_id, r.iteration));
        }
        summary.skipped = summary.records.size();
    }

    std::ofstream out(responses_path, std::ios::binary | std::ios::app);
    if (!out) throw Error(ErrorCode::Io, "cannot write " + responses_path);

    for (int iteration = 1; iteration <= manifest.max_iterations; ++iteration) {
        // fresh order per iteration, reproducible from the manifest seed
        const ShuffledOrder order =
            shuffle_order(corpus, manifest.seed ^ static_cast<std::uint64_t>(iteration));
        for (const WorkItem& item : order.items) {
            const QuestionPair* pair = corpus.find(item.pair_id);
            if (!pair) continue;

            // one pending call per endpoint, timestamps taken at submission
            // so record content does not depend on completion order
            std::vector<PendingCall> calls;
            for (const ModelEndpoint& endpoint : endpoints) {
                const std::string key =
                    tuple_key(item.pair_id, item.gender, endpoint.name, iteration);
                if (done.count(key)) continue;

                PendingCall call;
                call.gateway = endpoint.gateway;
                call.key = key;
                call.request.model_id = endpoint.name;
                call.request.system_prompt =
                    render_system_prompt(manifest.system_prompt_template, pair->category);
                call.request.user_message = pair->text_for(item.gender);
                call.request.temperature = manifest.temperature;
                call.request.sample_index = static_cast<std::uint64_t>(iteration);

                call.record.pair_id = item.pair_id;
                call.record.gender = item.gender;
                call.record.model_id = endpoint.name;
                call.record.iteration = iteration;
                call.record.question_text = call.request.user_message;
                call.record.created_at = options.clock();
                calls.push_back(std::move(call));
            }

            if (options.parallel_endpoints && calls.size() > 1) {
                std::vector<std::future<void>> futures;
                futures.reserve(calls.size());
                for (auto& call : calls) {
                    futures.push_back(
                        std::async(std::launch::async, [&call] { finish_call(call); }));
                }
                for (auto& future : futures) future.get();
            } else {
                for (auto& call : calls) finish_call(call);
            }

            // single writer appends in endpoint order regardless of completion
            for (auto& call : calls) {
                (call.record.ok() ? summary.completed : summary.failed) += 1;
                out << record_to_json(call.record) << '\n';
                out.flush();
                done.insert(call.key);
                summary.records.push_back(std::move(call.record));
            }
        }
    }
    return summary;
}

double metric_value(const LexicalMetrics& metrics, Metric metric) {
    switch (metric) {
        case Metric::Entropy: return metrics.entropy;
        case Metric::Cttr: return metrics.cttr;
        case Metric::Maas: return metrics.maas;
    }
    return 0.0;
}

AnalysisTables export_for_analysis(const Corpus& corpus,
                                   const std::vector<ResponseRecord>& records,
                                   Granularity granularity) {
    AnalysisTables tables;

    // score the successful records in one batch
    std::vector<std::size_t> record_index;
    std::vector<std::string> texts;
    for (std::size_t i = 0; i < records.size(); ++i) {
        if (!records[i].ok()) {
            tables.warnings.push_back("failed record skipped: " + records[i].pair_id + "/" +
                                      gender_name(records[i].gender) + "/" + records[i].model_id +
                                      "#" + std::to_string(records[i].iteration) + " (" +
                                      records[i].status + ")");
            continue;
        }
        record_index.push_back(i);
        texts.push_back(records[i].response_text);
    }
    const std::vector<TextMetricsRow> scored = score_texts(texts, granularity);

    // (model, pair, iteration, gender) -> metrics of scorable rows; the set
    // tracks rows that existed but were excluded so pivoting can tell
    // "excluded" apart from "never produced"
    std::map<std::string, const MetricsTableRow*> by_key;
    std::set<std::string> excluded;

    tables.metric_rows.reserve(scored.size());
    for (std::size_t k = 0; k < scored.size(); ++k) {
        const ResponseRecord& record = records[record_index[k]];
        const QuestionPair* pair = corpus.find(record.pair_id);
        if (!pair) {
            tables.warnings.push_back("record for unknown pair " + record.pair_id + " skipped");
            continue;
        }
        const std::string key =
            tuple_key(record.pair_id, record.gender, record.model_id, record.iteration);
        if (!scored[k].ok) {
            tables.warnings.push_back("response excluded (" + scored[k].skip_reason + " text): " +
                                      record.pair_id + "/" + gender_name(record.gender) + "/" +
                                      record.model_id + "#" + std::to_string(record.iteration));
            excluded.insert(key);
            continue;
        }
        MetricsTableRow row;
        row.pair_id = record.pair_id;
        row.category = category_name(pair->category);
        row.gender = record.gender;
        row.model_id = record.model_id;
        row.iteration = record.iteration;
        row.w = scored[k].w;
        row.t = scored[k].t;
        row.metrics = scored[k].metrics;
        tables.metric_rows.push_back(std::move(row));
    }
    for (std::size_t i = 0; i < records.size(); ++i) {
        if (!records[i].ok()) {
            excluded.insert(tuple_key(records[i].pair_id, records[i].gender, records[i].model_id,
                                      records[i].iteration));
        }
    }
    for (const auto& row : tables.metric_rows) {
        by_key[tuple_key(row.pair_id, row.gender, row.model_id, row.iteration)] = &row;
    }

    // deterministic orderings for the pivot
    std::vector<std::string> models;
    std::set<int> iterations;
    for (const auto& row : tables.metric_rows) {
        if (std::find(models.begin(), models.end(), row.model_id) == models.end()) {
            models.push_back(row.model_id);
        }
        iterations.insert(row.iteration);
    }
    std::sort(models.begin(), models.end());

    auto build = [&](bool only_first_iteration) {
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
                            const auto f_it =
                                by_key.find(tuple_key(pair->pair_id, Gender::Female, model, iteration));
                            const auto m_it =
                                by_key.find(tuple_key(pair->pair_id, Gender::Male, model, iteration));
                            const bool f_ok = f_it != by_key.end();
                            const bool m_ok = m_it != by_key.end();
                            if (f_ok && m_ok) {
                                samples.female.push_back(metric_value(f_it->second->metrics, metric));
                                samples.male.push_back(metric_value(m_it->second->metrics, metric));
                                continue;
                            }
                            if (!f_ok && !m_ok) continue; // neither side scorable or produced
                            const std::string missing_key =
                                tuple_key(pair->pair_id, f_ok ? Gender::Male : Gender::Female,
                                          model, iteration);
                            if (excluded.count(missing_key)) {
                                if (metric == Metric::Entropy) {
                                    tables.warnings.push_back(
                                        "pivot row dropped (counterpart excluded): " +
                                        pair->pair_id + "/" + model + "#" +
                                        std::to_string(iteration));
                                }
                                continue;
                            }
                            throw Error(ErrorCode::MissingCounterpart,
                                        "no " + std::string(f_ok ? "male" : "female") +
                                            " record for pair " + pair->pair_id + ", model " +
                                            model + ", iteration " + std::to_string(iteration));
                        }
                        if (!samples.female.empty()) cell.pairs.push_back(std::move(samples));
                    }
                    if (!cell.pairs.empty()) cells.push_back(std::move(cell));
                }
            }
        }
        return cells;
    };

    tables.cells_all_iterations = build(false);
    tables.cells_iteration1 = build(true);
    return tables;
}

} // namespace ebias
