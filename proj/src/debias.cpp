#include "ebias/debias.hpp"

#include <algorithm>
#include <cctype>
#include <map>

#include "ebias/csv.hpp"
#include "ebias/errors.hpp"

namespace ebias {

const std::vector<MarkerPair>& default_marker_lexicon() {
    static const std::vector<MarkerPair> lexicon = {
        {"woman", "man"},       {"women", "men"},
        {"female", "male"},     {"females", "males"},
        {"she", "he"},          {"her", "him"},
        {"hers", "his"},        {"herself", "himself"},
        {"girl", "boy"},        {"girls", "boys"},
        {"sister", "brother"},  {"sisters", "brothers"},
        {"mother", "father"},   {"mothers", "fathers"},
        {"mom", "dad"},         {"mum", "dad"},
        {"wife", "husband"},    {"daughter", "son"},
        {"daughters", "sons"},  {"aunt", "uncle"},
        {"grandmother", "grandfather"}, {"grandma", "grandpa"},
        {"girlfriend", "boyfriend"},    {"lady", "gentleman"},
        {"madam", "sir"},       {"ms", "mr"},
        {"mrs", "mr"},          {"queen", "king"},
        {"niece", "nephew"},    {"widow", "widower"},
    };
    return lexicon;
}

std::vector<MarkerPair> load_marker_lexicon(const std::string& path) {
    const csv::Table table = csv::read_file(path);
    if (table.column("female") < 0 || table.column("male") < 0) {
        throw Error(ErrorCode::MissingColumn, path + ": lexicon needs female,male columns");
    }
    const auto f = static_cast<std::size_t>(table.column("female"));
    const auto m = static_cast<std::size_t>(table.column("male"));
    std::vector<MarkerPair> lexicon;
    for (const auto& row : table.rows) {
        if (row.size() <= std::max(f, m)) continue;
        lexicon.push_back({row[f], row[m]});
    }
    if (lexicon.empty()) throw Error(ErrorCode::InvalidValue, path + ": empty lexicon");
    return lexicon;
}

namespace {

std::string lower_ascii(std::string_view s) {
    std::string out(s);
    std::transform(out.begin(), out.end(), out.begin(),
                   [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
    return out;
}

bool word_char(char c) {
    return std::isalnum(static_cast<unsigned char>(c)) || c == '\'' ||
           static_cast<unsigned char>(c) >= 0x80;
}

// next word [start, end) in text from position i; false at end of text
bool next_word(std::string_view text, std::size_t& i, std::size_t& start, std::size_t& end) {
    while (i < text.size() && !word_char(text[i])) ++i;
    if (i >= text.size()) return false;
    start = i;
    while (i < text.size() && word_char(text[i])) ++i;
    end = i;
    return true;
}

} // namespace

std::optional<Gender> detect_gender_marker(std::string_view text,
                                           const std::vector<MarkerPair>& lexicon) {
    std::size_t female_hits = 0;
    std::size_t male_hits = 0;
    std::size_t i = 0, start = 0, end = 0;
    while (next_word(text, i, start, end)) {
        const std::string word = lower_ascii(text.substr(start, end - start));
        for (const auto& pair : lexicon) {
            if (word == pair.female) ++female_hits;
            if (word == pair.male) ++male_hits;
        }
    }
    if (female_hits == male_hits) return std::nullopt;
    return female_hits > male_hits ? Gender::Female : Gender::Male;
}

std::string swap_gender_markers(std::string_view text, Gender target,
                                const std::vector<MarkerPair>& lexicon) {
    std::string out;
    out.reserve(text.size());
    std::size_t i = 0, start = 0, end = 0;
    std::size_t copied = 0;
    while (next_word(text, i, start, end)) {
        out.append(text.substr(copied, start - copied));
        const std::string_view raw = text.substr(start, end - start);
        const std::string word = lower_ascii(raw);
        std::string replacement(raw);
        for (const auto& pair : lexicon) {
            const std::string& from = target == Gender::Female ? pair.male : pair.female;
            const std::string& to = target == Gender::Female ? pair.female : pair.male;
            if (word == from) {
                replacement = to;
                if (!raw.empty() && std::isupper(static_cast<unsigned char>(raw[0])) &&
                    !replacement.empty()) {
                    replacement[0] =
                        static_cast<char>(std::toupper(static_cast<unsigned char>(replacement[0])));
                }
                break;
            }
        }
        out += replacement;
        copied = end;
    }
    out.append(text.substr(copied));
    return out;
}

std::string variant_request_prompt(std::string_view question, Gender target) {
    std::string prompt(target == Gender::Female ? kVariantPromptFemale : kVariantPromptMale);
    prompt += ' ';
    prompt += question;
    return prompt;
}

namespace {

constexpr std::string_view kFenceOpen = "\n<<<\n";
constexpr std::string_view kFenceClose = "\n>>>";

void append_fenced(std::string& out, std::string_view label, std::string_view body) {
    out += "\n\n";
    out += label;
    out += kFenceOpen;
    out += body;
    out += kFenceClose;
}

bool extract_fenced(std::string_view message, std::string_view label, std::string& body) {
    const std::size_t lpos = message.find(label);
    if (lpos == std::string_view::npos) return false;
    const std::size_t open = message.find(kFenceOpen, lpos);
    if (open == std::string_view::npos) return false;
    const std::size_t start = open + kFenceOpen.size();
    const std::size_t close = message.find(kFenceClose, start);
    if (close == std::string_view::npos) return false;
    body = std::string(message.substr(start, close - start));
    return true;
}

std::string_view merge_instruction(int level) {
    switch (level) {
        case 1: return kMergeLevel1;
        case 2: return kMergeLevel2;
        default: return kMergeLevel3;
    }
}

} // namespace

std::string merge_prompt(int level, std::string_view response_female,
                         std::string_view response_male, std::string_view previous_output) {
    std::string prompt(merge_instruction(level));
    append_fenced(prompt, "Response 1:", response_female);
    append_fenced(prompt, "Response 2:", response_male);
    if (level > 1) append_fenced(prompt, "Combined output:", previous_output);
    return prompt;
}

bool parse_merge_prompt(std::string_view message, MergePromptParts& parts) {
    int level = 0;
    if (message.rfind(kMergeLevel1, 0) == 0) level = 1;
    else if (message.rfind(kMergeLevel2, 0) == 0) level = 2;
    else if (message.rfind(kMergeLevel3, 0) == 0) level = 3;
    if (level == 0) return false;

    parts.level = level;
    if (!extract_fenced(message, "Response 1:", parts.response_female)) return false;
    if (!extract_fenced(message, "Response 2:", parts.response_male)) return false;
    if (level > 1 && !extract_fenced(message, "Combined output:", parts.previous_output)) {
        return false;
    }
    return true;
}

namespace {

std::size_t count_words(std::string_view text) {
    std::size_t n = 0, i = 0, start = 0, end = 0;
    while (next_word(text, i, start, end)) ++n;
    return n;
}

std::string request_variant(std::string_view question, Gender target, Gateway& gateway,
                            const DebiasOptions& options) {
    const std::size_t q_words = count_words(question);
    for (std::uint64_t attempt = 0; attempt < 2; ++attempt) {
        ChatRequest req;
        req.model_id = options.model_id;
        req.user_message = variant_request_prompt(question, target);
        req.temperature = options.temperature;
        req.sample_index = attempt;
        const std::string variant = gateway.complete(req).text;
        const std::size_t v_words = count_words(variant);
        // substance guard: rewrite should stay within 0.5-2.0x of the question
        if (q_words == 0 || (v_words * 2 >= q_words && v_words <= q_words * 2)) {
            return variant;
        }
    }
    throw Error(ErrorCode::LengthGuard,
                std::string("gendered rewrite kept violating the length ratio for '") +
                    std::string(question.substr(0, 40)) + "...'");
}

std::string request_response(std::string_view question, Gateway& gateway,
                             const DebiasOptions& options) {
    ChatRequest req;
    req.model_id = options.model_id;
    req.user_message = std::string(question);
    req.temperature = options.temperature;
    return gateway.complete(req).text;
}

double word_entropy(std::string_view text, Granularity granularity) {
    return shannon_entropy(tokenize(text, granularity));
}

} // namespace

std::pair<std::string, std::string> gender_variants(std::string_view question, Gateway& gateway,
                                                    const DebiasOptions& options) {
    if (question.empty() || count_words(question) == 0) {
        throw Error(ErrorCode::EmptyText, "gender_variants requires a non-empty question");
    }
    std::string q_female = request_variant(question, Gender::Female, gateway, options);
    std::string q_male = request_variant(question, Gender::Male, gateway, options);
    return {std::move(q_female), std::move(q_male)};
}

DebiasOutcome debias_pair(std::string_view question_female, std::string_view question_male,
                          Gateway& gateway, const DebiasOptions& options) {
    DebiasOutcome outcome;
    outcome.question_female = std::string(question_female);
    outcome.question_male = std::string(question_male);

    outcome.response_female = request_response(question_female, gateway, options);
    outcome.response_male = request_response(question_male, gateway, options);
    outcome.entropy_female = word_entropy(outcome.response_female, options.granularity);
    outcome.entropy_male = word_entropy(outcome.response_male, options.granularity);
    outcome.entropy_base = std::max(outcome.entropy_female, outcome.entropy_male);

    std::string previous;
    for (int level = 1; level <= 3; ++level) {
        ChatRequest req;
        req.model_id = options.model_id;
        req.user_message =
            merge_prompt(level, outcome.response_female, outcome.response_male, previous);
        req.temperature = options.temperature;
        const std::string candidate_text = gateway.complete(req).text;
        const double entropy = word_entropy(candidate_text, options.granularity);
        outcome.candidates.push_back({candidate_text, entropy, level});
        previous = candidate_text;

        if (entropy > outcome.entropy_base) {
            outcome.final_text = candidate_text;
            outcome.final_entropy = entropy;
            outcome.selected_level = level;
            outcome.early_stop = true;
            return outcome;
        }
    }

    // no candidate beat the base entropy: keep the max, earliest level wins ties
    const DebiasCandidate* best = &outcome.candidates.front();
    for (const auto& candidate : outcome.candidates) {
        if (candidate.entropy > best->entropy) best = &candidate;
    }
    outcome.final_text = best->text;
    outcome.final_entropy = best->entropy;
    outcome.selected_level = best->level;
    outcome.early_stop = false;
    return outcome;
}

DebiasOutcome debias(std::string_view question, Gateway& gateway, const DebiasOptions& options) {
    const auto detected = detect_gender_marker(question, options.lexicon);
    auto [q_female, q_male] = gender_variants(question, gateway, options);
    DebiasOutcome outcome = debias_pair(q_female, q_male, gateway, options);
    outcome.question = std::string(question);
    outcome.detected_gender = detected ? gender_name(*detected) : "none";
    return outcome;
}

EntropyClass classify_entropy(double final_entropy, double entropy_female, double entropy_male) {
    const double hi = std::max(entropy_female, entropy_male);
    const double lo = std::min(entropy_female, entropy_male);
    if (final_entropy > hi) return EntropyClass::HigherThanBoth;
    if (final_entropy < lo) return EntropyClass::Lower;
    return EntropyClass::Between;
}

const char* entropy_class_name(EntropyClass c) {
    switch (c) {
        case EntropyClass::HigherThanBoth: return "higher_than_both";
        case EntropyClass::Between: return "between";
        case EntropyClass::Lower: return "lower";
    }
    return "?";
}

std::vector<DebiasSummaryRow> debias_rows_from_runs(const Corpus& corpus,
                                             const std::vector<DebiasRun>& runs) {
    std::vector<DebiasSummaryRow> rows;
    for (Category category : kAllCategories) {
        DebiasSummaryRow row;
        row.category = category_name(category);

        std::size_t male_counts[3] = {0, 0, 0};
        std::size_t female_counts[3] = {0, 0, 0};
        std::vector<double> male_final, female_final;
        for (const auto& run : runs) {
            const QuestionPair* pair = corpus.find(run.pair_id);
            if (!pair || pair->category != category) continue;
            if (run.failed) {
                ++row.n_failed;
                continue;
            }
            const auto slot = static_cast<std::size_t>(run.entropy_class);
            if (run.origin == Gender::Male) {
                ++male_counts[slot];
                ++row.n_male_origin;
                male_final.push_back(run.outcome.final_entropy);
            } else {
                ++female_counts[slot];
                ++row.n_female_origin;
                female_final.push_back(run.outcome.final_entropy);
            }
        }
        if (row.n_male_origin + row.n_female_origin == 0 && row.n_failed == 0) continue;

        auto pct = [](std::size_t k, std::size_t n) {
            return n == 0 ? 0.0 : 100.0 * static_cast<double>(k) / static_cast<double>(n);
        };
        row.male_pct_higher = pct(male_counts[0], row.n_male_origin);
        row.male_pct_between = pct(male_counts[1], row.n_male_origin);
        row.male_pct_lower = pct(male_counts[2], row.n_male_origin);
        row.female_pct_higher = pct(female_counts[0], row.n_female_origin);
        row.female_pct_between = pct(female_counts[1], row.n_female_origin);
        row.female_pct_lower = pct(female_counts[2], row.n_female_origin);

        if (female_final.size() >= 2 && male_final.size() >= 2) {
            row.welch = welch_t(female_final, male_final);
            row.welch_valid = true;
        }
        rows.push_back(std::move(row));
    }
    return rows;
}

DebiasEvaluation debias_evaluation(const Corpus& corpus, Gateway& gateway,
                                   const DebiasOptions& options) {
    DebiasEvaluation evaluation;

    for (const auto& pair : corpus.pairs) {
        for (Gender origin : {Gender::Male, Gender::Female}) {
            DebiasRun run;
            run.pair_id = pair.pair_id;
            run.origin = origin;
            try {
                run.outcome = debias(pair.text_for(origin), gateway, options);
                run.entropy_class = classify_entropy(run.outcome.final_entropy,
                                                     run.outcome.entropy_female,
                                                     run.outcome.entropy_male);
            } catch (const Error& e) {
                run.failed = true;
                run.failure = e.what();
            }
            evaluation.runs.push_back(std::move(run));
        }
    }

    evaluation.rows = debias_rows_from_runs(corpus, evaluation.runs);
    return evaluation;
}

} // namespace ebias
