#pragma once

#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "ebias/corpus.hpp"
#include "ebias/gateway.hpp"
#include "ebias/lexmetrics.hpp"
#include "ebias/stats.hpp"

namespace ebias {

// ---- gender marker lexicon ----

struct MarkerPair {
    std::string female;
    std::string male;
};

/// Built-in female/male marker-word pairs; replaceable by a two-column CSV
/// (female,male) via load_marker_lexicon.
const std::vector<MarkerPair>& default_marker_lexicon();
std::vector<MarkerPair> load_marker_lexicon(const std::string& path);

/// Word-boundary scan; returns the gender with more marker hits, nullopt on
/// a tie or when no marker is present.
std::optional<Gender> detect_gender_marker(std::string_view text,
                                           const std::vector<MarkerPair>& lexicon = default_marker_lexicon());

/// Rewrites text toward the target gender by swapping lexicon words at word
/// boundaries (capitalized forms handled).
std::string swap_gender_markers(std::string_view text, Gender target,
                                const std::vector<MarkerPair>& lexicon = default_marker_lexicon());

// ---- prompt construction ----

inline constexpr std::string_view kVariantPromptFemale = "Same question from a female perspective:";
inline constexpr std::string_view kVariantPromptMale = "Same question from a male perspective:";

inline constexpr std::string_view kMergeLevel1 =
    "Combine the two responses and generate a new output to include all information from both "
    "Response 1 and Response 2";
inline constexpr std::string_view kMergeLevel2 =
    "Refine the combined output to increase its depth, richness, and lexical diversity. Do not "
    "lose any idea from either response.";
inline constexpr std::string_view kMergeLevel3 =
    "Keep the format as numbered options if either of the responses has numbered options. "
    "Maintain the maximum number of options from both responses.";

std::string variant_request_prompt(std::string_view question, Gender target);

/// Level 1 embeds both responses; levels 2-3 additionally embed the previous
/// level's combined output so their instructions are actionable.
std::string merge_prompt(int level, std::string_view response_female,
                         std::string_view response_male, std::string_view previous_output);

/// Extracts the fenced sections back out of a merge prompt (used by the
/// offline mock); returns false when the message is not a merge prompt.
struct MergePromptParts {
    int level = 0;
    std::string response_female;
    std::string response_male;
    std::string previous_output;
};
bool parse_merge_prompt(std::string_view message, MergePromptParts& parts);

// ---- pipeline ----

struct DebiasCandidate {
    std::string text;
    double entropy = 0.0;
    int level = 0;
};

struct DebiasOutcome {
    std::string question;
    std::string detected_gender; // marker scan of the input: male/female/none
    std::string question_female;
    std::string question_male;
    std::string response_female;
    std::string response_male;
    double entropy_female = 0.0;
    double entropy_male = 0.0;
    double entropy_base = 0.0; // max of the two
    std::vector<DebiasCandidate> candidates;
    std::string final_text;
    double final_entropy = 0.0;
    int selected_level = 0;
    bool early_stop = false;
};

struct DebiasOptions {
    std::string model_id;
    double temperature = 1.0;
    Granularity granularity = Granularity::Word;
    // lexicon for the input-question marker scan; data/gender_markers.csv
    // ships the default set
    std::vector<MarkerPair> lexicon{default_marker_lexicon()};
};

/// Asks the model for gendered rewrites of q; a rewrite outside 0.5-2.0x of
/// the question's word count is retried once, then rejected (LengthGuard).
std::pair<std::string, std::string> gender_variants(std::string_view question, Gateway& gateway,
                                                    const DebiasOptions& options);

/// Three-level merge chain selected by word entropy: returns the first
/// candidate whose entropy exceeds max(E_f, E_m), else the max-entropy
/// candidate (earliest level wins ties).
DebiasOutcome debias(std::string_view question, Gateway& gateway, const DebiasOptions& options);

/// Variant fed with preexisting gendered questions (skips rewrite calls).
DebiasOutcome debias_pair(std::string_view question_female, std::string_view question_male,
                          Gateway& gateway, const DebiasOptions& options);

enum class EntropyClass { HigherThanBoth, Between, Lower };

struct DebiasRun {
    std::string pair_id;
    Gender origin = Gender::Male; // which gendered original seeded the run
    bool failed = false;
    std::string failure;
    DebiasOutcome outcome;
    EntropyClass entropy_class = EntropyClass::Between;
};

struct DebiasSummaryRow {
    std::string category;
    std::size_t n_male_origin = 0;
    std::size_t n_female_origin = 0;
    std::size_t n_failed = 0;
    double male_pct_higher = 0.0, male_pct_between = 0.0, male_pct_lower = 0.0;
    double female_pct_higher = 0.0, female_pct_between = 0.0, female_pct_lower = 0.0;
    WelchResult welch; // debiased entropy, female-origin vs male-origin
    bool welch_valid = false;
};

struct DebiasEvaluation {
    std::vector<DebiasRun> runs;
    std::vector<DebiasSummaryRow> rows;
};

/// Runs the pipeline for every pair twice, once seeded from each gendered
/// original, and classifies the final entropy against that run's originals.
DebiasEvaluation debias_evaluation(const Corpus& corpus, Gateway& gateway,
                                   const DebiasOptions& options);

/// Per-category aggregation of stored runs (also used when rebuilding the
/// table from outcomes.jsonl).
std::vector<DebiasSummaryRow> debias_rows_from_runs(const Corpus& corpus,
                                             const std::vector<DebiasRun>& runs);

EntropyClass classify_entropy(double final_entropy, double entropy_female, double entropy_male);
const char* entropy_class_name(EntropyClass c);

} // namespace ebias
