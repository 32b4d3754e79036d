#pragma once

#include <cstdint>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

namespace ebias {

enum class Granularity { Word, Character };

const char* granularity_name(Granularity g);
Granularity granularity_from_name(std::string_view name);

/// Token frequency summary of one text: w tokens total, t distinct.
struct TokenStats {
    std::uint64_t w = 0;
    std::uint64_t t = 0;
    std::unordered_map<std::string, std::uint64_t> counts;
};

struct LexicalMetrics {
    double entropy = 0.0; // Shannon word entropy, base 2 (bits)
    double cttr = 0.0;    // corrected type-token ratio t/sqrt(2w)
    double maas = 0.0;    // (log10 w - log10 t) / (log10 w)^2
};

/// Word granularity: lowercase, split on Unicode whitespace, strip
/// leading/trailing punctuation per token, drop empties. Character
/// granularity: every Unicode scalar value after lowercasing is a token.
/// Lowercasing covers ASCII and Latin-1.
TokenStats tokenize(std::string_view text, Granularity granularity = Granularity::Word);

/// H = log2(N) - sum(N_x * log2(N_x)) / N. Throws EmptyText when w = 0.
double shannon_entropy(const TokenStats& stats);

/// t / sqrt(2w). Throws EmptyText when w = 0.
double cttr(const TokenStats& stats);

/// (log10 w - log10 t) / (log10 w)^2. Throws EmptyText when w = 0 and
/// DegenerateLength when w = 1 (the denominator vanishes).
double maas(const TokenStats& stats);

LexicalMetrics metrics_for(std::string_view text, Granularity granularity = Granularity::Word);

/// Per-text result for batch scoring; ok=false rows carry the reason
/// ("empty" or "degenerate") instead of metric values.
struct TextMetricsRow {
    std::uint64_t w = 0;
    std::uint64_t t = 0;
    LexicalMetrics metrics;
    bool ok = false;
    std::string skip_reason;
};

TextMetricsRow score_text(std::string_view text, Granularity granularity);

/// OpenMP batch kernel; one row per input text, input order preserved.
std::vector<TextMetricsRow> score_texts(const std::vector<std::string>& texts,
                                        Granularity granularity);

/// Serial reference for the batch kernel, kept for tests and benchmarks.
std::vector<TextMetricsRow> score_texts_serial(const std::vector<std::string>& texts,
                                               Granularity granularity);

} // namespace ebias
