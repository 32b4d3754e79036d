#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace ebias {

enum class Metric { Entropy, Cttr, Maas };
inline constexpr Metric kAllMetrics[] = {Metric::Entropy, Metric::Cttr, Metric::Maas};

const char* metric_label(Metric m); // "Shannon Entropy" / "CTTR" / "Maas"
const char* metric_key(Metric m);   // "entropy" / "cttr" / "maas"

/// Welch's unequal-variance two-sample t-test, female-minus-male sign
/// convention: t > 0 means the first sample's mean is larger.
struct WelchResult {
    double t_stat = 0.0;
    double df = 0.0;
    double p_value = 1.0;
    // both samples constant but different: t = +/-inf, p = 0 by convention
    bool degenerate_variance = false;
};

WelchResult welch_t(std::span<const double> sample_f, std::span<const double> sample_m);

/// 2x2 contingency table, rows [a b; c d].
struct Table2x2 {
    std::uint64_t a = 0, b = 0, c = 0, d = 0;
};

struct FisherResult {
    double odds_ratio = 0.0; // (a*d)/(b*c); +inf when only bc = 0, NaN when both products 0
    double p_value = 1.0;    // two-sided: sum of hypergeometric probs <= observed
};

FisherResult fisher_exact(const Table2x2& table);

/// Metric samples for one question pair: one value per iteration and gender.
struct PairSamples {
    std::string pair_id;
    std::vector<double> female;
    std::vector<double> male;
};

/// All pairs for one (category, model, metric) report cell.
struct CellSamples {
    std::string category;
    std::string model;
    Metric metric = Metric::Entropy;
    std::vector<PairSamples> pairs;
};

struct CategoryTestRow {
    std::string category;
    std::string model;
    Metric metric;
    WelchResult welch;
    std::size_t n_female = 0;
    std::size_t n_male = 0;
};

struct CategoryTestReport {
    std::vector<CategoryTestRow> rows;
};

/// Pooled female-vs-male Welch test per cell over single-iteration values.
CategoryTestReport category_level_tests(const std::vector<CellSamples>& cells);

struct VariabilityRow {
    std::string category;
    std::string model;
    Metric metric;
    std::size_t n_pairs = 0;
    std::size_t n_significant = 0;
    double fraction = 0.0;
};

struct VariabilityReport {
    double alpha = 0.05;
    std::vector<VariabilityRow> rows;
};

/// Per-question Welch test across iterations; reports the fraction of pairs
/// with p <= alpha per cell. Per-pair tests run under OpenMP with results
/// merged in pair order.
VariabilityReport per_question_variability(const std::vector<CellSamples>& cells,
                                           double alpha = 0.05);

/// Serial reference for the per-pair test loop, kept for tests and benchmarks.
VariabilityReport per_question_variability_serial(const std::vector<CellSamples>& cells,
                                                  double alpha = 0.05);

/// Removes pairs with fewer than min_values iterations on either side (they
/// cannot carry a test) and then empty cells; returns the number of removed
/// pair entries across cells.
std::size_t drop_underpowered_pairs(std::vector<CellSamples>& cells,
                                    std::size_t min_values = 2);

} // namespace ebias
