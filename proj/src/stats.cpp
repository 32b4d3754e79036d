#include "ebias/stats.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "ebias/errors.hpp"
#include "ebias/special.hpp"

namespace ebias {

const char* metric_label(Metric m) {
    switch (m) {
        case Metric::Entropy: return "Shannon Entropy";
        case Metric::Cttr: return "CTTR";
        case Metric::Maas: return "Maas";
    }
    return "?";
}

const char* metric_key(Metric m) {
    switch (m) {
        case Metric::Entropy: return "entropy";
        case Metric::Cttr: return "cttr";
        case Metric::Maas: return "maas";
    }
    return "?";
}

namespace {

struct SampleSummary {
    double mean = 0.0;
    double var = 0.0; // unbiased
    std::size_t n = 0;
};

SampleSummary summarize(std::span<const double> xs) {
    SampleSummary s;
    s.n = xs.size();
    double sum = 0.0;
    for (double x : xs) {
        if (!std::isfinite(x)) throw Error(ErrorCode::InvalidValue, "non-finite sample value");
        sum += x;
    }
    s.mean = sum / static_cast<double>(s.n);
    double ss = 0.0;
    for (double x : xs) {
        const double d = x - s.mean;
        ss += d * d;
    }
    s.var = ss / static_cast<double>(s.n - 1);
    return s;
}

} // namespace

WelchResult welch_t(std::span<const double> sample_f, std::span<const double> sample_m) {
    if (sample_f.size() < 2 || sample_m.size() < 2) {
        throw Error(ErrorCode::InsufficientSample, "welch_t needs at least 2 values per sample");
    }
    const SampleSummary f = summarize(sample_f);
    const SampleSummary m = summarize(sample_m);

    if (f.var == 0.0 && m.var == 0.0) {
        WelchResult r;
        r.df = static_cast<double>(f.n + m.n - 2);
        if (f.mean == m.mean) {
            r.t_stat = 0.0;
            r.p_value = 1.0;
        } else {
            r.t_stat = std::copysign(std::numeric_limits<double>::infinity(), f.mean - m.mean);
            r.p_value = 0.0;
            r.degenerate_variance = true;
        }
        return r;
    }

    const double gf = f.var / static_cast<double>(f.n);
    const double gm = m.var / static_cast<double>(m.n);
    const double se2 = gf + gm;

    WelchResult r;
    r.t_stat = (f.mean - m.mean) / std::sqrt(se2);
    r.df = se2 * se2 /
           (gf * gf / static_cast<double>(f.n - 1) + gm * gm / static_cast<double>(m.n - 1));
    r.p_value = special::student_t_two_sided_p(r.t_stat, r.df);
    return r;
}

FisherResult fisher_exact(const Table2x2& t) {
    if (t.a == 0 && t.b == 0 && t.c == 0 && t.d == 0) {
        throw Error(ErrorCode::EmptyTable, "fisher_exact on all-zero table");
    }

    const std::uint64_t r1 = t.a + t.b;
    const std::uint64_t r2 = t.c + t.d;
    const std::uint64_t c1 = t.a + t.c;
    const std::uint64_t n = r1 + r2;

    // log P(k) for the table with top-left cell k and the observed margins
    auto log_prob = [&](std::uint64_t k) {
        using special::log_factorial;
        const std::uint64_t b = r1 - k;
        const std::uint64_t c = c1 - k;
        const std::uint64_t d = r2 - c;
        return log_factorial(static_cast<unsigned>(r1)) + log_factorial(static_cast<unsigned>(r2)) +
               log_factorial(static_cast<unsigned>(c1)) +
               log_factorial(static_cast<unsigned>(n - c1)) -
               log_factorial(static_cast<unsigned>(n)) - log_factorial(static_cast<unsigned>(k)) -
               log_factorial(static_cast<unsigned>(b)) - log_factorial(static_cast<unsigned>(c)) -
               log_factorial(static_cast<unsigned>(d));
    };

    const std::uint64_t k_lo = c1 > r2 ? c1 - r2 : 0;
    const std::uint64_t k_hi = std::min(r1, c1);

    const double log_obs = log_prob(t.a);
    // relative slack absorbs roundoff when deciding "<= observed"
    const double cutoff = log_obs + std::log1p(1e-7);

    double p = 0.0;
    for (std::uint64_t k = k_lo; k <= k_hi; ++k) {
        const double lp = log_prob(k);
        if (lp <= cutoff) p += std::exp(lp);
    }
    p = std::min(p, 1.0);

    const double ad = static_cast<double>(t.a) * static_cast<double>(t.d);
    const double bc = static_cast<double>(t.b) * static_cast<double>(t.c);
    double odds;
    if (bc == 0.0) {
        odds = ad == 0.0 ? std::numeric_limits<double>::quiet_NaN()
                         : std::numeric_limits<double>::infinity();
    } else {
        odds = ad / bc;
    }
    return FisherResult{odds, p};
}

CategoryTestReport category_level_tests(const std::vector<CellSamples>& cells) {
    CategoryTestReport report;
    report.rows.reserve(cells.size());
    for (const auto& cell : cells) {
        std::vector<double> f, m;
        f.reserve(cell.pairs.size());
        m.reserve(cell.pairs.size());
        for (const auto& pair : cell.pairs) {
            if (pair.female.empty() || pair.male.empty()) {
                throw Error(ErrorCode::MissingCounterpart,
                            "pair " + pair.pair_id + " lacks a gendered value");
            }
            f.push_back(pair.female.front());
            m.push_back(pair.male.front());
        }
        CategoryTestRow row;
        row.category = cell.category;
        row.model = cell.model;
        row.metric = cell.metric;
        row.n_female = f.size();
        row.n_male = m.size();
        row.welch = welch_t(f, m);
        report.rows.push_back(std::move(row));
    }
    return report;
}

namespace {

VariabilityRow variability_cell(const CellSamples& cell, double alpha, bool parallel) {
    VariabilityRow row;
    row.category = cell.category;
    row.model = cell.model;
    row.metric = cell.metric;
    row.n_pairs = cell.pairs.size();

    // validate outside the parallel region; exceptions must not cross it
    for (const auto& pair : cell.pairs) {
        if (pair.female.size() < 2 || pair.male.size() < 2) {
            throw Error(ErrorCode::InsufficientSample,
                        "pair " + pair.pair_id + " has fewer than 2 iterations per gender");
        }
        for (double x : pair.female)
            if (!std::isfinite(x)) throw Error(ErrorCode::InvalidValue, "non-finite sample value");
        for (double x : pair.male)
            if (!std::isfinite(x)) throw Error(ErrorCode::InvalidValue, "non-finite sample value");
    }

    std::vector<unsigned char> significant(cell.pairs.size(), 0);
    const std::int64_t n = static_cast<std::int64_t>(cell.pairs.size());
    if (parallel) {
#pragma omp parallel for schedule(dynamic, 8)
        for (std::int64_t i = 0; i < n; ++i) {
            const auto& pair = cell.pairs[static_cast<std::size_t>(i)];
            const WelchResult w = welch_t(pair.female, pair.male);
            significant[static_cast<std::size_t>(i)] = w.p_value <= alpha ? 1 : 0;
        }
    } else {
        for (std::int64_t i = 0; i < n; ++i) {
            const auto& pair = cell.pairs[static_cast<std::size_t>(i)];
            const WelchResult w = welch_t(pair.female, pair.male);
            significant[static_cast<std::size_t>(i)] = w.p_value <= alpha ? 1 : 0;
        }
    }
    for (unsigned char s : significant) row.n_significant += s;
    row.fraction = row.n_pairs == 0
                       ? 0.0
                       : static_cast<double>(row.n_significant) / static_cast<double>(row.n_pairs);
    return row;
}

VariabilityReport variability_report(const std::vector<CellSamples>& cells, double alpha,
                                     bool parallel) {
    VariabilityReport report;
    report.alpha = alpha;
    report.rows.reserve(cells.size());
    for (const auto& cell : cells) {
        report.rows.push_back(variability_cell(cell, alpha, parallel));
    }
    return report;
}

} // namespace

VariabilityReport per_question_variability(const std::vector<CellSamples>& cells, double alpha) {
    return variability_report(cells, alpha, true);
}

VariabilityReport per_question_variability_serial(const std::vector<CellSamples>& cells,
                                                  double alpha) {
    return variability_report(cells, alpha, false);
}

std::size_t drop_underpowered_pairs(std::vector<CellSamples>& cells, std::size_t min_values) {
    std::size_t removed = 0;
    for (auto& cell : cells) {
        auto it = std::remove_if(cell.pairs.begin(), cell.pairs.end(), [&](const PairSamples& p) {
            return p.female.size() < min_values || p.male.size() < min_values;
        });
        removed += static_cast<std::size_t>(cell.pairs.end() - it);
        cell.pairs.erase(it, cell.pairs.end());
    }
    std::erase_if(cells, [](const CellSamples& cell) { return cell.pairs.empty(); });
    return removed;
}

} // namespace ebias
