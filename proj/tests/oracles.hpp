// Independent reference implementations used to check the library. Each
// deliberately takes a different computational route than the code under
// test: entropy via the textbook -sum(p log2 p) over known token counts,
// the t tail probability via Simpson quadrature of the density on a finite
// interval, and Fisher probabilities via direct long-double factorial
// products instead of log-space.
#pragma once

#include <cmath>
#include <cstdint>
#include <map>
#include <string>
#include <vector>

namespace oracles {

inline double entropy_bits(const std::map<std::string, std::uint64_t>& counts) {
    std::uint64_t total = 0;
    for (const auto& [w, c] : counts) total += c;
    double h = 0.0;
    for (const auto& [w, c] : counts) {
        const double p = static_cast<double>(c) / static_cast<double>(total);
        h -= p * std::log2(p);
    }
    return h;
}

inline double cttr(std::uint64_t types, std::uint64_t tokens) {
    return static_cast<double>(types) / std::sqrt(2.0 * static_cast<double>(tokens));
}

inline double maas(std::uint64_t types, std::uint64_t tokens) {
    const double lw = std::log10(static_cast<double>(tokens));
    const double lt = std::log10(static_cast<double>(types));
    return (lw - lt) / (lw * lw);
}

inline double t_pdf(double x, double df) {
    return std::exp(std::lgamma((df + 1.0) / 2.0) - std::lgamma(df / 2.0)) /
           std::sqrt(df * M_PI) * std::pow(1.0 + x * x / df, -(df + 1.0) / 2.0);
}

/// Two-sided tail via Simpson on [0, |t|]: p = 1 - 2 * integral(pdf).
inline double t_two_sided_p(double t, double df) {
    const double b = std::fabs(t);
    if (b == 0.0) return 1.0;
    const int n = 200000; // even
    const double h = b / n;
    double s = t_pdf(0.0, df) + t_pdf(b, df);
    for (int i = 1; i < n; ++i) {
        s += t_pdf(i * h, df) * (i % 2 ? 4.0 : 2.0);
    }
    const double integral = s * h / 3.0;
    return 1.0 - 2.0 * integral;
}

inline double normal_cdf(double x) { return 0.5 * std::erfc(-x / std::sqrt(2.0)); }

inline long double factorial_ld(unsigned n) {
    long double f = 1.0L;
    for (unsigned k = 2; k <= n; ++k) f *= k;
    return f;
}

/// Hypergeometric probability of one 2x2 table, direct factorial arithmetic.
inline long double table_probability(unsigned a, unsigned b, unsigned c, unsigned d) {
    const unsigned n = a + b + c + d;
    return factorial_ld(a + b) * factorial_ld(c + d) * factorial_ld(a + c) * factorial_ld(b + d) /
           (factorial_ld(n) * factorial_ld(a) * factorial_ld(b) * factorial_ld(c) *
            factorial_ld(d));
}

struct FisherOracle {
    double odds_ratio;
    double p_value;
};

/// Exhaustive two-sided exact test: sums every same-margin table whose
/// probability is <= the observed one (with the 1+1e-7 relative slack).
inline FisherOracle fisher(unsigned a, unsigned b, unsigned c, unsigned d) {
    const unsigned r1 = a + b;
    const unsigned r2 = c + d;
    const unsigned c1 = a + c;
    const long double p_obs = table_probability(a, b, c, d);

    const unsigned k_lo = c1 > r2 ? c1 - r2 : 0;
    const unsigned k_hi = std::min(r1, c1);
    long double p = 0.0L;
    for (unsigned k = k_lo; k <= k_hi; ++k) {
        const long double pk = table_probability(k, r1 - k, c1 - k, r2 - (c1 - k));
        if (pk <= p_obs * (1.0L + 1e-7L)) p += pk;
    }
    if (p > 1.0L) p = 1.0L;

    const double ad = static_cast<double>(a) * d;
    const double bc = static_cast<double>(b) * c;
    double odds;
    if (bc == 0.0) {
        odds = ad == 0.0 ? std::numeric_limits<double>::quiet_NaN()
                         : std::numeric_limits<double>::infinity();
    } else {
        odds = ad / bc;
    }
    return {odds, static_cast<double>(p)};
}

} // namespace oracles
