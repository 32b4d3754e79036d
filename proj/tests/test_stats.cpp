#include <doctest.h>

#include <cmath>

#include "ebias/errors.hpp"
#include "ebias/rng.hpp"
#include "ebias/special.hpp"
#include "ebias/stats.hpp"
#include "oracles.hpp"

using namespace ebias;

TEST_CASE("student t cdf matches the arctan closed form at df=1") {
    for (double t : {-30.0, -5.0, -1.96, -0.5, 0.0, 0.3, 1.0, 2.5, 10.0, 100.0}) {
        const double expected = 0.5 + std::atan(t) / M_PI;
        CHECK(special::student_t_cdf(t, 1.0) == doctest::Approx(expected).epsilon(1e-10));
    }
}

TEST_CASE("student t cdf approaches the normal cdf for large df") {
    const double got = special::student_t_cdf(1.96, 1e7);
    CHECK(std::fabs(got - oracles::normal_cdf(1.96)) < 1e-4);
}

TEST_CASE("two-sided p agrees with quadrature") {
    for (auto [t, df] : {std::pair{1.5491933384829668, 50.0 / 17.0}, std::pair{0.7, 5.0},
                         std::pair{2.8, 12.3}, std::pair{0.05, 2.0}}) {
        CHECK(special::student_t_two_sided_p(t, df) ==
              doctest::Approx(oracles::t_two_sided_p(t, df)).epsilon(1e-8));
    }
}

TEST_CASE("welch closed-form example") {
    const std::vector<double> f{1.0, 2.0, 3.0};
    const std::vector<double> m{2.0, 4.0, 6.0};
    const WelchResult r = welch_t(f, m);
    CHECK(r.t_stat == doctest::Approx(-1.549193).epsilon(1e-6));
    CHECK(r.df == doctest::Approx(50.0 / 17.0).epsilon(1e-12));
    CHECK(r.p_value == doctest::Approx(0.2208808404940947).epsilon(1e-9));
    CHECK(r.p_value == doctest::Approx(oracles::t_two_sided_p(r.t_stat, r.df)).epsilon(1e-8));
    CHECK_FALSE(r.degenerate_variance);
}

TEST_CASE("welch conventions and errors") {
    const std::vector<double> same{1.5, 1.5, 1.5};
    SUBCASE("identical samples") {
        const WelchResult r = welch_t(same, same);
        CHECK(r.t_stat == 0.0);
        CHECK(r.p_value == 1.0);
        CHECK(r.df == 4.0);
    }
    SUBCASE("constant but different") {
        const std::vector<double> other{2.0, 2.0};
        const WelchResult r = welch_t(same, other);
        CHECK(std::isinf(r.t_stat));
        CHECK(r.t_stat < 0);
        CHECK(r.p_value == 0.0);
        CHECK(r.degenerate_variance);
        CHECK(r.df <= 3.0);
    }
    SUBCASE("insufficient sample") {
        CHECK_THROWS_AS(welch_t(std::vector<double>{1.0}, same), Error);
    }
    SUBCASE("non-finite input") {
        const std::vector<double> bad{1.0, std::nan("")};
        CHECK_THROWS_AS(welch_t(bad, same), Error);
    }
}

TEST_CASE("welch antisymmetry and scale invariance") {
    Rng rng(404);
    for (int trial = 0; trial < 200; ++trial) {
        std::vector<double> a, b;
        const std::size_t na = 2 + rng.below(30);
        const std::size_t nb = 2 + rng.below(30);
        for (std::size_t i = 0; i < na; ++i) a.push_back(rng.unit() * 10 - 3);
        for (std::size_t i = 0; i < nb; ++i) b.push_back(rng.unit() * 8 + 1);

        const WelchResult ab = welch_t(a, b);
        const WelchResult ba = welch_t(b, a);
        CHECK(ab.t_stat == -ba.t_stat);
        CHECK(ab.df == ba.df);
        CHECK(ab.p_value == ba.p_value);
        CHECK(ab.df <= static_cast<double>(na + nb - 2) * (1 + 1e-12));
        CHECK(ab.df > 0.0);

        const double c = 0.1 + rng.unit() * 9.9;
        std::vector<double> ac = a, bc = b;
        for (auto& x : ac) x *= c;
        for (auto& x : bc) x *= c;
        const WelchResult scaled = welch_t(ac, bc);
        CHECK(scaled.t_stat == doctest::Approx(ab.t_stat).epsilon(1e-9));
        CHECK(scaled.df == doctest::Approx(ab.df).epsilon(1e-9));
        CHECK(scaled.p_value == doctest::Approx(ab.p_value).epsilon(1e-8));
    }
}

TEST_CASE("fisher exact basics") {
    SUBCASE("full symmetry") {
        const FisherResult r = fisher_exact({5, 5, 5, 5});
        CHECK(r.odds_ratio == 1.0);
        CHECK(r.p_value == doctest::Approx(1.0).epsilon(1e-12));
    }
    SUBCASE("hand-enumerated 2/3 table") {
        const FisherResult r = fisher_exact({2, 3, 3, 2});
        CHECK(r.odds_ratio == doctest::Approx(4.0 / 9.0).epsilon(1e-15));
        CHECK(r.p_value == doctest::Approx(1.0).epsilon(1e-10));
    }
    SUBCASE("published judge row, no ties") {
        const FisherResult r = fisher_exact({24, 55, 55, 24});
        CHECK(r.odds_ratio == doctest::Approx(0.19041322314049586).epsilon(1e-12));
        CHECK(r.p_value == doctest::Approx(1.3573516675134877e-06).epsilon(1e-6));
        const auto oracle = oracles::fisher(24, 55, 55, 24);
        CHECK(r.p_value == doctest::Approx(oracle.p_value).epsilon(1e-9));
    }
    SUBCASE("empty table") {
        CHECK_THROWS_AS(fisher_exact({0, 0, 0, 0}), Error);
    }
    SUBCASE("zero cells") {
        CHECK(std::isinf(fisher_exact({3, 0, 0, 3}).odds_ratio));
        CHECK(fisher_exact({0, 3, 3, 0}).odds_ratio == 0.0);
    }
}

TEST_CASE("fisher matches the enumeration oracle on random tables") {
    Rng rng(17);
    for (int trial = 0; trial < 300; ++trial) {
        const unsigned a = static_cast<unsigned>(rng.below(13));
        const unsigned b = static_cast<unsigned>(rng.below(13));
        const unsigned c = static_cast<unsigned>(rng.below(13));
        const unsigned d = static_cast<unsigned>(rng.below(13));
        if (a + b + c + d == 0) continue;
        const FisherResult got = fisher_exact({a, b, c, d});
        const auto expected = oracles::fisher(a, b, c, d);
        CHECK(std::fabs(got.p_value - expected.p_value) < 1e-10);
    }
}

TEST_CASE("fisher row swap inverts the odds ratio and preserves p") {
    Rng rng(23);
    for (int trial = 0; trial < 100; ++trial) {
        const std::uint64_t a = 1 + rng.below(20);
        const std::uint64_t b = 1 + rng.below(20);
        const std::uint64_t c = 1 + rng.below(20);
        const std::uint64_t d = 1 + rng.below(20);
        const FisherResult r1 = fisher_exact({a, b, c, d});
        const FisherResult r2 = fisher_exact({c, d, a, b});
        CHECK(r1.odds_ratio == doctest::Approx(1.0 / r2.odds_ratio).epsilon(1e-12));
        CHECK(r1.p_value == doctest::Approx(r2.p_value).epsilon(1e-12));
    }
}

namespace {

CellSamples make_cell(const std::string& category, const std::string& model, Metric metric,
                      std::size_t n_pairs, std::size_t iterations, std::uint64_t seed,
                      double male_shift) {
    Rng rng(seed);
    CellSamples cell;
    cell.category = category;
    cell.model = model;
    cell.metric = metric;
    for (std::size_t p = 0; p < n_pairs; ++p) {
        PairSamples samples;
        samples.pair_id = "p" + std::to_string(p);
        for (std::size_t i = 0; i < iterations; ++i) {
            samples.female.push_back(rng.unit());
            samples.male.push_back(rng.unit() + male_shift);
        }
        cell.pairs.push_back(std::move(samples));
    }
    return cell;
}

} // namespace

TEST_CASE("category level tests pool single-iteration values") {
    const auto cell = make_cell("Education", "model-a", Metric::Entropy, 12, 1, 5, 0.0);
    const CategoryTestReport report = category_level_tests({cell});
    REQUIRE(report.rows.size() == 1);
    CHECK(report.rows[0].n_female == 12);
    CHECK(report.rows[0].n_male == 12);
    CHECK(report.rows[0].welch.p_value > 0.0);

    CellSamples broken = cell;
    broken.pairs[3].male.clear();
    CHECK_THROWS_AS(category_level_tests({broken}), Error);
}

TEST_CASE("category tests sit near the nominal rate under the null") {
    std::vector<CellSamples> cells;
    for (int k = 0; k < 60; ++k) {
        cells.push_back(make_cell("Education", "m" + std::to_string(k), Metric::Entropy, 30, 1,
                                  static_cast<std::uint64_t>(k) + 100, 0.0));
    }
    const CategoryTestReport report = category_level_tests(cells);
    std::size_t significant = 0;
    for (const auto& row : report.rows) significant += row.welch.p_value <= 0.05 ? 1 : 0;
    CHECK(static_cast<double>(significant) / 60.0 <= 0.15); // null cells, ~5% expected
}

TEST_CASE("per-question variability runs at the minimal iteration count") {
    const auto cell = make_cell("Jobs", "model-a", Metric::Cttr, 6, 2, 9, 0.0);
    const VariabilityReport report = per_question_variability({cell});
    REQUIRE(report.rows.size() == 1);
    CHECK(report.rows[0].n_pairs == 6);
    CHECK(report.rows[0].fraction >= 0.0);
    CHECK(report.rows[0].fraction <= 1.0);
}

TEST_CASE("underpowered pairs are droppable before the variability pass") {
    auto cell = make_cell("Jobs", "m", Metric::Entropy, 5, 3, 50, 0.0);
    cell.pairs[2].female.resize(1);
    cell.pairs[4].male.clear();
    std::vector<CellSamples> cells{cell};
    CHECK(drop_underpowered_pairs(cells) == 2);
    REQUIRE(cells.size() == 1);
    CHECK(cells[0].pairs.size() == 3);
    CHECK(per_question_variability(cells).rows[0].n_pairs == 3);

    // a cell left with nothing disappears entirely
    std::vector<CellSamples> tiny{make_cell("Jobs", "m", Metric::Cttr, 1, 1, 51, 0.0)};
    CHECK(drop_underpowered_pairs(tiny) == 1);
    CHECK(tiny.empty());
}

TEST_CASE("variability detects a shifted distribution and parallel matches serial") {
    const auto null_cell = make_cell("Health", "m", Metric::Entropy, 40, 30, 77, 0.0);
    const auto shifted_cell = make_cell("Health", "m", Metric::Entropy, 40, 30, 78, 2.0);

    const VariabilityReport par = per_question_variability({null_cell, shifted_cell});
    const VariabilityReport ser = per_question_variability_serial({null_cell, shifted_cell});
    REQUIRE(par.rows.size() == 2);
    CHECK(par.rows[0].fraction < 0.3);
    CHECK(par.rows[1].fraction == 1.0); // shift of 2 on a unit uniform is unmissable
    for (std::size_t i = 0; i < par.rows.size(); ++i) {
        CHECK(par.rows[i].n_significant == ser.rows[i].n_significant);
        CHECK(par.rows[i].fraction == ser.rows[i].fraction);
    }
}
