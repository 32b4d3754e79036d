#include <doctest.h>

#include <cmath>

#include "ebias/debias.hpp"
#include "ebias/errors.hpp"
#include "ebias/lexmetrics.hpp"
#include "ebias/mock_gateway.hpp"
#include "support.hpp"

using namespace ebias;

TEST_CASE("marker detection and the brother/sister rewrite") {
    CHECK(detect_gender_marker("resources for my brother to learn") == Gender::Male);
    CHECK(detect_gender_marker("resources for my sister to learn") == Gender::Female);
    CHECK_FALSE(detect_gender_marker("resources for my cousin to learn").has_value());
    CHECK_FALSE(detect_gender_marker("her brother asked").has_value()); // tie

    CHECK(swap_gender_markers("a list for my brother today", Gender::Female) ==
          "a list for my sister today");
    CHECK(swap_gender_markers("Give him the plan", Gender::Female) == "Give her the plan");
    // the swap is lexical: "her" maps to its lexicon partner, case preserved
    CHECK(swap_gender_markers("She asked about Her options", Gender::Male) ==
          "He asked about Him options");
    // words containing markers as substrings stay intact
    CHECK(swap_gender_markers("the manuscript was managed", Gender::Female) ==
          "the manuscript was managed");
}

TEST_CASE("the shipped marker file matches the built-in lexicon") {
    const auto shipped =
        load_marker_lexicon(std::string(EBIAS_SOURCE_DIR) + "/data/gender_markers.csv");
    const auto& builtin = default_marker_lexicon();
    REQUIRE(shipped.size() == builtin.size());
    for (std::size_t i = 0; i < shipped.size(); ++i) {
        CHECK(shipped[i].female == builtin[i].female);
        CHECK(shipped[i].male == builtin[i].male);
    }
}

TEST_CASE("lexicon file override") {
    const auto dir = support::fresh_dir("lexicon");
    const auto path = (dir / "markers.csv").string();
    {
        std::ofstream out(path);
        out << "female,male\nqueen,king\n";
    }
    const auto lexicon = load_marker_lexicon(path);
    REQUIRE(lexicon.size() == 1);
    CHECK(detect_gender_marker("the queen spoke", lexicon) == Gender::Female);
    CHECK_FALSE(detect_gender_marker("my sister spoke", lexicon).has_value());
}

TEST_CASE("variant prompts carry the fixed instruction prefix") {
    CHECK(variant_request_prompt("what to study?", Gender::Female) ==
          "Same question from a female perspective: what to study?");
    CHECK(variant_request_prompt("what to study?", Gender::Male) ==
          "Same question from a male perspective: what to study?");
}

TEST_CASE("merge prompts embed the responses and round-trip through the parser") {
    const std::string p1 = merge_prompt(1, "female reply", "male reply", "");
    CHECK(p1.find(kMergeLevel1) == 0);
    MergePromptParts parts;
    REQUIRE(parse_merge_prompt(p1, parts));
    CHECK(parts.level == 1);
    CHECK(parts.response_female == "female reply");
    CHECK(parts.response_male == "male reply");

    const std::string p2 = merge_prompt(2, "f\nmulti", "m", "combined so far");
    REQUIRE(parse_merge_prompt(p2, parts));
    CHECK(parts.level == 2);
    CHECK(parts.response_female == "f\nmulti");
    CHECK(parts.previous_output == "combined so far");

    CHECK_FALSE(parse_merge_prompt("unrelated text", parts));
}

TEST_CASE("gender variants via the mock keep female-marked questions intact") {
    MockGateway gw(MockOptions{.seed = 2});
    DebiasOptions options;
    options.model_id = "mock";

    const std::string q = "Best study plan for my sister who wants a math degree and works days?";
    const auto [q_female, q_male] = gender_variants(q, gw, options);
    CHECK(q_female == q); // already female-marked: marker retained
    CHECK(q_male.find("brother") != std::string::npos);
    CHECK(detect_gender_marker(q_male) == Gender::Male);

    CHECK_THROWS_AS(gender_variants("", gw, options), Error);
}

TEST_CASE("length guard rejects runaway rewrites after one retry") {
    class VerboseGateway : public Gateway {
    protected:
        ChatResponse do_complete(const ChatRequest& req) override {
            ChatResponse out;
            out.model_id = req.model_id;
            out.text = support::words_from(0, 400, 50, req.sample_index);
            return out;
        }
    };
    VerboseGateway gw;
    DebiasOptions options;
    options.model_id = "verbose";
    try {
        gender_variants("short question here about stuff?", gw, options);
        FAIL("expected LengthGuard");
    } catch (const Error& e) {
        CHECK(e.code() == ErrorCode::LengthGuard);
        CHECK(gw.request_count() == 2); // one retry, then give up
    }
}

TEST_CASE("disjoint-vocabulary concatenation early-stops at level one") {
    support::ScriptedDebiasGateway gw;
    gw.merge_behavior = support::ScriptedDebiasGateway::MergeBehavior::Concatenate;
    gw.female_response = support::words_from(0, 150, 32, 1);
    gw.male_response = support::words_from(100000, 150, 32, 2);

    DebiasOptions options;
    options.model_id = "scripted";
    const DebiasOutcome outcome =
        debias("Plan for my brother to get fit and healthy in six months?", gw, options);

    CHECK(outcome.early_stop);
    CHECK(outcome.selected_level == 1);
    CHECK(outcome.final_entropy > outcome.entropy_base);
    CHECK(outcome.candidates.size() == 1);
    CHECK(gw.variant_calls == 2);
    CHECK(gw.response_calls == 2);
    CHECK(gw.merge_calls == 1); // early stop means no later level was called
    CHECK(outcome.entropy_base == std::max(outcome.entropy_female, outcome.entropy_male));
}

TEST_CASE("a merge that always echoes the male response never early-stops") {
    support::ScriptedDebiasGateway gw;
    gw.merge_behavior = support::ScriptedDebiasGateway::MergeBehavior::EchoMale;
    gw.female_response = support::words_from(0, 150, 40, 3);
    gw.male_response = support::words_from(100000, 150, 40, 4);

    DebiasOptions options;
    options.model_id = "scripted";
    const DebiasOutcome outcome = debias("Plan for my brother, please?", gw, options);

    CHECK_FALSE(outcome.early_stop);
    CHECK(outcome.candidates.size() == 3);
    CHECK(gw.merge_calls == 3);
    CHECK(outcome.selected_level == 1); // ties break toward the earliest level
    CHECK(outcome.final_entropy == doctest::Approx(outcome.entropy_male).epsilon(1e-12));
    CHECK(outcome.final_entropy <= outcome.entropy_base);

    // selection correctness: the winner is at least every candidate's entropy
    for (const auto& candidate : outcome.candidates) {
        CHECK(outcome.final_entropy >= candidate.entropy);
    }
}

TEST_CASE("trace reconstructs every entropy from the recorded texts") {
    support::ScriptedDebiasGateway gw;
    gw.female_response = support::words_from(0, 90, 28, 5);
    gw.male_response = support::words_from(50000, 110, 28, 6);

    DebiasOptions options;
    options.model_id = "scripted";
    const DebiasOutcome outcome = debias("What should my sister study?", gw, options);

    CHECK(shannon_entropy(tokenize(outcome.response_female)) ==
          doctest::Approx(outcome.entropy_female).epsilon(1e-15));
    CHECK(shannon_entropy(tokenize(outcome.response_male)) ==
          doctest::Approx(outcome.entropy_male).epsilon(1e-15));
    for (const auto& candidate : outcome.candidates) {
        CHECK(shannon_entropy(tokenize(candidate.text)) ==
              doctest::Approx(candidate.entropy).epsilon(1e-15));
    }
}

TEST_CASE("evaluation classifies per run and the classes partition") {
    Corpus corpus = support::make_synthetic_corpus({2, 30, 19});

    support::ScriptedDebiasGateway gw;
    gw.merge_behavior = support::ScriptedDebiasGateway::MergeBehavior::Concatenate;
    gw.female_response = support::words_from(0, 150, 32, 7);
    gw.male_response = support::words_from(100000, 150, 32, 8);

    DebiasOptions options;
    options.model_id = "scripted";
    const DebiasEvaluation evaluation = debias_evaluation(corpus, gw, options);

    CHECK(evaluation.runs.size() == corpus.pairs.size() * 2);
    REQUIRE(evaluation.rows.size() == 4);
    for (const auto& row : evaluation.rows) {
        CHECK(row.male_pct_higher + row.male_pct_between + row.male_pct_lower ==
              doctest::Approx(100.0));
        CHECK(row.female_pct_higher + row.female_pct_between + row.female_pct_lower ==
              doctest::Approx(100.0));
        // disjoint concat: everything lands above both originals
        CHECK(row.male_pct_higher == doctest::Approx(100.0));
        CHECK(row.female_pct_higher == doctest::Approx(100.0));
        CHECK(row.welch_valid);
    }
}

TEST_CASE("a null merge chain yields no improvement and a flat t") {
    Corpus corpus = support::make_synthetic_corpus({3, 30, 23});

    support::ScriptedDebiasGateway gw;
    gw.merge_behavior = support::ScriptedDebiasGateway::MergeBehavior::FixedText;
    gw.fixed_merge_text = "same plan again and again and again"; // low entropy on purpose
    gw.female_response = support::words_from(0, 120, 30, 9);
    gw.male_response = support::words_from(60000, 120, 30, 10);

    DebiasOptions options;
    options.model_id = "scripted";
    const DebiasEvaluation evaluation = debias_evaluation(corpus, gw, options);

    for (const auto& row : evaluation.rows) {
        CHECK(row.male_pct_higher == 0.0);
        CHECK(row.female_pct_higher == 0.0);
        REQUIRE(row.welch_valid);
        // every final entropy is the same fixed text: zero variance, equal means
        CHECK(row.welch.t_stat == 0.0);
        CHECK(row.welch.p_value == 1.0);
    }
}

TEST_CASE("classification boundaries") {
    CHECK(classify_entropy(5.0, 4.0, 4.5) == EntropyClass::HigherThanBoth);
    CHECK(classify_entropy(4.2, 4.0, 4.5) == EntropyClass::Between);
    CHECK(classify_entropy(4.0, 4.0, 4.5) == EntropyClass::Between); // inclusive bounds
    CHECK(classify_entropy(4.5, 4.0, 4.5) == EntropyClass::Between);
    CHECK(classify_entropy(3.9, 4.0, 4.5) == EntropyClass::Lower);
}
