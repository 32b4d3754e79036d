#include <doctest.h>

#include <fstream>
#include <set>

#include "ebias/corpus.hpp"
#include "ebias/errors.hpp"
#include "support.hpp"

using namespace ebias;

namespace {

std::string write_lines(const std::vector<std::string>& lines, const char* name) {
    const auto dir = support::fresh_dir("corpus");
    const auto path = dir / name;
    std::ofstream out(path);
    for (const auto& line : lines) out << line << "\n";
    return path.string();
}

std::string row(const char* id, const char* cat, const char* forum, const char* gender,
                const char* text) {
    std::string s = "{\"pair_id\": \"";
    s += id;
    s += "\", \"category\": \"";
    s += cat;
    s += "\", \"forum\": \"";
    s += forum;
    s += "\", \"split\": \"train\", \"gender\": \"";
    s += gender;
    s += "\", \"text\": \"";
    s += text;
    s += "\"}";
    return s;
}

} // namespace

TEST_CASE("two rows sharing a pair id merge into one pair") {
    const auto path = write_lines(
        {
            row("7", "Education", "Reddit", "male", "what should he study"),
            row("7", "Education", "Reddit", "female", "what should she study"),
        },
        "mini.jsonl");
    const Corpus corpus = load_corpus(path, CorpusFormat::Jsonl);
    REQUIRE(corpus.pairs.size() == 1);
    CHECK(corpus.pairs[0].pair_id == "7");
    CHECK(corpus.pairs[0].male_text == "what should he study");
    CHECK(corpus.pairs[0].female_text == "what should she study");
    CHECK(corpus.provenance.row_count == 2);
    CHECK_FALSE(corpus.provenance.checksum.empty());
}

TEST_CASE("a lone gendered row is rejected") {
    const auto path = write_lines({row("9", "Health", "Quora", "female", "only one side")},
                                  "lone.jsonl");
    try {
        load_corpus(path, CorpusFormat::Jsonl);
        FAIL("expected UnpairedGenderRow");
    } catch (const Error& e) {
        CHECK(e.code() == ErrorCode::UnpairedGenderRow);
    }
}

TEST_CASE("duplicate gender within a pair is rejected") {
    const auto path = write_lines(
        {
            row("3", "Jobs", "Reddit", "male", "first"),
            row("3", "Jobs", "Reddit", "male", "second"),
        },
        "dup.jsonl");
    try {
        load_corpus(path, CorpusFormat::Jsonl);
        FAIL("expected DuplicatePairId");
    } catch (const Error& e) {
        CHECK(e.code() == ErrorCode::DuplicatePairId);
    }
}

TEST_CASE("schema violations carry their codes") {
    SUBCASE("missing column") {
        const auto path = write_lines({"{\"pair_id\": \"1\", \"category\": \"Jobs\"}"},
                                      "missing.jsonl");
        try {
            load_corpus(path, CorpusFormat::Jsonl);
            FAIL("expected MissingColumn");
        } catch (const Error& e) {
            CHECK(e.code() == ErrorCode::MissingColumn);
        }
    }
    SUBCASE("empty text") {
        const auto path = write_lines(
            {
                row("1", "Jobs", "Reddit", "male", " "),
                row("1", "Jobs", "Reddit", "female", "fine"),
            },
            "empty.jsonl");
        try {
            load_corpus(path, CorpusFormat::Jsonl);
            FAIL("expected EmptyText");
        } catch (const Error& e) {
            CHECK(e.code() == ErrorCode::EmptyText);
        }
    }
    SUBCASE("unknown category") {
        const auto path = write_lines({row("1", "Sports", "Reddit", "male", "x")}, "cat.jsonl");
        CHECK_THROWS_AS(load_corpus(path, CorpusFormat::Jsonl), Error);
    }
    SUBCASE("marketwatch outside investment") {
        const auto path = write_lines(
            {
                row("1", "Health", "MarketWatch", "male", "a"),
                row("1", "Health", "MarketWatch", "female", "b"),
            },
            "mw.jsonl");
        CHECK_THROWS_AS(load_corpus(path, CorpusFormat::Jsonl), Error);
    }
    SUBCASE("identical gendered texts") {
        const auto path = write_lines(
            {
                row("1", "Jobs", "Reddit", "male", "same words"),
                row("1", "Jobs", "Reddit", "female", "same words"),
            },
            "same.jsonl");
        try {
            load_corpus(path, CorpusFormat::Jsonl);
            FAIL("expected InconsistentPair");
        } catch (const Error& e) {
            CHECK(e.code() == ErrorCode::InconsistentPair);
        }
    }
}

TEST_CASE("numeric pair ids canonicalize to strings") {
    const auto path = write_lines(
        {
            "{\"pair_id\": 7, \"category\": \"Jobs\", \"forum\": \"Quora\", \"split\": \"test\", "
            "\"gender\": \"male\", \"text\": \"his plan\"}",
            "{\"pair_id\": 7, \"category\": \"Jobs\", \"forum\": \"Quora\", \"split\": \"test\", "
            "\"gender\": \"female\", \"text\": \"her plan\"}",
        },
        "numeric.jsonl");
    const Corpus corpus = load_corpus(path, CorpusFormat::Jsonl);
    REQUIRE(corpus.pairs.size() == 1);
    CHECK(corpus.pairs[0].pair_id == "7");
    CHECK(corpus.pairs[0].split == Split::Test);
}

TEST_CASE("csv rows load identically to jsonl") {
    const auto csv_path = write_lines(
        {
            "pair_id,category,forum,split,gender,text",
            "7,Education,Reddit,train,male,\"what, should he study\"",
            "7,Education,Reddit,train,female,\"what, should she study\"",
        },
        "mini.csv");
    const Corpus corpus = load_corpus(csv_path, CorpusFormat::Csv);
    REQUIRE(corpus.pairs.size() == 1);
    CHECK(corpus.pairs[0].male_text == "what, should he study");

    // extension-based dispatch picks csv
    const Corpus again = load_corpus(csv_path);
    CHECK(again.pairs == corpus.pairs);
}

TEST_CASE("round trip: load, serialize, load") {
    const Corpus corpus = support::make_synthetic_corpus({3, 40, 5});
    const auto dir = support::fresh_dir("roundtrip");
    const auto path = (dir / "c.jsonl").string();
    save_corpus_jsonl(corpus, path);
    const Corpus loaded = load_corpus(path, CorpusFormat::Jsonl);
    CHECK(loaded.pairs == corpus.pairs);

    const auto path2 = (dir / "c2.jsonl").string();
    save_corpus_jsonl(loaded, path2);
    const Corpus loaded2 = load_corpus(path2, CorpusFormat::Jsonl);
    CHECK(loaded2.pairs == loaded.pairs);
}

TEST_CASE("pairing is an involution under gender-label swap") {
    const Corpus corpus = support::make_synthetic_corpus({2, 30, 6});
    const auto dir = support::fresh_dir("involution");

    // swap every row's gender label
    const auto path = (dir / "orig.jsonl").string();
    save_corpus_jsonl(corpus, path);
    std::ifstream in(path);
    std::string line;
    std::vector<std::string> swapped;
    while (std::getline(in, line)) {
        std::string s = line;
        const auto male = s.find("\"male\"");
        const auto female = s.find("\"female\"");
        if (female != std::string::npos) s.replace(female, 8, "\"male\"");
        else if (male != std::string::npos) s.replace(male, 6, "\"female\"");
        swapped.push_back(s);
    }
    const auto swapped_path = (dir / "swapped.jsonl").string();
    {
        std::ofstream out(swapped_path);
        for (const auto& s : swapped) out << s << "\n";
    }

    const Corpus once = load_corpus(swapped_path, CorpusFormat::Jsonl);
    REQUIRE(once.pairs.size() == corpus.pairs.size());
    for (std::size_t i = 0; i < corpus.pairs.size(); ++i) {
        CHECK(once.pairs[i].pair_id == corpus.pairs[i].pair_id);
        CHECK(once.pairs[i].male_text == corpus.pairs[i].female_text);
        CHECK(once.pairs[i].female_text == corpus.pairs[i].male_text);
    }
}

TEST_CASE("shuffle order: determinism, coverage, adjacency") {
    const Corpus corpus = support::make_synthetic_corpus({5, 25, 8}); // 20 pairs
    const ShuffledOrder a = shuffle_order(corpus, 0);
    const ShuffledOrder b = shuffle_order(corpus, 0);
    CHECK(a.items == b.items);
    CHECK_FALSE(a.adjacency_warning);

    const ShuffledOrder c = shuffle_order(corpus, 1);
    CHECK(c.items != a.items);

    for (std::uint64_t seed = 0; seed < 30; ++seed) {
        const ShuffledOrder order = shuffle_order(corpus, seed);
        REQUIRE(order.items.size() == corpus.pairs.size() * 2);
        std::set<std::pair<std::string, int>> seen;
        for (const auto& item : order.items) {
            seen.insert({item.pair_id, item.gender == Gender::Male ? 0 : 1});
        }
        CHECK(seen.size() == order.items.size()); // a permutation, nothing lost
        for (std::size_t i = 1; i < order.items.size(); ++i) {
            CHECK(order.items[i].pair_id != order.items[i - 1].pair_id);
        }
    }
}

TEST_CASE("shuffle order: three pairs give six items") {
    Corpus corpus = support::make_synthetic_corpus({1, 20, 3});
    corpus.pairs.resize(3);
    const ShuffledOrder order = shuffle_order(corpus, 42);
    CHECK(order.items.size() == 6);
    for (std::size_t i = 1; i < order.items.size(); ++i) {
        CHECK(order.items[i].pair_id != order.items[i - 1].pair_id);
    }
}

TEST_CASE("shuffle order: single pair warns about unavoidable adjacency") {
    Corpus corpus = support::make_synthetic_corpus({1, 20, 3});
    corpus.pairs.resize(1);
    const ShuffledOrder order = shuffle_order(corpus, 9);
    CHECK(order.items.size() == 2);
    CHECK(order.adjacency_warning);

    Corpus empty;
    CHECK_THROWS_AS(shuffle_order(empty, 0), Error);
}

TEST_CASE("category counts in table layout") {
    const Corpus corpus = support::make_synthetic_corpus({4, 20, 2});
    const auto counts = corpus.category_counts();
    for (Category c : kAllCategories) CHECK(counts.at(c) == 4);
}
