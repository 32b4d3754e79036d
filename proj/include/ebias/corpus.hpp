#pragma once

#include <cstdint>
#include <map>
#include <string>
#include <string_view>
#include <vector>

namespace ebias {

enum class Category { Education, Jobs, Investment, Health };
enum class Forum { Reddit, Quora, MarketWatch };
enum class Split { Train, Validation, Test };
enum class Gender { Male, Female };

inline constexpr Category kAllCategories[] = {Category::Education, Category::Jobs,
                                              Category::Investment, Category::Health};

const char* category_name(Category c);
const char* forum_name(Forum f);
const char* split_name(Split s);
const char* gender_name(Gender g);

Category category_from_name(std::string_view name);
Forum forum_from_name(std::string_view name);
Split split_from_name(std::string_view name);
Gender gender_from_name(std::string_view name);

Gender opposite(Gender g);

/// One real-world query in its two gender-attributed variants.
struct QuestionPair {
    std::string pair_id;
    Category category = Category::Education;
    Forum forum = Forum::Reddit;
    Split split = Split::Train;
    std::string base_text; // optional in the interchange format
    std::string male_text;
    std::string female_text;

    const std::string& text_for(Gender g) const {
        return g == Gender::Male ? male_text : female_text;
    }

    bool operator==(const QuestionPair&) const = default;
};

struct Provenance {
    std::string source_path;
    std::string checksum; // fnv1a64 of the raw file bytes, hex
    std::uint64_t row_count = 0;
};

struct Corpus {
    std::vector<QuestionPair> pairs;
    Provenance provenance;

    std::map<Category, std::size_t> category_counts() const;
    const QuestionPair* find(std::string_view pair_id) const;

    bool operator==(const Corpus& other) const { return pairs == other.pairs; }
};

enum class CorpusFormat { Jsonl, Csv };

/// Interchange schema: one gendered row with keys/columns
/// {pair_id, category, forum, split, gender, text} (+ optional base_text).
/// Rows sharing a pair_id merge into one QuestionPair.
Corpus load_corpus(const std::string& path, CorpusFormat format);

/// Format inferred from the extension (.jsonl/.json vs .csv).
Corpus load_corpus(const std::string& path);

void save_corpus_jsonl(const Corpus& corpus, const std::string& path);

struct WorkItem {
    std::string pair_id;
    Gender gender = Gender::Male;

    bool operator==(const WorkItem&) const = default;
};

struct ShuffledOrder {
    std::vector<WorkItem> items;
    // set when the corpus has a single pair and adjacency cannot be avoided
    bool adjacency_warning = false;
};

/// Deterministic permutation of all 2*|pairs| work items for a seed; no two
/// consecutive items share a pair_id (single-pair corpora get a warning).
ShuffledOrder shuffle_order(const Corpus& corpus, std::uint64_t seed);

} // namespace ebias
