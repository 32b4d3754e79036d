#include "ebias/corpus.hpp"

#include <algorithm>
#include <cctype>
#include <fstream>
#include <sstream>

#include <json.hpp>

#include "ebias/csv.hpp"
#include "ebias/errors.hpp"
#include "ebias/rng.hpp"

namespace ebias {

namespace {

std::string lower_ascii(std::string_view s) {
    std::string out(s);
    std::transform(out.begin(), out.end(), out.begin(),
                   [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
    return out;
}

[[noreturn]] void bad_value(const std::string& what, std::string_view got) {
    throw Error(ErrorCode::InvalidValue, "unknown " + what + " '" + std::string(got) + "'");
}

} // namespace

const char* category_name(Category c) {
    switch (c) {
        case Category::Education: return "Education";
        case Category::Jobs: return "Jobs";
        case Category::Investment: return "Investment";
        case Category::Health: return "Health";
    }
    return "?";
}

const char* forum_name(Forum f) {
    switch (f) {
        case Forum::Reddit: return "Reddit";
        case Forum::Quora: return "Quora";
        case Forum::MarketWatch: return "MarketWatch";
    }
    return "?";
}

const char* split_name(Split s) {
    switch (s) {
        case Split::Train: return "train";
        case Split::Validation: return "validation";
        case Split::Test: return "test";
    }
    return "?";
}

const char* gender_name(Gender g) { return g == Gender::Male ? "male" : "female"; }

Category category_from_name(std::string_view name) {
    const std::string n = lower_ascii(name);
    if (n == "education") return Category::Education;
    if (n == "jobs") return Category::Jobs;
    if (n == "investment") return Category::Investment;
    if (n == "health") return Category::Health;
    bad_value("category", name);
}

Forum forum_from_name(std::string_view name) {
    const std::string n = lower_ascii(name);
    if (n == "reddit") return Forum::Reddit;
    if (n == "quora") return Forum::Quora;
    if (n == "marketwatch") return Forum::MarketWatch;
    bad_value("forum", name);
}

Split split_from_name(std::string_view name) {
    const std::string n = lower_ascii(name);
    if (n == "train") return Split::Train;
    if (n == "validation" || n == "val") return Split::Validation;
    if (n == "test") return Split::Test;
    bad_value("split", name);
}

Gender gender_from_name(std::string_view name) {
    const std::string n = lower_ascii(name);
    if (n == "male" || n == "m") return Gender::Male;
    if (n == "female" || n == "f") return Gender::Female;
    bad_value("gender", name);
}

Gender opposite(Gender g) { return g == Gender::Male ? Gender::Female : Gender::Male; }

std::map<Category, std::size_t> Corpus::category_counts() const {
    std::map<Category, std::size_t> counts;
    for (Category c : kAllCategories) counts[c] = 0;
    for (const auto& pair : pairs) counts[pair.category] += 1;
    return counts;
}

const QuestionPair* Corpus::find(std::string_view pair_id) const {
    for (const auto& pair : pairs) {
        if (pair.pair_id == pair_id) return &pair;
    }
    return nullptr;
}

namespace {

struct GenderedRow {
    std::string pair_id;
    Category category;
    Forum forum;
    Split split;
    Gender gender;
    std::string text;
    std::string base_text;
};

std::string file_checksum(const std::string& path, std::uint64_t& byte_count) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw Error(ErrorCode::Io, "cannot open " + path);
    std::uint64_t h = 0xcbf29ce484222325ULL;
    char buf[1 << 16];
    byte_count = 0;
    while (in.read(buf, sizeof(buf)) || in.gcount() > 0) {
        h = fnv1a64(std::string_view(buf, static_cast<std::size_t>(in.gcount())), h);
        byte_count += static_cast<std::uint64_t>(in.gcount());
    }
    std::ostringstream os;
    os << std::hex << h;
    return os.str();
}

std::vector<GenderedRow> read_jsonl_rows(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw Error(ErrorCode::Io, "cannot open " + path);

    std::vector<GenderedRow> rows;
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (line.empty() || line.find_first_not_of(" \t\r") == std::string::npos) continue;
        nlohmann::json obj;
        try {
            obj = nlohmann::json::parse(line);
        } catch (const nlohmann::json::exception& e) {
            throw Error(ErrorCode::Io,
                        path + ":" + std::to_string(line_no) + ": bad json: " + e.what());
        }
        for (const char* key : {"pair_id", "category", "forum", "split", "gender", "text"}) {
            if (!obj.contains(key)) {
                throw Error(ErrorCode::MissingColumn, path + ":" + std::to_string(line_no) +
                                                          ": missing key '" + key + "'");
            }
        }
        GenderedRow row;
        row.pair_id = obj["pair_id"].is_string() ? obj["pair_id"].get<std::string>()
                                                 : obj["pair_id"].dump();
        row.category = category_from_name(obj["category"].get<std::string>());
        row.forum = forum_from_name(obj["forum"].get<std::string>());
        row.split = split_from_name(obj["split"].get<std::string>());
        row.gender = gender_from_name(obj["gender"].get<std::string>());
        row.text = obj["text"].get<std::string>();
        if (obj.contains("base_text")) row.base_text = obj["base_text"].get<std::string>();
        rows.push_back(std::move(row));
    }
    return rows;
}

std::vector<GenderedRow> read_csv_rows(const std::string& path) {
    const csv::Table table = csv::read_file(path);
    for (const char* key : {"pair_id", "category", "forum", "split", "gender", "text"}) {
        if (table.column(key) < 0) {
            throw Error(ErrorCode::MissingColumn, path + ": missing column '" + key + "'");
        }
    }
    const int c_id = table.column("pair_id");
    const int c_cat = table.column("category");
    const int c_forum = table.column("forum");
    const int c_split = table.column("split");
    const int c_gender = table.column("gender");
    const int c_text = table.column("text");
    const int c_base = table.column("base_text");

    std::vector<GenderedRow> rows;
    for (const auto& r : table.rows) {
        if (r.size() < table.header.size()) {
            throw Error(ErrorCode::Io, path + ": short csv row");
        }
        GenderedRow row;
        row.pair_id = r[static_cast<std::size_t>(c_id)];
        row.category = category_from_name(r[static_cast<std::size_t>(c_cat)]);
        row.forum = forum_from_name(r[static_cast<std::size_t>(c_forum)]);
        row.split = split_from_name(r[static_cast<std::size_t>(c_split)]);
        row.gender = gender_from_name(r[static_cast<std::size_t>(c_gender)]);
        row.text = r[static_cast<std::size_t>(c_text)];
        if (c_base >= 0) row.base_text = r[static_cast<std::size_t>(c_base)];
        rows.push_back(std::move(row));
    }
    return rows;
}

bool blank(std::string_view s) {
    return s.find_first_not_of(" \t\r\n") == std::string_view::npos;
}

Corpus pair_rows(std::vector<GenderedRow>&& rows) {
    Corpus corpus;
    std::map<std::string, std::size_t> index_of; // pair_id -> index in corpus.pairs
    std::map<std::string, std::pair<bool, bool>> seen; // pair_id -> (male seen, female seen)

    for (auto& row : rows) {
        if (blank(row.text)) {
            throw Error(ErrorCode::EmptyText, "empty text for pair " + row.pair_id);
        }
        if (row.forum == Forum::MarketWatch && row.category != Category::Investment) {
            throw Error(ErrorCode::InvalidValue,
                        "pair " + row.pair_id + ": MarketWatch rows must be Investment");
        }

        auto it = index_of.find(row.pair_id);
        if (it == index_of.end()) {
            QuestionPair pair;
            pair.pair_id = row.pair_id;
            pair.category = row.category;
            pair.forum = row.forum;
            pair.split = row.split;
            pair.base_text = row.base_text;
            (row.gender == Gender::Male ? pair.male_text : pair.female_text) = std::move(row.text);
            index_of[row.pair_id] = corpus.pairs.size();
            seen[row.pair_id] = {row.gender == Gender::Male, row.gender == Gender::Female};
            corpus.pairs.push_back(std::move(pair));
            continue;
        }

        QuestionPair& pair = corpus.pairs[it->second];
        auto& flags = seen[row.pair_id];
        const bool already = row.gender == Gender::Male ? flags.first : flags.second;
        if (already) {
            throw Error(ErrorCode::DuplicatePairId,
                        "pair " + row.pair_id + " has two " + gender_name(row.gender) + " rows");
        }
        if (pair.category != row.category || pair.forum != row.forum || pair.split != row.split) {
            throw Error(ErrorCode::InconsistentPair,
                        "pair " + row.pair_id + " rows disagree on metadata");
        }
        if (!row.base_text.empty()) {
            if (pair.base_text.empty()) pair.base_text = row.base_text;
            else if (pair.base_text != row.base_text) {
                throw Error(ErrorCode::InconsistentPair,
                            "pair " + row.pair_id + " rows disagree on base_text");
            }
        }
        (row.gender == Gender::Male ? pair.male_text : pair.female_text) = std::move(row.text);
        (row.gender == Gender::Male ? flags.first : flags.second) = true;
    }

    for (const auto& [pair_id, flags] : seen) {
        if (!flags.first || !flags.second) {
            throw Error(ErrorCode::UnpairedGenderRow,
                        "pair " + pair_id + " is missing its " +
                            (flags.first ? "female" : "male") + " row");
        }
    }
    for (const auto& pair : corpus.pairs) {
        if (pair.male_text == pair.female_text) {
            throw Error(ErrorCode::InconsistentPair,
                        "pair " + pair.pair_id + " has identical gendered texts");
        }
    }
    return corpus;
}

} // namespace

Corpus load_corpus(const std::string& path, CorpusFormat format) {
    std::vector<GenderedRow> rows =
        format == CorpusFormat::Jsonl ? read_jsonl_rows(path) : read_csv_rows(path);
    const std::uint64_t row_count = rows.size();
    Corpus corpus = pair_rows(std::move(rows));
    corpus.provenance.source_path = path;
    std::uint64_t bytes = 0;
    corpus.provenance.checksum = file_checksum(path, bytes);
    corpus.provenance.row_count = row_count;
    return corpus;
}

Corpus load_corpus(const std::string& path) {
    const auto dot = path.rfind('.');
    const std::string ext = dot == std::string::npos ? "" : lower_ascii(path.substr(dot));
    return load_corpus(path, ext == ".csv" ? CorpusFormat::Csv : CorpusFormat::Jsonl);
}

void save_corpus_jsonl(const Corpus& corpus, const std::string& path) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw Error(ErrorCode::Io, "cannot write " + path);
    for (const auto& pair : corpus.pairs) {
        for (Gender g : {Gender::Male, Gender::Female}) {
            nlohmann::json obj{
                {"pair_id", pair.pair_id},       {"category", category_name(pair.category)},
                {"forum", forum_name(pair.forum)}, {"split", split_name(pair.split)},
                {"gender", gender_name(g)},      {"text", pair.text_for(g)},
            };
            if (!pair.base_text.empty()) obj["base_text"] = pair.base_text;
            out << obj.dump() << '\n';
        }
    }
}

namespace {

bool fix_adjacency(std::vector<WorkItem>& items) {
    const std::size_t n = items.size();
    for (std::size_t i = 1; i < n; ++i) {
        if (items[i].pair_id != items[i - 1].pair_id) continue;
        bool fixed = false;
        for (std::size_t j = 0; j < n && !fixed; ++j) {
            if (j == i || j == i - 1) continue;
            // after swapping i and j, both neighborhoods must stay conflict-free
            const auto& incoming = items[j];
            const auto& outgoing = items[i];
            const bool i_ok =
                incoming.pair_id != items[i - 1].pair_id &&
                (i + 1 >= n || i + 1 == j || incoming.pair_id != items[i + 1].pair_id);
            const bool j_ok =
                (j == 0 || j - 1 == i || outgoing.pair_id != items[j - 1].pair_id) &&
                (j + 1 >= n || j + 1 == i || outgoing.pair_id != items[j + 1].pair_id);
            if (i_ok && j_ok) {
                std::swap(items[i], items[j]);
                fixed = true;
            }
        }
        if (!fixed) return false;
    }
    return true;
}

} // namespace

ShuffledOrder shuffle_order(const Corpus& corpus, std::uint64_t seed) {
    if (corpus.pairs.empty()) {
        throw Error(ErrorCode::InvalidValue, "shuffle_order on empty corpus");
    }

    std::vector<WorkItem> base;
    base.reserve(corpus.pairs.size() * 2);
    for (const auto& pair : corpus.pairs) {
        base.push_back({pair.pair_id, Gender::Male});
        base.push_back({pair.pair_id, Gender::Female});
    }

    ShuffledOrder order;
    if (corpus.pairs.size() == 1) {
        order.items = base;
        Rng rng(seed);
        rng.shuffle(order.items);
        order.adjacency_warning = true;
        return order;
    }

    for (std::uint64_t attempt = 0; attempt < 10000; ++attempt) {
        order.items = base;
        std::uint64_t state = seed + attempt;
        Rng rng(splitmix64(state));
        rng.shuffle(order.items);
        if (fix_adjacency(order.items)) return order;
    }
    // unreachable in practice; interleave genders across pairs as a valid order
    order.items.clear();
    for (Gender g : {Gender::Male, Gender::Female}) {
        for (const auto& pair : corpus.pairs) order.items.push_back({pair.pair_id, g});
    }
    return order;
}

} // namespace ebias
