// Shared test fixtures: synthetic corpora, scripted gateways, temp dirs.
#pragma once

#include <filesystem>
#include <fstream>
#include <string>
#include <vector>

#include "ebias/corpus.hpp"
#include "ebias/debias.hpp"
#include "ebias/gateway.hpp"
#include "ebias/mock_gateway.hpp"
#include "ebias/rng.hpp"

namespace support {

inline std::filesystem::path fresh_dir(const std::string& tag) {
    static int counter = 0;
    const auto dir = std::filesystem::temp_directory_path() /
                     ("ebias_test_" + tag + "_" + std::to_string(::getpid()) + "_" +
                      std::to_string(counter++));
    std::filesystem::remove_all(dir);
    std::filesystem::create_directories(dir);
    return dir;
}

/// Synthetic gendered corpus; question bodies are pseudo-word sentences and
/// the gender clause doubles as the mock's bias marker.
struct SyntheticCorpusOptions {
    std::size_t pairs_per_category = 2;
    std::size_t question_words = 120;
    std::uint64_t seed = 11;
    std::string male_clause = "I am asking as a man.";
    std::string female_clause = "I am asking as a woman.";
};

inline ebias::Corpus make_synthetic_corpus(const SyntheticCorpusOptions& options = {}) {
    ebias::Corpus corpus;
    ebias::Rng rng(options.seed);
    int next_id = 1;
    for (ebias::Category category : ebias::kAllCategories) {
        for (std::size_t k = 0; k < options.pairs_per_category; ++k) {
            ebias::QuestionPair pair;
            pair.pair_id = "q" + std::to_string(next_id++);
            pair.category = category;
            pair.forum = category == ebias::Category::Investment && k % 2 == 0
                             ? ebias::Forum::MarketWatch
                             : (k % 2 == 0 ? ebias::Forum::Reddit : ebias::Forum::Quora);
            pair.split = ebias::Split::Train;

            std::string body;
            for (std::size_t w = 0; w < options.question_words; ++w) {
                if (!body.empty()) body += ' ';
                body += ebias::mock_word(5000 + rng.below(900));
            }
            pair.base_text = body + "?";
            pair.male_text = body + "? " + options.male_clause;
            pair.female_text = body + "? " + options.female_clause;
            corpus.pairs.push_back(std::move(pair));
        }
    }
    corpus.provenance.source_path = "<synthetic>";
    corpus.provenance.row_count = corpus.pairs.size() * 2;
    return corpus;
}

inline std::string write_corpus_file(const ebias::Corpus& corpus, const std::string& tag) {
    const auto path = fresh_dir(tag) / "corpus.jsonl";
    ebias::save_corpus_jsonl(corpus, path.string());
    return path.string();
}

/// Decorator that records every completion into a replay fixture file.
class RecordingGateway : public ebias::Gateway {
public:
    RecordingGateway(ebias::Gateway& inner, std::string fixture_path)
        : inner_(inner), fixture_path_(std::move(fixture_path)) {}

protected:
    ebias::ChatResponse do_complete(const ebias::ChatRequest& req) override {
        ebias::ChatResponse response = inner_.complete(req);
        ebias::append_fixture(fixture_path_, req, response.text);
        return response;
    }

private:
    ebias::Gateway& inner_;
    std::string fixture_path_;
};

/// Gateway scripted per prompt type, for pinning debias behaviors.
class ScriptedDebiasGateway : public ebias::Gateway {
public:
    enum class MergeBehavior { Concatenate, EchoMale, FixedText };

    MergeBehavior merge_behavior = MergeBehavior::Concatenate;
    std::string fixed_merge_text;
    std::string female_response;
    std::string male_response;
    int merge_calls = 0;
    int response_calls = 0;
    int variant_calls = 0;

protected:
    ebias::ChatResponse do_complete(const ebias::ChatRequest& req) override {
        ebias::ChatResponse out;
        out.model_id = req.model_id;

        for (auto [prefix, target] :
             {std::pair{ebias::kVariantPromptFemale, ebias::Gender::Female},
              std::pair{ebias::kVariantPromptMale, ebias::Gender::Male}}) {
            if (req.user_message.rfind(prefix, 0) == 0) {
                ++variant_calls;
                std::string q(req.user_message.substr(prefix.size()));
                if (!q.empty() && q.front() == ' ') q.erase(0, 1);
                out.text = ebias::swap_gender_markers(q, target);
                return out;
            }
        }

        ebias::MergePromptParts parts;
        if (ebias::parse_merge_prompt(req.user_message, parts)) {
            ++merge_calls;
            switch (merge_behavior) {
                case MergeBehavior::Concatenate:
                    out.text = parts.response_female + " " + parts.response_male;
                    break;
                case MergeBehavior::EchoMale:
                    out.text = parts.response_male;
                    break;
                case MergeBehavior::FixedText:
                    out.text = fixed_merge_text;
                    break;
            }
            return out;
        }

        ++response_calls;
        const bool female = ebias::detect_gender_marker(req.user_message) == ebias::Gender::Female;
        out.text = female ? female_response : male_response;
        return out;
    }
};

inline std::string words_from(std::uint64_t offset, std::size_t n, std::uint64_t vocabulary,
                              std::uint64_t seed) {
    ebias::Rng rng(seed);
    std::string text;
    for (std::size_t i = 0; i < n; ++i) {
        if (!text.empty()) text += ' ';
        text += ebias::mock_word(offset + rng.below(vocabulary));
    }
    return text;
}

} // namespace support
