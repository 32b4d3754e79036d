#include "ebias/mock_gateway.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>

#include <json.hpp>

#include "ebias/debias.hpp"
#include "ebias/errors.hpp"
#include "ebias/judge.hpp"
#include "ebias/lexmetrics.hpp"
#include "ebias/rng.hpp"

namespace ebias {

std::string mock_word(std::uint64_t index) {
    static constexpr char consonants[] = "bcdfglmnprstvz";
    static constexpr char vowels[] = "aeiou";
    constexpr std::uint64_t n_syllables = (sizeof(consonants) - 1) * (sizeof(vowels) - 1);

    std::string word;
    std::uint64_t k = index;
    int syllables = 2;
    for (std::uint64_t cap = n_syllables * n_syllables; k >= cap; cap *= n_syllables) {
        ++syllables;
        k -= cap;
    }
    for (int s = 0; s < syllables; ++s) {
        const std::uint64_t syl = k % n_syllables;
        k /= n_syllables;
        word += consonants[syl % (sizeof(consonants) - 1)];
        word += vowels[syl / (sizeof(consonants) - 1)];
    }
    return word;
}

namespace {

std::size_t word_count(std::string_view text) {
    std::size_t n = 0;
    bool in_word = false;
    for (char c : text) {
        const bool space = c == ' ' || c == '\t' || c == '\n' || c == '\r';
        if (!space && !in_word) ++n;
        in_word = !space;
    }
    return n;
}

// judge prompts end with "Text1: <...>" / "Text2: <...>"
bool extract_judged_texts(std::string_view message, std::string& text1, std::string& text2) {
    const std::string_view t1_tag = "Text1: <";
    const std::string_view t2_tag = "\n\nText2: <";
    const std::size_t p1 = message.find(t1_tag);
    if (p1 == std::string_view::npos) return false;
    const std::size_t p2 = message.find(t2_tag, p1);
    if (p2 == std::string_view::npos) return false;
    const std::size_t end = message.rfind('>');
    if (end == std::string_view::npos || end <= p2 + t2_tag.size()) return false;

    std::string_view body1 = message.substr(p1 + t1_tag.size(), p2 - p1 - t1_tag.size());
    if (!body1.empty() && body1.back() == '>') body1.remove_suffix(1);
    text1 = std::string(body1);
    text2 = std::string(message.substr(p2 + t2_tag.size(), end - p2 - t2_tag.size()));
    return true;
}

} // namespace

MockGateway::MockGateway(MockOptions options) : options_(std::move(options)) {
    if (options_.fixture_path.empty()) return;
    std::ifstream in(options_.fixture_path, std::ios::binary);
    if (!in) throw Error(ErrorCode::Io, "cannot open fixture " + options_.fixture_path);
    std::string line;
    while (std::getline(in, line)) {
        if (line.empty()) continue;
        const nlohmann::json obj = nlohmann::json::parse(line);
        ChatRequest req;
        req.model_id = obj.value("model_id", "");
        req.system_prompt = obj.value("system_prompt", "");
        req.user_message = obj.value("user_message", "");
        req.sample_index = obj.value("sample_index", std::uint64_t{0});
        fixture_[hash_request(req)] = obj.value("text", "");
    }
}

std::string MockGateway::sampled_text(const ChatRequest& req) const {
    std::uint64_t state = options_.seed ^ hash_request(req);
    Rng rng(splitmix64(state));

    std::uint64_t vocabulary = static_cast<std::uint64_t>(options_.base_vocabulary);
    if (!options_.bias_marker.empty() &&
        req.user_message.find(options_.bias_marker) != std::string::npos) {
        vocabulary = static_cast<std::uint64_t>(
            std::lround(static_cast<double>(vocabulary) * options_.bias_factor));
    }
    if (vocabulary == 0) vocabulary = 1;

    // each question draws from its own region of the word space
    const std::uint64_t offset = (fnv1a64(req.user_message) % 7919) * 64;

    const double base_len = std::clamp<double>(static_cast<double>(word_count(req.user_message)),
                                               24.0, 400.0);
    const double jitter = 1.0 + options_.length_jitter * (2.0 * rng.unit() - 1.0);
    const std::uint64_t length = std::max<std::uint64_t>(
        8, static_cast<std::uint64_t>(std::lround(base_len * jitter)));

    std::string text;
    std::uint64_t sentence_left = 6 + rng.below(9);
    for (std::uint64_t i = 0; i < length; ++i) {
        if (!text.empty()) text += ' ';
        text += mock_word(offset + rng.below(vocabulary));
        if (--sentence_left == 0 && i + 1 < length) {
            text += '.';
            sentence_left = 6 + rng.below(9);
        }
    }
    text += '.';
    return text;
}

std::string MockGateway::reply_text(const ChatRequest& req) const {
    const std::string& msg = req.user_message;

    if (msg.rfind(kJudgePromptHead, 0) == 0) {
        std::string text1, text2;
        if (extract_judged_texts(msg, text1, text2)) {
            const std::uint64_t t1 = tokenize(text1).t;
            const std::uint64_t t2 = tokenize(text2).t;
            if (t1 > t2) return "{text1: 1, text2: 0}";
            if (t2 > t1) return "{text1: 0, text2: 1}";
            return "{text1: 0, text2: 0}";
        }
    }

    for (auto [prefix, target] : {std::pair{kVariantPromptFemale, Gender::Female},
                                  std::pair{kVariantPromptMale, Gender::Male}}) {
        if (msg.rfind(prefix, 0) == 0) {
            std::string question(msg.substr(prefix.size()));
            if (!question.empty() && question.front() == ' ') question.erase(0, 1);
            return swap_gender_markers(question, target);
        }
    }

    MergePromptParts parts;
    if (parse_merge_prompt(msg, parts)) {
        switch (parts.level) {
            case 1:
                return parts.response_female + "\n" + parts.response_male;
            case 2: {
                // enrich with a short sampled addendum in fresh vocabulary
                std::uint64_t state = options_.seed ^ hash_request(req);
                Rng rng(splitmix64(state));
                const std::uint64_t offset = 7919 * 64 + (fnv1a64(msg) % 997) * 16;
                std::string extra;
                const std::uint64_t n = 8 + rng.below(8);
                for (std::uint64_t i = 0; i < n; ++i) {
                    if (!extra.empty()) extra += ' ';
                    extra += mock_word(offset + rng.below(12));
                }
                return parts.previous_output + "\n" + extra + ".";
            }
            default:
                return parts.previous_output;
        }
    }

    return sampled_text(req);
}

ChatResponse MockGateway::do_complete(const ChatRequest& req) {
    ChatResponse out;
    out.model_id = req.model_id;
    out.raw_status = 200;

    if (!options_.fixture_path.empty()) {
        const auto it = fixture_.find(hash_request(req));
        if (it == fixture_.end()) {
            throw Error(ErrorCode::FixtureMiss, "no fixture entry for request");
        }
        out.text = it->second;
        return out;
    }

    out.text = reply_text(req);
    return out;
}

void append_fixture(const std::string& path, const ChatRequest& req, const std::string& text) {
    std::ofstream out(path, std::ios::binary | std::ios::app);
    if (!out) throw Error(ErrorCode::Io, "cannot write fixture " + path);
    const nlohmann::json obj{
        {"model_id", req.model_id},         {"system_prompt", req.system_prompt},
        {"user_message", req.user_message}, {"sample_index", req.sample_index},
        {"text", text},
    };
    out << obj.dump() << '\n';
}

} // namespace ebias
