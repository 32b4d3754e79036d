#pragma once

#include <cstdint>
#include <string>
#include <unordered_map>

#include "ebias/gateway.hpp"

namespace ebias {

/// Seeded offline stand-in for a chat endpoint. Replies are a pure function
/// of (seed, request), so seeded runs replay byte-identically regardless of
/// call order. Three generators:
///   - sampler: pseudo-word text drawn from a per-question vocabulary whose
///     size scales by bias_factor when the user message contains bias_marker
///   - prompt-aware paths: judge prompts get a flag verdict (more distinct
///     words wins), variant-rewrite prompts get a marker-swapped question,
///     merge prompts get concatenation / enrichment / pass-through by level
///   - replay: fixture lookup keyed on the full request; misses are errors
struct MockOptions {
    std::uint64_t seed = 0;
    double bias_factor = 1.0;
    std::string bias_marker; // empty = unbiased sampler
    int base_vocabulary = 32;
    double length_jitter = 0.2;
    std::string fixture_path; // non-empty switches to replay mode
};

class MockGateway : public Gateway {
public:
    explicit MockGateway(MockOptions options);

protected:
    ChatResponse do_complete(const ChatRequest& req) override;

private:
    std::string sampled_text(const ChatRequest& req) const;
    std::string reply_text(const ChatRequest& req) const;

    MockOptions options_;
    std::unordered_map<std::uint64_t, std::string> fixture_;
};

/// Appends one replay-fixture line for the request/text pair.
void append_fixture(const std::string& path, const ChatRequest& req, const std::string& text);

/// Deterministic pseudo-word for a vocabulary index (lowercase, letters only).
std::string mock_word(std::uint64_t index);

} // namespace ebias
