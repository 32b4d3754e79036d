#pragma once

#include <cstdint>
#include <memory>
#include <string>
#include <vector>

#include "ebias/gateway.hpp"

namespace ebias {

/// One chat endpoint. base_url "mock:" selects the built-in seeded mock
/// (mock_* keys apply); anything else is a live HTTP endpoint whose
/// credential comes from the named environment variable, never a file.
struct EndpointConfig {
    std::string name;
    std::string base_url;
    std::string model_id;
    std::string credential_env_var;
    std::string path = "/v1/chat/completions";
    // mock knobs
    double mock_factor = 1.0;
    std::string mock_marker;
    int mock_vocabulary = 32;
    std::string mock_fixture;
};

struct ToolConfig {
    double delay_seconds = 60.0;
    int max_retries = 3;
    double backoff_initial_seconds = 1.0;
    std::vector<EndpointConfig> endpoints;

    bool all_mock() const;
};

/// TOML-like key/value file: top-level scalars plus [[endpoints]] tables.
ToolConfig load_config(const std::string& path);
ToolConfig parse_config(const std::string& text, const std::string& origin = "<config>");

struct NamedGateway {
    std::string name;
    std::shared_ptr<Gateway> gateway;
};

std::vector<NamedGateway> make_gateways(const ToolConfig& config, std::uint64_t seed);

} // namespace ebias
