#include "ebias/config.hpp"

#include <cstdlib>
#include <fstream>
#include <sstream>

#include "ebias/errors.hpp"
#include "ebias/mock_gateway.hpp"

namespace ebias {

bool ToolConfig::all_mock() const {
    if (endpoints.empty()) return false;
    for (const auto& e : endpoints) {
        if (e.base_url.rfind("mock", 0) != 0) return false;
    }
    return true;
}

namespace {

std::string trim(std::string_view s) {
    std::size_t b = 0;
    std::size_t e = s.size();
    while (b < e && (s[b] == ' ' || s[b] == '\t')) ++b;
    while (e > b && (s[e - 1] == ' ' || s[e - 1] == '\t' || s[e - 1] == '\r')) --e;
    return std::string(s.substr(b, e - b));
}

// strips a trailing comment, respecting double-quoted strings
std::string strip_comment(std::string_view line) {
    bool quoted = false;
    for (std::size_t i = 0; i < line.size(); ++i) {
        if (line[i] == '"') quoted = !quoted;
        else if (line[i] == '#' && !quoted) return std::string(line.substr(0, i));
    }
    return std::string(line);
}

std::string parse_scalar(std::string_view value, const std::string& where) {
    const std::string v = trim(value);
    if (v.size() >= 2 && v.front() == '"' && v.back() == '"') {
        std::string out;
        for (std::size_t i = 1; i + 1 < v.size(); ++i) {
            if (v[i] == '\\' && i + 2 < v.size()) {
                ++i;
                switch (v[i]) {
                    case 'n': out += '\n'; break;
                    case 't': out += '\t'; break;
                    case '"': out += '"'; break;
                    case '\\': out += '\\'; break;
                    default: out += v[i];
                }
            } else {
                out += v[i];
            }
        }
        return out;
    }
    if (v.empty()) throw Error(ErrorCode::Config, where + ": empty value");
    return v;
}

double to_number(const std::string& v, const std::string& where) {
    try {
        std::size_t used = 0;
        const double x = std::stod(v, &used);
        if (used != v.size()) throw std::invalid_argument(v);
        return x;
    } catch (const std::exception&) {
        throw Error(ErrorCode::Config, where + ": expected a number, got '" + v + "'");
    }
}

} // namespace

ToolConfig parse_config(const std::string& text, const std::string& origin) {
    ToolConfig config;
    EndpointConfig* current = nullptr;

    std::istringstream in(text);
    std::string raw;
    std::size_t line_no = 0;
    while (std::getline(in, raw)) {
        ++line_no;
        const std::string line = trim(strip_comment(raw));
        if (line.empty()) continue;
        const std::string where = origin + ":" + std::to_string(line_no);

        if (line == "[[endpoints]]") {
            config.endpoints.emplace_back();
            current = &config.endpoints.back();
            continue;
        }
        if (line.front() == '[') {
            throw Error(ErrorCode::Config, where + ": unknown table " + line);
        }

        const std::size_t eq = line.find('=');
        if (eq == std::string::npos) {
            throw Error(ErrorCode::Config, where + ": expected key = value");
        }
        const std::string key = trim(line.substr(0, eq));
        const std::string value = parse_scalar(line.substr(eq + 1), where);

        if (!current) {
            if (key == "delay_seconds") config.delay_seconds = to_number(value, where);
            else if (key == "max_retries") config.max_retries = static_cast<int>(to_number(value, where));
            else if (key == "backoff_initial_seconds") config.backoff_initial_seconds = to_number(value, where);
            else throw Error(ErrorCode::Config, where + ": unknown key '" + key + "'");
            continue;
        }

        if (key == "name") current->name = value;
        else if (key == "base_url") current->base_url = value;
        else if (key == "model_id") current->model_id = value;
        else if (key == "credential_env_var") current->credential_env_var = value;
        else if (key == "path") current->path = value;
        else if (key == "mock_factor") current->mock_factor = to_number(value, where);
        else if (key == "mock_marker") current->mock_marker = value;
        else if (key == "mock_vocabulary") current->mock_vocabulary = static_cast<int>(to_number(value, where));
        else if (key == "mock_fixture") current->mock_fixture = value;
        else throw Error(ErrorCode::Config, where + ": unknown endpoint key '" + key + "'");
    }

    for (const auto& endpoint : config.endpoints) {
        if (endpoint.name.empty()) throw Error(ErrorCode::Config, origin + ": endpoint without a name");
        if (endpoint.base_url.empty()) {
            throw Error(ErrorCode::Config, origin + ": endpoint " + endpoint.name + " has no base_url");
        }
    }
    return config;
}

ToolConfig load_config(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw Error(ErrorCode::Io, "cannot open " + path);
    std::ostringstream buffer;
    buffer << in.rdbuf();
    return parse_config(buffer.str(), path);
}

std::vector<NamedGateway> make_gateways(const ToolConfig& config, std::uint64_t seed) {
    std::vector<NamedGateway> gateways;
    for (const auto& endpoint : config.endpoints) {
        NamedGateway named;
        named.name = endpoint.name;
        if (endpoint.base_url.rfind("mock", 0) == 0) {
            MockOptions options;
            options.seed = seed;
            options.bias_factor = endpoint.mock_factor;
            options.bias_marker = endpoint.mock_marker;
            options.base_vocabulary = endpoint.mock_vocabulary;
            options.fixture_path = endpoint.mock_fixture;
            named.gateway = std::make_shared<MockGateway>(options);
        } else {
            HttpGatewayConfig http;
            http.base_url = endpoint.base_url;
            http.path = endpoint.path;
            http.model_id = endpoint.model_id;
            http.delay_seconds = config.delay_seconds;
            http.max_retries = config.max_retries;
            http.backoff_initial_seconds = config.backoff_initial_seconds;
            if (!endpoint.credential_env_var.empty()) {
                const char* key = std::getenv(endpoint.credential_env_var.c_str());
                if (!key || !*key) {
                    throw Error(ErrorCode::AuthFailure,
                                "environment variable " + endpoint.credential_env_var +
                                    " is not set for endpoint " + endpoint.name);
                }
                http.api_key = key;
            }
            named.gateway = std::make_shared<HttpGateway>(std::move(http));
        }
        gateways.push_back(std::move(named));
    }
    return gateways;
}

} // namespace ebias
