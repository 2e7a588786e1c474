#pragma once

#include "tcmkg/corpus.hpp"
#include "tcmkg/extraction.hpp"
#include "tcmkg/llm_client.hpp"
#include "tcmkg/retrieval.hpp"

#include <nlohmann/json_fwd.hpp>

#include <filesystem>
#include <memory>
#include <string>
#include <vector>

namespace tcmkg {

struct LlmConfig {
    /// "mock", "openai_chat" or "anthropic_messages".
    std::string provider = "mock";
    ProviderProfile profile;
    /// Fixture for the mock provider; empty means every extraction gets "[]".
    std::filesystem::path mock_responses;
    DecodingParams decoding;
};

struct ServerConfig {
    std::string host = "127.0.0.1";
    int port = 8080;
    std::size_t max_inflight_llm = 4;
    /// Optional directory of static files served at "/".
    std::filesystem::path static_dir;
};

struct Config {
    std::vector<std::filesystem::path> corpus_paths;
    ChunkingOptions chunking;
    LlmConfig llm;
    std::size_t extraction_concurrency = 4;
    double max_failure_rate = 1.0;
    std::size_t max_response_bytes = 1 << 20;
    RetrievalParams retrieval;
    bool call_model_without_evidence = false;
    ServerConfig server;
    std::filesystem::path snapshot;
};

/// Unknown keys and out-of-range values throw ConfigError. Relative paths are
/// resolved against `base_dir`.
Config config_from_json(const nlohmann::json& document, const std::filesystem::path& base_dir = {});
Config load_config(const std::filesystem::path& path);

ExtractionOptions extraction_options(const Config& config);

/// The mock unless a real provider is configured, and then only when its key
/// is present in the environment (otherwise ConfigError).
std::unique_ptr<LlmClient> make_client(const LlmConfig& config);

} // namespace tcmkg
