#include "tcmkg/config.hpp"

#include "tcmkg/error.hpp"

#include <fmt/format.h>
#include <nlohmann/json.hpp>

#include <fstream>
#include <initializer_list>
#include <set>

namespace tcmkg {

using nlohmann::json;

namespace {

void check_keys(const json& object, std::string_view where, std::initializer_list<std::string_view> allowed) {
    if (!object.is_object()) throw ConfigError(fmt::format("{}: expected an object", where));
    for (const auto& [key, _] : object.items()) {
        bool known = false;
        for (auto a : allowed) known = known || key == a;
        if (!known) throw ConfigError(fmt::format("{}: unknown key '{}'", where, key));
    }
}

template <typename T>
T get(const json& object, std::string_view where, const char* key) {
    try {
        return object.at(key).get<T>();
    } catch (const json::exception&) {
        throw ConfigError(fmt::format("{}.{}: wrong type", where, key));
    }
}

std::size_t get_count(const json& object, std::string_view where, const char* key, std::size_t min) {
    const auto& v = object.at(key);
    if (!v.is_number_integer() || v.get<long long>() < static_cast<long long>(min))
        throw ConfigError(fmt::format("{}.{}: expected an integer >= {}", where, key, min));
    return v.get<std::size_t>();
}

std::filesystem::path resolve(const std::filesystem::path& base, const std::string& p) {
    std::filesystem::path path(p);
    if (path.is_relative() && !base.empty()) return base / path;
    return path;
}

void parse_corpus_section(const json& j, const std::filesystem::path& base, Config& c) {
    check_keys(j, "corpus", {"paths", "chunk_size", "chunk_overlap"});
    if (j.contains("paths")) {
        c.corpus_paths.clear();
        for (const auto& p : get<std::vector<std::string>>(j, "corpus", "paths")) c.corpus_paths.push_back(resolve(base, p));
    }
    if (j.contains("chunk_size")) c.chunking.size = get_count(j, "corpus", "chunk_size", 1);
    if (j.contains("chunk_overlap")) c.chunking.overlap = get_count(j, "corpus", "chunk_overlap", 0);
    if (c.chunking.overlap >= c.chunking.size)
        throw ConfigError(fmt::format("corpus: chunk_overlap ({}) must be smaller than chunk_size ({})",
                                      c.chunking.overlap, c.chunking.size));
}

void parse_llm_section(const json& j, const std::filesystem::path& base, Config& c) {
    check_keys(j, "llm", {"provider", "endpoint", "model", "api_key_env", "mock_responses", "retry", "decoding",
                          "timeout_s"});
    auto& llm = c.llm;
    if (j.contains("provider")) {
        llm.provider = get<std::string>(j, "llm", "provider");
        if (llm.provider != "mock") {
            const auto style = parse_api_style(llm.provider);
            if (!style)
                throw ConfigError(fmt::format(
                    "llm.provider: '{}' is not one of mock, openai_chat, anthropic_messages", llm.provider));
            llm.profile.style = *style;
        }
    }
    if (j.contains("endpoint")) llm.profile.endpoint = get<std::string>(j, "llm", "endpoint");
    if (j.contains("model")) llm.profile.model = get<std::string>(j, "llm", "model");
    if (j.contains("api_key_env")) llm.profile.api_key_env = get<std::string>(j, "llm", "api_key_env");
    if (j.contains("mock_responses")) llm.mock_responses = resolve(base, get<std::string>(j, "llm", "mock_responses"));
    if (j.contains("timeout_s")) llm.profile.timeout = std::chrono::seconds(get_count(j, "llm", "timeout_s", 1));
    if (j.contains("retry")) {
        const auto& r = j.at("retry");
        check_keys(r, "llm.retry", {"max_attempts", "initial_backoff_ms", "multiplier"});
        if (r.contains("max_attempts"))
            llm.profile.retry.max_attempts = static_cast<int>(get_count(r, "llm.retry", "max_attempts", 1));
        if (r.contains("initial_backoff_ms"))
            llm.profile.retry.initial_backoff =
                std::chrono::milliseconds(get_count(r, "llm.retry", "initial_backoff_ms", 0));
        if (r.contains("multiplier")) {
            llm.profile.retry.multiplier = get<double>(r, "llm.retry", "multiplier");
            if (llm.profile.retry.multiplier < 1.0) throw ConfigError("llm.retry.multiplier: must be >= 1");
        }
    }
    if (j.contains("decoding")) {
        const auto& d = j.at("decoding");
        check_keys(d, "llm.decoding", {"temperature", "max_tokens"});
        if (d.contains("temperature")) {
            llm.decoding.temperature = get<double>(d, "llm.decoding", "temperature");
            if (llm.decoding.temperature < 0.0 || llm.decoding.temperature > 2.0)
                throw ConfigError("llm.decoding.temperature: must lie in [0, 2]");
        }
        if (d.contains("max_tokens"))
            llm.decoding.max_tokens = static_cast<int>(get_count(d, "llm.decoding", "max_tokens", 1));
    }
    if (llm.provider != "mock" && (llm.profile.endpoint.empty() || llm.profile.model.empty() ||
                                   llm.profile.api_key_env.empty()))
        throw ConfigError("llm: a real provider needs endpoint, model and api_key_env");
}

void parse_extraction_section(const json& j, Config& c) {
    check_keys(j, "extraction", {"concurrency", "max_failure_rate", "max_response_bytes"});
    if (j.contains("concurrency")) c.extraction_concurrency = get_count(j, "extraction", "concurrency", 1);
    if (j.contains("max_failure_rate")) {
        c.max_failure_rate = get<double>(j, "extraction", "max_failure_rate");
        if (c.max_failure_rate < 0.0 || c.max_failure_rate > 1.0)
            throw ConfigError("extraction.max_failure_rate: must lie in [0, 1]");
    }
    if (j.contains("max_response_bytes"))
        c.max_response_bytes = get_count(j, "extraction", "max_response_bytes", 1);
}

RelationType relation_named(const std::string& text, std::string_view where) {
    const auto r = parse_relation(text);
    if (!r) throw ConfigError(fmt::format("{}: unknown relation '{}'", where, text));
    return *r;
}

void parse_retrieval_section(const json& j, Config& c) {
    check_keys(j, "retrieval", {"max_hops", "decay", "relation_weights", "patterns", "link_limit", "min_substring",
                                "aliases", "context_budget", "call_model_without_evidence"});
    auto& r = c.retrieval;
    if (j.contains("max_hops")) {
        r.max_hops = get_count(j, "retrieval", "max_hops", 1);
        if (r.max_hops > kMaxHops) throw ConfigError(fmt::format("retrieval.max_hops: at most {}", kMaxHops));
    }
    if (j.contains("decay")) {
        r.scoring.decay = get<double>(j, "retrieval", "decay");
        if (!(r.scoring.decay > 0.0 && r.scoring.decay <= 1.0))
            throw ConfigError("retrieval.decay: must lie in (0, 1]");
    }
    if (j.contains("relation_weights")) {
        const auto& w = j.at("relation_weights");
        if (!w.is_object()) throw ConfigError("retrieval.relation_weights: expected an object");
        for (const auto& [name, value] : w.items()) {
            if (!value.is_number()) throw ConfigError(fmt::format("retrieval.relation_weights.{}: not a number", name));
            const double weight = value.get<double>();
            if (!(weight > 0.0 && weight <= 1.0))
                throw ConfigError(fmt::format("retrieval.relation_weights.{}: must lie in (0, 1]", name));
            r.scoring.relation_weights[relation_named(name, "retrieval.relation_weights")] = weight;
        }
    }
    if (j.contains("patterns")) {
        const auto& ps = j.at("patterns");
        if (!ps.is_array()) throw ConfigError("retrieval.patterns: expected an array");
        r.patterns.clear();
        for (const auto& p : ps) {
            check_keys(p, "retrieval.patterns[]", {"name", "steps"});
            PathPattern pattern;
            pattern.name = p.contains("name") ? get<std::string>(p, "retrieval.patterns[]", "name") : "";
            if (!p.contains("steps") || !p.at("steps").is_array())
                throw ConfigError("retrieval.patterns[].steps: expected an array");
            for (const auto& s : p.at("steps")) {
                check_keys(s, "retrieval.patterns[].steps[]", {"relation", "direction"});
                const auto dir = parse_direction(get<std::string>(s, "retrieval.patterns[].steps[]", "direction"));
                if (!dir) throw ConfigError("retrieval.patterns[].steps[].direction: expected out or in");
                pattern.steps.push_back(
                    {relation_named(get<std::string>(s, "retrieval.patterns[].steps[]", "relation"),
                                    "retrieval.patterns[].steps[]"),
                     *dir});
            }
            try {
                validate_pattern(pattern);
            } catch (const std::invalid_argument& e) {
                throw ConfigError(fmt::format("retrieval.patterns '{}': {}", pattern.name, e.what()));
            }
            r.patterns.push_back(std::move(pattern));
        }
    }
    if (j.contains("link_limit")) r.link.limit = get_count(j, "retrieval", "link_limit", 1);
    if (j.contains("min_substring")) r.link.min_substring = get_count(j, "retrieval", "min_substring", 1);
    if (j.contains("aliases")) r.link.aliases = get<std::map<std::string, std::string>>(j, "retrieval", "aliases");
    if (j.contains("context_budget")) r.context_budget = get_count(j, "retrieval", "context_budget", 1);
    if (j.contains("call_model_without_evidence"))
        c.call_model_without_evidence = get<bool>(j, "retrieval", "call_model_without_evidence");
}

void parse_server_section(const json& j, const std::filesystem::path& base, Config& c) {
    check_keys(j, "server", {"host", "port", "max_inflight_llm", "static_dir"});
    if (j.contains("host")) c.server.host = get<std::string>(j, "server", "host");
    if (j.contains("port")) {
        const auto port = get_count(j, "server", "port", 0);
        if (port > 65535) throw ConfigError("server.port: must be <= 65535");
        c.server.port = static_cast<int>(port);
    }
    if (j.contains("max_inflight_llm")) c.server.max_inflight_llm = get_count(j, "server", "max_inflight_llm", 1);
    if (j.contains("static_dir")) c.server.static_dir = resolve(base, get<std::string>(j, "server", "static_dir"));
}

} // namespace

Config config_from_json(const json& document, const std::filesystem::path& base_dir) {
    check_keys(document, "config", {"corpus", "llm", "extraction", "retrieval", "server", "snapshot"});
    Config c;
    if (document.contains("corpus")) parse_corpus_section(document.at("corpus"), base_dir, c);
    if (document.contains("llm")) parse_llm_section(document.at("llm"), base_dir, c);
    if (document.contains("extraction")) parse_extraction_section(document.at("extraction"), c);
    if (document.contains("retrieval")) parse_retrieval_section(document.at("retrieval"), c);
    if (document.contains("server")) parse_server_section(document.at("server"), base_dir, c);
    if (document.contains("snapshot")) c.snapshot = resolve(base_dir, get<std::string>(document, "config", "snapshot"));
    return c;
}

Config load_config(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError(fmt::format("cannot open config file {}", path.string()));
    json document;
    try {
        document = json::parse(in);
    } catch (const json::parse_error& e) {
        throw ConfigError(fmt::format("{}: {}", path.string(), e.what()));
    }
    return config_from_json(document, path.parent_path());
}

ExtractionOptions extraction_options(const Config& config) {
    ExtractionOptions o;
    o.concurrency = config.extraction_concurrency;
    o.decoding = config.llm.decoding;
    o.parser.max_response_bytes = config.max_response_bytes;
    o.max_failure_rate = config.max_failure_rate;
    return o;
}

std::unique_ptr<LlmClient> make_client(const LlmConfig& config) {
    if (config.provider == "mock") {
        if (config.mock_responses.empty()) return std::make_unique<MockClient>();
        return std::make_unique<MockClient>(MockClient::from_file(config.mock_responses));
    }
    return HttpClient::from_environment(config.profile);
}

} // namespace tcmkg
