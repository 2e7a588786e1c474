#include "tcmkg/llm_client.hpp"

#include "tcmkg/error.hpp"
#include "tcmkg/unicode.hpp"

#include <fmt/format.h>
#include <httplib.h>
#include <nlohmann/json.hpp>

#include <cmath>
#include <cstdlib>
#include <fstream>
#include <sstream>
#include <thread>

namespace tcmkg {

using nlohmann::json;

MockClient::MockClient(std::map<std::string, Entry> script, std::string fallback)
    : script_(std::move(script)), fallback_(std::move(fallback)) {}

MockClient MockClient::from_stream(std::istream& in, std::string_view source_name) {
    MockClient client;
    std::string line;
    std::size_t line_no = 0;
    const std::string source(source_name);
    while (std::getline(in, line)) {
        ++line_no;
        if (line.find_first_not_of(" \t\r\n") == std::string::npos) continue;
        json record;
        try {
            record = json::parse(line);
        } catch (const json::parse_error& e) {
            throw InputError(source, line_no, "", fmt::format("malformed record: {}", e.what()));
        }
        if (!record.is_object()) throw InputError(source, line_no, "", "record is not an object");
        auto fp = record.find("fingerprint");
        if (fp == record.end() || !fp->is_string() || fp->get<std::string>().empty())
            throw InputError(source, line_no, "fingerprint", "missing");
        auto response = record.find("response");
        auto error = record.find("error");
        if (error != record.end()) {
            if (!error->is_string()) throw InputError(source, line_no, "error", "must be a string");
            client.script_error(fp->get<std::string>(), error->get<std::string>());
        } else if (response != record.end() && response->is_string()) {
            client.script(fp->get<std::string>(), response->get<std::string>());
        } else {
            throw InputError(source, line_no, "response", "missing");
        }
    }
    return client;
}

MockClient MockClient::from_file(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw InputError(path.string(), 0, "", "cannot open mock response file");
    return from_stream(in, path.string());
}

void MockClient::script(std::string fingerprint, std::string response) {
    script_[std::move(fingerprint)] = Entry{std::move(response), std::nullopt};
}

void MockClient::script_error(std::string fingerprint, std::string message) {
    script_[std::move(fingerprint)] = Entry{{}, std::move(message)};
}

std::string MockClient::complete(const PromptText& prompt, const DecodingParams&) {
    if (auto it = script_.find(prompt.fingerprint); it != script_.end()) {
        if (it->second.error) throw TransportError(*it->second.error);
        return it->second.response;
    }
    if (prompt.kind == PromptKind::Answer) return mock_answer_for(prompt);
    return fallback_;
}

std::string mock_answer_for(const PromptText& prompt) {
    constexpr std::string_view open = "<evidence>\n";
    constexpr std::string_view close = "</evidence>";
    std::vector<std::string> lines;
    const auto& text = prompt.text;
    if (auto begin = text.find(open); begin != std::string::npos) {
        begin += open.size();
        const auto end = text.find(close, begin);
        std::istringstream block(text.substr(begin, end == std::string::npos ? std::string::npos : end - begin));
        std::string line;
        while (std::getline(block, line)) {
            if (!line.empty()) lines.push_back(line);
        }
    }
    if (lines.empty()) return "[mock] The knowledge graph provided no evidence for this question.";
    std::string answer = fmt::format("[mock] Answer drawn from {} evidence line(s):", lines.size());
    for (const auto& l : lines) answer += "\n- " + l;
    return answer;
}

std::optional<ApiStyle> parse_api_style(std::string_view text) {
    if (text == "openai_chat") return ApiStyle::OpenAiChat;
    if (text == "anthropic_messages") return ApiStyle::AnthropicMessages;
    return std::nullopt;
}

std::chrono::milliseconds RetryPolicy::delay_after(int attempt) const {
    const double factor = std::pow(multiplier, std::max(0, attempt - 1));
    return std::chrono::milliseconds(static_cast<std::int64_t>(static_cast<double>(initial_backoff.count()) * factor));
}

HttpClient::HttpClient(ProviderProfile profile, std::string api_key, Sleeper sleeper)
    : profile_(std::move(profile)), api_key_(std::move(api_key)), sleeper_(std::move(sleeper)) {
    if (!sleeper_) sleeper_ = [](std::chrono::milliseconds d) { std::this_thread::sleep_for(d); };
    if (profile_.retry.max_attempts < 1) throw ConfigError("retry.max_attempts must be at least 1");

    const auto& url = profile_.endpoint;
    const auto scheme_end = url.find("://");
    if (scheme_end == std::string::npos) throw ConfigError(fmt::format("endpoint '{}' has no scheme", url));
    const auto path_start = url.find('/', scheme_end + 3);
    base_url_ = url.substr(0, path_start);
    path_ = path_start == std::string::npos ? "/" : url.substr(path_start);
}

std::unique_ptr<HttpClient> HttpClient::from_environment(ProviderProfile profile) {
    if (profile.api_key_env.empty()) throw ConfigError("provider profile names no API key environment variable");
    const char* key = std::getenv(profile.api_key_env.c_str());
    if (key == nullptr || *key == '\0')
        throw ConfigError(fmt::format("environment variable {} is not set", profile.api_key_env));
    return std::make_unique<HttpClient>(std::move(profile), std::string(key));
}

std::string HttpClient::request_body(const PromptText& prompt, const DecodingParams& params) const {
    json body = {
        {"model", profile_.model},
        {"temperature", params.temperature},
        {"max_tokens", params.max_tokens},
        {"messages", json::array({{{"role", "user"}, {"content", prompt.text}}})},
    };
    return body.dump();
}

std::string HttpClient::response_text(ApiStyle style, std::string_view body) {
    json doc;
    try {
        doc = json::parse(body);
    } catch (const json::parse_error& e) {
        throw TransportError(fmt::format("provider returned invalid JSON: {}", e.what()));
    }
    try {
        if (style == ApiStyle::OpenAiChat) {
            return doc.at("choices").at(0).at("message").at("content").get<std::string>();
        }
        std::string text;
        for (const auto& block : doc.at("content")) {
            if (block.value("type", "") == "text") text += block.at("text").get<std::string>();
        }
        return text;
    } catch (const json::exception& e) {
        throw TransportError(fmt::format("unexpected provider response shape: {}", e.what()));
    }
}

std::string HttpClient::attempt(const std::string& body) const {
    httplib::Client http(base_url_);
    http.set_connection_timeout(profile_.timeout);
    http.set_read_timeout(profile_.timeout);
    http.set_write_timeout(profile_.timeout);

    httplib::Headers headers;
    if (profile_.style == ApiStyle::OpenAiChat) {
        headers.emplace("Authorization", "Bearer " + api_key_);
    } else {
        headers.emplace("x-api-key", api_key_);
        headers.emplace("anthropic-version", "2023-06-01");
    }

    auto result = http.Post(path_, headers, body, "application/json");
    if (!result) {
        throw TransportError(fmt::format("request to {} failed: {}", profile_.endpoint, httplib::to_string(result.error())),
                             0, true);
    }
    const int status = result->status;
    if (status >= 200 && status < 300) return response_text(profile_.style, result->body);
    const bool retryable = status == 429 || status >= 500;
    throw TransportError(fmt::format("provider returned HTTP {}", status), status, retryable);
}

std::string HttpClient::complete(const PromptText& prompt, const DecodingParams& params) {
    const auto body = request_body(prompt, params);
    for (int attempt_no = 1;; ++attempt_no) {
        try {
            return attempt(body);
        } catch (const TransportError& e) {
            if (!e.retryable() || attempt_no >= profile_.retry.max_attempts) throw;
            sleeper_(profile_.retry.delay_after(attempt_no));
        }
    }
}

} // namespace tcmkg
