#pragma once

#include <chrono>
#include <filesystem>
#include <functional>
#include <istream>
#include <map>
#include <memory>
#include <optional>
#include <string>
#include <string_view>

namespace tcmkg {

struct DecodingParams {
    double temperature = 0.0;
    int max_tokens = 2048;
};

enum class PromptKind { Extraction, Answer };

/// A rendered prompt. `fingerprint` identifies the payload the prompt was
/// built from (chunk text for extraction prompts) so mocks can be scripted.
struct PromptText {
    PromptKind kind = PromptKind::Extraction;
    std::string text;
    std::string fingerprint;
};

/// Implementations must be safe for concurrent calls. Failures are reported
/// as TransportError, never as a made-up response.
class LlmClient {
public:
    virtual ~LlmClient() = default;
    virtual std::string complete(const PromptText& prompt, const DecodingParams& params) = 0;
};

/// Deterministic client. Extraction prompts are answered from a script keyed by
/// fingerprint (unknown fingerprints get `fallback`). Answer prompts echo the
/// evidence block of the prompt back as a bulleted answer.
class MockClient final : public LlmClient {
public:
    struct Entry {
        std::string response;
        /// When set, complete() throws TransportError with this message.
        std::optional<std::string> error;
    };

    MockClient() = default;
    explicit MockClient(std::map<std::string, Entry> script, std::string fallback = "[]");

    /// Line-delimited {"fingerprint": ..., "response": ...} or {"fingerprint": ..., "error": ...}.
    static MockClient from_stream(std::istream& in, std::string_view source_name = "<stream>");
    static MockClient from_file(const std::filesystem::path& path);

    // Not thread-safe; script before sharing the client.
    void script(std::string fingerprint, std::string response);
    void script_error(std::string fingerprint, std::string message);

    std::string complete(const PromptText& prompt, const DecodingParams& params) override;

    std::size_t size() const { return script_.size(); }

private:
    std::map<std::string, Entry> script_;
    std::string fallback_ = "[]";
};

/// Answer produced by MockClient for an answer prompt; exposed for tests.
std::string mock_answer_for(const PromptText& prompt);

enum class ApiStyle { OpenAiChat, AnthropicMessages };

std::optional<ApiStyle> parse_api_style(std::string_view text);

struct RetryPolicy {
    int max_attempts = 3;
    std::chrono::milliseconds initial_backoff{1000};
    double multiplier = 2.0;

    /// Delay before attempt `attempt + 1`, where `attempt` is 1-based.
    std::chrono::milliseconds delay_after(int attempt) const;
};

struct ProviderProfile {
    ApiStyle style = ApiStyle::OpenAiChat;
    /// Full URL, e.g. https://api.example.com/v1/chat/completions
    std::string endpoint;
    std::string model;
    std::string api_key_env;
    std::chrono::seconds timeout{60};
    RetryPolicy retry;
};

/// HTTP transport with bounded retry. Retries connection failures, 5xx and 429.
class HttpClient final : public LlmClient {
public:
    using Sleeper = std::function<void(std::chrono::milliseconds)>;

    HttpClient(ProviderProfile profile, std::string api_key, Sleeper sleeper = {});

    /// Reads the key from the profile's environment variable; throws ConfigError if unset.
    static std::unique_ptr<HttpClient> from_environment(ProviderProfile profile);

    std::string complete(const PromptText& prompt, const DecodingParams& params) override;

    std::string request_body(const PromptText& prompt, const DecodingParams& params) const;
    /// Pull the generated text out of a provider response body.
    static std::string response_text(ApiStyle style, std::string_view body);

private:
    std::string attempt(const std::string& body) const;

    ProviderProfile profile_;
    std::string api_key_;
    std::string base_url_;
    std::string path_;
    Sleeper sleeper_;
};

} // namespace tcmkg
