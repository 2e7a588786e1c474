#include "tcmkg/service.hpp"

#include "tcmkg/api.hpp"
#include "tcmkg/error.hpp"
#include "tcmkg/generation.hpp"

#include <fmt/format.h>
#include <httplib.h>
#include <nlohmann/json.hpp>
#include <spdlog/spdlog.h>

#include <charconv>
#include <semaphore>
#include <stdexcept>

namespace tcmkg {

using nlohmann::json;

namespace {

class BoundedClient final : public LlmClient {
public:
    BoundedClient(std::shared_ptr<LlmClient> inner, std::size_t max_inflight)
        : inner_(std::move(inner)), slots_(static_cast<std::ptrdiff_t>(max_inflight)) {}

    std::string complete(const PromptText& prompt, const DecodingParams& params) override {
        slots_.acquire();
        struct Release {
            std::counting_semaphore<>& s;
            ~Release() { s.release(); }
        } release{slots_};
        return inner_->complete(prompt, params);
    }

private:
    std::shared_ptr<LlmClient> inner_;
    std::counting_semaphore<> slots_;
};

void reply(httplib::Response& res, int status, const json& body) {
    res.status = status;
    res.set_content(body.dump(), "application/json");
}

void reply_error(httplib::Response& res, int status, std::string_view message) {
    reply(res, status, json{{"error", message}});
}

json parse_body(const httplib::Request& req) {
    try {
        return json::parse(req.body);
    } catch (const json::parse_error& e) {
        throw std::invalid_argument(fmt::format("request body is not valid JSON: {}", e.what()));
    }
}

std::string required_string(const json& body, const char* key) {
    if (!body.is_object() || !body.contains(key) || !body.at(key).is_string())
        throw std::invalid_argument(fmt::format("'{}' must be a string", key));
    return body.at(key).get<std::string>();
}

// Maps library exceptions onto status codes; every handler goes through here.
template <typename Handler>
httplib::Server::Handler guarded(Handler handler) {
    return [handler](const httplib::Request& req, httplib::Response& res) {
        try {
            reply(res, 200, handler(req));
        } catch (const GenerationError& e) {
            reply(res, 502, json{{"error", e.what()}, {"context", to_json(e.bundle())}});
        } catch (const TransportError& e) {
            reply_error(res, 502, e.what());
        } catch (const NotFoundError& e) {
            reply_error(res, 404, e.what());
        } catch (const InputError& e) {
            reply_error(res, 400, e.what());
        } catch (const InvalidNameError& e) {
            reply_error(res, 400, e.what());
        } catch (const std::invalid_argument& e) {
            reply_error(res, 400, e.what());
        } catch (const std::exception& e) {
            spdlog::error("{} {}: {}", req.method, req.path, e.what());
            reply_error(res, 500, e.what());
        }
    };
}

} // namespace

std::shared_ptr<LlmClient> bounded_client(std::shared_ptr<LlmClient> inner, std::size_t max_inflight) {
    if (max_inflight == 0) throw std::invalid_argument("max_inflight must be positive");
    return std::make_shared<BoundedClient>(std::move(inner), max_inflight);
}

struct Service::Impl {
    Config config;
    GraphStore store;
    std::shared_ptr<LlmClient> client;
    httplib::Server server;
    int port = 0;

    void routes() {
        server.set_payload_max_length(16u << 20);

        server.Get("/v1/health", guarded([this](const httplib::Request&) { return api::health(store); }));
        server.Get("/v1/graph/stats", guarded([this](const httplib::Request&) { return api::graph_stats(store); }));
        server.Get("/v1/graph/neighborhood", guarded([this](const httplib::Request& req) {
                       if (!req.has_param("entity")) throw std::invalid_argument("missing query parameter 'entity'");
                       std::size_t depth = 1;
                       if (req.has_param("depth")) {
                           const auto text = req.get_param_value("depth");
                           auto [ptr, ec] = std::from_chars(text.data(), text.data() + text.size(), depth);
                           if (ec != std::errc{} || ptr != text.data() + text.size())
                               throw std::invalid_argument("depth must be a non-negative integer");
                       }
                       std::optional<std::string> relations, direction;
                       if (req.has_param("relations")) relations = req.get_param_value("relations");
                       if (req.has_param("direction")) direction = req.get_param_value("direction");
                       return api::neighborhood(store, req.get_param_value("entity"), depth,
                                                relations ? std::optional<std::string_view>(*relations) : std::nullopt,
                                                direction ? std::optional<std::string_view>(*direction) : std::nullopt);
                   }));
        server.Post("/v1/search/ingredient", guarded([this](const httplib::Request& req) {
                        const auto body = parse_body(req);
                        return api::search_ingredient(store, *client, config, required_string(body, "query"));
                    }));
        server.Post("/v1/qa", guarded([this](const httplib::Request& req) {
                        const auto body = parse_body(req);
                        auto mode = AnswerMode::DiagnosticQa;
                        if (body.contains("mode")) {
                            const auto parsed = parse_answer_mode(required_string(body, "mode"));
                            if (!parsed) throw std::invalid_argument("mode must be ingredient_lookup or diagnostic_qa");
                            mode = *parsed;
                        }
                        return api::qa(store, *client, config, required_string(body, "question"), mode);
                    }));
        server.Post("/v1/eval/extraction",
                    guarded([](const httplib::Request& req) { return api::eval_extraction(parse_body(req)); }));
        server.Post("/v1/eval/ratings",
                    guarded([](const httplib::Request& req) { return api::eval_ratings(parse_body(req)); }));

        if (!config.server.static_dir.empty() && !server.set_mount_point("/", config.server.static_dir.string()))
            throw ConfigError(fmt::format("static_dir {} is not a directory", config.server.static_dir.string()));

        server.set_error_handler([](const httplib::Request&, httplib::Response& res) {
            if (res.body.empty()) reply_error(res, res.status, fmt::format("HTTP {}", res.status));
        });
    }
};

Service::Service(Config config, GraphStore store, std::shared_ptr<LlmClient> client)
    : impl_(std::make_unique<Impl>()) {
    impl_->config = std::move(config);
    impl_->store = std::move(store);
    impl_->client = bounded_client(std::move(client), impl_->config.server.max_inflight_llm);
    impl_->routes();
}

Service::~Service() {
    if (impl_) impl_->server.stop();
}

int Service::bind() {
    auto& s = impl_->server;
    const auto& host = impl_->config.server.host;
    const int port = impl_->config.server.port;
    if (port == 0) {
        impl_->port = s.bind_to_any_port(host);
        if (impl_->port < 0) throw Error(fmt::format("cannot bind to {}:<any>", host));
    } else {
        if (!s.bind_to_port(host, port)) throw Error(fmt::format("cannot bind to {}:{}", host, port));
        impl_->port = port;
    }
    return impl_->port;
}

void Service::run() {
    spdlog::info("serving on {}:{}", impl_->config.server.host, impl_->port);
    impl_->server.listen_after_bind();
}

void Service::stop() { impl_->server.stop(); }

void Service::wait_until_ready() const { impl_->server.wait_until_ready(); }

} // namespace tcmkg
