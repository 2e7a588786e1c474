#pragma once

#include "tcmkg/config.hpp"
#include "tcmkg/graph.hpp"
#include "tcmkg/llm_client.hpp"

#include <memory>
#include <string>

namespace tcmkg {

/// HTTP/JSON API under /v1 over a read-only store.
///
///   GET  /v1/health
///   GET  /v1/graph/stats
///   GET  /v1/graph/neighborhood?entity=&depth=&relations=&direction=
///   POST /v1/search/ingredient   {"query": ...}
///   POST /v1/qa                  {"question": ..., "mode": ...}
///   POST /v1/eval/extraction     {"predicted": [...], "gold": [...]}
///   POST /v1/eval/ratings        {"ratings": [...], "threshold": 3}
class Service {
public:
    Service(Config config, GraphStore store, std::shared_ptr<LlmClient> client);
    ~Service();
    Service(const Service&) = delete;
    Service& operator=(const Service&) = delete;

    /// Binds config.server.host:port (port 0 picks a free one). Returns the
    /// bound port; throws Error on failure.
    int bind();
    /// Blocks until stop().
    void run();
    void stop();
    void wait_until_ready() const;

private:
    struct Impl;
    std::unique_ptr<Impl> impl_;
};

/// LlmClient decorator capping concurrent calls.
std::shared_ptr<LlmClient> bounded_client(std::shared_ptr<LlmClient> inner, std::size_t max_inflight);

} // namespace tcmkg
