#include "tcmkg/cli.hpp"

#include "tcmkg/api.hpp"
#include "tcmkg/config.hpp"
#include "tcmkg/corpus.hpp"
#include "tcmkg/error.hpp"
#include "tcmkg/evalkit.hpp"
#include "tcmkg/extraction.hpp"
#include "tcmkg/generation.hpp"
#include "tcmkg/graph.hpp"
#include "tcmkg/graph_builder.hpp"
#include "tcmkg/service.hpp"

#include <CLI11.hpp>
#include <fmt/format.h>
#include <nlohmann/json.hpp>
#include <spdlog/spdlog.h>

#include <atomic>
#include <chrono>
#include <csignal>
#include <fstream>
#include <thread>

namespace tcmkg::cli {

using nlohmann::json;

namespace {

std::ifstream open_input(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw Error(fmt::format("cannot open {}", path.string()));
    return in;
}

void write_file(const std::filesystem::path& path, const std::string& content) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw Error(fmt::format("cannot write {}", path.string()));
    out << content;
    if (!out) throw Error(fmt::format("failed writing {}", path.string()));
}

// Options shared by every subcommand that needs configuration. Flags override
// the config file, which overrides built-in defaults.
struct Common {
    std::string config_path;
    std::string snapshot;
    std::string mock_responses;
    std::vector<std::string> corpus;
    std::optional<std::size_t> chunk_size;
    std::optional<std::size_t> chunk_overlap;
    std::optional<std::size_t> concurrency;
    std::optional<std::size_t> context_budget;
    std::optional<std::size_t> max_hops;

    Config load() const {
        Config c = config_path.empty() ? Config{} : load_config(config_path);
        if (!snapshot.empty()) c.snapshot = snapshot;
        if (!mock_responses.empty()) {
            c.llm.provider = "mock";
            c.llm.mock_responses = mock_responses;
        }
        if (!corpus.empty()) c.corpus_paths.assign(corpus.begin(), corpus.end());
        if (chunk_size) c.chunking.size = *chunk_size;
        if (chunk_overlap) c.chunking.overlap = *chunk_overlap;
        if (c.chunking.size == 0 || c.chunking.overlap >= c.chunking.size)
            throw ConfigError("chunk overlap must be smaller than a positive chunk size");
        if (concurrency) {
            if (*concurrency == 0) throw ConfigError("concurrency must be positive");
            c.extraction_concurrency = *concurrency;
        }
        if (context_budget) c.retrieval.context_budget = *context_budget;
        if (max_hops) {
            if (*max_hops == 0 || *max_hops > kMaxHops)
                throw ConfigError(fmt::format("max hops must lie in 1..{}", kMaxHops));
            c.retrieval.max_hops = *max_hops;
        }
        return c;
    }
};

void add_config_flag(CLI::App* cmd, Common& c) {
    cmd->add_option("-c,--config", c.config_path, "JSON config file");
}
void add_snapshot_flag(CLI::App* cmd, Common& c, bool required) {
    auto* opt = cmd->add_option("-s,--snapshot", c.snapshot, "graph snapshot file");
    if (required) opt->required();
}
void add_corpus_flags(CLI::App* cmd, Common& c) {
    cmd->add_option("--corpus", c.corpus, "corpus files or directories");
    cmd->add_option("--chunk-size", c.chunk_size, "characters per chunk");
    cmd->add_option("--chunk-overlap", c.chunk_overlap, "characters shared by consecutive chunks");
}
void add_retrieval_flags(CLI::App* cmd, Common& c) {
    cmd->add_option("--mock-responses", c.mock_responses, "mock client fixture (forces the mock provider)");
    cmd->add_option("--context-budget", c.context_budget, "context budget in characters");
    cmd->add_option("--max-hops", c.max_hops, "maximum path length");
}

std::vector<Chunk> load_chunks(const Config& config) {
    if (config.corpus_paths.empty()) throw ConfigError("no corpus given (--corpus or corpus.paths)");
    const auto books = load_corpus(config.corpus_paths);
    return chunk_corpus(books, config.chunking);
}

GraphStore build_store(std::span<const Chunk> chunks, const Config& config, LlmClient& client,
                       ExtractionReport* report_out, BuildSummary* summary) {
    auto report = extract_corpus(chunks, client, extraction_options(config));
    auto store = build_graph(chunks, report, summary);
    if (report_out) *report_out = std::move(report);
    return store;
}

GraphStore open_store(const Config& config) {
    if (config.snapshot.empty()) throw ConfigError("no snapshot given (--snapshot or snapshot)");
    return load_snapshot_file(config.snapshot);
}

std::string stats_table(const json& stats) {
    std::string out = "entities\n";
    for (auto c : kAllCategories) {
        const auto key = std::string(to_string(c));
        out += fmt::format("  {:<22}{:>10}\n", key, stats["entities"][key].get<std::size_t>());
    }
    out += "relations                 distinct  mentions\n";
    for (auto r : kAllRelations) {
        const auto key = std::string(surface(r));
        out += fmt::format("  {:<22}{:>10}{:>10}\n", key, stats["triples"][key].get<std::size_t>(),
                           stats["mentions"][key].get<std::size_t>());
    }
    out += fmt::format("total entities            {:>10}\n", stats["total_entities"].get<std::size_t>());
    out += fmt::format("total triples             {:>10}\n", stats["total_triples"].get<std::size_t>());
    out += fmt::format("total mentions            {:>10}\n", stats["total_mentions"].get<std::size_t>());
    out += fmt::format("quarantined               {:>10}\n", stats["quarantined"].get<std::size_t>());
    return out;
}

json skip_json(const std::string& chunk_id, const SkippedRecord& s) {
    return json{{"chunk_id", chunk_id},
                {"position", s.position},
                {"reason", to_string(s.reason)},
                {"detail", s.detail},
                {"raw", s.raw}};
}

std::atomic<bool> g_interrupted{false};
extern "C" void on_signal(int) { g_interrupted = true; }

} // namespace

int run(std::span<const std::string> args, std::ostream& out, std::ostream& err) {
    CLI::App app{"Knowledge-graph construction and graph-grounded question answering over classical TCM texts",
                 "tcmkg"};
    app.require_subcommand(1);
    app.set_help_all_flag("--help-all", "show help for every subcommand");

    Common common;

    auto* ingest = app.add_subcommand("ingest", "split a corpus into chunks");
    std::string chunks_out = "-";
    add_config_flag(ingest, common);
    add_corpus_flags(ingest, common);
    ingest->add_option("-o,--out", chunks_out, "chunk file to write ('-' for stdout)");

    auto* build = app.add_subcommand("build-graph", "extract triples and write a graph snapshot");
    std::string chunks_in, build_out, skip_report;
    add_config_flag(build, common);
    add_corpus_flags(build, common);
    build->add_option("--chunks", chunks_in, "chunk file from ingest (instead of --corpus)");
    build->add_option("--mock-responses", common.mock_responses, "mock client fixture (forces the mock provider)");
    build->add_option("-j,--concurrency", common.concurrency, "parallel extraction calls");
    build->add_option("-o,--out", build_out, "snapshot to write (default: config snapshot)");
    build->add_option("--skips", skip_report, "write skipped extraction records here");

    auto* stats = app.add_subcommand("stats", "entity and relation counts of a snapshot");
    bool stats_json = false;
    add_config_flag(stats, common);
    add_snapshot_flag(stats, common, false);
    stats->add_flag("--json", stats_json, "print JSON");

    auto* query = app.add_subcommand("query", "neighbourhood of an entity");
    std::string entity, relations, direction;
    std::size_t depth = 1;
    add_config_flag(query, common);
    add_snapshot_flag(query, common, false);
    query->add_option("-e,--entity", entity, "entity id (Category:name) or unambiguous name")->required();
    query->add_option("-d,--depth", depth, "hops from the entity")->check(CLI::Range(0, 4));
    query->add_option("-r,--relations", relations, "comma-separated relation filter");
    query->add_option("--direction", direction, "out, in or both");

    auto* qa = app.add_subcommand("qa", "answer one question");
    std::string question, mode_text = "diagnostic_qa";
    add_config_flag(qa, common);
    add_snapshot_flag(qa, common, false);
    add_retrieval_flags(qa, common);
    qa->add_option("-q,--question", question, "question text")->required();
    qa->add_option("-m,--mode", mode_text, "ingredient_lookup or diagnostic_qa")
        ->check(CLI::IsMember({"ingredient_lookup", "diagnostic_qa"}));

    auto* eval_ex = app.add_subcommand("eval-extraction", "precision/recall/F1/accuracy of extracted triples");
    std::string predicted_path, gold_path, report_path;
    bool eval_json = false;
    eval_ex->add_option("-p,--predicted", predicted_path, "predicted triples (JSONL)")->required();
    eval_ex->add_option("-g,--gold", gold_path, "gold triples (JSONL)")->required();
    eval_ex->add_option("--report", report_path, "write the full report (JSON), with published reference figures");
    eval_ex->add_flag("--json", eval_json, "print JSON");

    auto* eval_r = app.add_subcommand("eval-ratings", "MES, response accuracy and inter-rater agreement");
    std::string ratings_path;
    int threshold = eval::kCorrectThreshold;
    bool ratings_json = false;
    eval_r->add_option("-r,--ratings", ratings_path, "ratings (JSONL of item, rater, score)")->required();
    eval_r->add_option("-t,--threshold", threshold, "lowest score counted as correct")->check(CLI::Range(1, 5));
    eval_r->add_flag("--json", ratings_json, "print JSON");

    auto* serve = app.add_subcommand("serve", "run the HTTP API");
    std::optional<int> port;
    std::string host;
    add_config_flag(serve, common);
    add_snapshot_flag(serve, common, false);
    add_corpus_flags(serve, common);
    add_retrieval_flags(serve, common);
    serve->add_option("--host", host, "bind address");
    serve->add_option("--port", port, "bind port (0 picks a free port)")->check(CLI::Range(0, 65535));

    std::vector<std::string> reversed(args.rbegin(), args.rend());
    try {
        app.parse(reversed);
    } catch (const CLI::CallForHelp&) {
        out << app.help();
        return 0;
    } catch (const CLI::CallForAllHelp&) {
        out << app.help("", CLI::AppFormatMode::All);
        return 0;
    } catch (const CLI::ParseError& e) {
        err << "error: " << e.what() << "\n\n";
        const auto* sub = app.get_subcommands().empty() ? &app : app.get_subcommands().front();
        err << sub->help();
        return 2;
    }

    try {
        if (ingest->parsed()) {
            const auto config = common.load();
            if (config.corpus_paths.empty()) throw ConfigError("no corpus given (--corpus or corpus.paths)");
            const auto books = load_corpus(config.corpus_paths);
            const auto chunks = chunk_corpus(books, config.chunking);
            const auto s = corpus_stats(books);
            if (chunks_out == "-") {
                write_chunks(out, chunks);
            } else {
                std::ofstream file(chunks_out, std::ios::binary);
                if (!file) throw Error(fmt::format("cannot write {}", chunks_out));
                write_chunks(file, chunks);
                for (const auto& [specialty, counts] : s.by_specialty) {
                    out << fmt::format("{:<12} books={} chapters={} characters={}\n", to_string(specialty),
                                       counts.books, counts.chapters, counts.characters);
                }
                out << fmt::format("{:<12} books={} chapters={} characters={} chunks={}\n", "total", s.total.books,
                                   s.total.chapters, s.total.characters, chunks.size());
            }
            return 0;
        }

        if (build->parsed()) {
            auto config = common.load();
            if (!build_out.empty()) config.snapshot = build_out;
            if (config.snapshot.empty()) throw ConfigError("no output snapshot (--out or snapshot)");
            std::vector<Chunk> chunks;
            if (!chunks_in.empty()) {
                auto in = open_input(chunks_in);
                chunks = read_chunks(in, chunks_in);
            } else {
                chunks = load_chunks(config);
            }
            auto client = make_client(config.llm);
            ExtractionReport report;
            BuildSummary summary;
            const auto store = build_store(chunks, config, *client, &report, &summary);
            save_snapshot_file(store, config.snapshot);
            if (!skip_report.empty()) {
                std::string lines;
                for (const auto& c : report.chunks) {
                    for (const auto& s : c.skipped) lines += skip_json(c.chunk_id, s).dump() + "\n";
                }
                write_file(skip_report, lines);
            }
            const auto st = store.stats();
            out << fmt::format("chunks={} failed={} accepted={} skipped={} entities={} triples={} quarantined={}\n",
                               chunks.size(), report.failed_chunks(), report.triples.size(), report.skipped_records(),
                               st.total_entities, st.total_triples, st.quarantined);
            return 0;
        }

        if (stats->parsed()) {
            const auto store = open_store(common.load());
            const auto j = api::graph_stats(store);
            out << (stats_json ? j.dump(2) + "\n" : stats_table(j));
            return 0;
        }

        if (query->parsed()) {
            const auto store = open_store(common.load());
            const auto j = api::neighborhood(store, entity, depth,
                                             relations.empty() ? std::nullopt : std::optional<std::string_view>(relations),
                                             direction.empty() ? std::nullopt : std::optional<std::string_view>(direction));
            out << j.dump(2) << "\n";
            return 0;
        }

        if (qa->parsed()) {
            const auto config = common.load();
            const auto store = open_store(config);
            auto client = make_client(config.llm);
            out << api::qa(store, *client, config, question, *parse_answer_mode(mode_text)).dump(2) << "\n";
            return 0;
        }

        if (eval_ex->parsed()) {
            auto pin = open_input(predicted_path);
            auto gin = open_input(gold_path);
            const auto predicted = eval::read_triples(pin, predicted_path);
            const auto gold = eval::read_triples(gin, gold_path);
            eval::EvalReport report;
            report.extraction = eval::extraction_metrics(predicted, gold);
            report.consistency = eval::check_reference_consistency();
            if (!report_path.empty()) write_file(report_path, eval::to_json(report).dump(2) + "\n");
            if (eval_json) {
                auto j = eval::to_json(*report.extraction);
                j["summary"] = eval::metrics_line(*report.extraction);
                out << j.dump(2) << "\n";
            } else {
                out << eval::metrics_line(*report.extraction) << "\n";
            }
            return 0;
        }

        if (eval_r->parsed()) {
            auto in = open_input(ratings_path);
            const auto matrix = eval::RatingMatrix::read(in, ratings_path);
            eval::EvalReport report;
            report.ratings = eval::summarize_ratings(matrix, threshold);
            if (ratings_json) {
                auto j = eval::to_json(*report.ratings);
                j["threshold"] = threshold;
                out << j.dump(2) << "\n";
            } else {
                out << eval::to_text(report);
            }
            return 0;
        }

        if (serve->parsed()) {
            auto config = common.load();
            if (!host.empty()) config.server.host = host;
            if (port) config.server.port = *port;
            std::shared_ptr<LlmClient> client = make_client(config.llm);
            GraphStore store;
            if (!config.snapshot.empty() && std::filesystem::exists(config.snapshot)) {
                store = load_snapshot_file(config.snapshot);
            } else if (!config.corpus_paths.empty()) {
                spdlog::info("no snapshot found; building the graph from the corpus");
                const auto chunks = load_chunks(config);
                store = build_store(chunks, config, *client, nullptr, nullptr);
            } else {
                throw ConfigError("serve needs a snapshot or a corpus");
            }
            Service service(config, std::move(store), client);
            const int bound = service.bind();
            out << fmt::format("listening on http://{}:{}/v1\n", config.server.host, bound) << std::flush;

            g_interrupted = false;
            auto previous_int = std::signal(SIGINT, on_signal);
            auto previous_term = std::signal(SIGTERM, on_signal);
            std::jthread watcher([&](std::stop_token stop) {
                while (!stop.stop_requested() && !g_interrupted) std::this_thread::sleep_for(std::chrono::milliseconds(100));
                service.stop();
            });
            service.run();
            watcher.request_stop();
            watcher.join();
            std::signal(SIGINT, previous_int);
            std::signal(SIGTERM, previous_term);
            return 0;
        }
    } catch (const std::exception& e) {
        err << "error: " << e.what() << "\n";
        return 1;
    }
    return 2;
}

} // namespace tcmkg::cli
