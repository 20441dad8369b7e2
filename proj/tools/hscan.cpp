// hscan: command-line front end for scans, simulations, metrics and reports.

#include <csignal>
#include <cstdio>
#include <filesystem>
#include <iostream>
#include <memory>
#include <optional>
#include <string>

#include <fmt/format.h>
#include <spdlog/sinks/stdout_color_sinks.h>
#include <spdlog/spdlog.h>

#include "CLI11.hpp"
#include "hscan/core/errors.hpp"
#include "hscan/core/project_io.hpp"
#include "hscan/embedding/embedding.hpp"
#include "hscan/eval/metrics.hpp"
#include "hscan/eval/report.hpp"
#include "hscan/eval/simulation.hpp"
#include "hscan/llm/prompt.hpp"
#include "hscan/llm/provider.hpp"
#include "hscan/llm/screening.hpp"
#include "hscan/ranking/ranking.hpp"
#include "hscan/scanar/scan.hpp"
#include "hscan/service/service.hpp"

namespace fs = std::filesystem;
using namespace hscan;

namespace {

constexpr int kExitRuntime = 1;
constexpr int kExitUsage = 2;

struct TransportChoice {
    std::vector<std::string> values{"live"};

    bool fixtures() const { return values.front() == "fixtures"; }
    fs::path fixture_dir() const { return values.at(1); }
    void validate() const {
        if (values.front() == "live" && values.size() == 1) return;
        if (values.front() == "fixtures" && values.size() == 2) return;
        throw InputError("--transport expects 'live' or 'fixtures DIR'");
    }
};

void add_transport_option(CLI::App* cmd, TransportChoice& t) {
    cmd->add_option("--transport", t.values, "live, or 'fixtures DIR' to replay canned responses")
        ->expected(1, 2);
}

struct MappingFlags {
    std::string text_col;
    std::string label_col;
    std::string positive;
    std::string title_col;
    std::string id_col;

    void add(CLI::App* cmd, bool label_required) {
        cmd->add_option("--text-col", text_col, "column holding the reference text")->required();
        auto* label = cmd->add_option("--label-col", label_col, "column holding the gold label");
        auto* pos = cmd->add_option("--positive", positive, "label value that means include");
        if (label_required) {
            label->required();
            pos->required();
        }
        cmd->add_option("--title-col", title_col, "title column (auto-detected when omitted)");
        cmd->add_option("--id-col", id_col, "record id column (row-N when omitted)");
    }

    ImportMapping mapping() const {
        ImportMapping m;
        m.text_column = text_col;
        if (!label_col.empty()) m.label_column = label_col;
        if (!positive.empty()) m.positive_value = positive;
        if (!title_col.empty()) m.title_column = title_col;
        if (!id_col.empty()) m.id_column = id_col;
        return m;
    }
};

std::shared_ptr<embedding::Backend> make_embedder(const std::string& kind) {
    if (kind == "hashing") return std::make_shared<embedding::HashingBackend>();
    if (kind == "external") {
        return std::make_shared<embedding::ExternalBackend>(embedding::ExternalConfig::from_env(),
                                                            std::make_shared<HttpTransport>());
    }
    throw InputError(fmt::format("unknown embedder '{}' (hashing, external)", kind));
}

// ---- scan ----------------------------------------------------------------

struct ScanFlags {
    std::string queries;
    std::string from;
    std::string to;
    int max_per_query = 100;
    bool scrape = false;
    std::string out;
    TransportChoice transport;
};

int run_scan_cmd(const ScanFlags& f) {
    f.transport.validate();
    scanar::ScanParams params;
    params.max_per_query = f.max_per_query;
    params.scrape_fulltext = f.scrape;
    if (!f.from.empty() || !f.to.empty()) {
        scanar::Timeframe tf;
        if (!f.from.empty() && !(tf.start = scanar::parse_date(f.from))) throw InputError("--from must be YYYY-MM-DD");
        if (!f.to.empty() && !(tf.end = scanar::parse_date(f.to))) throw InputError("--to must be YYYY-MM-DD");
        params.timeframe = tf;
    }
    params.validate();
    const auto queries = scanar::parse_query_file(read_file(f.queries));
    const scanar::FeedConfig config = scanar::FeedConfig::from_env();

    std::unique_ptr<Clock> clock;
    std::unique_ptr<Transport> transport;
    if (f.transport.fixtures()) {
        clock = std::make_unique<VirtualClock>();
        auto fixture = std::make_unique<FixtureTransport>(clock.get());
        scanar::load_fixture_routes(*fixture, f.transport.fixture_dir(), config, params.timeframe);
        transport = std::move(fixture);
    } else {
        clock = std::make_unique<SystemClock>();
        transport = std::make_unique<HttpTransport>();
    }

    const auto result = scanar::run_scan(queries, params, config, *clock, *transport, [](const scanar::ScanProgress& p) {
        spdlog::debug("{}: {}/{} queries, {} scraped", p.phase, p.queries_done, p.queries_total, p.articles_scraped);
    });

    const fs::path out(f.out);
    fs::create_directories(out);
    write_file(out / "search_documentation.csv", scanar::export_search_doc(result.search_doc));
    write_file(out / "articles.csv", scanar::export_articles_csv(result.articles));
    write_file(out / "articles.ris", scanar::export_articles_ris(result.articles));

    fmt::print("{:<40} {:>10} {:>10} {:>10}\n", "query", "reported", "retrieved", "new");
    for (const auto& e : result.search_doc) {
        fmt::print("{:<40} {:>10} {:>10} {:>10}\n", e.query, e.n_results_reported, e.n_retrieved, e.n_new_unique);
    }
    fmt::print("{} unique articles written to {}\n", result.articles.size(), out.string());
    for (const auto& w : result.warnings) spdlog::warn("{}", w);
    for (const auto& e : result.errors) spdlog::error("{}", e);
    return 0;
}

// ---- simulate ------------------------------------------------------------

struct SimulateFlags {
    std::string dataset;
    MappingFlags mapping;
    std::size_t runs = 15;
    std::string seeds = "auto";
    std::size_t batch = 10;
    int sgd_period = 5;
    std::size_t max_seeds = 10;
    std::size_t neg_ratio = 3;
    std::string llm_judgements;
    std::uint64_t rng = 42;
    std::string out;
    std::string ranker = "aidoc";
    std::string embedder = "hashing";
    bool seeds_free = false;
    bool sample_sd = false;
    std::size_t jobs = 1;
    double r = 0.95;
};

int run_simulate_cmd(const SimulateFlags& f) {
    eval::SimulationConfig cfg;
    cfg.n_runs = f.runs;
    if (f.seeds != "auto") {
        try {
            std::size_t used = 0;
            const long long n = std::stoll(f.seeds, &used);
            if (used != f.seeds.size() || n < 1) throw std::invalid_argument(f.seeds);
            cfg.n_seeds = static_cast<std::size_t>(n);
        } catch (const std::exception&) {
            throw InputError(fmt::format("--seeds must be 'auto' or a positive integer, got '{}'", f.seeds));
        }
    }
    cfg.batch_size = f.batch;
    cfg.rng_seed = f.rng;
    cfg.ranker.sgd_period = f.sgd_period <= 0 ? ranking::kSgdDisabled : f.sgd_period;
    cfg.ranker.max_seeds = f.max_seeds;
    cfg.ranker.neg_ratio = f.neg_ratio;
    cfg.seeds_free = f.seeds_free;
    cfg.sample_sd = f.sample_sd;
    cfg.jobs = f.jobs;
    cfg.target_recall = f.r;
    auto mode = eval::parse_ranker_mode(f.ranker);
    if (!mode) throw InputError(fmt::format("unknown ranker '{}' (aidoc, oracle, random)", f.ranker));
    cfg.mode = *mode;
    if (!f.llm_judgements.empty()) {
        const auto judgements = llm::load_judgements(f.llm_judgements);
        cfg.llm_bits = llm::bits_of(judgements);
        cfg.ranker.llm_enabled = true;
    }
    cfg.validate();

    const Project project = import_csv(read_file(f.dataset), f.mapping.mapping());
    const auto data = eval::Dataset::from_project(project);
    if (cfg.llm_bits) {
        std::size_t missing = 0;
        for (const auto& id : data.ids) missing += cfg.llm_bits->count(id) == 0 ? 1 : 0;
        if (missing > 0) spdlog::warn("{} record(s) have no llm judgement; they count as 0", missing);
    }
    const std::size_t seeds = cfg.seeds_for(data.positives());
    spdlog::info("dataset: N={} P={}; {} run(s), {} seed(s){}", data.size(), data.positives(), cfg.n_runs, seeds,
                 cfg.n_seeds ? "" : " (auto)");

    auto embedder = make_embedder(f.embedder);
    const ranking::Corpus corpus(data.ids, data.texts, *embedder);
    const auto result = eval::simulate(corpus, data, cfg, embedder->name());
    eval::write_simulation(result, f.out);
    fmt::print("{}", eval::aggregate_text(result));
    return 0;
}

// ---- metrics -------------------------------------------------------------

int run_metrics_cmd(const std::string& trajectory_path, double r, bool as_json) {
    const auto t = eval::parse_trajectory_csv(read_file(trajectory_path));
    const auto m = eval::compute_metrics(t, r);
    if (as_json) {
        fmt::print("{}\n", eval::metrics_json(m).dump(2));
        return 0;
    }
    const int pct = static_cast<int>(r * 100 + 0.5);
    fmt::print("N={} P={}\n", m.n, m.p);
    fmt::print("WSS@{}: {:.6f}\n", pct, m.wss);
    if (m.tnr) fmt::print("TNR@{}: {:.6f}\n", pct, *m.tnr);
    else fmt::print("TNR@{}: n/a\n", pct);
    for (std::size_t i = 0; i < eval::kRecallFractions.size(); ++i) {
        fmt::print("Recall@{}% screened: {:.6f}\n", static_cast<int>(eval::kRecallFractions[i] * 100 + 0.5),
                   m.recall_at[i]);
    }
    fmt::print("Average precision: {:.6f}\n", m.average_precision);
    fmt::print("Last include after: {:.4f}%\n", m.last_include_pct);
    return 0;
}

// ---- report --------------------------------------------------------------

int run_report_cmd(const std::string& project_path, bool text, const std::string& curve_out) {
    const Project project = load_project(project_path);
    if (project.records.empty()) throw InputError("project has no records");
    const auto report = eval::mini_report(project);
    if (!curve_out.empty()) write_file(curve_out, eval::gain_curve_csv(report.curve));
    if (text) fmt::print("{}", eval::mini_report_text(report));
    else fmt::print("{}", eval::mini_report_json(report).dump(2) + "\n");
    return 0;
}

// ---- classify ------------------------------------------------------------

struct ClassifyFlags {
    std::string dataset;
    MappingFlags mapping;
    std::string template_path;
    std::string stub_rules;
    std::string out;
    std::size_t concurrency = 4;
    int delay_ms = 0;
};

int run_classify_cmd(const ClassifyFlags& f) {
    const Project project = import_csv(read_file(f.dataset), f.mapping.mapping());
    nlohmann::json tj;
    try {
        tj = nlohmann::json::parse(read_file(f.template_path));
    } catch (const nlohmann::json::parse_error& e) {
        throw InputError(fmt::format("{}: {}", f.template_path, e.what()));
    }
    const auto tmpl = llm::template_from_json(tj);
    std::unique_ptr<llm::ChatProvider> provider;
    if (!f.stub_rules.empty()) {
        provider = std::make_unique<llm::StubProvider>(llm::StubProvider::from_file(f.stub_rules));
    } else {
        provider = std::make_unique<llm::OpenAICompatibleProvider>(llm::ChatConfig::from_env(),
                                                                   std::make_shared<HttpTransport>());
    }
    llm::BatchConfig batch;
    batch.max_concurrency = f.concurrency;
    batch.min_interval = Duration{f.delay_ms};
    const auto judgements = llm::classify_batch(project.records, tmpl, *provider, batch);
    llm::save_judgements(judgements, f.out);
    const auto c = llm::count(judgements);
    fmt::print("{} judged: {} YES, {} NO ({} salvaged, {} defaulted, {} errors)\n", c.total, c.yes, c.total - c.yes,
               c.salvaged, c.defaulted, c.errors);
    return 0;
}

// ---- serve ---------------------------------------------------------------

service::Service* g_service = nullptr;

void on_signal(int) {
    if (g_service) g_service->stop();
}

struct ServeFlags {
    std::string host;
    int port = -1;
    std::string data_dir;
    std::size_t payload_limit = 0;
    std::string llm_stub;
    std::string embedder = "hashing";
    TransportChoice transport;
};

int run_serve_cmd(const ServeFlags& f) {
    f.transport.validate();
    service::ServiceConfig cfg;
    cfg.apply_env();
    if (!f.host.empty()) cfg.host = f.host;
    if (f.port >= 0) cfg.port = f.port;
    if (!f.data_dir.empty()) cfg.data_dir = f.data_dir;
    if (f.payload_limit > 0) cfg.payload_limit = f.payload_limit;

    service::Dependencies deps;
    deps.embedder = make_embedder(f.embedder);
    deps.feed = scanar::FeedConfig::from_env();
    if (!f.llm_stub.empty()) {
        deps.llm_provider = std::make_shared<llm::StubProvider>(llm::StubProvider::from_file(f.llm_stub));
    } else {
        const auto chat = llm::ChatConfig::from_env();
        if (!chat.api_key.empty()) {
            deps.llm_provider = std::make_shared<llm::OpenAICompatibleProvider>(chat, std::make_shared<HttpTransport>());
        } else {
            spdlog::info("no llm credentials; the llm endpoint is disabled");
        }
    }
    if (f.transport.fixtures()) {
        auto clock = std::make_shared<VirtualClock>();
        auto fixture = std::make_shared<FixtureTransport>(clock.get());
        scanar::load_fixture_routes(*fixture, f.transport.fixture_dir(), deps.feed, std::nullopt);
        deps.scan_clock = clock;
        deps.scan_transport = fixture;
    }
    service::Service svc(cfg, deps);
    g_service = &svc;
    std::signal(SIGINT, on_signal);
    std::signal(SIGTERM, on_signal);
    svc.listen();
    g_service = nullptr;
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    spdlog::set_default_logger(spdlog::stderr_color_mt("hscan"));
    spdlog::set_pattern("%^%l%$: %v");

    CLI::App app{"Horizon-scanning retrieval, active-learning screening and evaluation"};
    app.require_subcommand(1);
    bool verbose = false;
    bool quiet = false;
    app.add_flag("-v,--verbose", verbose, "debug logging");
    app.add_flag("-q,--quiet", quiet, "warnings and errors only");

    ScanFlags scan;
    auto* scan_cmd = app.add_subcommand("scan", "query the news feed, de-duplicate, rank and export");
    scan_cmd->add_option("--queries", scan.queries, "file with one query per line")->required();
    scan_cmd->add_option("--from", scan.from, "earliest publication date, YYYY-MM-DD");
    scan_cmd->add_option("--to", scan.to, "latest publication date, YYYY-MM-DD");
    scan_cmd->add_option("--max-per-query", scan.max_per_query, "results kept per query (1-100)")
        ->capture_default_str();
    scan_cmd->add_flag("--scrape", scan.scrape, "resolve links and scrape full text");
    scan_cmd->add_option("--out", scan.out, "output directory")->required();
    add_transport_option(scan_cmd, scan.transport);

    SimulateFlags sim;
    auto* sim_cmd = app.add_subcommand("simulate", "retrospective active-learning simulation on a gold dataset");
    sim_cmd->add_option("--dataset", sim.dataset, "gold-labeled CSV")->required();
    sim.mapping.add(sim_cmd, true);
    sim_cmd->add_option("--runs", sim.runs, "number of shuffled runs")->capture_default_str();
    sim_cmd->add_option("--seeds", sim.seeds, "positive seeds per run, or auto")->capture_default_str();
    sim_cmd->add_option("--batch", sim.batch, "records revealed between reranks")->capture_default_str();
    sim_cmd->add_option("--sgd-period", sim.sgd_period, "every n-th rerank uses the classifier; 0 disables")
        ->capture_default_str();
    sim_cmd->add_option("--max-seeds", sim.max_seeds, "seed sample cap per rerank")->capture_default_str();
    sim_cmd->add_option("--neg-ratio", sim.neg_ratio, "excludes per include in classifier training")
        ->capture_default_str();
    sim_cmd->add_option("--llm-judgements", sim.llm_judgements, "judgement JSON; enables the llm ensemble");
    sim_cmd->add_option("--rng", sim.rng, "base random seed")->capture_default_str();
    sim_cmd->add_option("--out", sim.out, "output directory")->required();
    sim_cmd->add_option("--ranker", sim.ranker, "aidoc, oracle or random")->capture_default_str();
    sim_cmd->add_option("--embedder", sim.embedder, "hashing or external")->capture_default_str();
    sim_cmd->add_flag("--seeds-free", sim.seeds_free, "leave seeds out of the scored trajectory");
    sim_cmd->add_flag("--sample-sd", sim.sample_sd, "report sample rather than population SD");
    sim_cmd->add_option("--jobs", sim.jobs, "runs simulated in parallel")->capture_default_str();
    sim_cmd->add_option("--r", sim.r, "target recall")->capture_default_str();

    std::string trajectory;
    double metrics_r = 0.95;
    bool metrics_json = false;
    auto* metrics_cmd = app.add_subcommand("metrics", "screening metrics for a given order");
    metrics_cmd->add_option("--trajectory", trajectory, "CSV with record_id,is_relevant in screening order")
        ->required();
    metrics_cmd->add_option("--r", metrics_r, "target recall")->capture_default_str();
    metrics_cmd->add_flag("--json", metrics_json, "print JSON");

    std::string project_path;
    bool report_text = false;
    std::string curve_out;
    auto* report_cmd = app.add_subcommand("report", "mini-report for a saved project");
    report_cmd->add_option("--project", project_path, "project JSON file")->required();
    report_cmd->add_flag("--text", report_text, "human-readable instead of JSON");
    report_cmd->add_option("--curve", curve_out, "also write the gain curve CSV here");

    ClassifyFlags cls;
    auto* cls_cmd = app.add_subcommand("classify", "one-off llm judgements for a dataset");
    cls_cmd->add_option("--dataset", cls.dataset, "CSV to classify")->required();
    cls.mapping.add(cls_cmd, false);
    cls_cmd->add_option("--template", cls.template_path, "prompt template JSON (part1..part4)")->required();
    cls_cmd->add_option("--stub", cls.stub_rules, "offline rules file instead of a live provider");
    cls_cmd->add_option("--out", cls.out, "judgement JSON to write")->required();
    cls_cmd->add_option("--concurrency", cls.concurrency, "requests in flight")->capture_default_str();
    cls_cmd->add_option("--delay-ms", cls.delay_ms, "minimum spacing between requests")->capture_default_str();

    ServeFlags serve;
    auto* serve_cmd = app.add_subcommand("serve", "run the HTTP service");
    serve_cmd->add_option("--host", serve.host, "bind address");
    serve_cmd->add_option("--port", serve.port, "port");
    serve_cmd->add_option("--data-dir", serve.data_dir, "persist projects here");
    serve_cmd->add_option("--payload-limit", serve.payload_limit, "maximum request size in bytes");
    serve_cmd->add_option("--llm-stub", serve.llm_stub, "offline llm rules file");
    serve_cmd->add_option("--embedder", serve.embedder, "hashing or external")->capture_default_str();
    add_transport_option(serve_cmd, serve.transport);

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::CallForAllHelp& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        app.exit(e);
        return kExitUsage;
    }
    spdlog::set_level(verbose ? spdlog::level::debug : quiet ? spdlog::level::warn : spdlog::level::info);

    try {
        if (*scan_cmd) return run_scan_cmd(scan);
        if (*sim_cmd) return run_simulate_cmd(sim);
        if (*metrics_cmd) return run_metrics_cmd(trajectory, metrics_r, metrics_json);
        if (*report_cmd) return run_report_cmd(project_path, report_text, curve_out);
        if (*cls_cmd) return run_classify_cmd(cls);
        if (*serve_cmd) return run_serve_cmd(serve);
    } catch (const InputError& e) {
        spdlog::error("{}", e.what());
        return kExitUsage;
    } catch (const ConflictError& e) {
        spdlog::error("{}", e.what());
        return kExitUsage;
    } catch (const std::exception& e) {
        spdlog::error("{}", e.what());
        return kExitRuntime;
    }
    return kExitUsage;
}
