#include "hscan/service/service.hpp"

#include <cstdlib>
#include <random>
#include <regex>

#include <fmt/format.h>
#include <spdlog/spdlog.h>

#include "httplib.h"
#include "hscan/core/errors.hpp"
#include "hscan/core/project_io.hpp"
#include "hscan/core/ris.hpp"
#include "hscan/core/utf8.hpp"
#include "hscan/eval/report.hpp"
#include "hscan/llm/prompt.hpp"

namespace hscan::service {

using nlohmann::json;

std::string_view to_string(JobStatus s) {
    switch (s) {
        case JobStatus::queued: return "queued";
        case JobStatus::running: return "running";
        case JobStatus::done: return "done";
        case JobStatus::failed: return "failed";
    }
    return "queued";
}

void ServiceConfig::apply_env() {
    const auto env = [](const char* name) -> std::optional<std::string> {
        const char* v = std::getenv(name);
        if (v == nullptr || *v == '\0') return std::nullopt;
        return std::string(v);
    };
    const auto number = [](const std::string& name, const std::string& v) {
        try {
            std::size_t used = 0;
            const unsigned long long n = std::stoull(v, &used);
            if (used != v.size()) throw std::invalid_argument(v);
            return n;
        } catch (const std::exception&) {
            throw ConfigError(fmt::format("{} must be a non-negative integer, got '{}'", name, v));
        }
    };
    if (auto v = env("HSCAN_HOST")) host = *v;
    if (auto v = env("HSCAN_PORT")) port = static_cast<int>(number("HSCAN_PORT", *v));
    if (auto v = env("HSCAN_PAYLOAD_LIMIT")) payload_limit = number("HSCAN_PAYLOAD_LIMIT", *v);
    if (auto v = env("HSCAN_DATA_DIR")) data_dir = *v;
}

namespace {

struct ApiError {
    int status;
    std::string code;
    std::string message;
};

ApiError classify(const std::exception& e) {
    if (dynamic_cast<const BusyError*>(&e)) return {409, "busy", e.what()};
    if (dynamic_cast<const ConflictError*>(&e)) return {409, "conflict", e.what()};
    if (dynamic_cast<const NotFoundError*>(&e)) return {404, "not_found", e.what()};
    if (dynamic_cast<const InputError*>(&e)) return {400, "bad_request", e.what()};
    if (dynamic_cast<const json::exception*>(&e)) return {400, "bad_request", e.what()};
    if (dynamic_cast<const TransportError*>(&e) || dynamic_cast<const ConfigError*>(&e)) {
        return {502, "upstream_failure", e.what()};
    }
    return {500, "internal", e.what()};
}

void send_error(httplib::Response& res, int status, std::string_view code, std::string_view message) {
    res.status = status;
    const json body{{"error", {{"code", code}, {"message", message}}}};
    res.set_content(body.dump(), "application/json");
}

void send_json(httplib::Response& res, const json& body, int status = 200) {
    res.status = status;
    res.set_content(body.dump(2) + "\n", "application/json");
}

using Handler = std::function<void(const httplib::Request&, httplib::Response&)>;

Handler guarded(Handler h) {
    return [h = std::move(h)](const httplib::Request& req, httplib::Response& res) {
        try {
            h(req, res);
        } catch (const std::exception& e) {
            const ApiError err = classify(e);
            if (err.status >= 500) spdlog::error("{} {}: {}", req.method, req.path, e.what());
            send_error(res, err.status, err.code, err.message);
        }
    };
}

json parse_body(const httplib::Request& req) {
    if (req.body.empty()) return json::object();
    try {
        return json::parse(req.body);
    } catch (const json::parse_error& e) {
        throw InputError(fmt::format("request body is not valid JSON: {}", e.what()));
    }
}

std::optional<std::string> form_value(const httplib::Request& req, const std::string& key) {
    if (req.has_file(key)) return req.get_file_value(key).content;
    if (req.has_param(key)) return req.get_param_value(key);
    return std::nullopt;
}

std::size_t query_size(const httplib::Request& req, const std::string& key, std::size_t fallback) {
    if (!req.has_param(key)) return fallback;
    const std::string v = req.get_param_value(key);
    try {
        std::size_t used = 0;
        const long long n = std::stoll(v, &used);
        if (used != v.size() || n < 0) throw std::invalid_argument(v);
        return static_cast<std::size_t>(n);
    } catch (const std::exception&) {
        throw InputError(fmt::format("query parameter '{}' must be a non-negative integer", key));
    }
}

json counts_json(const Project& p, std::size_t min_includes) {
    const std::size_t includes = p.count(Label::include);
    return json{{"include", includes},
                {"exclude", p.count(Label::exclude)},
                {"unlabeled", p.count(Label::unlabeled)},
                {"label_events", p.label_events.size()},
                {"rerank_allowed", includes >= min_includes}};
}

json record_view(const RecordItem& r) {
    return json{{"id", r.id},
                {"title", r.title},
                {"reference_text", r.reference_text},
                {"label", to_string(r.label)},
                {"score", r.current_score ? json(*r.current_score) : json(nullptr)},
                {"llm_bit", r.llm_bit ? json(*r.llm_bit) : json(nullptr)}};
}

json ranking_json(const RankingState& s, std::uint64_t seed) {
    return json{{"iteration", s.iteration},
                {"ranker_used", to_string(s.ranker_used)},
                {"n_ranked", s.ordering.size()},
                {"seeds_used", s.seeds_used},
                {"sgd_fallback", s.sgd_fallback},
                {"training_includes", s.training_includes},
                {"training_excludes", s.training_excludes},
                {"llm_pending", s.llm_pending},
                {"rng_seed", seed}};
}

ranking::EnsembleConfig ensemble_from(const json& body) {
    ranking::EnsembleConfig cfg;
    if (body.contains("sgd_period")) {
        const auto& v = body.at("sgd_period");
        cfg.sgd_period = v.is_null() ? ranking::kSgdDisabled : v.get<int>();
    }
    if (body.contains("max_seeds")) cfg.max_seeds = body.at("max_seeds").get<std::size_t>();
    if (body.contains("neg_ratio")) cfg.neg_ratio = body.at("neg_ratio").get<std::size_t>();
    if (body.contains("llm_enabled")) cfg.llm_enabled = body.at("llm_enabled").get<bool>();
    cfg.validate();
    return cfg;
}

scanar::ScanParams scan_params_from(const json& body, scanar::ScanParams params) {
    const auto date = [&](const char* key) -> std::optional<scanar::Date> {
        if (!body.contains(key) || body.at(key).is_null()) return std::nullopt;
        const std::string s = body.at(key).get<std::string>();
        auto d = scanar::parse_date(s);
        if (!d) throw InputError(fmt::format("'{}' must be YYYY-MM-DD, got '{}'", key, s));
        return d;
    };
    auto from = date("from");
    auto to = date("to");
    if (from || to) params.timeframe = scanar::Timeframe{from, to};
    if (body.contains("max_per_query")) params.max_per_query = body.at("max_per_query").get<int>();
    if (body.contains("scrape")) params.scrape_fulltext = body.at("scrape").get<bool>();
    params.validate();
    return params;
}

std::string project_ris(const Project& p) {
    std::vector<ris::Entry> entries;
    for (std::size_t i : ranked_order(p)) entries.push_back(ris::from_record(p.records[i]));
    return ris::write(entries);
}

}  // namespace

Service::Service(ServiceConfig config, Dependencies deps)
    : config_(std::move(config)), deps_(std::move(deps)), server_(std::make_unique<httplib::Server>()) {
    if (!deps_.embedder) deps_.embedder = std::make_shared<embedding::HashingBackend>();
    if (!deps_.scan_transport) deps_.scan_transport = std::make_shared<HttpTransport>();
    if (!deps_.scan_clock) deps_.scan_clock = std::make_shared<SystemClock>();

    if (config_.data_dir) {
        std::filesystem::create_directories(*config_.data_dir);
        for (const auto& entry : std::filesystem::directory_iterator(*config_.data_dir)) {
            if (entry.path().extension() != ".json") continue;
            Project p = load_project(entry.path());
            auto s = std::make_shared<ProjectSlot>();
            const std::string id = p.id;
            s->project = std::move(p);
            projects_.emplace(id, std::move(s));
            if (id.size() > 1 && id[0] == 'p') {
                try {
                    next_project_ = std::max<std::uint64_t>(next_project_, std::stoull(id.substr(1)) + 1);
                } catch (const std::exception&) {
                }
            }
        }
        spdlog::info("loaded {} project(s) from {}", projects_.size(), config_.data_dir->string());
    }
    routes();
}

Service::~Service() {
    stop();
    wait_for_jobs();
}

void Service::listen() {
    spdlog::info("listening on http://{}:{}", config_.host, config_.port);
    if (!server_->listen(config_.host, config_.port)) {
        throw Error(fmt::format("cannot listen on {}:{}", config_.host, config_.port));
    }
}

int Service::start() {
    const int port = config_.port == 0 ? server_->bind_to_any_port(config_.host)
                                       : (server_->bind_to_port(config_.host, config_.port) ? config_.port : -1);
    if (port < 0) throw Error(fmt::format("cannot bind {}:{}", config_.host, config_.port));
    server_thread_ = std::thread([this] { server_->listen_after_bind(); });
    server_->wait_until_ready();
    return port;
}

void Service::stop() {
    if (server_) server_->stop();
    if (server_thread_.joinable()) server_thread_.join();
}

void Service::wait_for_jobs() {
    std::vector<std::thread> workers;
    {
        std::lock_guard lock(jobs_mutex_);
        workers.swap(workers_);
    }
    for (auto& t : workers) {
        if (t.joinable()) t.join();
    }
}

void Service::launch(std::function<void()> fn) {
    std::lock_guard lock(jobs_mutex_);
    workers_.emplace_back(std::move(fn));
}

std::shared_ptr<Service::ProjectSlot> Service::slot(const std::string& id) {
    std::lock_guard lock(registry_mutex_);
    auto it = projects_.find(id);
    if (it == projects_.end()) throw NotFoundError(fmt::format("no project '{}'", id));
    return it->second;
}

Project Service::project_copy(const std::string& id) {
    auto s = slot(id);
    std::lock_guard lock(s->mutex);
    return s->project;
}

std::string Service::add_project(Project project) {
    auto s = std::make_shared<ProjectSlot>();
    std::string id;
    {
        std::lock_guard lock(registry_mutex_);
        id = fmt::format("p{}", next_project_++);
        project.id = id;
        s->project = std::move(project);
        projects_.emplace(id, s);
    }
    std::lock_guard lock(s->mutex);
    persist(s->project);
    return id;
}

void Service::persist(const Project& project) {
    if (!config_.data_dir) return;
    save_project(project, *config_.data_dir / (project.id + ".json"));
}

void Service::routes() {
    auto& srv = *server_;
    srv.set_payload_max_length(config_.payload_limit);
    srv.set_error_handler([](const httplib::Request&, httplib::Response& res) {
        if (!res.body.empty()) return httplib::Server::HandlerResponse::Unhandled;
        if (res.status == 413) {
            send_error(res, 413, "bad_request", "payload exceeds the configured limit");
        } else if (res.status == 404) {
            send_error(res, 404, "not_found", "no such endpoint");
        } else {
            send_error(res, res.status, "bad_request", httplib::status_message(res.status));
        }
        return httplib::Server::HandlerResponse::Handled;
    });
    srv.set_logger([](const httplib::Request& req, const httplib::Response& res) {
        spdlog::info("{} {} {} ({} bytes in, {} out)", req.method, req.path, res.status, req.body.size(),
                     res.body.size());
    });

    srv.Get("/health", [](const httplib::Request&, httplib::Response& res) { send_json(res, json{{"status", "ok"}}); });

    srv.Post("/projects", guarded([this](const httplib::Request& req, httplib::Response& res) {
        std::string csv_bytes;
        json mapping_json;
        if (req.is_multipart_form_data()) {
            auto file = form_value(req, "file");
            if (!file) file = form_value(req, "csv");
            if (!file) throw InputError("multipart upload needs a 'file' part with the CSV");
            csv_bytes = std::move(*file);
            auto mapping = form_value(req, "mapping");
            if (!mapping) throw InputError("multipart upload needs a 'mapping' part");
            try {
                mapping_json = json::parse(*mapping);
            } catch (const json::parse_error& e) {
                throw InputError(fmt::format("mapping is not valid JSON: {}", e.what()));
            }
        } else {
            const json body = parse_body(req);
            if (!body.contains("csv") || !body.at("csv").is_string()) throw InputError("body needs a 'csv' string");
            csv_bytes = body.at("csv").get<std::string>();
            mapping_json = body.value("mapping", json::object());
        }
        Project project = import_csv(csv_bytes, mapping_from_json(mapping_json));
        const std::size_t n = project.records.size();
        const json counts = counts_json(project, config_.min_includes_for_rerank);
        const std::string id = add_project(std::move(project));
        res.set_header("Location", "/projects/" + id);
        send_json(res, json{{"id", id}, {"n_records", n}, {"counts", counts}}, 201);
    }));

    srv.Get("/projects", guarded([this](const httplib::Request&, httplib::Response& res) {
        json ids = json::array();
        std::lock_guard lock(registry_mutex_);
        for (const auto& [id, _] : projects_) ids.push_back(id);
        send_json(res, json{{"projects", ids}});
    }));

    srv.Get(R"(/projects/([^/]+))", guarded([this](const httplib::Request& req, httplib::Response& res) {
        auto s = slot(req.matches[1]);
        std::lock_guard lock(s->mutex);
        const Project& p = s->project;
        json history = json::array();
        for (const auto& h : p.ranking_history) history.push_back(to_json(h));
        send_json(res, json{{"id", p.id},
                            {"n_records", p.records.size()},
                            {"mapping", to_json(p.mapping)},
                            {"counts", counts_json(p, config_.min_includes_for_rerank)},
                            {"iteration", p.current_iteration()},
                            {"ranking_history", history}});
    }));

    srv.Get(R"(/projects/([^/]+)/queue)", guarded([this](const httplib::Request& req, httplib::Response& res) {
        auto s = slot(req.matches[1]);
        std::lock_guard lock(s->mutex);
        const Project& p = s->project;
        const std::size_t limit = query_size(req, "limit", 50);
        json items = json::array();
        for (std::size_t i : ranked_order(p)) {
            if (items.size() >= limit) break;
            if (p.records[i].label == Label::unlabeled) items.push_back(record_view(p.records[i]));
        }
        send_json(res, json{{"iteration", p.current_iteration()},
                            {"ranked", p.latest_ranking.has_value()},
                            {"unlabeled", p.count(Label::unlabeled)},
                            {"records", items}});
    }));

    srv.Post(R"(/projects/([^/]+)/labels)", guarded([this](const httplib::Request& req, httplib::Response& res) {
        auto s = slot(req.matches[1]);
        const json body = parse_body(req);
        const json& list = body.is_array() ? body : body.value("labels", json::array());
        if (!list.is_array() || list.empty()) throw InputError("expected a non-empty list of {record_id, label}");
        std::vector<std::pair<std::string, Label>> updates;
        for (const auto& item : list) {
            if (!item.is_object()) throw InputError("each label must be an object");
            const std::string id = item.at("record_id").get<std::string>();
            const std::string text = item.at("label").get<std::string>();
            auto label = parse_label(text);
            if (!label) throw InputError(fmt::format("unknown label '{}'", text));
            updates.emplace_back(id, *label);
        }
        std::lock_guard lock(s->mutex);
        Project& p = s->project;
        // Validate the whole batch before touching anything.
        for (const auto& [id, _] : updates) {
            if (!p.index_of(id)) throw NotFoundError(fmt::format("no record '{}' in project {}", id, p.id));
        }
        for (const auto& [id, label] : updates) apply_label(p, id, label);
        persist(p);
        send_json(res, counts_json(p, config_.min_includes_for_rerank));
    }));

    srv.Post(R"(/projects/([^/]+)/rerank)", guarded([this](const httplib::Request& req, httplib::Response& res) {
        auto s = slot(req.matches[1]);
        const json body = parse_body(req);
        const ranking::EnsembleConfig cfg = ensemble_from(body);
        std::uint64_t seed = 0;
        if (body.contains("rng_seed") && !body.at("rng_seed").is_null()) {
            seed = body.at("rng_seed").get<std::uint64_t>();
        } else {
            seed = std::random_device{}() ^ (rng_counter_++ << 32);
        }

        if (s->reranking.exchange(true)) throw BusyError("a rerank is already running for this project");
        struct Release {
            std::atomic<bool>& flag;
            ~Release() { flag = false; }
        } release{s->reranking};

        std::lock_guard lock(s->mutex);
        Project& p = s->project;
        const std::size_t includes = p.count(Label::include);
        if (includes < config_.min_includes_for_rerank) {
            throw ConflictError(fmt::format("rerank needs at least {} includes; project has {}",
                                            config_.min_includes_for_rerank, includes));
        }
        if (!s->corpus) s->corpus.emplace(ranking::Corpus::from_records(p.records, *deps_.embedder));
        ranking::Rng rng(seed);
        const RankingState state = ranking::rerank(p, cfg, rng, *s->corpus);
        persist(p);
        send_json(res, ranking_json(state, seed));
    }));

    srv.Post(R"(/projects/([^/]+)/llm)", guarded([this](const httplib::Request& req, httplib::Response& res) {
        auto s = slot(req.matches[1]);
        const json body = parse_body(req);
        const llm::PromptTemplate tmpl = llm::template_from_json(body.value("template", body));
        if (!deps_.llm_provider) throw ConfigError("no llm provider is configured");
        llm::BatchConfig batch = deps_.llm_batch;
        if (body.contains("max_concurrency")) batch.max_concurrency = body.at("max_concurrency").get<std::size_t>();

        std::vector<RecordItem> records;
        {
            std::lock_guard lock(s->mutex);
            records = s->project.records;
        }
        std::string job_id;
        {
            std::lock_guard lock(jobs_mutex_);
            job_id = fmt::format("j{}", next_job_++);
            jobs_[job_id] = Job{.id = job_id, .kind = "llm", .project_id = s->project.id, .total = records.size()};
        }
        launch([this, s, job_id, tmpl, batch, records = std::move(records)] {
            const auto set = [&](auto fn) {
                std::lock_guard lock(jobs_mutex_);
                fn(jobs_.at(job_id));
            };
            set([](Job& j) { j.status = JobStatus::running; });
            try {
                auto judgements = llm::classify_batch(records, tmpl, *deps_.llm_provider, batch,
                                                      [&](std::size_t done, std::size_t) {
                                                          set([done](Job& j) { j.done = done; });
                                                      });
                {
                    std::lock_guard lock(s->mutex);
                    for (const auto& j : judgements) {
                        if (auto idx = s->project.index_of(j.record_id)) s->project.records[*idx].llm_bit = j.bit;
                    }
                    persist(s->project);
                }
                const auto c = llm::count(judgements);
                set([&](Job& j) {
                    j.result = json{{"total", c.total},     {"yes", c.yes},
                                    {"no", c.total - c.yes}, {"clean", c.clean},
                                    {"salvaged", c.salvaged}, {"defaulted", c.defaulted},
                                    {"errors", c.errors},   {"model_id", deps_.llm_provider->model_id()}};
                    j.status = JobStatus::done;
                });
            } catch (const std::exception& e) {
                set([&](Job& j) {
                    j.error = e.what();
                    j.status = JobStatus::failed;
                });
            }
        });
        res.set_header("Location", "/jobs/" + job_id);
        send_json(res, json{{"job_id", job_id}, {"status", "queued"}}, 202);
    }));

    srv.Get(R"(/jobs/([^/]+))", guarded([this](const httplib::Request& req, httplib::Response& res) {
        std::lock_guard lock(jobs_mutex_);
        auto it = jobs_.find(req.matches[1]);
        if (it == jobs_.end()) throw NotFoundError(fmt::format("no job '{}'", req.matches[1].str()));
        const Job& j = it->second;
        json out{{"id", j.id},
                 {"kind", j.kind},
                 {"project_id", j.project_id},
                 {"status", to_string(j.status)},
                 {"progress", {{"done", j.done}, {"total", j.total}}}};
        if (!j.result.is_null()) out["result"] = j.result;
        if (!j.error.empty()) out["error"] = j.error;
        send_json(res, out);
    }));

    srv.Get(R"(/projects/([^/]+)/mini-report)", guarded([this](const httplib::Request& req, httplib::Response& res) {
        auto s = slot(req.matches[1]);
        std::lock_guard lock(s->mutex);
        const auto report = eval::mini_report(s->project);
        res.set_header("Link", fmt::format("</projects/{}/mini-report/curve.csv>; rel=\"gain-curve\"", s->project.id));
        send_json(res, eval::mini_report_json(report));
    }));

    srv.Get(R"(/projects/([^/]+)/mini-report/curve\.csv)",
            guarded([this](const httplib::Request& req, httplib::Response& res) {
                auto s = slot(req.matches[1]);
                std::lock_guard lock(s->mutex);
                const auto report = eval::mini_report(s->project);
                res.set_content(eval::gain_curve_csv(report.curve), "text/csv");
            }));

    srv.Get(R"(/projects/([^/]+)/export)", guarded([this](const httplib::Request& req, httplib::Response& res) {
        auto s = slot(req.matches[1]);
        const std::string format = req.has_param("format") ? req.get_param_value("format") : "csv";
        std::lock_guard lock(s->mutex);
        const Project& p = s->project;
        if (format == "csv") {
            const bool scores = !req.has_param("scores") || req.get_param_value("scores") != "0";
            res.set_content(export_csv(p, scores), "text/csv");
        } else if (format == "ris") {
            res.set_content(project_ris(p), "application/x-research-info-systems");
        } else if (format == "project") {
            res.set_content(serialize_project(p), "application/json");
        } else {
            throw InputError(fmt::format("unknown export format '{}' (csv, ris, project)", format));
        }
        res.set_header("Content-Disposition",
                       fmt::format("attachment; filename=\"{}.{}\"", p.id, format == "project" ? "json" : format));
    }));

    srv.Post("/scans", guarded([this](const httplib::Request& req, httplib::Response& res) {
        json body;
        std::vector<std::string> queries;
        if (req.is_multipart_form_data()) {
            auto q = form_value(req, "queries");
            if (!q) throw InputError("multipart scan needs a 'queries' part");
            queries = scanar::parse_query_file(*q);
            for (const char* key : {"from", "to"}) {
                if (auto v = form_value(req, key)) body[key] = *v;
            }
            if (auto v = form_value(req, "max_per_query")) {
                try {
                    body["max_per_query"] = std::stoi(*v);
                } catch (const std::exception&) {
                    throw InputError(fmt::format("max_per_query must be an integer, got '{}'", *v));
                }
            }
            if (auto v = form_value(req, "scrape")) body["scrape"] = (*v == "1" || *v == "true");
        } else {
            body = parse_body(req);
            if (body.contains("queries") && body.at("queries").is_array()) {
                for (const auto& q : body.at("queries")) {
                    const std::string t(utf8::trim(q.get<std::string>()));
                    if (!t.empty()) queries.push_back(t);
                }
                if (queries.empty()) throw InputError("no queries");
            } else if (body.contains("queries_text")) {
                queries = scanar::parse_query_file(body.at("queries_text").get<std::string>());
            } else {
                throw InputError("body needs 'queries' (list) or 'queries_text'");
            }
        }
        const scanar::ScanParams params = scan_params_from(body, deps_.scan_defaults);

        std::string scan_id;
        {
            std::lock_guard lock(jobs_mutex_);
            scan_id = fmt::format("s{}", next_scan_++);
            scans_[scan_id] = ScanSlot{.id = scan_id};
            scans_[scan_id].progress.queries_total = queries.size();
        }
        launch([this, scan_id, queries, params] {
            const auto set = [&](auto fn) {
                std::lock_guard lock(jobs_mutex_);
                fn(scans_.at(scan_id));
            };
            set([](ScanSlot& s) {
                s.status = JobStatus::running;
                s.progress.phase = "fetch";
            });
            try {
                auto result = scanar::run_scan(queries, params, deps_.feed, *deps_.scan_clock, *deps_.scan_transport,
                                               [&](const scanar::ScanProgress& p) {
                                                   set([&](ScanSlot& s) { s.progress = p; });
                                               });
                set([&](ScanSlot& s) {
                    s.result = std::move(result);
                    s.progress.phase = "done";
                    s.status = JobStatus::done;
                });
            } catch (const std::exception& e) {
                set([&](ScanSlot& s) {
                    s.error = e.what();
                    s.status = JobStatus::failed;
                });
            }
        });
        res.set_header("Location", "/scans/" + scan_id);
        send_json(res, json{{"id", scan_id}, {"status", "queued"}}, 202);
    }));

    srv.Get(R"(/scans/([^/]+))", guarded([this](const httplib::Request& req, httplib::Response& res) {
        std::lock_guard lock(jobs_mutex_);
        auto it = scans_.find(req.matches[1]);
        if (it == scans_.end()) throw NotFoundError(fmt::format("no scan '{}'", req.matches[1].str()));
        const ScanSlot& s = it->second;
        json out{{"id", s.id},
                 {"status", to_string(s.status)},
                 {"progress",
                  {{"phase", s.progress.phase},
                   {"queries_done", s.progress.queries_done},
                   {"queries_total", s.progress.queries_total},
                   {"articles_scraped", s.progress.articles_scraped}}}};
        if (s.result) {
            json doc = json::array();
            for (const auto& e : s.result->search_doc) {
                doc.push_back({{"query", e.query},
                               {"n_results_reported", e.n_results_reported},
                               {"n_retrieved", e.n_retrieved},
                               {"n_new_unique", e.n_new_unique}});
            }
            out["search_doc"] = doc;
            out["n_articles"] = s.result->articles.size();
            out["warnings"] = s.result->warnings;
            out["errors"] = s.result->errors;
            out["exports"] = {fmt::format("/scans/{}/export?format=csv", s.id),
                              fmt::format("/scans/{}/export?format=ris", s.id),
                              fmt::format("/scans/{}/export?format=searchdoc", s.id)};
        }
        if (!s.error.empty()) out["error"] = s.error;
        send_json(res, out);
    }));

    srv.Get(R"(/scans/([^/]+)/export)", guarded([this](const httplib::Request& req, httplib::Response& res) {
        const std::string format = req.has_param("format") ? req.get_param_value("format") : "csv";
        std::lock_guard lock(jobs_mutex_);
        auto it = scans_.find(req.matches[1]);
        if (it == scans_.end()) throw NotFoundError(fmt::format("no scan '{}'", req.matches[1].str()));
        if (!it->second.result) {
            throw ConflictError(fmt::format("scan {} is {}", it->first, to_string(it->second.status)));
        }
        const auto& r = *it->second.result;
        if (format == "csv") {
            res.set_content(scanar::export_articles_csv(r.articles), "text/csv");
        } else if (format == "ris") {
            res.set_content(scanar::export_articles_ris(r.articles), "application/x-research-info-systems");
        } else if (format == "searchdoc") {
            res.set_content(scanar::export_search_doc(r.search_doc), "text/csv");
        } else {
            throw InputError(fmt::format("unknown export format '{}' (csv, ris, searchdoc)", format));
        }
    }));
}

}  // namespace hscan::service
