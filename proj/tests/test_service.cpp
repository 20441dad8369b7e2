#include <gtest/gtest.h>

#include <chrono>
#include <filesystem>
#include <future>
#include <thread>

#include "hscan/core/project_io.hpp"
#include "hscan/eval/metrics.hpp"
#include "hscan/eval/report.hpp"
#include "hscan/scanar/scan.hpp"
#include "hscan/service/service.hpp"
#include "httplib.h"
#include "json.hpp"
#include "synthetic.hpp"

using namespace hscan;
using json = nlohmann::json;

namespace {

const std::filesystem::path kFixtures = HSCAN_FIXTURES;

class SlowBackend final : public embedding::Backend {
public:
    std::string name() const override { return "slow"; }
    std::size_t dimension() override { return inner_.dimension(); }
    bool deterministic() const override { return true; }
    bool reentrant() const override { return true; }
    std::vector<embedding::Vector> encode(std::span<const std::string> texts) override {
        std::this_thread::sleep_for(std::chrono::milliseconds(800));
        return inner_.encode(texts);
    }

private:
    embedding::HashingBackend inner_;
};

const char* kCsv =
    "id,title,abstract,decision\n"
    "a1,Home kit,Home screening kit for bowel cancer trialled,\n"
    "a2,Football,Football results from the weekend,\n"
    "a3,Lung,New screening programme for lung disease,\n"
    "a4,Weather,Weather warning issued for the coast,\n"
    "a5,Patch,Patch measures glucose without needles,\n"
    "a6,Vet,Veterinary screening of cattle,\n"
    "a7,Concert,Concert tickets on sale,\n"
    "a8,Blood,Blood test for twelve cancers,\n";

json mapping_json() {
    return json{{"text_column", "abstract"}, {"title_column", "title"}, {"id_column", "id"},
                {"label_column", "decision"}, {"positive_value", "Include"}};
}

class ServiceTest : public ::testing::Test {
protected:
    void start(service::Dependencies deps = {}) {
        service::ServiceConfig cfg;
        cfg.port = 0;
        service_ = std::make_unique<service::Service>(cfg, std::move(deps));
        port_ = service_->start();
        client_ = std::make_unique<httplib::Client>("127.0.0.1", port_);
        client_->set_read_timeout(30, 0);
    }
    void TearDown() override {
        if (service_) {
            service_->wait_for_jobs();
            service_->stop();
        }
    }

    httplib::Result post(const std::string& path, const json& body) {
        return client_->Post(path, body.dump(), "application/json");
    }

    std::string create(const std::string& csv = kCsv) {
        auto r = post("/projects", json{{"csv", csv}, {"mapping", mapping_json()}});
        EXPECT_EQ(r->status, 201) << r->body;
        return json::parse(r->body)["id"].get<std::string>();
    }

    json label(const std::string& id, std::initializer_list<std::pair<const char*, const char*>> items,
               int expect = 200) {
        json list = json::array();
        for (const auto& [rid, l] : items) list.push_back({{"record_id", rid}, {"label", l}});
        auto r = post("/projects/" + id + "/labels", list);
        EXPECT_EQ(r->status, expect) << r->body;
        return json::parse(r->body);
    }

    json wait_job(const std::string& path) {
        for (int i = 0; i < 600; ++i) {
            auto r = client_->Get(path);
            const json j = json::parse(r->body);
            if (j["status"] == "done" || j["status"] == "failed") return j;
            std::this_thread::sleep_for(std::chrono::milliseconds(20));
        }
        ADD_FAILURE() << "job did not finish: " << path;
        return {};
    }

    std::unique_ptr<service::Service> service_;
    std::unique_ptr<httplib::Client> client_;
    int port_ = 0;
};

}  // namespace

TEST_F(ServiceTest, HealthAndCreate) {
    start();
    EXPECT_EQ(client_->Get("/health")->status, 200);
    auto r = post("/projects", json{{"csv", kCsv}, {"mapping", mapping_json()}});
    ASSERT_EQ(r->status, 201);
    const json j = json::parse(r->body);
    EXPECT_EQ(j["n_records"], 8);
    EXPECT_EQ(j["counts"]["unlabeled"], 8);
    EXPECT_EQ(j["counts"]["rerank_allowed"], false);
}

TEST_F(ServiceTest, MissingTextColumnNamesIt) {
    start();
    json m = mapping_json();
    m["text_column"] = "body_text";
    auto r = post("/projects", json{{"csv", kCsv}, {"mapping", m}});
    ASSERT_EQ(r->status, 400);
    const json j = json::parse(r->body);
    EXPECT_EQ(j["error"]["code"], "bad_request");
    EXPECT_NE(j["error"]["message"].get<std::string>().find("body_text"), std::string::npos);
}

TEST_F(ServiceTest, MultipartUpload) {
    start();
    httplib::MultipartFormDataItems items{{"file", kCsv, "data.csv", "text/csv"},
                                          {"mapping", mapping_json().dump(), "", "application/json"}};
    auto r = client_->Post("/projects", items);
    ASSERT_EQ(r->status, 201) << r->body;
}

TEST_F(ServiceTest, QueueLabelsAndRerank) {
    start();
    const std::string id = create();
    auto q = json::parse(client_->Get("/projects/" + id + "/queue?limit=3")->body);
    ASSERT_EQ(q["records"].size(), 3u);
    EXPECT_EQ(q["records"][0]["id"], "a1");
    EXPECT_EQ(q["ranked"], false);

    label(id, {{"a1", "include"}, {"a3", "include"}});
    auto r = post("/projects/" + id + "/rerank", json::object());
    EXPECT_EQ(r->status, 409);
    EXPECT_EQ(json::parse(r->body)["error"]["code"], "conflict");

    const json counts = label(id, {{"a8", "include"}});
    EXPECT_EQ(counts["include"], 3);
    EXPECT_EQ(counts["rerank_allowed"], true);

    r = post("/projects/" + id + "/rerank", json{{"rng_seed", 7}});
    ASSERT_EQ(r->status, 200) << r->body;
    const json state = json::parse(r->body);
    EXPECT_EQ(state["iteration"], 1);

    q = json::parse(client_->Get("/projects/" + id + "/queue?limit=100")->body);
    EXPECT_EQ(q["ranked"], true);
    ASSERT_EQ(q["records"].size(), 5u);
    const auto ordering = service_->project_copy(id).latest_ranking->ordering;
    for (std::size_t k = 0; k < 5; ++k) EXPECT_EQ(q["records"][k]["id"], ordering[k]);
    EXPECT_EQ(state["n_ranked"], 5);

    r = post("/projects/" + id + "/rerank", json{{"rng_seed", 7}});
    EXPECT_EQ(json::parse(r->body)["iteration"], 2);
}

TEST_F(ServiceTest, UnknownRecordRejectsWholeBatch) {
    start();
    const std::string id = create();
    const json err = label(id, {{"a1", "include"}, {"zzz", "include"}}, 404);
    EXPECT_EQ(err["error"]["code"], "not_found");
    const auto p = service_->project_copy(id);
    EXPECT_EQ(p.count(Label::include), 0u);
    EXPECT_EQ(client_->Get("/projects/nope/queue")->status, 404);
}

TEST_F(ServiceTest, ConcurrentLabelPostsAllApplied) {
    start();
    const std::string id = create();
    std::vector<std::future<void>> futures;
    for (const char* rid : {"a1", "a2", "a3", "a4", "a5", "a6"}) {
        futures.push_back(std::async(std::launch::async, [this, id, rid] {
            httplib::Client c("127.0.0.1", port_);
            json body = json::array();
            body.push_back(json{{"record_id", rid}, {"label", "exclude"}});
            auto r = c.Post("/projects/" + id + "/labels", body.dump(), "application/json");
            EXPECT_EQ(r->status, 200);
        }));
    }
    for (auto& f : futures) f.get();
    const auto p = service_->project_copy(id);
    EXPECT_EQ(p.label_events.size(), 6u);
    EXPECT_EQ(p.count(Label::exclude), 6u);
}

TEST_F(ServiceTest, SecondRerankWhileRunningIsBusy) {
    service::Dependencies deps;
    deps.embedder = std::make_shared<SlowBackend>();
    start(std::move(deps));
    const std::string id = create();
    label(id, {{"a1", "include"}, {"a3", "include"}, {"a8", "include"}});
    auto first = std::async(std::launch::async, [this, id] {
        httplib::Client c("127.0.0.1", port_);
        c.set_read_timeout(30, 0);
        return c.Post("/projects/" + id + "/rerank", "{}", "application/json")->status;
    });
    std::this_thread::sleep_for(std::chrono::milliseconds(250));
    auto r = post("/projects/" + id + "/rerank", json::object());
    EXPECT_EQ(r->status, 409);
    EXPECT_EQ(json::parse(r->body)["error"]["code"], "busy");
    EXPECT_EQ(first.get(), 200);
}

TEST_F(ServiceTest, LlmJobWithStub) {
    service::Dependencies deps;
    deps.llm_provider = std::make_shared<llm::StubProvider>(llm::StubProvider::parse("YES screening\nYES cancer\n"));
    start(std::move(deps));
    const std::string id = create();

    auto bad = post("/projects/" + id + "/llm", json{{"part1", "scene"}});
    EXPECT_EQ(bad->status, 400);

    auto r = post("/projects/" + id + "/llm", json{{"part1", "You screen news."}, {"part2", "Include screening."}});
    ASSERT_EQ(r->status, 202) << r->body;
    const json job = wait_job("/jobs/" + json::parse(r->body)["job_id"].get<std::string>());
    ASSERT_EQ(job["status"], "done") << job.dump();
    EXPECT_EQ(job["result"]["yes"], 4);
    EXPECT_EQ(job["result"]["total"], 8);
    const auto p = service_->project_copy(id);
    EXPECT_EQ(p.records[0].llm_bit, 1);
    EXPECT_EQ(p.records[1].llm_bit, 0);
}

TEST_F(ServiceTest, LlmWithoutProviderIsUpstreamFailure) {
    start();
    const std::string id = create();
    auto r = post("/projects/" + id + "/llm", json{{"part1", "a"}, {"part2", "b"}});
    EXPECT_EQ(r->status, 502);
    EXPECT_EQ(json::parse(r->body)["error"]["code"], "upstream_failure");
}

TEST_F(ServiceTest, MiniReportMatchesFullMetricsWhenComplete) {
    start();
    const auto data = testkit::two_cluster_corpus(60, 12, 3);
    const std::string id = create(testkit::dataset_csv(data));

    auto r = client_->Get("/projects/" + id + "/mini-report");
    ASSERT_EQ(r->status, 200);
    const json rep = json::parse(r->body);
    EXPECT_EQ(rep["based_on_partially_screened_data"], false);

    eval::Trajectory t;
    for (std::size_t i = 0; i < data.size(); ++i) t.push(data.ids[i], data.relevant[i]);
    const auto m = eval::compute_metrics(t);
    EXPECT_DOUBLE_EQ(rep["metrics"]["wss"].get<double>(), m.wss);
    EXPECT_DOUBLE_EQ(rep["metrics"]["tnr"].get<double>(), *m.tnr);
    EXPECT_DOUBLE_EQ(rep["metrics"]["average_precision"].get<double>(), m.average_precision);
    EXPECT_EQ(r->body, eval::mini_report_json(eval::mini_report(service_->project_copy(id))).dump(2) + "\n");
    EXPECT_NE(r->get_header_value("Link").find("curve.csv"), std::string::npos);

    auto curve = client_->Get("/projects/" + id + "/mini-report/curve.csv");
    ASSERT_EQ(curve->status, 200);
    EXPECT_EQ(std::count(curve->body.begin(), curve->body.end(), '\n'), 61);
}

TEST_F(ServiceTest, MiniReportPartialAndConflict) {
    start();
    const std::string id = create();
    EXPECT_EQ(client_->Get("/projects/" + id + "/mini-report")->status, 409);
    label(id, {{"a2", "exclude"}, {"a1", "include"}, {"a4", "exclude"}});
    const json rep = json::parse(client_->Get("/projects/" + id + "/mini-report")->body);
    EXPECT_EQ(rep["based_on_partially_screened_data"], true);
    EXPECT_EQ(rep["metrics"]["n"], 3);
    auto curve = client_->Get("/projects/" + id + "/mini-report/curve.csv");
    EXPECT_EQ(std::count(curve->body.begin(), curve->body.end(), '\n'), 4);
}

TEST_F(ServiceTest, ExportsArePureReads) {
    start();
    const std::string id = create();
    label(id, {{"a1", "include"}});
    const std::string before = service_->project_copy(id).id;
    const auto csv1 = client_->Get("/projects/" + id + "/export?format=csv")->body;
    const auto ris = client_->Get("/projects/" + id + "/export?format=ris");
    const auto proj = client_->Get("/projects/" + id + "/export?format=project");
    EXPECT_EQ(ris->status, 200);
    EXPECT_EQ(proj->status, 200);
    EXPECT_EQ(client_->Get("/projects/" + id + "/export?format=csv")->body, csv1);
    EXPECT_EQ(serialize_project(service_->project_copy(id)), proj->body);
    EXPECT_EQ(client_->Get("/projects/" + id + "/export?format=pdf")->status, 400);
    EXPECT_EQ(before, id);
}

TEST_F(ServiceTest, ScanWithFixturesMatchesGoldenFiles) {
    service::Dependencies deps;
    auto clock = std::make_shared<VirtualClock>();
    auto transport = std::make_shared<FixtureTransport>(clock.get());
    scanar::load_fixture_routes(*transport, kFixtures / "scan_basic", deps.feed, std::nullopt);
    deps.scan_clock = clock;
    deps.scan_transport = transport;
    start(std::move(deps));

    auto r = post("/scans", json{{"queries_text", read_file(kFixtures / "scan_basic" / "queries.txt")},
                                 {"scrape", true}});
    ASSERT_EQ(r->status, 202) << r->body;
    const std::string sid = json::parse(r->body)["id"];
    const json st = wait_job("/scans/" + sid);
    ASSERT_EQ(st["status"], "done") << st.dump();
    EXPECT_EQ(st["search_doc"][1]["n_new_unique"], 1);
    EXPECT_EQ(st["exports"].size(), 3u);

    EXPECT_EQ(client_->Get("/scans/" + sid + "/export?format=searchdoc")->body,
              read_file(kFixtures / "golden" / "search_documentation.csv"));
    EXPECT_EQ(client_->Get("/scans/" + sid + "/export?format=csv")->body,
              read_file(kFixtures / "golden" / "articles.csv"));
    EXPECT_EQ(client_->Get("/scans/" + sid + "/export?format=ris")->body,
              read_file(kFixtures / "golden" / "articles.ris"));
}

TEST_F(ServiceTest, UnknownScanIsNotFound) {
    start();
    auto r = client_->Get("/scans/s99");
    EXPECT_EQ(r->status, 404);
    EXPECT_EQ(json::parse(r->body)["error"]["code"], "not_found");
    EXPECT_EQ(client_->Get("/scans/s99/export")->status, 404);
    EXPECT_EQ(post("/scans", json{{"queries", json::array()}})->status, 400);
}

TEST_F(ServiceTest, UnknownRouteGivesJsonError) {
    start();
    auto r = client_->Get("/nothing/here");
    EXPECT_EQ(r->status, 404);
    EXPECT_EQ(json::parse(r->body)["error"]["code"], "not_found");
}
