#include <gtest/gtest.h>

#include <sys/wait.h>

#include <array>
#include <cstdio>
#include <filesystem>

#include "hscan/core/project_io.hpp"
#include "hscan/service/service.hpp"
#include "httplib.h"
#include "json.hpp"
#include "synthetic.hpp"

using namespace hscan;
using json = nlohmann::json;
namespace fs = std::filesystem;

namespace {

const fs::path kFixtures = HSCAN_FIXTURES;

struct Run {
    int code = -1;
    std::string out;
};

Run run(const std::string& args) {
    const std::string cmd = std::string(HSCAN_CLI) + " -q " + args + " 2>/dev/null";
    Run r;
    FILE* pipe = popen(cmd.c_str(), "r");
    if (!pipe) return r;
    std::array<char, 4096> buf;
    std::size_t n;
    while ((n = fread(buf.data(), 1, buf.size(), pipe)) > 0) r.out.append(buf.data(), n);
    const int status = pclose(pipe);
    r.code = WIFEXITED(status) ? WEXITSTATUS(status) : -1;
    return r;
}

class CliTest : public ::testing::Test {
protected:
    void SetUp() override {
        dir_ = fs::temp_directory_path() /
               ("hscan_cli_" + std::string(::testing::UnitTest::GetInstance()->current_test_info()->name()));
        fs::remove_all(dir_);
        fs::create_directories(dir_);
    }
    void TearDown() override { fs::remove_all(dir_); }

    std::string path(const std::string& name) const { return (dir_ / name).string(); }

    std::string write_dataset(const eval::Dataset& d, const std::string& name = "data.csv") {
        write_file(dir_ / name, testkit::dataset_csv(d));
        return path(name);
    }

    static std::string dataset_args() {
        return "--text-col abstract --label-col decision --positive Include --id-col id";
    }

    fs::path dir_;
};

}  // namespace

TEST_F(CliTest, ScanWithFixturesWritesGoldenFiles) {
    const auto r = run("scan --queries " + (kFixtures / "scan_basic" / "queries.txt").string() +
                       " --transport fixtures " + (kFixtures / "scan_basic").string() + " --scrape --out " +
                       path("scan"));
    ASSERT_EQ(r.code, 0);
    for (const char* name : {"search_documentation.csv", "articles.csv", "articles.ris"}) {
        EXPECT_EQ(read_file(dir_ / "scan" / name), read_file(kFixtures / "golden" / name)) << name;
    }
}

TEST_F(CliTest, ScanMissingQueriesFileIsUsageError) {
    EXPECT_EQ(run("scan --queries " + path("absent.txt") + " --out " + path("o")).code, 2);
    EXPECT_EQ(run("scan --out " + path("o")).code, 2);
    EXPECT_EQ(run("scan --queries x --transport carrier-pigeon --out " + path("o")).code, 2);
}

TEST_F(CliTest, SimulateIsBitReproducible) {
    const std::string data = write_dataset(testkit::two_cluster_corpus(300, 30, 8));
    const std::string common = "simulate --dataset " + data + " " + dataset_args() + " --runs 3 --rng 99 --out ";
    ASSERT_EQ(run(common + path("a")).code, 0);
    ASSERT_EQ(run(common + path("b")).code, 0);
    std::size_t files = 0;
    for (const auto& entry : fs::directory_iterator(dir_ / "a")) {
        const auto name = entry.path().filename();
        EXPECT_EQ(read_file(entry.path()), read_file(dir_ / "b" / name)) << name;
        ++files;
    }
    EXPECT_EQ(files, 4u + 2u * 3u);
}

TEST_F(CliTest, SimulateAutoSeedsWithFewPositives) {
    const std::string data = write_dataset(testkit::two_cluster_corpus(200, 12, 9));
    ASSERT_EQ(run("simulate --dataset " + data + " " + dataset_args() + " --runs 2 --seeds auto --out " + path("s")).code,
              0);
    const json m = json::parse(read_file(dir_ / "s" / "manifest.json"));
    EXPECT_EQ(m["protocol"]["n_seeds"], 1);
    EXPECT_EQ(m["runs"][0]["n_seeds"], 1);
}

TEST_F(CliTest, OracleRankerClosedForm) {
    const std::string data = write_dataset(testkit::two_cluster_corpus(400, 40, 10));
    ASSERT_EQ(run("simulate --dataset " + data + " " + dataset_args() + " --runs 2 --ranker oracle --out " +
                  path("o"))
                  .code,
              0);
    const json m = json::parse(read_file(dir_ / "o" / "manifest.json"));
    // Perfect order reaches 95% recall after ceil(0.95 * 40) = 38 records.
    for (const auto& r : m["runs"]) EXPECT_NEAR(r["metrics"]["wss"].get<double>(), (400.0 - 38.0) / 400.0 - 0.05, 1e-12);
}

TEST_F(CliTest, SimulateBadInput) {
    const std::string data = write_dataset(testkit::two_cluster_corpus(50, 10, 11));
    EXPECT_EQ(run("simulate --dataset " + data + " --text-col nope --label-col decision --positive Include --out " +
                  path("x"))
                  .code,
              2);
    EXPECT_EQ(run("simulate --dataset " + data + " " + dataset_args() + " --ranker psychic --out " + path("x")).code, 2);
    EXPECT_EQ(run("simulate --dataset " + data + " " + dataset_args() + " --runs 0 --out " + path("x")).code, 2);
}

TEST_F(CliTest, MetricsExamples) {
    std::string perfect = "record_id,is_relevant\n";
    std::string worst = perfect;
    for (int i = 1; i <= 100; ++i) {
        perfect += "r" + std::to_string(i) + "," + (i <= 10 ? "1" : "0") + "\n";
        worst += "r" + std::to_string(i) + "," + (i > 90 ? "1" : "0") + "\n";
    }
    write_file(dir_ / "perfect.csv", perfect);
    write_file(dir_ / "worst.csv", worst);

    auto r = run("metrics --trajectory " + path("perfect.csv") + " --json");
    ASSERT_EQ(r.code, 0);
    auto j = json::parse(r.out);
    EXPECT_NEAR(j["wss"].get<double>(), 0.85, 1e-12);
    EXPECT_NEAR(j["tnr"].get<double>(), 1.0, 1e-12);

    r = run("metrics --trajectory " + path("worst.csv") + " --json");
    j = json::parse(r.out);
    EXPECT_NEAR(j["wss"].get<double>(), -0.05, 1e-12);
    EXPECT_NEAR(j["tnr"].get<double>(), 0.0, 1e-12);

    r = run("metrics --trajectory " + path("perfect.csv") + " --json --r 1.0");
    ASSERT_EQ(r.code, 0);
    EXPECT_NEAR(json::parse(r.out)["wss"].get<double>(), 0.9, 1e-12);

    write_file(dir_ / "bad.csv", "record_id,is_relevant\nx,perhaps\n");
    EXPECT_EQ(run("metrics --trajectory " + path("bad.csv")).code, 2);
}

TEST_F(CliTest, ReportMatchesServiceBytes) {
    service::ServiceConfig cfg;
    cfg.port = 0;
    service::Service svc(cfg, {});
    const int port = svc.start();
    httplib::Client c("127.0.0.1", port);

    const auto data = testkit::two_cluster_corpus(40, 8, 12);
    std::string csv = testkit::dataset_csv(data);
    const json mapping{{"text_column", "abstract"}, {"id_column", "id"}};
    auto created = c.Post("/projects", json{{"csv", csv}, {"mapping", mapping}}.dump(), "application/json");
    ASSERT_EQ(created->status, 201);
    const std::string id = json::parse(created->body)["id"];

    json labels = json::array();
    for (std::size_t i = 0; i < 15; ++i) {
        labels.push_back(json{{"record_id", data.ids[i]}, {"label", data.relevant[i] ? "include" : "exclude"}});
    }
    ASSERT_EQ(c.Post("/projects/" + id + "/labels", labels.dump(), "application/json")->status, 200);
    ASSERT_EQ(c.Post("/projects/" + id + "/rerank", R"({"rng_seed": 3})", "application/json")->status, 200);

    const auto report = c.Get("/projects/" + id + "/mini-report");
    ASSERT_EQ(report->status, 200);
    write_file(dir_ / "project.json", c.Get("/projects/" + id + "/export?format=project")->body);
    const auto curve = c.Get("/projects/" + id + "/mini-report/curve.csv")->body;
    svc.stop();

    const auto r = run("report --project " + path("project.json") + " --curve " + path("curve.csv"));
    ASSERT_EQ(r.code, 0);
    EXPECT_EQ(r.out, report->body);
    EXPECT_EQ(read_file(dir_ / "curve.csv"), curve);
    EXPECT_FALSE(json::parse(r.out)["ranker_history"].empty());

    const auto text = run("report --project " + path("project.json") + " --text");
    EXPECT_EQ(text.code, 0);
    EXPECT_NE(text.out.find("WSS@95"), std::string::npos);
}

TEST_F(CliTest, ReportOnUnscreenedProjectFails) {
    Project p = import_csv("id,abstract\na,x\nb,y\n", ImportMapping{.text_column = "abstract", .id_column = "id"});
    save_project(p, dir_ / "empty.json");
    EXPECT_EQ(run("report --project " + path("empty.json")).code, 2);
}

TEST_F(CliTest, ClassifyWithStubThenSimulateWithJudgements) {
    const auto data = testkit::two_cluster_corpus(120, 30, 13);
    const std::string csv = write_dataset(data);
    write_file(dir_ / "rules.txt", "YES glucose\nYES insulin\nDEFAULT NO\n");
    write_file(dir_ / "template.json", R"({"part1": "You screen news.", "part2": "Include glucose devices."})");
    auto r = run("classify --dataset " + csv + " --text-col abstract --id-col id --template " + path("template.json") +
                 " --stub " + path("rules.txt") + " --out " + path("j.json"));
    ASSERT_EQ(r.code, 0);
    const json j = json::parse(read_file(dir_ / "j.json"));
    ASSERT_EQ(j["judgements"].size(), 120u);
    for (std::size_t i = 0; i < data.size(); ++i) {
        const bool oracle = data.texts[i].find("glucose") != std::string::npos ||
                            data.texts[i].find("insulin") != std::string::npos;
        EXPECT_EQ(j["judgements"][data.ids[i]]["bit"], oracle ? 1 : 0);
    }

    r = run("simulate --dataset " + csv + " " + dataset_args() + " --runs 2 --llm-judgements " + path("j.json") +
            " --out " + path("sim"));
    ASSERT_EQ(r.code, 0);
    const json m = json::parse(read_file(dir_ / "sim" / "manifest.json"));
    EXPECT_EQ(m["protocol"]["llm_enabled"], true);
    for (const auto& l : m["runs"][0]["reranks"]) {
        EXPECT_EQ(l["ranker"], "llm_ensemble");
        EXPECT_LE(l["max_score"].get<double>(), 2.0);
    }
}

TEST_F(CliTest, UnknownSubcommandIsUsageError) {
    EXPECT_EQ(run("frobnicate").code, 2);
}
