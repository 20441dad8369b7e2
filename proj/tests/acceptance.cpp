// Acceptance suite: one PASS/FAIL line per criterion, non-zero exit on any failure.

#include <sys/wait.h>

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <functional>
#include <random>
#include <string>
#include <vector>

#include <fmt/format.h>
#include <openssl/evp.h>

#include "hscan/core/project_io.hpp"
#include "hscan/embedding/embedding.hpp"
#include "hscan/eval/metrics.hpp"
#include "hscan/eval/simulation.hpp"
#include "hscan/scanar/clock.hpp"
#include "hscan/scanar/scan.hpp"
#include "hscan/scanar/transport.hpp"
#include "oracles.hpp"
#include "synthetic.hpp"

using namespace hscan;
namespace fs = std::filesystem;
using Stopwatch = std::chrono::steady_clock;

namespace {

const fs::path kFixtures = HSCAN_FIXTURES;

struct Outcome {
    bool pass = false;
    std::string detail;
};

struct Corpus {
    eval::Dataset data;
    embedding::HashingBackend backend;
    ranking::Corpus corpus;
    explicit Corpus(eval::Dataset d) : data(std::move(d)), corpus(data.ids, data.texts, backend) {}
};

double seconds_since(Stopwatch::time_point t0) {
    return std::chrono::duration<double>(Stopwatch::now() - t0).count();
}

Outcome metric_oracle_equivalence() {
    const auto t0 = Stopwatch::now();
    std::mt19937_64 rng(20240501);
    double worst = 0.0;
    for (int trial = 0; trial < 1000; ++trial) {
        const std::size_t n = 2 + rng() % 49;
        const std::size_t p = 1 + rng() % (n - 1);
        std::vector<bool> flags(n, false);
        std::fill(flags.begin(), flags.begin() + static_cast<long>(p), true);
        std::shuffle(flags.begin(), flags.end(), rng);
        const auto t = eval::Trajectory::from_flags(flags);
        for (double r : {0.5, 0.75, 0.9, 0.95, 1.0}) {
            worst = std::max(worst, std::abs(eval::wss_at_r(t, r) - testkit::brute_wss(flags, r)));
            worst = std::max(worst, std::abs(eval::tnr_at_r(t, r) - testkit::brute_tnr(flags, r)));
        }
    }
    const double secs = seconds_since(t0);
    return {worst <= 1e-12 && secs < 10.0,
            fmt::format("1000 trajectories, max |diff| {:.3g}, {:.2f} s", worst, secs)};
}

Outcome closed_form_anchors() {
    std::vector<bool> perfect(100, false), reverse(100, false);
    for (int i = 0; i < 10; ++i) {
        perfect[static_cast<std::size_t>(i)] = true;
        reverse[static_cast<std::size_t>(90 + i)] = true;
    }
    const auto tp = eval::Trajectory::from_flags(perfect);
    const auto tr = eval::Trajectory::from_flags(reverse);
    const double w1 = eval::wss_at_r(tp, 0.95), n1 = eval::tnr_at_r(tp, 0.95);
    const double w2 = eval::wss_at_r(tr, 0.95), n2 = eval::tnr_at_r(tr, 0.95);
    const bool ok = std::abs(w1 - 0.85) < 1e-12 && std::abs(n1 - 1.0) < 1e-12 && std::abs(w2 + 0.05) < 1e-12 &&
                    std::abs(n2) < 1e-12;
    return {ok, fmt::format("perfect WSS {:.4f} TNR {:.4f}; reverse WSS {:.4f} TNR {:.4f}", w1, n1, w2, n2)};
}

Outcome random_order_correction() {
    const auto t0 = Stopwatch::now();
    std::mt19937_64 rng(7);
    std::vector<bool> flags(1000, false);
    std::fill(flags.begin(), flags.begin() + 100, true);
    double sum = 0.0;
    for (int i = 0; i < 1000; ++i) {
        std::shuffle(flags.begin(), flags.end(), rng);
        sum += eval::wss_at_r(eval::Trajectory::from_flags(flags), 0.95);
    }
    const double mean = sum / 1000.0;
    const double secs = seconds_since(t0);
    return {mean >= -0.02 && mean <= 0.02 && secs < 30.0,
            fmt::format("mean WSS@95 {:+.4f} over 1000 shuffles, {:.2f} s", mean, secs)};
}

Outcome protocol_constants() {
    std::vector<std::string> failures;
    auto check = [&](bool ok, std::string what) {
        if (!ok) failures.push_back(std::move(what));
    };

    // Defaults on a corpus with P >= 30.
    Corpus many(testkit::two_cluster_corpus(300, 40, 31));
    const auto a = eval::manifest_json(eval::simulate(many.corpus, many.data, eval::SimulationConfig{}, "hashing"));
    check(a["protocol"]["n_runs"] == 15 && a["runs"].size() == 15, "15 runs by default");
    check(a["protocol"]["n_seeds"] == 5, "5 seeds by default");
    check(a["protocol"]["sgd_period"] == 5, "classifier period 5");
    check(a["protocol"]["max_seeds"] == 10 && a["protocol"]["neg_ratio"] == 3, "seed cap 10, ratio 3");

    std::size_t max_seed_sample = 0;
    bool schedule_ok = true;
    for (const auto& run : a["runs"]) {
        for (const auto& l : run["reranks"]) {
            const int it = l["iteration"];
            const bool sgd = l["ranker"] == "sgd";
            if (sgd != (it % 5 == 0 && !l["sgd_fallback"].get<bool>())) schedule_ok = false;
            if (!sgd) max_seed_sample = std::max(max_seed_sample, l["n_seeds"].get<std::size_t>());
        }
    }
    check(schedule_ok, "classifier exactly on every 5th rerank");
    check(max_seed_sample == 10, fmt::format("seed sample capped at 10 (saw {})", max_seed_sample));

    // P < 30: one seed. Excludes are sampled up to 3x includes, so 15 includes
    // with >= 45 labeled excludes gives exactly 60 rows.
    Corpus few(testkit::two_cluster_corpus(300, 15, 32));
    const auto b = eval::manifest_json(eval::simulate(few.corpus, few.data, eval::SimulationConfig{}, "hashing"));
    check(b["protocol"]["n_seeds"] == 1 && b["runs"][0]["n_seeds"] == 1, "1 seed when P < 30");
    std::size_t capped = 0;
    bool cap_ok = true;
    for (const auto& run : b["runs"]) {
        for (const auto& l : run["reranks"]) {
            if (l["ranker"] != "sgd") continue;
            const int inc = l["training_includes"];
            const int exc = l["training_excludes"];
            const int labeled_excludes = 300 - l["pool_size"].get<int>() - inc;
            if (exc != std::min(3 * inc, labeled_excludes)) cap_ok = false;
            if (inc == 15 && inc + exc == 60) ++capped;
        }
    }
    check(capped > 0 && cap_ok, fmt::format("15 includes -> 60 training rows ({} reranks checked)", capped));

    eval::SimulationConfig llm_cfg;
    llm_cfg.n_runs = 3;
    llm_cfg.ranker.llm_enabled = true;
    llm_cfg.llm_bits = testkit::noisy_llm_bits(many.data, 0.9, 33);
    const auto c = eval::manifest_json(eval::simulate(many.corpus, many.data, llm_cfg, "hashing"));
    double lo = 2.0, hi = 0.0;
    bool all_llm = true;
    for (const auto& run : c["runs"]) {
        for (const auto& l : run["reranks"]) {
            lo = std::min(lo, l["min_score"].get<double>());
            hi = std::max(hi, l["max_score"].get<double>());
            all_llm = all_llm && l["ranker"] == "llm_ensemble";
        }
    }
    check(all_llm && lo >= 0.0 && hi <= 2.0 && hi > 1.0, fmt::format("combined score in [0,2] (saw {:.3f}..{:.3f})", lo, hi));

    std::string detail = "15 runs, 5 seeds, 1 seed if P<30, sgd every 5th, <=10 seeds, 15+45=60 rows, score in [0,2]";
    if (!failures.empty()) {
        detail = "failed:";
        for (const auto& f : failures) detail += " [" + f + "]";
    }
    return {failures.empty(), detail};
}

Outcome synthetic_end_to_end() {
    const auto t0 = Stopwatch::now();
    Corpus c(testkit::two_cluster_corpus(1000, 100, 42));
    eval::SimulationConfig cfg;
    cfg.n_seeds = 5;
    const auto r = eval::simulate(c.corpus, c.data, cfg, "hashing");
    const double wss = r.aggregate.wss.mean, r50 = r.aggregate.recall_at[0].mean;
    const double secs = seconds_since(t0);
    return {wss >= 0.5 && r50 >= 0.9 && secs < 300.0,
            fmt::format("mean WSS@95 {:.3f} ± {:.3f}, recall@50% {:.3f}, {:.1f} s", wss, r.aggregate.wss.sd, r50, secs)};
}

Outcome seed_robustness() {
    Corpus c(testkit::two_cluster_corpus(1000, 100, 42));
    std::vector<double> means;
    for (std::size_t seeds : {1, 5, 15}) {
        eval::SimulationConfig cfg;
        cfg.n_seeds = seeds;
        means.push_back(eval::simulate(c.corpus, c.data, cfg).aggregate.wss.mean);
    }
    const double d1 = std::abs(means[0] - means[1]), d15 = std::abs(means[2] - means[1]);
    return {d1 < 0.05 && d15 < 0.05,
            fmt::format("WSS@95 seeds=1 {:.4f}, seeds=5 {:.4f}, seeds=15 {:.4f}", means[0], means[1], means[2])};
}

Outcome llm_lift() {
    Corpus c(testkit::overlapping_corpus(1000, 100, 77));
    eval::SimulationConfig base;
    const auto without = eval::simulate(c.corpus, c.data, base);
    eval::SimulationConfig with = base;
    with.ranker.llm_enabled = true;
    with.llm_bits = testkit::noisy_llm_bits(c.data, 0.9, 78);
    const auto boosted = eval::simulate(c.corpus, c.data, with);
    const double lift = boosted.aggregate.tnr.mean - without.aggregate.tnr.mean;
    return {lift >= 0.10, fmt::format("mean TNR@95 {:.3f} -> {:.3f} (lift {:+.3f})", without.aggregate.tnr.mean,
                                      boosted.aggregate.tnr.mean, lift)};
}

Outcome scanar_golden() {
    std::vector<std::string> failures;
    auto check = [&](bool ok, std::string what) {
        if (!ok) failures.push_back(std::move(what));
    };

    VirtualClock clock;
    FixtureTransport transport(&clock);
    scanar::FeedConfig config;
    scanar::ScanParams params;
    params.scrape_fulltext = true;
    scanar::load_fixture_routes(transport, kFixtures / "scan_basic", config, std::nullopt);
    const auto queries = scanar::parse_query_file(read_file(kFixtures / "scan_basic" / "queries.txt"));
    const auto r = scanar::run_scan(queries, params, config, clock, transport);

    const fs::path golden = kFixtures / "golden";
    check(scanar::export_search_doc(r.search_doc) == read_file(golden / "search_documentation.csv"), "search doc bytes");
    check(scanar::export_articles_csv(r.articles) == read_file(golden / "articles.csv"), "ranked CSV bytes");
    check(scanar::export_articles_ris(r.articles) == read_file(golden / "articles.ris"), "RIS bytes");
    check(r.search_doc.size() == 2 && r.search_doc[0].n_retrieved == 3 && r.search_doc[0].n_new_unique == 3 &&
              r.search_doc[1].n_retrieved == 2 && r.search_doc[1].n_new_unique == 1 && r.articles.size() == 4,
          "dedup counters 3/3, 2/1, 4 unique");
    check(!r.articles.empty() && r.articles[0].dup_count == 2, "shared article dup_count 2");

    scanar::ArticleStore store;
    store.merge({.title = "T", .feed_url = "u", .position = 11}, "Q1");
    const bool second_page = store.articles()[0].min_page_rank == 2;
    store.merge({.title = "T", .feed_url = "u", .position = 3}, "Q2");
    check(scanar::page_of(11) == 2 && second_page && store.articles()[0].min_page_rank == 1 &&
              store.articles()[0].dup_count == 2,
          "page_of(11)=2 and min-page-rank merge");

    std::string body = "<html><body><p>";
    while (body.size() < 40100) body += "0123456789";
    body += "</p></body></html>";
    FixtureTransport long_page(&clock);
    long_page.add("http://long", {200, body, "text/html", "http://long"});
    scanar::NewsArticle art;
    art.feed_url = "http://long";
    IntervalGate gate(clock, params.inter_resolve_delay);
    std::vector<std::string> warnings;
    scanar::resolve_and_scrape(art, params, config, gate, long_page, warnings);
    check(art.full_text && art.full_text->size() == 30000, "40,000-char page truncated to 30,000");

    bool query_gap = r.fetch_starts.size() == 2;
    for (std::size_t i = 1; i < r.fetch_starts.size(); ++i) {
        query_gap = query_gap && r.fetch_starts[i] - r.fetch_starts[i - 1] >= std::chrono::milliseconds(3000);
    }
    bool resolve_gap = r.resolve_starts.size() == 4;
    for (std::size_t i = 1; i < r.resolve_starts.size(); ++i) {
        resolve_gap = resolve_gap && r.resolve_starts[i] - r.resolve_starts[i - 1] >= std::chrono::milliseconds(1500);
    }
    check(query_gap, ">= 3 s between queries");
    check(resolve_gap, ">= 1.5 s between resolutions");

    std::string detail = "golden bytes, dedup counters, page merge, truncation, delay contracts";
    if (!failures.empty()) {
        detail = "failed:";
        for (const auto& f : failures) detail += " [" + f + "]";
    }
    return {failures.empty(), detail};
}

std::string sha256_hex(const std::string& bytes) {
    unsigned char md[EVP_MAX_MD_SIZE];
    unsigned int len = 0;
    EVP_Digest(bytes.data(), bytes.size(), md, &len, EVP_sha256(), nullptr);
    std::string out;
    for (unsigned int i = 0; i < len; ++i) out += fmt::format("{:02x}", md[i]);
    return out;
}

Outcome determinism() {
    const fs::path dir = fs::temp_directory_path() / "hscan_acceptance_determinism";
    fs::remove_all(dir);
    fs::create_directories(dir);
    write_file(dir / "data.csv", testkit::dataset_csv(testkit::two_cluster_corpus(500, 50, 5)));
    auto simulate = [&](const std::string& out) {
        const std::string cmd = fmt::format(
            "{} -q simulate --dataset {} --text-col abstract --label-col decision --positive Include --id-col id "
            "--runs 5 --rng 1234 --embedder hashing --out {} 2>/dev/null",
            HSCAN_CLI, (dir / "data.csv").string(), (dir / out).string());
        const int status = std::system(cmd.c_str());
        return WIFEXITED(status) && WEXITSTATUS(status) == 0;
    };
    if (!simulate("a") || !simulate("b")) return {false, "simulate invocation failed"};
    std::size_t files = 0, same = 0;
    for (const auto& e : fs::directory_iterator(dir / "a")) {
        ++files;
        const fs::path other = dir / "b" / e.path().filename();
        if (fs::exists(other) && sha256_hex(read_file(e.path())) == sha256_hex(read_file(other))) ++same;
    }
    std::size_t files_b = 0;
    for ([[maybe_unused]] const auto& e : fs::directory_iterator(dir / "b")) ++files_b;
    fs::remove_all(dir);
    return {files > 0 && same == files && files_b == files,
            fmt::format("{} of {} output files have equal SHA-256 across two invocations", same, files)};
}

}  // namespace

int main() {
    const std::vector<std::pair<std::string, std::function<Outcome()>>> criteria{
        {"metric oracle equivalence", metric_oracle_equivalence},
        {"closed-form anchors", closed_form_anchors},
        {"random-order correction", random_order_correction},
        {"protocol constants", protocol_constants},
        {"synthetic end-to-end", synthetic_end_to_end},
        {"seed robustness", seed_robustness},
        {"llm ensemble lift", llm_lift},
        {"scan golden files", scanar_golden},
        {"determinism", determinism},
    };
    int failed = 0;
    for (const auto& [name, fn] : criteria) {
        Outcome o;
        try {
            o = fn();
        } catch (const std::exception& e) {
            o = {false, fmt::format("threw: {}", e.what())};
        }
        if (!o.pass) ++failed;
        fmt::print("{}  {}: {}\n", o.pass ? "PASS" : "FAIL", name, o.detail);
        std::fflush(stdout);
    }
    fmt::print("{} of {} criteria passed\n", criteria.size() - static_cast<std::size_t>(failed), criteria.size());
    return failed == 0 ? 0 : 1;
}
