#include <gtest/gtest.h>

#include <atomic>
#include <filesystem>

#include "hscan/core/errors.hpp"
#include "hscan/llm/prompt.hpp"
#include "hscan/llm/provider.hpp"
#include "hscan/llm/screening.hpp"
#include "hscan/scanar/clock.hpp"
#include "hscan/scanar/transport.hpp"
#include "json.hpp"

using namespace hscan;
using namespace hscan::llm;

namespace {

PromptTemplate sample_template() {
    PromptTemplate t;
    t.scene = "You screen news for a health technology horizon scan.";
    t.criteria = "Include new diagnostic tests that patients can use at home.";
    return t;
}

std::vector<RecordItem> fixture_records() {
    const std::vector<std::string> texts{
        "Home screening kit for bowel cancer trialled",
        "Football results from the weekend",
        "New SCREENING programme for lung disease",
        "Weather warning issued for the coast",
        "Veterinary screening of cattle",
        "Patch measures glucose without needles",
    };
    std::vector<RecordItem> out;
    for (std::size_t i = 0; i < texts.size(); ++i) {
        RecordItem r;
        r.id = "rec" + std::to_string(i);
        r.reference_text = texts[i];
        out.push_back(r);
    }
    return out;
}

class DownProvider final : public ChatProvider {
public:
    std::string model_id() const override { return "down"; }
    std::string complete(const ChatRequest&) override {
        ++calls;
        throw TransportError("connection refused");
    }
    std::atomic<int> calls{0};
};

}  // namespace

TEST(ParseResponse, CleanYes) {
    const auto r = parse_response("YES. The article describes a new at-home test");
    EXPECT_EQ(r.bit, 1);
    EXPECT_EQ(r.status, ParseStatus::clean);
    EXPECT_EQ(r.justification, "The article describes a new at-home test");
}

TEST(ParseResponse, CleanNoWithDash) {
    const auto r = parse_response("no — this covers an established programme");
    EXPECT_EQ(r.bit, 0);
    EXPECT_EQ(r.status, ParseStatus::clean);
    EXPECT_EQ(r.justification, "this covers an established programme");
}

TEST(ParseResponse, DefaultsToYesWithoutVerdict) {
    const auto r = parse_response("The article seems relevant.");
    EXPECT_EQ(r.bit, 1);
    EXPECT_EQ(r.status, ParseStatus::defaulted);
}

TEST(ParseResponse, SalvagedLateVerdict) {
    const auto r = parse_response("After careful reading my answer is NO, because it is about cattle.");
    EXPECT_EQ(r.bit, 0);
    EXPECT_EQ(r.status, ParseStatus::salvaged);
}

TEST(ParseResponse, WordsContainingYesAreNotVerdicts) {
    EXPECT_EQ(parse_response("Yesterday a nonsense story").status, ParseStatus::defaulted);
    EXPECT_EQ(parse_response("").status, ParseStatus::defaulted);
    EXPECT_EQ(parse_response("\xff\xfe garbage").bit, 1);
}

TEST(Prompt, RenderIsDeterministicAndSkipsMissingPart) {
    const auto t = sample_template();
    const std::string p1 = render_prompt(t, "Article body");
    EXPECT_EQ(p1, render_prompt(t, "Article body"));
    EXPECT_EQ(prompt_hash(p1), prompt_hash(render_prompt(t, "Article body")));
    EXPECT_EQ(prompt_hash(p1).size(), 64u);
    EXPECT_EQ(p1, t.scene + "\n\n" + t.criteria + "\n\n" + std::string(kDefaultOutputInstruction) + "\n\n" +
                      std::string(kArticlePrefix) + "Article body");
    auto t3 = t;
    t3.exclusions = "Exclude veterinary medicine.";
    EXPECT_NE(render_prompt(t3, "x").find("Exclude veterinary medicine.\n\n"), std::string::npos);
}

TEST(Prompt, LongTextIncludedWhole) {
    const std::string text(10000, 'a');
    const std::string p = render_prompt(sample_template(), text);
    EXPECT_EQ(p.substr(p.size() - text.size()), text);
}

TEST(Prompt, ValidationNamesPart) {
    auto t = sample_template();
    t.criteria.clear();
    try {
        t.validate();
        FAIL();
    } catch (const InputError& e) {
        EXPECT_NE(std::string(e.what()).find("part 2"), std::string::npos);
    }
    const auto j = nlohmann::json{{"part1", "a"}, {"part2", "b"}, {"part3", " "}};
    const auto parsed = template_from_json(j);
    EXPECT_FALSE(parsed.exclusions);
    EXPECT_EQ(parsed.output_instruction, kDefaultOutputInstruction);
}

TEST(Stub, BitsMatchSubstringOracle) {
    auto stub = StubProvider::parse("YES screening\n# comment\nDEFAULT NO\n");
    const auto records = fixture_records();
    VirtualClock clock;
    BatchConfig cfg;
    cfg.clock = &clock;
    const auto judgements = classify_batch(records, sample_template(), stub, cfg);
    ASSERT_EQ(judgements.size(), records.size());
    for (std::size_t i = 0; i < records.size(); ++i) {
        std::string lower = records[i].reference_text;
        for (auto& ch : lower) ch = static_cast<char>(std::tolower(static_cast<unsigned char>(ch)));
        const int oracle = lower.find("screening") != std::string::npos ? 1 : 0;
        EXPECT_EQ(judgements[i].bit, oracle) << records[i].reference_text;
        EXPECT_EQ(judgements[i].record_id, records[i].id);
        EXPECT_EQ(judgements[i].parse_status, ParseStatus::clean);
        EXPECT_EQ(judgements[i].prompt_hash, prompt_hash(render_prompt(sample_template(), records[i].reference_text)));
    }
    const auto again = classify_batch(records, sample_template(), stub, cfg);
    EXPECT_EQ(judgements_to_json(again), judgements_to_json(judgements));
}

TEST(Stub, FirstRuleWins) {
    const auto stub = StubProvider::parse("NO veterinary\nYES screening\n");
    EXPECT_FALSE(stub.decide("Veterinary screening of cattle"));
    EXPECT_TRUE(stub.decide("screening"));
    EXPECT_FALSE(stub.decide("unrelated"));
}

TEST(Batch, ProviderDownDefaultsToNoAfterRetries) {
    DownProvider down;
    VirtualClock clock;
    BatchConfig cfg;
    cfg.clock = &clock;
    cfg.max_concurrency = 2;
    const auto records = fixture_records();
    std::size_t last_done = 0;
    const auto j = classify_batch(records, sample_template(), down, cfg,
                                  [&](std::size_t done, std::size_t) { last_done = std::max(last_done, done); });
    ASSERT_EQ(j.size(), records.size());
    for (const auto& x : j) {
        EXPECT_EQ(x.bit, 0);
        EXPECT_EQ(x.parse_status, ParseStatus::defaulted_on_error);
        EXPECT_FALSE(x.error.empty());
        EXPECT_EQ(x.attempts, 3);
    }
    EXPECT_EQ(down.calls.load(), 3 * static_cast<int>(records.size()));
    EXPECT_EQ(last_done, records.size());
    const auto c = count(j);
    EXPECT_EQ(c.errors, records.size());
    EXPECT_EQ(c.yes, 0u);
}

TEST(Batch, MinIntervalSpacesRequests) {
    auto stub = StubProvider::parse("YES glucose\n");
    VirtualClock clock;
    BatchConfig cfg;
    cfg.clock = &clock;
    cfg.min_interval = Duration{500};
    cfg.max_concurrency = 3;
    const auto records = fixture_records();
    classify_batch(records, sample_template(), stub, cfg);
    EXPECT_GE(clock.now(), Duration{500 * 5});
}

TEST(Provider, OpenAIWireFormat) {
    nlohmann::json seen;
    auto transport = std::make_shared<FunctionTransport>([&](const HttpRequest& r) {
        seen = nlohmann::json::parse(r.body);
        return HttpResponse{200, R"({"choices":[{"message":{"role":"assistant","content":"NO. Not relevant."}}]})",
                            "application/json", r.url};
    });
    OpenAICompatibleProvider p(ChatConfig{}, transport);
    EXPECT_EQ(p.model_id(), "gpt-4o-mini-2024-07-18");
    EXPECT_EQ(p.complete({"", "hello"}), "NO. Not relevant.");
    EXPECT_EQ(seen["model"], "gpt-4o-mini-2024-07-18");
    EXPECT_EQ(seen["temperature"], 0);
    EXPECT_EQ(seen["messages"].size(), 1u);
}

TEST(Provider, StatusMapping) {
    int status = 401;
    auto transport = std::make_shared<FunctionTransport>(
        [&](const HttpRequest& r) { return HttpResponse{status, "{}", "application/json", r.url}; });
    OpenAICompatibleProvider p(ChatConfig{}, transport);
    EXPECT_THROW(p.complete({"", "x"}), ConfigError);
    status = 503;
    try {
        p.complete({"", "x"});
        FAIL();
    } catch (const TransportError& e) {
        EXPECT_TRUE(e.retryable());
    }
    status = 400;
    try {
        p.complete({"", "x"});
        FAIL();
    } catch (const TransportError& e) {
        EXPECT_FALSE(e.retryable());
    }
}

TEST(Judgements, FileRoundTripAndBareMap) {
    auto stub = StubProvider::parse("YES kit\n");
    VirtualClock clock;
    BatchConfig cfg;
    cfg.clock = &clock;
    const auto j = classify_batch(fixture_records(), sample_template(), stub, cfg);
    const auto path = std::filesystem::temp_directory_path() / "hscan_judgements_test.json";
    save_judgements(j, path);
    const auto back = load_judgements(path);
    std::filesystem::remove(path);
    EXPECT_EQ(judgements_to_json(back), judgements_to_json(j));
    EXPECT_EQ(bits_of(back), bits_of(j));

    const auto bare = judgements_from_json(nlohmann::json{{"a", 1}, {"b", 0}});
    EXPECT_EQ(bits_of(bare), (std::map<std::string, int>{{"a", 1}, {"b", 0}}));
}
