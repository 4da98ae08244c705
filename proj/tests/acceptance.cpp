// Acceptance checks. One PASS/FAIL/SKIP line per criterion; exits non-zero
// on any FAIL.
#include <chrono>
#include <cstdlib>
#include <functional>
#include <iostream>
#include <random>
#include <sstream>

#include "magic_markup/baseline.hpp"
#include "magic_markup/benchmark.hpp"
#include "magic_markup/eval.hpp"
#include "magic_markup/retag.hpp"
#include "magic_markup/sidecar.hpp"
#include "oracle.hpp"

using namespace magic_markup;
using nlohmann::json;

namespace {

std::string data(const std::string& rel) { return std::string(MM_TEST_DATA) + "/" + rel; }

/// Collects the first failed condition of a criterion.
struct Check {
    std::string failure;
    void require(bool ok, const std::string& what) {
        if (!ok && failure.empty()) failure = what;
    }
};

int failed = 0;

void criterion(const std::string& name, const std::function<void(Check&)>& body) {
    Check c;
    try {
        body(c);
    } catch (const std::exception& e) {
        c.failure = std::string("exception: ") + e.what();
    }
    if (c.failure.empty()) {
        std::cout << "PASS " << name << "\n";
    } else {
        ++failed;
        std::cout << "FAIL " << name << ": " << c.failure << "\n";
    }
}

std::vector<oracle::Span> spans(const std::vector<MatchResult>& results) {
    std::vector<oracle::Span> out;
    for (const auto& r : results) out.push_back({r.segment.start.index, r.segment.end.index});
    return out;
}

TextSegment random_segment(std::mt19937& rng, const std::string& doc) {
    std::uniform_int_distribution<std::size_t> pos(0, oracle::decode(doc).size());
    std::size_t a = pos(rng), b = pos(rng);
    if (a > b) std::swap(a, b);
    return make_segment(doc, TextPoint{a}, TextPoint{b});
}

CaseDraft draft_from(const json& j) {
    CaseDraft d;
    d.id = j.at("id");
    d.spec = gen_spec_from_json(j.at("spec"));
    d.original_marked = j.at("original_marked");
    d.updated_marked = j.at("updated_marked");
    d.metadata.segment_eliminated = j.at("metadata").value("segment_eliminated", false);
    d.metadata.duplication_flagged = j.at("metadata").value("duplication_flagged", false);
    return d;
}

}  // namespace

int main() {
    criterion("worked example maps \"alad\" to [14, 21) \"Aladdin\" within 1s", [](Check& c) {
        const auto t0 = std::chrono::steady_clock::now();
        Annotation a{"a1", make_segment("boy alad.", TextPoint{4}, TextPoint{8}), "a name", std::nullopt};
        ScriptedClient client(std::vector<std::string>{R"({"1":"Aladdin","2":1,"3":1,"4":1})"});
        const RetagResult r = retag(make_view("story.txt", "boy alad.", {a}), "The young boy Aladdin wandered out.",
                                    client);
        const double seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
        c.require(r.mapped.size() == 1 && r.mapped[0].segment.has_value(), "no placement");
        if (!c.failure.empty()) return;
        c.require(*r.mapped[0].segment == TextSegment{TextPoint{14}, TextPoint{21}, "Aladdin"}, "wrong segment");
        c.require(r.mapped[0].outcome == Outcome::Moved, "outcome is not Moved");
        c.require(seconds < 1.0, "took " + std::to_string(seconds) + "s");
    });

    criterion("C program prompt is byte-identical and resolves to the loop bound on line 13", [](Check& c) {
        const std::string original = read_file(data("appendix/original.c"));
        const std::string updated = read_file(data("appendix/updated.c"));
        std::istringstream span(read_file(data("appendix/segment.txt")));
        std::size_t s = 0, e = 0;
        span >> s >> e;
        const TextSegment seg = make_segment(original, TextPoint{s}, TextPoint{e});
        c.require(seg.anchor_text == "numItems", "fixture segment is not numItems");
        const ChatRequest request = build_retag_prompt(original, seg, updated, RetagConfig{});
        c.require(request.user_text == read_file(data("appendix/golden_prompt.txt")), "prompt differs");
        const Resolution res = resolve_answer(updated, RetagAnswer{"numItems", 13, 13, 1}, RetagConfig{});
        c.require(res.segment.anchor_text == "numItems", "wrong text");
        c.require(line_of(updated, res.segment.start) == 13, "not on line 13");
        c.require(find_matches(updated, "numItems", MatchMode::Exact).front().segment.start.index <
                      res.segment.start.index,
                  "first occurrence chosen");
    });

    criterion("1000 delimiter, sidecar and suite round trips with multibyte text", [](Check& c) {
        std::mt19937 rng(1001);
        int done = 0;
        for (int i = 0; done < 1000 && i < 5000; ++i) {
            const std::string doc = oracle::random_text(rng, 24);
            if (oracle::decode(doc).find(U'★') != std::u32string::npos) continue;
            const TextSegment seg = random_segment(rng, doc);
            const StrippedText back = strip_delimiters(insert_delimiters(doc, seg, U'★'), U'★');
            c.require(back.text == doc && back.segment == seg, "delimiter round trip failed on case " +
                                                                   std::to_string(i));
            const DocumentView view = make_view("d.txt", doc, {Annotation{"a", seg, "c", "i"}});
            const DocumentView again = sidecar_from_json(json::parse(sidecar_to_json(view).dump()), doc);
            c.require(again == view, "sidecar round trip failed");
            ++done;
        }
        c.require(done == 1000, "too few documents");
        for (const char* name : {"taxonomy/suite.json", "baseline/identity.json"}) {
            const Suite suite = Suite::load(data(name));
            c.require(Suite::from_json(json::parse(suite.to_json().dump())) == suite, std::string(name));
        }
    });

    criterion("matcher agrees with brute force on 1000 cases in both modes", [](Check& c) {
        std::mt19937 rng(77);
        int exact = 0, normalized = 0;
        while (exact < 1000 || normalized < 1000) {
            const std::string hay = oracle::random_text(rng, 16);
            const std::string needle = oracle::random_text(rng, 4);
            const auto h = oracle::decode(hay), n = oracle::decode(needle);
            if (!n.empty()) {
                ++exact;
                const auto got = find_matches(hay, needle, MatchMode::Exact);
                const auto want = oracle::matches(h, n, false);
                c.require(spans(got) == want, "exact mismatch for \"" + needle + "\" in \"" + hay + "\"");
                for (std::size_t k = 1; k <= want.size(); ++k) {
                    c.require(select_occurrence(got, k).segment.start.index == want[k - 1].start, "occurrence");
                }
            }
            if (!oracle::normalize(n).empty()) {
                ++normalized;
                c.require(spans(find_matches(hay, needle, MatchMode::Normalized)) == oracle::matches(h, n, true),
                          "normalized mismatch for \"" + needle + "\" in \"" + hay + "\"");
            }
        }
    });

    criterion("replayed taxonomy suite lands in the labelled categories", [](Check& c) {
        const Suite suite = Suite::load(data("taxonomy/suite.json"));
        const json expected = json::parse(read_file(data("taxonomy/expected.json")));
        for (bool expand : {false, true}) {
            auto client = ReplayClient::from_file(data("taxonomy/transcript.json"));
            EvalConfig config;
            config.retag.expand_retry = expand;
            const SuiteRun run = run_suite(suite, Resolver::Llm, client.get(), config);
            for (const CaseResult& r : run.results) {
                const std::string want = expected.at(r.case_id).at(expand ? "expand_retry" : "default");
                c.require(to_string(r.category) == want, r.case_id + " is " + std::string(to_string(r.category)) +
                                                             ", expected " + want);
            }
        }
    });

    criterion("generator drafts are accepted or rejected as labelled", [](Check& c) {
        const json drafts = json::parse(read_file(data("generator/drafts.json")));
        for (const auto& j : drafts) {
            const auto verdict = validate_case(draft_from(j));
            const std::string want = j.at("expected");
            const std::string got = std::holds_alternative<BenchmarkCase>(verdict)
                                        ? "accepted"
                                        : std::string(to_string(std::get<Rejection>(verdict).reason));
            c.require(got == want, j.at("id").get<std::string>() + " gave " + got);
        }
    });

    criterion("baseline: identity suite exact 1.0, reformatted suite lenient 1.0", [](Check& c) {
        const SuiteReport same = run_suite(Suite::load(data("baseline/identity.json")), Resolver::Baseline, nullptr).report;
        c.require(same.accuracy_exact() == 1.0, "identity exact " + std::to_string(same.accuracy_exact()));
        const SuiteReport ws = run_suite(Suite::load(data("baseline/whitespace.json")), Resolver::Baseline, nullptr).report;
        c.require(ws.accuracy_lenient() == 1.0, "whitespace lenient " + std::to_string(ws.accuracy_lenient()));
    });

    const char* key = std::getenv(kApiKeyEnv);
    if (key == nullptr || *key == '\0') {
        std::cout << "SKIP live model smoke test (" << kApiKeyEnv << " unset)\n";
    } else {
        criterion("live model places at least 4 of 5 cases leniently", [](Check& c) {
            Suite suite = Suite::load(data("taxonomy/suite.json"));
            suite.cases.resize(5);
            HttpModelClient client(LiveClientConfig::from_env());
            const SuiteReport r = run_suite(suite, Resolver::Llm, &client).report;
            const std::size_t lenient = r.counts[0] + r.counts[1];
            c.require(lenient >= 4, std::to_string(lenient) + " of 5");
        });
    }

    return failed == 0 ? 0 : 1;
}
