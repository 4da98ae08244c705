#include "magic_markup/eval.hpp"

#include <algorithm>
#include <atomic>
#include <cstdio>
#include <thread>

#include "magic_markup/error.hpp"
#include "magic_markup/text_location.hpp"
#include "magic_markup/utf8.hpp"

namespace magic_markup {

using nlohmann::json;

namespace {

constexpr std::string_view kCategoryNames[kCategoryCount] = {
    "ExactMatch", "WhitespaceOnly", "WrongOccurrence", "OffByOneLine", "WrongText", "NoMatch", "Error",
};

// Failures that mean no usable answer was produced.
constexpr std::string_view kErrorFailures[] = {
    "MalformedAnswer", "TransportError", "AuthError", "JsonModeViolation", "ReplayMiss", "Error", "Exception",
};

std::pair<std::size_t, std::size_t> trimmed(std::string_view doc, const TextSegment& s) {
    const std::u32string text = utf8::decode(doc);
    std::size_t a = s.start.index;
    std::size_t b = s.end.index;
    while (a < b && utf8::is_space(text[a])) ++a;
    while (b > a && utf8::is_space(text[b - 1])) --b;
    return {a, b};
}

std::size_t line_distance(std::size_t a, std::size_t b) { return a > b ? a - b : b - a; }

std::string fixed(double v, int places) {
    char buf[64];
    std::snprintf(buf, sizeof buf, "%.*f", places, v);
    return buf;
}

CaseResult run_case(const BenchmarkCase& c, Resolver resolver, ModelClient* client, const EvalConfig& config) {
    CaseResult r;
    r.case_id = c.id;
    r.gold = c.gold_updated;
    ScoreDiagnostics diag;
    try {
        if (resolver == Resolver::Baseline) {
            BaselineResult b = baseline_retag(c.original_clean, c.gold_original, c.updated_clean,
                                              config.retag.baseline);
            r.predicted = b.segment;
            r.diagnostics = b.diagnostics;
            if (!b.segment) diag.failure = std::string(to_string(b.outcome));
        } else {
            RetagConfig rc = config.retag;
            rc.max_parallel = 1;
            const std::vector<std::string> docs{c.original_clean, c.updated_clean};
            if (count_delimiters(c.original_clean, rc.delimiter) || count_delimiters(c.updated_clean, rc.delimiter)) {
                rc.delimiter = choose_delimiter(docs);
            }
            Annotation a;
            a.id = c.id;
            a.segment = c.gold_original;
            const DocumentView view = make_view(c.id, c.original_clean, {a});
            RetagResult result = retag(view, c.updated_clean, *client, rc);
            const RetagEntry& e = result.report.entries.front();
            r.predicted = e.segment;
            r.answer = e.answer;
            r.diagnostics = e.diagnostics;
            r.latency_seconds = e.latency_seconds;
            r.usage = e.usage;
            diag.answer = e.answer;
            if (!e.segment) diag.failure = e.failure.empty() ? std::string(to_string(e.outcome)) : e.failure;
        }
    } catch (const Error& e) {
        r.predicted.reset();
        r.diagnostics = e.what();
        diag = ScoreDiagnostics{std::nullopt, std::string(to_string(e.code()))};
    } catch (const std::exception& e) {
        r.predicted.reset();
        r.diagnostics = e.what();
        diag = ScoreDiagnostics{std::nullopt, "Exception"};
    }
    r.failure = diag.failure;
    r.category = score(c.updated_clean, r.predicted, r.gold, diag);
    return r;
}

}  // namespace

std::string_view to_string(Category category) noexcept {
    const auto i = static_cast<std::size_t>(category);
    return i < kCategoryCount ? kCategoryNames[i] : "Unknown";
}

Category parse_category(std::string_view name) {
    for (std::size_t i = 0; i < kCategoryCount; ++i) {
        if (kCategoryNames[i] == name) return static_cast<Category>(i);
    }
    throw Error(ErrorCode::SchemaError, "unknown category '" + std::string(name) + "'");
}

std::string_view to_string(Resolver resolver) noexcept {
    return resolver == Resolver::Llm ? "llm" : "baseline";
}

Resolver parse_resolver(std::string_view name) {
    if (name == "llm") return Resolver::Llm;
    if (name == "baseline") return Resolver::Baseline;
    throw Error(ErrorCode::ValidationError, "unknown resolver '" + std::string(name) + "'");
}

Category score(std::string_view updated, const std::optional<TextSegment>& predicted, const TextSegment& gold,
               const ScoreDiagnostics& diagnostics) {
    const std::string gold_norm = normalize_ws(gold.anchor_text);
    if (predicted) {
        if (predicted->start == gold.start && predicted->end == gold.end) return Category::ExactMatch;
        const std::string pred_norm = normalize_ws(predicted->anchor_text);
        if (pred_norm == gold_norm && trimmed(updated, *predicted) == trimmed(updated, gold)) {
            return Category::WhitespaceOnly;
        }
        if (pred_norm == gold_norm) return Category::WrongOccurrence;
        return Category::WrongText;
    }

    const bool errored =
        std::find(std::begin(kErrorFailures), std::end(kErrorFailures), diagnostics.failure) != std::end(kErrorFailures);
    if (errored) return Category::Error;
    if (!diagnostics.answer) {
        return diagnostics.failure == to_string(Outcome::Orphaned) ? Category::NoMatch : Category::Error;
    }
    const RetagAnswer& answer = *diagnostics.answer;
    const bool same_text = normalize_ws(answer.text) == gold_norm;
    if (same_text) {
        const LineSpan lines = lines_of(updated, gold);
        const std::size_t off = std::max(line_distance(answer.start_line, lines.start_line),
                                         line_distance(answer.end_line, lines.end_line));
        if (off == 1) return Category::OffByOneLine;
        return Category::NoMatch;
    }
    return Category::WrongText;
}

json CaseResult::to_json() const {
    return {
        {"case", case_id},
        {"category", to_string(category)},
        {"predicted", predicted ? magic_markup::to_json(*predicted) : json(nullptr)},
        {"gold", magic_markup::to_json(gold)},
        {"answer", answer ? magic_markup::to_json(*answer) : json(nullptr)},
        {"failure", failure.empty() ? json(nullptr) : json(failure)},
        {"diagnostics", diagnostics},
        {"latency_seconds", latency_seconds},
        {"usage", magic_markup::to_json(usage)},
    };
}

double SuiteReport::accuracy_exact() const {
    return total == 0 ? 0.0 : static_cast<double>(count(Category::ExactMatch)) / static_cast<double>(total);
}

double SuiteReport::accuracy_lenient() const {
    if (total == 0) return 0.0;
    return static_cast<double>(count(Category::ExactMatch) + count(Category::WhitespaceOnly)) /
           static_cast<double>(total);
}

SuiteReport SuiteReport::aggregate(std::string suite, std::string resolver, const std::vector<CaseResult>& results) {
    SuiteReport r;
    r.suite = std::move(suite);
    r.resolver = std::move(resolver);
    r.total = results.size();
    double latency = 0.0;
    for (const auto& c : results) {
        ++r.counts[static_cast<std::size_t>(c.category)];
        latency += c.latency_seconds;
        r.max_latency_seconds = std::max(r.max_latency_seconds, c.latency_seconds);
        r.usage += c.usage;
    }
    r.mean_latency_seconds = results.empty() ? 0.0 : latency / static_cast<double>(results.size());
    return r;
}

SuiteReport SuiteReport::from_counts(std::string suite, std::string resolver,
                                     const std::array<std::size_t, kCategoryCount>& counts) {
    SuiteReport r;
    r.suite = std::move(suite);
    r.resolver = std::move(resolver);
    r.counts = counts;
    for (auto n : counts) r.total += n;
    return r;
}

json SuiteReport::to_json() const {
    json categories = json::object();
    for (std::size_t i = 0; i < kCategoryCount; ++i) categories[std::string(kCategoryNames[i])] = counts[i];
    return {
        {"suite", suite},
        {"resolver", resolver},
        {"totals", {{"cases", total}, {"accuracy_exact", accuracy_exact()}, {"accuracy_lenient", accuracy_lenient()}}},
        {"categories", std::move(categories)},
        {"mean_latency_seconds", mean_latency_seconds},
        {"max_latency_seconds", max_latency_seconds},
        {"usage", magic_markup::to_json(usage)},
    };
}

SuiteReport SuiteReport::from_json(const json& j) {
    try {
        std::array<std::size_t, kCategoryCount> counts{};
        for (auto it = j.at("categories").begin(); it != j.at("categories").end(); ++it) {
            counts[static_cast<std::size_t>(parse_category(it.key()))] = it->get<std::size_t>();
        }
        SuiteReport r = from_counts(j.at("suite").get<std::string>(), j.at("resolver").get<std::string>(), counts);
        if (j.at("totals").at("cases").get<std::size_t>() != r.total) {
            throw Error(ErrorCode::SchemaError, "report totals disagree with category counts");
        }
        r.mean_latency_seconds = j.value("mean_latency_seconds", 0.0);
        r.max_latency_seconds = j.value("max_latency_seconds", 0.0);
        if (j.contains("usage")) r.usage = usage_from_json(j.at("usage"));
        return r;
    } catch (const json::exception& e) {
        throw Error(ErrorCode::SchemaError, std::string("report: ") + e.what());
    }
}

json SuiteRun::to_json() const {
    json cases = json::array();
    for (const auto& r : results) cases.push_back(r.to_json());
    json j = report.to_json();
    j["cases"] = std::move(cases);
    return j;
}

SuiteRun run_suite(const Suite& suite, Resolver resolver, ModelClient* client, const EvalConfig& config) {
    if (resolver == Resolver::Llm && client == nullptr) {
        throw Error(ErrorCode::ValidationError, "the llm resolver needs a model client");
    }
    config.retag.baseline.validate();
    const std::size_t n = suite.cases.size();
    std::vector<CaseResult> results(n);
    std::atomic<std::size_t> next{0};
    auto worker = [&] {
        for (std::size_t i = next++; i < n; i = next++) results[i] = run_case(suite.cases[i], resolver, client, config);
    };
    const std::size_t threads = std::clamp<std::size_t>(config.max_parallel, 1, std::max<std::size_t>(n, 1));
    if (threads == 1) {
        worker();
    } else {
        std::vector<std::jthread> pool;
        for (std::size_t t = 0; t < threads; ++t) pool.emplace_back(worker);
    }
    SuiteRun run;
    run.report = SuiteReport::aggregate(suite.name, std::string(to_string(resolver)), results);
    run.results = std::move(results);
    return run;
}

std::string report_render(const SuiteReport& report) {
    std::string out;
    out += "suite:    " + report.suite + "\n";
    out += "resolver: " + report.resolver + "\n\n";
    out += "category           count   share\n";
    for (std::size_t i = 0; i < kCategoryCount; ++i) {
        std::string name(kCategoryNames[i]);
        name.resize(17, ' ');
        std::string n = std::to_string(report.counts[i]);
        n.insert(0, n.size() < 7 ? 7 - n.size() : 0, ' ');
        const double share =
            report.total == 0 ? 0.0 : static_cast<double>(report.counts[i]) / static_cast<double>(report.total);
        out += name + "  " + n + "  " + fixed(100.0 * share, 1) + "%\n";
    }
    out += "\ncases:            " + std::to_string(report.total) + "\n";
    out += "accuracy (exact):   " + fixed(report.accuracy_exact(), 4) + "\n";
    out += "accuracy (lenient): " + fixed(report.accuracy_lenient(), 4) + "\n";
    out += "latency mean/max:   " + fixed(report.mean_latency_seconds, 3) + "s / " +
           fixed(report.max_latency_seconds, 3) + "s\n";
    out += "tokens in/out:      " + std::to_string(report.usage.input_tokens) + " / " +
           std::to_string(report.usage.output_tokens) + "\n";
    return out;
}

RetagAnswer gold_answer(const BenchmarkCase& c) {
    const std::string& doc = c.updated_clean;
    const TextSegment& gold = c.gold_updated;
    const LineSpan lines = lines_of(doc, gold);
    const TextSegment region = line_span_chars(doc, lines);
    const auto matches = find_matches_in(doc, region, gold.anchor_text, MatchMode::Exact);
    RetagAnswer a{gold.anchor_text, lines.start_line, lines.end_line, 1};
    for (std::size_t i = 0; i < matches.size(); ++i) {
        if (matches[i].segment.start == gold.start) a.occurrence = i + 1;
    }
    return a;
}

bool gold_self_test(const BenchmarkCase& c) {
    try {
        const Resolution r = resolve_answer(c.updated_clean, gold_answer(c), RetagConfig{});
        return r.segment == c.gold_updated;
    } catch (const Error&) {
        return false;
    }
}

}  // namespace magic_markup
