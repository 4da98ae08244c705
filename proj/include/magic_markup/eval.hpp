#pragma once

#include <array>
#include <cstddef>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include <json.hpp>

#include "magic_markup/annotation.hpp"
#include "magic_markup/baseline.hpp"
#include "magic_markup/benchmark.hpp"
#include "magic_markup/model_client.hpp"
#include "magic_markup/retag.hpp"

namespace magic_markup {

/// Result classes, checked in this order.
enum class Category {
    ExactMatch,       ///< predicted span equals gold
    WhitespaceOnly,   ///< equal once surrounding whitespace is trimmed from both
    WrongOccurrence,  ///< same text as gold, placed elsewhere
    OffByOneLine,     ///< correct text, stated lines off by one, nothing placed
    WrongText,        ///< the answer's text is not the gold text
    NoMatch,          ///< nothing placed for another reason
    Error,            ///< malformed answer, transport failure or exception
};

inline constexpr std::size_t kCategoryCount = 7;

std::string_view to_string(Category category) noexcept;
Category parse_category(std::string_view name);

enum class Resolver { Llm, Baseline };

std::string_view to_string(Resolver resolver) noexcept;
Resolver parse_resolver(std::string_view name);

/// What the resolver reported besides the placed span.
struct ScoreDiagnostics {
    std::optional<RetagAnswer> answer;
    /// ErrorCode or Outcome name when nothing was placed.
    std::string failure;
};

Category score(std::string_view updated, const std::optional<TextSegment>& predicted, const TextSegment& gold,
               const ScoreDiagnostics& diagnostics = {});

struct CaseResult {
    std::string case_id;
    Category category = Category::Error;
    std::optional<TextSegment> predicted;
    TextSegment gold;
    std::optional<RetagAnswer> answer;
    std::string failure;
    std::string diagnostics;
    double latency_seconds = 0.0;
    TokenUsage usage;

    nlohmann::json to_json() const;
};

struct SuiteReport {
    std::string suite;
    std::string resolver;
    std::array<std::size_t, kCategoryCount> counts{};
    std::size_t total = 0;
    double mean_latency_seconds = 0.0;
    double max_latency_seconds = 0.0;
    TokenUsage usage;

    std::size_t count(Category category) const { return counts[static_cast<std::size_t>(category)]; }
    /// ExactMatch / total.
    double accuracy_exact() const;
    /// (ExactMatch + WhitespaceOnly) / total.
    double accuracy_lenient() const;

    static SuiteReport aggregate(std::string suite, std::string resolver, const std::vector<CaseResult>& results);
    static SuiteReport from_counts(std::string suite, std::string resolver,
                                   const std::array<std::size_t, kCategoryCount>& counts);

    nlohmann::json to_json() const;
    static SuiteReport from_json(const nlohmann::json& j);
};

struct EvalConfig {
    RetagConfig retag;
    std::size_t max_parallel = 1;
};

struct SuiteRun {
    SuiteReport report;
    std::vector<CaseResult> results;  ///< same order as the suite's cases

    nlohmann::json to_json() const;
};

/// Re-tags the gold original segment of every case and scores it against
/// the gold updated segment. `client` is required for Resolver::Llm.
SuiteRun run_suite(const Suite& suite, Resolver resolver, ModelClient* client, const EvalConfig& config = {});

/// Plain-text table of counts and rates.
std::string report_render(const SuiteReport& report);

/// The answer a perfect model would give for a case.
RetagAnswer gold_answer(const BenchmarkCase& c);

/// True when resolving gold_answer(c) yields exactly the gold segment.
bool gold_self_test(const BenchmarkCase& c);

}  // namespace magic_markup
