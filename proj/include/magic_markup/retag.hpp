#pragma once

#include <cstddef>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include <json.hpp>

#include "magic_markup/annotation.hpp"
#include "magic_markup/baseline.hpp"
#include "magic_markup/model_client.hpp"
#include "magic_markup/text_location.hpp"

namespace magic_markup {

inline constexpr char32_t kDefaultDelimiter = U'\u2605';  // ★

/// Delimiters tried in order when a document already contains the default.
std::span<const char32_t> delimiter_candidates();

/// The model's reply: the updated segment text, its inclusive line range
/// in the updated file, and which occurrence within that range it is.
struct RetagAnswer {
    std::string text;
    std::size_t start_line = 1;
    std::size_t end_line = 1;
    std::size_t occurrence = 1;

    bool operator==(const RetagAnswer&) const = default;
};

struct RetagConfig {
    char32_t delimiter = kDefaultDelimiter;
    /// Widen the searched lines by one on each side, once, after a failed match.
    bool expand_retry = false;
    /// Adds one sentence carrying the annotation's intent to the prompt.
    bool include_intent = false;
    std::size_t max_parallel = 1;
    std::string model_name;
    double temperature = 0.0;
    std::size_t transport_retries = 2;
    /// Extra attempts after an unparseable answer. Zero mirrors the
    /// evaluated prototype.
    std::size_t malformed_retries = 0;
    /// Used for point anchors, which are never sent to the model.
    BaselineConfig baseline;
};

/// First of delimiter_candidates() absent from every document. Throws
/// NoDelimiterAvailable.
char32_t choose_delimiter(std::span<const std::string> docs);

/// Places `delimiter` right before segment.start and right before the
/// original segment.end. Throws DelimiterCollision or InvalidSegment.
std::string insert_delimiters(std::string_view doc, const TextSegment& segment, char32_t delimiter);

struct StrippedText {
    std::string text;
    TextSegment segment;

    bool operator==(const StrippedText&) const = default;
};

/// Inverse of insert_delimiters. Throws DelimiterCountError unless `marked`
/// holds exactly two delimiters.
StrippedText strip_delimiters(std::string_view marked, char32_t delimiter);

/// Number of `delimiter` occurrences in `text`.
std::size_t count_delimiters(std::string_view text, char32_t delimiter);

/// The single-shot re-tagging prompt: the line-numbered original with the
/// segment delimited, the raw segment text, the line-numbered update, and
/// four numbered questions answered as a JSON object.
ChatRequest build_retag_prompt(std::string_view original, const TextSegment& segment,
                               std::string_view updated, const RetagConfig& config,
                               const std::optional<std::string>& intent = std::nullopt);

/// Reads the four-field answer. Keys may be quoted or bare integers; line
/// numbers and the occurrence may be JSON integers or digit strings.
/// Throws MalformedAnswer.
RetagAnswer parse_retag_response(std::string_view text);

struct Resolution {
    TextSegment segment;
    MatchMode mode = MatchMode::Exact;
    bool expanded = false;
    LineSpan searched;
};

/// Locates the answer inside its stated lines of `updated`: exact matches
/// first, whitespace-normalized matches second, then picks the stated
/// occurrence. Throws NoMatch or OccurrenceOutOfRange.
Resolution resolve_answer(std::string_view updated, const RetagAnswer& answer,
                          const RetagConfig& config);

struct RetagEntry {
    std::string annotation_id;
    std::string resolver;  ///< "llm", or "baseline" for point anchors
    Outcome outcome = Outcome::Failed;
    std::optional<RetagAnswer> answer;
    std::optional<TextSegment> segment;
    std::optional<MatchMode> mode;
    std::optional<LineSpan> searched;
    bool expanded = false;
    /// ErrorCode name when the annotation was not placed.
    std::string failure;
    std::string diagnostics;
    std::string raw_response;
    std::size_t attempts = 0;
    double latency_seconds = 0.0;
    TokenUsage usage;
};

struct RetagReport {
    std::vector<RetagEntry> entries;  ///< same order as the view's annotations
    TokenUsage usage;
    double total_latency_seconds = 0.0;
    double max_latency_seconds = 0.0;

    std::size_t count(Outcome outcome) const;
    nlohmann::json to_json() const;
};

struct RetagResult {
    std::vector<MappedAnnotation> mapped;
    RetagReport report;
};

/// Re-tags every annotation of `view` against `updated`. Annotations are
/// processed independently, up to config.max_parallel at a time; failures
/// are reported as outcomes and never abort siblings. Throws StaleSidecar
/// for a stale view and DelimiterCollision when the configured delimiter
/// occurs in either document.
RetagResult retag(const DocumentView& view, std::string_view updated, ModelClient& client,
                  const RetagConfig& config = {});

nlohmann::json to_json(const RetagAnswer& answer);
nlohmann::json to_json(const TextSegment& segment);

}  // namespace magic_markup
