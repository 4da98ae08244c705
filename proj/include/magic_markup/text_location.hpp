#pragma once

#include <cstddef>
#include <string>
#include <string_view>
#include <vector>

#include "magic_markup/annotation.hpp"

namespace magic_markup {

/// Inclusive, 1-based line range.
struct LineSpan {
    std::size_t start_line = 1;
    std::size_t end_line = 1;

    bool operator==(const LineSpan&) const = default;
};

struct MatchResult {
    TextSegment segment;
    std::size_t occurrence = 1;  ///< 1-based rank, leftmost first

    bool operator==(const MatchResult&) const = default;
};

enum class MatchMode { Exact, Normalized };

std::string_view to_string(MatchMode mode) noexcept;

/// Number of lines when splitting on LF; the empty document has one line.
std::size_t line_count(std::string_view doc);

/// Prefixes every line with "<n>:" (1-based, unpadded), keeping the rest
/// of each line and its terminator intact.
std::string number_lines(std::string_view doc);

/// Covers whole lines start_line..end_line, excluding the LF that ends the
/// last one. Throws SpanOutOfRange.
TextSegment line_span_chars(std::string_view doc, LineSpan span);

/// Line (1-based) containing scalar offset `point`; the end-of-document
/// point belongs to the last line.
std::size_t line_of(std::string_view doc, TextPoint point);

/// Lines touched by a segment. A segment ending right after an LF ends on
/// the line holding that LF.
LineSpan lines_of(std::string_view doc, const TextSegment& segment);

/// Trims space/tab/CR/LF at both ends and collapses interior runs to a
/// single space.
std::string normalize_ws(std::string_view s);

/// Leftmost non-overlapping matches of `needle` in `haystack`.
///
/// Exact mode compares scalar values. Normalized mode reports minimal spans
/// whose normalize_ws equals normalize_ws(needle); segments always carry the
/// haystack's own text. Throws EmptyNeedle for an empty needle, or in
/// Normalized mode one that is only whitespace.
std::vector<MatchResult> find_matches(std::string_view haystack, std::string_view needle,
                                      MatchMode mode);

/// As find_matches, restricted to `region` of `doc`; offsets are reported
/// relative to `doc`.
std::vector<MatchResult> find_matches_in(std::string_view doc, const TextSegment& region,
                                         std::string_view needle, MatchMode mode);

/// The k-th (1-based) match. Throws OccurrenceOutOfRange.
const MatchResult& select_occurrence(const std::vector<MatchResult>& matches, std::size_t k);

}  // namespace magic_markup
