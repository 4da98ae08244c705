#include "magic_markup/text_location.hpp"

#include "magic_markup/error.hpp"
#include "magic_markup/utf8.hpp"

namespace magic_markup {

namespace {

// Offsets where each line begins.
std::vector<std::size_t> line_starts(std::u32string_view text) {
    std::vector<std::size_t> starts{0};
    for (std::size_t i = 0; i < text.size(); ++i) {
        if (text[i] == U'\n') starts.push_back(i + 1);
    }
    return starts;
}

std::u32string normalize(std::u32string_view s) {
    std::u32string out;
    bool pending_space = false;
    for (char32_t c : s) {
        if (utf8::is_space(c)) {
            pending_space = !out.empty();
            continue;
        }
        if (pending_space) out.push_back(U' ');
        pending_space = false;
        out.push_back(c);
    }
    return out;
}

// End of the normalized match of `needle` starting at `start`, or npos.
std::size_t match_normalized_at(std::u32string_view hay, std::u32string_view needle,
                                std::size_t start) {
    std::size_t i = start;
    for (char32_t c : needle) {
        if (c == U' ') {
            if (i >= hay.size() || !utf8::is_space(hay[i])) return std::u32string_view::npos;
            while (i < hay.size() && utf8::is_space(hay[i])) ++i;
        } else {
            if (i >= hay.size() || hay[i] != c) return std::u32string_view::npos;
            ++i;
        }
    }
    return i;
}

std::vector<MatchResult> match_u32(std::u32string_view doc, std::size_t region_start,
                                   std::size_t region_end, std::u32string_view needle,
                                   MatchMode mode) {
    if (needle.empty()) throw Error(ErrorCode::EmptyNeedle, "needle is empty");
    const std::u32string_view hay = doc.substr(region_start, region_end - region_start);

    std::vector<std::pair<std::size_t, std::size_t>> spans;
    if (mode == MatchMode::Exact) {
        std::size_t pos = hay.find(needle);
        while (pos != std::u32string_view::npos) {
            spans.emplace_back(pos, pos + needle.size());
            pos = hay.find(needle, pos + needle.size());
        }
    } else {
        const std::u32string norm = normalize(needle);
        if (norm.empty()) throw Error(ErrorCode::EmptyNeedle, "needle is only whitespace");
        std::size_t s = 0;
        while (s < hay.size()) {
            const std::size_t end = match_normalized_at(hay, norm, s);
            if (end == std::u32string_view::npos) {
                ++s;
                continue;
            }
            spans.emplace_back(s, end);
            s = end;
        }
    }

    std::vector<MatchResult> out;
    out.reserve(spans.size());
    for (const auto& [b, e] : spans) {
        MatchResult m;
        m.segment.start.index = region_start + b;
        m.segment.end.index = region_start + e;
        m.segment.anchor_text = utf8::encode(hay.substr(b, e - b));
        m.occurrence = out.size() + 1;
        out.push_back(std::move(m));
    }
    return out;
}

}  // namespace

std::string_view to_string(MatchMode mode) noexcept {
    return mode == MatchMode::Exact ? "exact" : "normalized";
}

std::size_t line_count(std::string_view doc) {
    std::size_t n = 1;
    for (char c : doc) n += (c == '\n');
    return n;
}

std::string number_lines(std::string_view doc) {
    std::string out;
    out.reserve(doc.size() + 8 * line_count(doc));
    std::size_t line = 1;
    out += "1:";
    for (char c : doc) {
        out.push_back(c);
        if (c == '\n') out += std::to_string(++line) + ":";
    }
    return out;
}

TextSegment line_span_chars(std::string_view doc, LineSpan span) {
    const std::u32string text = utf8::decode(doc);
    const auto starts = line_starts(text);
    if (span.start_line < 1 || span.start_line > span.end_line || span.end_line > starts.size()) {
        throw Error(ErrorCode::SpanOutOfRange,
                    "lines " + std::to_string(span.start_line) + ".." + std::to_string(span.end_line) +
                        " outside 1.." + std::to_string(starts.size()));
    }
    const std::size_t begin = starts[span.start_line - 1];
    const std::size_t end = span.end_line < starts.size() ? starts[span.end_line] - 1 : text.size();
    return TextSegment{TextPoint{begin}, TextPoint{end},
                       utf8::encode(std::u32string_view(text).substr(begin, end - begin))};
}

std::size_t line_of(std::string_view doc, TextPoint point) {
    const std::u32string text = utf8::decode(doc);
    if (point.index > text.size()) {
        throw Error(ErrorCode::IncompatiblePoint, "point " + std::to_string(point.index) + " past end");
    }
    std::size_t line = 1;
    for (std::size_t i = 0; i < point.index; ++i) line += (text[i] == U'\n');
    return line;
}

LineSpan lines_of(std::string_view doc, const TextSegment& segment) {
    const std::size_t first = line_of(doc, segment.start);
    if (segment.is_point()) return {first, first};
    return {first, line_of(doc, TextPoint{segment.end.index - 1})};
}

std::string normalize_ws(std::string_view s) { return utf8::encode(normalize(utf8::decode(s))); }

std::vector<MatchResult> find_matches(std::string_view haystack, std::string_view needle,
                                      MatchMode mode) {
    const std::u32string hay = utf8::decode(haystack);
    return match_u32(hay, 0, hay.size(), utf8::decode(needle), mode);
}

std::vector<MatchResult> find_matches_in(std::string_view doc, const TextSegment& region,
                                         std::string_view needle, MatchMode mode) {
    const std::u32string text = utf8::decode(doc);
    if (region.start > region.end || region.end.index > text.size()) {
        throw Error(ErrorCode::InvalidSegment, "search region outside document");
    }
    return match_u32(text, region.start.index, region.end.index, utf8::decode(needle), mode);
}

const MatchResult& select_occurrence(const std::vector<MatchResult>& matches, std::size_t k) {
    if (k < 1 || k > matches.size()) {
        throw Error(ErrorCode::OccurrenceOutOfRange,
                    "occurrence " + std::to_string(k) + " requested, " +
                        std::to_string(matches.size()) + " match(es) found");
    }
    return matches[k - 1];
}

}  // namespace magic_markup
