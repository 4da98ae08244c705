#include "magic_markup/baseline.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <tuple>

#include "magic_markup/error.hpp"
#include "magic_markup/text_location.hpp"
#include "magic_markup/utf8.hpp"

namespace magic_markup {

void BaselineConfig::validate() const {
    if (!(similarity_threshold >= 0.0 && similarity_threshold <= 1.0)) {
        throw Error(ErrorCode::ValidationError, "similarity_threshold must be in [0, 1]");
    }
    if (text_weight < 0.0 || context_weight < 0.0 ||
        std::abs(text_weight + context_weight - 1.0) > 1e-9) {
        throw Error(ErrorCode::ValidationError, "weights must be non-negative and sum to 1");
    }
}

std::size_t edit_distance(std::u32string_view a, std::u32string_view b) {
    if (a.size() < b.size()) std::swap(a, b);
    std::vector<std::size_t> row(b.size() + 1);
    std::iota(row.begin(), row.end(), std::size_t{0});
    for (std::size_t i = 0; i < a.size(); ++i) {
        std::size_t diagonal = row[0];
        row[0] = i + 1;
        for (std::size_t j = 0; j < b.size(); ++j) {
            const std::size_t above = row[j + 1];
            row[j + 1] = std::min({above + 1, row[j] + 1, diagonal + (a[i] == b[j] ? 0 : 1)});
            diagonal = above;
        }
    }
    return row[b.size()];
}

std::size_t edit_distance(std::string_view a, std::string_view b) {
    return edit_distance(utf8::decode(a), utf8::decode(b));
}

double similarity(std::u32string_view a, std::u32string_view b) {
    const std::size_t longest = std::max(a.size(), b.size());
    if (longest == 0) return 1.0;
    return 1.0 - static_cast<double>(edit_distance(a, b)) / static_cast<double>(longest);
}

namespace {

Outcome placed_outcome(const TextSegment& original, const TextSegment& found) {
    return original == found ? Outcome::Unchanged : Outcome::Moved;
}

std::optional<TextSegment> unique_match(std::string_view updated, std::string_view needle, MatchMode mode) {
    try {
        auto matches = find_matches(updated, needle, mode);
        if (matches.size() == 1) return matches.front().segment;
    } catch (const Error& e) {
        if (e.code() != ErrorCode::EmptyNeedle) throw;
    }
    return std::nullopt;
}

struct Candidate {
    double score;
    std::size_t distance;
    std::size_t start;
    std::size_t length;
};

// Higher score first, then nearest to the original start, leftmost, shortest.
bool better(const Candidate& a, const Candidate& b) {
    if (a.score != b.score) return a.score > b.score;
    return std::tie(a.distance, a.start, a.length) < std::tie(b.distance, b.start, b.length);
}

}  // namespace

BaselineResult baseline_retag(std::string_view original, const TextSegment& segment,
                              std::string_view updated, const BaselineConfig& config) {
    config.validate();
    check_segment(original, segment);

    BaselineResult result;
    if (!segment.is_point()) {
        if (auto found = unique_match(updated, segment.anchor_text, MatchMode::Exact)) {
            result.stage = BaselineStage::ExactUnique;
            result.score = 1.0;
            result.outcome = placed_outcome(segment, *found);
            result.segment = std::move(found);
            result.diagnostics = "unique exact match";
            return result;
        }
        if (auto found = unique_match(updated, segment.anchor_text, MatchMode::Normalized)) {
            result.stage = BaselineStage::NormalizedUnique;
            result.score = 1.0;
            result.outcome = placed_outcome(segment, *found);
            result.segment = std::move(found);
            result.diagnostics = "unique whitespace-normalized match";
            return result;
        }
    }

    result.stage = BaselineStage::Similarity;
    const std::u32string old_text = utf8::decode(original);
    const std::u32string new_text = utf8::decode(updated);
    const std::u32string_view old_view(old_text);
    const std::u32string_view new_view(new_text);
    const std::size_t w = config.context_window;
    const std::size_t s = segment.start.index;
    const std::size_t e = segment.end.index;
    const std::u32string anchor(old_view.substr(s, e - s));
    const std::u32string_view left_ctx = old_view.substr(s - std::min(s, w), std::min(s, w));
    const std::u32string_view right_ctx = old_view.substr(e, std::min(w, old_text.size() - e));

    const std::size_t n = new_text.size();
    // Context similarity depends only on where a candidate starts (left) or
    // ends (right), so both are tabulated once.
    std::vector<double> left_sim(n + 1), right_sim(n + 1);
    for (std::size_t i = 0; i <= n; ++i) {
        left_sim[i] = similarity(left_ctx, new_view.substr(i - std::min(i, w), std::min(i, w)));
        right_sim[i] = similarity(right_ctx, new_view.substr(i, std::min(w, n - i)));
    }

    const std::size_t len = anchor.size();
    const std::size_t min_len = len - len / 2;
    const std::size_t max_len = len + len / 2;
    std::optional<Candidate> best;
    for (std::size_t start = 0; start <= n; ++start) {
        for (std::size_t l = min_len; l <= max_len && start + l <= n; ++l) {
            const double text_sim = similarity(anchor, new_view.substr(start, l));
            const double ctx_sim = (left_sim[start] + right_sim[start + l]) / 2.0;
            Candidate c{config.text_weight * text_sim + config.context_weight * ctx_sim,
                        start > s ? start - s : s - start, start, l};
            if (!best || better(c, *best)) best = c;
        }
    }

    if (!best) {
        result.outcome = Outcome::Orphaned;
        result.diagnostics = "no candidate span fits in the updated document";
        return result;
    }
    result.score = best->score;
    TextSegment found{TextPoint{best->start}, TextPoint{best->start + best->length},
                      utf8::encode(new_view.substr(best->start, best->length))};
    if (best->score < config.similarity_threshold) {
        result.outcome = Outcome::Orphaned;
        result.diagnostics = "best candidate [" + std::to_string(found.start.index) + ", " +
                             std::to_string(found.end.index) + ") \"" + found.anchor_text +
                             "\" scored " + std::to_string(best->score) + " below threshold " +
                             std::to_string(config.similarity_threshold);
        return result;
    }
    result.outcome = placed_outcome(segment, found);
    result.diagnostics = "similarity match scoring " + std::to_string(best->score);
    result.segment = std::move(found);
    return result;
}

MappedAnnotation baseline_map(const Annotation& annotation, std::string_view original,
                              std::string_view updated, const BaselineConfig& config) {
    BaselineResult r = baseline_retag(original, annotation.segment, updated, config);
    return MappedAnnotation{annotation, std::move(r.segment), r.outcome, std::move(r.diagnostics)};
}

}  // namespace magic_markup
