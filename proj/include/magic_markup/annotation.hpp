#pragma once

#include <compare>
#include <cstddef>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include <json.hpp>

namespace magic_markup {

/// Zero-based position in a document, counted in Unicode scalar values.
struct TextPoint {
    std::size_t index = 0;

    auto operator<=>(const TextPoint&) const = default;
};

/// Half-open span [start, end) together with a snapshot of the text it
/// covers. An empty anchor_text marks a point anchor.
struct TextSegment {
    TextPoint start;
    TextPoint end;
    std::string anchor_text;

    bool is_point() const noexcept { return start == end; }
    std::size_t length() const noexcept { return end.index - start.index; }

    bool operator==(const TextSegment&) const = default;
};

struct Annotation {
    std::string id;
    TextSegment segment;
    std::string content;
    std::optional<std::string> intent;
    nlohmann::json metadata = nlohmann::json::object();

    bool operator==(const Annotation&) const = default;
};

struct Digest {
    std::string algo;
    std::string hex;

    bool operator==(const Digest&) const = default;
};

/// A document paired with the annotations anchored in it. `source` is the
/// document path as recorded in the sidecar, relative to the sidecar file.
struct DocumentView {
    std::string source;
    std::string document;
    Digest digest;
    std::vector<Annotation> annotations;

    bool operator==(const DocumentView&) const = default;
};

enum class Outcome { Unchanged, Moved, Orphaned, Failed, Ambiguous };

std::string_view to_string(Outcome outcome) noexcept;

/// Result of mapping one annotation onto an updated document. `segment` is
/// empty exactly when the outcome is Orphaned or Failed.
struct MappedAnnotation {
    Annotation source;
    std::optional<TextSegment> segment;
    Outcome outcome = Outcome::Failed;
    std::string diagnostics;

    bool placed() const noexcept { return segment.has_value(); }

    /// The source annotation moved onto `segment`; throws ValidationError
    /// when the annotation was not placed.
    Annotation rebased() const;
};

bool compatible(TextPoint point, std::string_view doc);

/// Half-open substring in scalar values. Throws IncompatiblePoint when a
/// point lies past the end of `doc`, InvertedRange when start > end.
std::string segment_text(std::string_view doc, TextPoint start, TextPoint end);

TextSegment make_segment(std::string_view doc, TextPoint start, TextPoint end);

/// Checks that `segment` is compatible with `doc` and that its anchor text
/// is the covered substring (AnchorMismatch otherwise).
void check_segment(std::string_view doc, const TextSegment& segment);

Digest digest_document(std::string_view doc);

DocumentView make_view(std::string source, std::string document,
                       std::vector<Annotation> annotations = {});

bool is_stale(const DocumentView& view);

/// Throws ValidationError on duplicate ids, digest mismatch or any segment
/// that does not agree with the document.
void validate_view(const DocumentView& view);

}  // namespace magic_markup
