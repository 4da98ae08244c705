#include "magic_markup/annotation.hpp"

#include <set>

#include "magic_markup/error.hpp"
#include "magic_markup/hash.hpp"
#include "magic_markup/utf8.hpp"

namespace magic_markup {

std::string_view to_string(Outcome outcome) noexcept {
    switch (outcome) {
        case Outcome::Unchanged: return "Unchanged";
        case Outcome::Moved:     return "Moved";
        case Outcome::Orphaned:  return "Orphaned";
        case Outcome::Failed:    return "Failed";
        case Outcome::Ambiguous: return "Ambiguous";
    }
    return "Unknown";
}

Annotation MappedAnnotation::rebased() const {
    if (!segment) {
        throw Error(ErrorCode::ValidationError,
                    "annotation '" + source.id + "' was not placed (" +
                        std::string(to_string(outcome)) + ")");
    }
    Annotation out = source;
    out.segment = *segment;
    return out;
}

bool compatible(TextPoint point, std::string_view doc) {
    return point.index <= utf8::length(doc);
}

std::string segment_text(std::string_view doc, TextPoint start, TextPoint end) {
    const std::u32string text = utf8::decode(doc);
    if (start.index > text.size() || end.index > text.size()) {
        throw Error(ErrorCode::IncompatiblePoint,
                    "point " + std::to_string(std::max(start.index, end.index)) +
                        " exceeds document length " + std::to_string(text.size()));
    }
    if (start > end) {
        throw Error(ErrorCode::InvertedRange, "start " + std::to_string(start.index) +
                                                  " > end " + std::to_string(end.index));
    }
    return utf8::encode(std::u32string_view(text).substr(start.index, end.index - start.index));
}

TextSegment make_segment(std::string_view doc, TextPoint start, TextPoint end) {
    return TextSegment{start, end, segment_text(doc, start, end)};
}

void check_segment(std::string_view doc, const TextSegment& segment) {
    const std::string actual = segment_text(doc, segment.start, segment.end);
    if (actual != segment.anchor_text) {
        throw Error(ErrorCode::AnchorMismatch,
                    "segment [" + std::to_string(segment.start.index) + ", " +
                        std::to_string(segment.end.index) + ") covers \"" + actual +
                        "\", expected \"" + segment.anchor_text + "\"");
    }
}

Digest digest_document(std::string_view doc) { return Digest{"sha256", sha256_hex(doc)}; }

DocumentView make_view(std::string source, std::string document,
                       std::vector<Annotation> annotations) {
    DocumentView view;
    view.source = std::move(source);
    view.digest = digest_document(document);
    view.document = std::move(document);
    view.annotations = std::move(annotations);
    return view;
}

bool is_stale(const DocumentView& view) {
    if (view.digest.algo != "sha256") return true;
    return digest_document(view.document) != view.digest;
}

void validate_view(const DocumentView& view) {
    if (is_stale(view)) {
        throw Error(ErrorCode::ValidationError, "digest does not match document");
    }
    std::set<std::string> ids;
    for (const auto& annotation : view.annotations) {
        if (annotation.id.empty()) {
            throw Error(ErrorCode::ValidationError, "annotation with empty id");
        }
        if (!ids.insert(annotation.id).second) {
            throw Error(ErrorCode::ValidationError, "duplicate annotation id '" + annotation.id + "'");
        }
        try {
            check_segment(view.document, annotation.segment);
        } catch (const Error& e) {
            throw Error(ErrorCode::ValidationError, "annotation '" + annotation.id + "': " + e.what());
        }
    }
}

}  // namespace magic_markup
