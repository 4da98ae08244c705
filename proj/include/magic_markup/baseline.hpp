#pragma once

#include <cstddef>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "magic_markup/annotation.hpp"

namespace magic_markup {

/// Parameters of the string-similarity + context resolver. The defaults are
/// implementation choices, not tuned values.
struct BaselineConfig {
    std::size_t context_window = 32;
    double similarity_threshold = 0.75;
    double text_weight = 0.6;
    double context_weight = 0.4;

    /// Throws ValidationError unless threshold lies in [0,1] and the weights
    /// are non-negative and sum to 1 (within 1e-9).
    void validate() const;
};

enum class BaselineStage { ExactUnique = 1, NormalizedUnique = 2, Similarity = 3 };

struct BaselineResult {
    Outcome outcome = Outcome::Orphaned;
    std::optional<TextSegment> segment;
    BaselineStage stage = BaselineStage::ExactUnique;
    double score = 0.0;  ///< similarity score; 1 for stages 1 and 2
    std::string diagnostics;
};

/// Unit-cost Levenshtein distance over Unicode scalar values.
std::size_t edit_distance(std::string_view a, std::string_view b);
std::size_t edit_distance(std::u32string_view a, std::u32string_view b);

/// 1 - edit_distance / max_len; two empty strings are identical.
double similarity(std::u32string_view a, std::u32string_view b);

/// Relocates `segment` of `original` into `updated` without a model:
///   1. a unique exact occurrence of the anchor text,
///   2. else a unique whitespace-normalized occurrence,
///   3. else the best-scoring span whose length is within 50% of the
///      anchor's, scored on anchor and surrounding-context similarity.
/// Stage 3 ties go to the candidate closest to the original start, then the
/// leftmost, then the shortest. A best score below the threshold orphans.
BaselineResult baseline_retag(std::string_view original, const TextSegment& segment,
                              std::string_view updated, const BaselineConfig& config = {});

MappedAnnotation baseline_map(const Annotation& annotation, std::string_view original,
                              std::string_view updated, const BaselineConfig& config = {});

}  // namespace magic_markup
