#pragma once

#include <cstddef>
#include <filesystem>
#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

#include <json.hpp>

#include "magic_markup/annotation.hpp"
#include "magic_markup/model_client.hpp"
#include "magic_markup/retag.hpp"

namespace magic_markup {

enum class Language { Python, Javascript, JSX, Racket, C };

enum class SnippetType {
    Constant,
    Subexpression,
    VariableAssignment,
    LoopBody,
    LoopCondition,
    FunctionCall,
};

std::string_view to_string(Language language) noexcept;
std::string_view to_string(SnippetType type) noexcept;
/// Throws ValidationError for names outside the closed sets.
Language parse_language(std::string_view name);
SnippetType parse_snippet_type(std::string_view name);

struct GenSpec {
    Language language = Language::Python;
    SnippetType snippet_type = SnippetType::Constant;
    bool partial_update = false;
    char32_t delimiter = kDefaultDelimiter;

    bool operator==(const GenSpec&) const = default;
};

nlohmann::json to_json(const GenSpec& spec);
GenSpec gen_spec_from_json(const nlohmann::json& j);
/// A JSON array of GenSpec objects.
std::vector<GenSpec> load_gen_specs(const std::filesystem::path& path);

/// Prompt text for each generation stage, with ${NAME} placeholders. The
/// problem and updated-code prompts are fixed by the benchmark design; the
/// others are editable and may be overridden from a JSON file whose keys
/// match the member names.
struct PromptTemplates {
    std::string problem;
    std::string solution;
    std::string snippet_description;
    std::string delimit;
    std::string update_description;
    std::string partial_update;
    std::string updated_code;

    static PromptTemplates defaults();
    static PromptTemplates load(const std::filesystem::path& path);
};

/// Replaces every ${KEY} in `text` with its value. Unknown placeholders are
/// left alone.
std::string fill_template(std::string_view text,
                          const std::vector<std::pair<std::string, std::string>>& values);

struct GeneratorConfig {
    PromptTemplates templates = PromptTemplates::defaults();
    // Model per stage; empty selects the client's default model.
    std::string problem_model;
    std::string solution_model;
    std::string snippet_model;
    std::string delimit_model;
    std::string update_model;
    std::string updated_code_model;
    double temperature = 1.0;
    std::size_t max_parallel = 1;
};

enum class RejectionReason { MissingDelimiters, SegmentRemoved, DuplicateSegments, GenerationError };

std::string_view to_string(RejectionReason reason) noexcept;

struct Rejection {
    RejectionReason reason = RejectionReason::GenerationError;
    std::string note;
};

/// Thrown by generation stages whose output cannot become a case.
class CaseRejected : public std::runtime_error {
public:
    explicit CaseRejected(Rejection rejection);
    const Rejection& rejection() const noexcept { return rejection_; }

private:
    Rejection rejection_;
};

struct CaseMetadata {
    TokenUsage usage;
    /// Sum of model latencies, reproducible under replay.
    double model_latency_seconds = 0.0;
    /// The generator reported that the segment no longer exists.
    bool segment_eliminated = false;
    /// A reviewer or the generator marked the update as duplicating the segment.
    bool duplication_flagged = false;
    /// Accepted, but worth a human look (e.g. "duplicate-anchor-text").
    std::vector<std::string> review_flags;

    bool operator==(const CaseMetadata&) const = default;
};

/// Raw stage outputs before validation.
struct CaseDraft {
    std::string id;
    GenSpec spec;
    std::string problem_description;
    std::string snippet_description;
    std::string update_description;
    std::string original_marked;
    std::string updated_marked;
    CaseMetadata metadata;
};

struct BenchmarkCase {
    std::string id;
    GenSpec spec;
    std::string problem_description;
    std::string snippet_description;
    std::string update_description;
    std::string original_marked;
    std::string updated_marked;
    std::string original_clean;
    TextSegment gold_original;
    std::string updated_clean;
    TextSegment gold_updated;
    CaseMetadata metadata;

    bool operator==(const BenchmarkCase&) const = default;
};

nlohmann::json to_json(const BenchmarkCase& c);
BenchmarkCase case_from_json(const nlohmann::json& j);

/// Accepts a draft or names the single reason it is rejected:
///   MissingDelimiters  either marked text lacks exactly one delimiter pair
///   DuplicateSegments  the update delimits several equal segments, or the
///                      gold anchor occurs repeatedly and duplication is flagged
///   SegmentRemoved     the updated pair encloses nothing, or the generator
///                      reported the segment eliminated
/// Repeated anchor text without a duplication flag is accepted with the
/// review flag "duplicate-anchor-text".
std::variant<BenchmarkCase, Rejection> validate_case(const CaseDraft& draft);

/// Re-checks the invariants of an accepted case; returns one message per
/// violation.
std::vector<std::string> check_case(const BenchmarkCase& c);

struct Suite {
    std::string name;
    std::vector<BenchmarkCase> cases;

    bool operator==(const Suite&) const = default;

    nlohmann::json to_json() const;
    static Suite from_json(const nlohmann::json& j);
    static Suite load(const std::filesystem::path& path);
    void save(const std::filesystem::path& path) const;
};

// Generation stages. Each sends one prompt; model errors propagate and empty
// output raises CaseRejected(GenerationError).

std::string gen_problem(const GenSpec& spec, ModelClient& client, const GeneratorConfig& config = {});

struct GeneratedCode {
    std::string code;
    /// The spec's delimiter occurs in the code and must be re-chosen.
    bool delimiter_collision = false;
};

GeneratedCode gen_solution(std::string_view problem, const GenSpec& spec, ModelClient& client,
                           const GeneratorConfig& config = {});

std::string gen_snippet_description(std::string_view code, const GenSpec& spec, ModelClient& client,
                                    const GeneratorConfig& config = {});

/// Asks for `code` with the described snippet delimited. The reply must hold
/// exactly one delimiter pair (else MissingDelimiters) and, with them
/// removed, equal `code` exactly (else GenerationError).
std::string delimit_snippet(std::string_view code, std::string_view snippet_description,
                            const GenSpec& spec, ModelClient& client, const GeneratorConfig& config = {});

std::string gen_update_description(std::string_view code_marked, const GenSpec& spec, ModelClient& client,
                                   const GeneratorConfig& config = {});

std::string gen_updated_code(std::string_view problem, std::string_view code_marked,
                             std::string_view snippet_description, std::string_view update_description,
                             const GenSpec& spec, ModelClient& client, const GeneratorConfig& config = {});

/// The updated-code prompt, exposed for inspection and tests.
std::string updated_code_prompt(std::string_view problem, std::string_view code_marked,
                                std::string_view snippet_description, std::string_view update_description,
                                const GenSpec& spec, const GeneratorConfig& config = {});

/// Removes one surrounding markdown code fence, if present.
std::string strip_code_fence(std::string_view text);

struct GenerationLogEntry {
    std::string case_id;
    bool accepted = false;
    std::optional<Rejection> rejection;
    TokenUsage usage;
    double wall_seconds = 0.0;

    nlohmann::json to_json() const;
};

struct GenerationRun {
    Suite suite;
    std::vector<GenerationLogEntry> log;  ///< one per spec, in spec order
};

/// Runs the full pipeline for every spec (cases concurrently, stages in
/// order) and validates the drafts.
GenerationRun generate_cases(const std::vector<GenSpec>& specs, ModelClient& client,
                             const GeneratorConfig& config = {}, std::string suite_name = "generated");

/// generate_cases, then writes the suite to `suite_path` and the log as
/// JSON lines to `log_path`.
GenerationRun generate_suite(const std::vector<GenSpec>& specs, ModelClient& client,
                             const std::filesystem::path& suite_path,
                             const std::filesystem::path& log_path, const GeneratorConfig& config = {});

}  // namespace magic_markup
