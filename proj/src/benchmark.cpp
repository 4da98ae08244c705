#include "magic_markup/benchmark.hpp"

#include <algorithm>
#include <atomic>
#include <chrono>
#include <sstream>
#include <thread>

#include "magic_markup/error.hpp"
#include "magic_markup/sidecar.hpp"
#include "magic_markup/text_location.hpp"
#include "magic_markup/utf8.hpp"

namespace magic_markup {

using nlohmann::json;

namespace {

constexpr std::pair<Language, std::string_view> kLanguages[] = {
    {Language::Python, "Python"}, {Language::Javascript, "Javascript"}, {Language::JSX, "JSX"},
    {Language::Racket, "Racket"}, {Language::C, "C"},
};

constexpr std::pair<SnippetType, std::string_view> kSnippetTypes[] = {
    {SnippetType::Constant, "constant"},
    {SnippetType::Subexpression, "subexpression"},
    {SnippetType::VariableAssignment, "variable assignment"},
    {SnippetType::LoopBody, "loop body or code block"},
    {SnippetType::LoopCondition, "loop condition"},
    {SnippetType::FunctionCall, "function call"},
};

[[noreturn]] void reject(RejectionReason reason, std::string note) {
    throw CaseRejected(Rejection{reason, std::move(note)});
}

/// Counts usage and latency of the requests made through it, so concurrent
/// cases can be metered separately.
class MeteredClient : public ModelClient {
public:
    explicit MeteredClient(ModelClient& inner) : inner_(inner) {}
    double latency() const { return latency_; }

protected:
    ChatResponse do_complete(const ChatRequest& request) override {
        ChatResponse r = inner_.complete(request);
        latency_ += r.latency_seconds;
        return r;
    }

private:
    ModelClient& inner_;
    double latency_ = 0.0;
};

std::string ask(ModelClient& client, std::string prompt, const std::string& model, double temperature) {
    ChatRequest request;
    request.user_text = std::move(prompt);
    request.model_name = model;
    request.temperature = temperature;
    std::string text = client.complete(request).text;
    if (std::all_of(text.begin(), text.end(), [](char c) { return utf8::is_space(static_cast<unsigned char>(c)); })) {
        reject(RejectionReason::GenerationError, "model returned empty output");
    }
    return text;
}

std::vector<std::pair<std::string, std::string>> spec_values(const GenSpec& spec) {
    return {{"LANGUAGE", std::string(to_string(spec.language))},
            {"SNIPPET_TYPE", std::string(to_string(spec.snippet_type))},
            {"delimiter", utf8::encode(spec.delimiter)}};
}

json segment_json(const TextSegment& s) {
    return {{"start", s.start.index}, {"end", s.end.index}, {"anchor_text", s.anchor_text}};
}

TextSegment segment_from(const json& j) {
    return TextSegment{TextPoint{j.at("start").get<std::size_t>()}, TextPoint{j.at("end").get<std::size_t>()},
                       j.at("anchor_text").get<std::string>()};
}

// Pairs of consecutive delimiters enclose equal normalized text.
bool pairs_are_duplicates(std::string_view marked, char32_t delimiter) {
    const std::u32string text = utf8::decode(marked);
    std::vector<std::size_t> at;
    for (std::size_t i = 0; i < text.size(); ++i) {
        if (text[i] == delimiter) at.push_back(i);
    }
    if (at.size() < 4 || at.size() % 2 != 0) return false;
    std::optional<std::string> first;
    for (std::size_t p = 0; p < at.size(); p += 2) {
        const std::string inner =
            normalize_ws(utf8::encode(std::u32string_view(text).substr(at[p] + 1, at[p + 1] - at[p] - 1)));
        if (inner.empty()) return false;
        if (!first) {
            first = inner;
        } else if (*first != inner) {
            return false;
        }
    }
    return true;
}

}  // namespace

std::string_view to_string(Language language) noexcept {
    for (const auto& [value, name] : kLanguages) {
        if (value == language) return name;
    }
    return "unknown";
}

std::string_view to_string(SnippetType type) noexcept {
    for (const auto& [value, name] : kSnippetTypes) {
        if (value == type) return name;
    }
    return "unknown";
}

Language parse_language(std::string_view name) {
    for (const auto& [value, n] : kLanguages) {
        if (n == name) return value;
    }
    throw Error(ErrorCode::ValidationError, "unknown language '" + std::string(name) + "'");
}

SnippetType parse_snippet_type(std::string_view name) {
    for (const auto& [value, n] : kSnippetTypes) {
        if (n == name) return value;
    }
    throw Error(ErrorCode::ValidationError, "unknown snippet type '" + std::string(name) + "'");
}

std::string_view to_string(RejectionReason reason) noexcept {
    switch (reason) {
        case RejectionReason::MissingDelimiters: return "MissingDelimiters";
        case RejectionReason::SegmentRemoved:    return "SegmentRemoved";
        case RejectionReason::DuplicateSegments: return "DuplicateSegments";
        case RejectionReason::GenerationError:   return "GenerationError";
    }
    return "Unknown";
}

CaseRejected::CaseRejected(Rejection rejection)
    : std::runtime_error(std::string(to_string(rejection.reason)) + ": " + rejection.note),
      rejection_(std::move(rejection)) {}

json to_json(const GenSpec& spec) {
    return {{"language", to_string(spec.language)},
            {"snippet_type", to_string(spec.snippet_type)},
            {"partial_update", spec.partial_update},
            {"delimiter", utf8::encode(spec.delimiter)}};
}

GenSpec gen_spec_from_json(const json& j) {
    try {
        GenSpec spec;
        spec.language = parse_language(j.at("language").get<std::string>());
        spec.snippet_type = parse_snippet_type(j.at("snippet_type").get<std::string>());
        spec.partial_update = j.value("partial_update", false);
        if (j.contains("delimiter")) {
            const std::u32string d = utf8::decode(j.at("delimiter").get<std::string>());
            if (d.size() != 1) throw Error(ErrorCode::SchemaError, "delimiter must be one character");
            spec.delimiter = d.front();
        }
        return spec;
    } catch (const json::exception& e) {
        throw Error(ErrorCode::SchemaError, std::string("gen spec: ") + e.what());
    } catch (const Error& e) {
        if (e.code() == ErrorCode::SchemaError) throw;
        throw Error(ErrorCode::SchemaError, e.what());
    }
}

std::vector<GenSpec> load_gen_specs(const std::filesystem::path& path) {
    json j;
    try {
        j = json::parse(read_file(path));
    } catch (const json::parse_error& e) {
        throw Error(ErrorCode::SchemaError, path.string() + ": " + e.what());
    }
    if (!j.is_array()) throw Error(ErrorCode::SchemaError, path.string() + ": expected an array of specs");
    std::vector<GenSpec> specs;
    for (const auto& item : j) specs.push_back(gen_spec_from_json(item));
    return specs;
}

// ---------------------------------------------------------------------------

PromptTemplates PromptTemplates::defaults() {
    PromptTemplates t;
    t.problem =
        "Briefly describe an intermediate-level ${LANGUAGE} programming problem including at least one "
        "${SNIPPET_TYPE} that can be solved in a single file. Use a creative, real-world framing. Describe "
        "steps to solve this problem. Do not provide code yet.";
    t.solution =
        "Write a complete ${LANGUAGE} program in a single file that solves the following problem.\n\n"
        "<problemDescription>\n${problemDescription}\n</problemDescription>\n\n"
        "Your response should be purely code without any external discussion or markdown formatting.";
    t.snippet_description =
        "Consider the following ${LANGUAGE} program:\n\n<program>\n${program}\n</program>\n\n"
        "Describe one ${SNIPPET_TYPE} in this program. Name it precisely enough that another programmer "
        "could point to the exact text of the ${SNIPPET_TYPE} in the code. Do not provide code.";
    t.delimit =
        "Consider the following program:\n\n<program>\n${program}\n</program>\n\n"
        "The following snippet is described:\n\n<snippetDescription>\n(${SNIPPET_TYPE})\n"
        "${snippetDescription}\n</snippetDescription>\n\n"
        "Rewrite the code with the described snippet delimited by a \"${delimiter}\" immediately before "
        "it and a \"${delimiter}\" immediately after it. Do not change anything else in the code. Your "
        "response should be purely code without any external discussion or markdown formatting.";
    t.update_description =
        "Consider the following ${LANGUAGE} program. A snippet has been marked with a \"${delimiter}\" on "
        "both sides.\n\n<program>\n${program}\n</program>\n\n"
        "Describe an interesting change or refactoring of this code that a real-world programmer might "
        "apply. Do not provide code.";
    t.partial_update = "Describe a state where this code change has only been partially applied.";
    t.updated_code =
        "Consider the following problem:\n\n"
        "<problemDescription>\n${problemDescription}\n</problemDescription>\n\n"
        "Now consider this code that tries to solve the problem:\n\n"
        "<program>\n${codeWithSnippetDelimited}\n</program>\n\n"
        "Note that a snippet from the code has been marked with a \"${delimiter}\" on both sides. This "
        "snippet is described as follows:\n\n"
        "<snippetDescription>\n(${snippetType})\n${snippetDescription}\n</snippetDescription>\n\n"
        "Now consider the following description of an update to the program:\n\n"
        "<updateDescription>\n${updateDescription}\n<updateDescription>\n\n"
        "Apply this update to the code as described. Your response should be purely code without any "
        "external discussion, and should fully copy any relevant sections of the original program. In "
        "order to obtain credit, you MUST maintain the \"${delimiter}\" marks on the snippet or its updated "
        "version. The contents of the snippet should be functionally identical in the new version of the "
        "code.\n\n"
        "Again, the updated version of the code MUST have a SINGLE pair of \"${delimiter}\" marks referring "
        "to the same snippet in its new position or form.";
    return t;
}

PromptTemplates PromptTemplates::load(const std::filesystem::path& path) {
    PromptTemplates t = defaults();
    json j;
    try {
        j = json::parse(read_file(path));
    } catch (const json::parse_error& e) {
        throw Error(ErrorCode::SchemaError, path.string() + ": " + e.what());
    }
    if (!j.is_object()) throw Error(ErrorCode::SchemaError, path.string() + ": expected an object");
    const std::pair<const char*, std::string*> fields[] = {
        {"problem", &t.problem},
        {"solution", &t.solution},
        {"snippet_description", &t.snippet_description},
        {"delimit", &t.delimit},
        {"update_description", &t.update_description},
        {"partial_update", &t.partial_update},
        {"updated_code", &t.updated_code},
    };
    for (auto it = j.begin(); it != j.end(); ++it) {
        auto field = std::find_if(std::begin(fields), std::end(fields),
                                  [&](const auto& f) { return it.key() == f.first; });
        if (field == std::end(fields)) {
            throw Error(ErrorCode::SchemaError, "unknown template '" + it.key() + "'");
        }
        if (!it->is_string()) throw Error(ErrorCode::SchemaError, "template '" + it.key() + "' is not a string");
        *field->second = it->get<std::string>();
    }
    return t;
}

std::string fill_template(std::string_view text, const std::vector<std::pair<std::string, std::string>>& values) {
    std::string out;
    out.reserve(text.size());
    std::size_t i = 0;
    while (i < text.size()) {
        if (text.compare(i, 2, "${") == 0) {
            const auto close = text.find('}', i + 2);
            if (close != std::string_view::npos) {
                const std::string_view key = text.substr(i + 2, close - i - 2);
                auto it = std::find_if(values.begin(), values.end(), [&](const auto& kv) { return kv.first == key; });
                if (it != values.end()) {
                    out += it->second;
                    i = close + 1;
                    continue;
                }
            }
        }
        out.push_back(text[i++]);
    }
    return out;
}

std::string strip_code_fence(std::string_view text) {
    std::string_view t = text;
    while (!t.empty() && utf8::is_space(static_cast<unsigned char>(t.front()))) t.remove_prefix(1);
    while (!t.empty() && utf8::is_space(static_cast<unsigned char>(t.back()))) t.remove_suffix(1);
    if (t.size() < 6 || t.substr(0, 3) != "```" || t.substr(t.size() - 3) != "```") return std::string(text);
    const auto first_newline = t.find('\n');
    if (first_newline == std::string_view::npos) return std::string(text);
    std::string_view body = t.substr(first_newline + 1, t.size() - 3 - (first_newline + 1));
    if (!body.empty() && body.back() == '\n') body.remove_suffix(1);
    return std::string(body);
}

// ---------------------------------------------------------------------------

std::string gen_problem(const GenSpec& spec, ModelClient& client, const GeneratorConfig& config) {
    return ask(client, fill_template(config.templates.problem, spec_values(spec)), config.problem_model,
               config.temperature);
}

GeneratedCode gen_solution(std::string_view problem, const GenSpec& spec, ModelClient& client,
                           const GeneratorConfig& config) {
    auto values = spec_values(spec);
    values.emplace_back("problemDescription", std::string(problem));
    GeneratedCode out;
    out.code = strip_code_fence(
        ask(client, fill_template(config.templates.solution, values), config.solution_model, config.temperature));
    out.delimiter_collision = count_delimiters(out.code, spec.delimiter) > 0;
    return out;
}

std::string gen_snippet_description(std::string_view code, const GenSpec& spec, ModelClient& client,
                                    const GeneratorConfig& config) {
    auto values = spec_values(spec);
    values.emplace_back("program", std::string(code));
    return ask(client, fill_template(config.templates.snippet_description, values), config.snippet_model,
               config.temperature);
}

std::string delimit_snippet(std::string_view code, std::string_view snippet_description, const GenSpec& spec,
                            ModelClient& client, const GeneratorConfig& config) {
    if (count_delimiters(code, spec.delimiter) != 0) {
        throw Error(ErrorCode::DelimiterCollision, "code already contains the delimiter");
    }
    auto values = spec_values(spec);
    values.emplace_back("program", std::string(code));
    values.emplace_back("snippetDescription", std::string(snippet_description));
    const std::string marked = strip_code_fence(
        ask(client, fill_template(config.templates.delimit, values), config.delimit_model, config.temperature));
    StrippedText stripped;
    try {
        stripped = strip_delimiters(marked, spec.delimiter);
    } catch (const Error& e) {
        reject(RejectionReason::MissingDelimiters, std::string("delimited original: ") + e.what());
    }
    if (stripped.text != code) {
        reject(RejectionReason::GenerationError, "delimiting changed code outside the delimiters");
    }
    if (stripped.segment.is_point()) {
        reject(RejectionReason::GenerationError, "delimiters enclose an empty snippet");
    }
    return marked;
}

std::string gen_update_description(std::string_view code_marked, const GenSpec& spec, ModelClient& client,
                                   const GeneratorConfig& config) {
    auto values = spec_values(spec);
    values.emplace_back("program", std::string(code_marked));
    std::string prompt = fill_template(config.templates.update_description, values);
    if (spec.partial_update) prompt += " " + config.templates.partial_update;
    return ask(client, std::move(prompt), config.update_model, config.temperature);
}

std::string updated_code_prompt(std::string_view problem, std::string_view code_marked,
                                std::string_view snippet_description, std::string_view update_description,
                                const GenSpec& spec, const GeneratorConfig& config) {
    auto values = spec_values(spec);
    values.emplace_back("problemDescription", std::string(problem));
    values.emplace_back("codeWithSnippetDelimited", std::string(code_marked));
    values.emplace_back("snippetType", std::string(to_string(spec.snippet_type)));
    values.emplace_back("snippetDescription", std::string(snippet_description));
    values.emplace_back("updateDescription", std::string(update_description));
    return fill_template(config.templates.updated_code, values);
}

std::string gen_updated_code(std::string_view problem, std::string_view code_marked,
                             std::string_view snippet_description, std::string_view update_description,
                             const GenSpec& spec, ModelClient& client, const GeneratorConfig& config) {
    return strip_code_fence(ask(client,
                                updated_code_prompt(problem, code_marked, snippet_description,
                                                    update_description, spec, config),
                                config.updated_code_model, config.temperature));
}

// ---------------------------------------------------------------------------

std::variant<BenchmarkCase, Rejection> validate_case(const CaseDraft& draft) {
    const char32_t d = draft.spec.delimiter;
    const std::size_t original_count = count_delimiters(draft.original_marked, d);
    if (original_count != 2) {
        return Rejection{RejectionReason::MissingDelimiters,
                         "original has " + std::to_string(original_count) + " delimiter(s)"};
    }
    const std::size_t updated_count = count_delimiters(draft.updated_marked, d);
    if (updated_count != 2) {
        if (pairs_are_duplicates(draft.updated_marked, d)) {
            return Rejection{RejectionReason::DuplicateSegments,
                             "update delimits " + std::to_string(updated_count / 2) + " equal segments"};
        }
        return Rejection{RejectionReason::MissingDelimiters,
                         "update has " + std::to_string(updated_count) + " delimiter(s)"};
    }

    const StrippedText original = strip_delimiters(draft.original_marked, d);
    const StrippedText updated = strip_delimiters(draft.updated_marked, d);
    if (normalize_ws(original.segment.anchor_text).empty()) {
        return Rejection{RejectionReason::GenerationError, "original delimiters enclose no code"};
    }
    if (draft.metadata.segment_eliminated) {
        return Rejection{RejectionReason::SegmentRemoved, "generator reported the segment eliminated"};
    }
    if (normalize_ws(updated.segment.anchor_text).empty()) {
        return Rejection{RejectionReason::SegmentRemoved, "updated delimiters enclose no code"};
    }

    BenchmarkCase c;
    c.id = draft.id;
    c.spec = draft.spec;
    c.problem_description = draft.problem_description;
    c.snippet_description = draft.snippet_description;
    c.update_description = draft.update_description;
    c.original_marked = draft.original_marked;
    c.updated_marked = draft.updated_marked;
    c.original_clean = original.text;
    c.gold_original = original.segment;
    c.updated_clean = updated.text;
    c.gold_updated = updated.segment;
    c.metadata = draft.metadata;

    const std::size_t copies =
        find_matches(c.updated_clean, c.gold_updated.anchor_text, MatchMode::Normalized).size();
    if (copies >= 2) {
        if (draft.metadata.duplication_flagged) {
            return Rejection{RejectionReason::DuplicateSegments,
                             "anchor text occurs " + std::to_string(copies) + " times and duplication is flagged"};
        }
        if (std::find(c.metadata.review_flags.begin(), c.metadata.review_flags.end(), "duplicate-anchor-text") ==
            c.metadata.review_flags.end()) {
            c.metadata.review_flags.push_back("duplicate-anchor-text");
        }
    }
    return c;
}

std::vector<std::string> check_case(const BenchmarkCase& c) {
    std::vector<std::string> problems;
    const char32_t d = c.spec.delimiter;
    auto check_side = [&](const char* side, const std::string& marked, const std::string& clean,
                          const TextSegment& gold) {
        try {
            const StrippedText s = strip_delimiters(marked, d);
            if (s.text != clean) problems.push_back(std::string(side) + ": clean text differs from stripped marked text");
            if (s.segment != gold) problems.push_back(std::string(side) + ": gold segment differs from delimited segment");
            if (gold.anchor_text.empty()) problems.push_back(std::string(side) + ": gold segment is empty");
            check_segment(clean, gold);
        } catch (const Error& e) {
            problems.push_back(std::string(side) + ": " + e.what());
        }
    };
    check_side("original", c.original_marked, c.original_clean, c.gold_original);
    check_side("updated", c.updated_marked, c.updated_clean, c.gold_updated);
    if (count_delimiters(c.original_clean, d) != 0 || count_delimiters(c.updated_clean, d) != 0) {
        problems.push_back("clean text contains the delimiter");
    }
    return problems;
}

// ---------------------------------------------------------------------------

json to_json(const BenchmarkCase& c) {
    return {
        {"id", c.id},
        {"spec", to_json(c.spec)},
        {"problem_description", c.problem_description},
        {"snippet_description", c.snippet_description},
        {"update_description", c.update_description},
        {"original_marked", c.original_marked},
        {"updated_marked", c.updated_marked},
        {"original_clean", c.original_clean},
        {"gold_original", segment_json(c.gold_original)},
        {"updated_clean", c.updated_clean},
        {"gold_updated", segment_json(c.gold_updated)},
        {"metadata",
         {
             {"usage", to_json(c.metadata.usage)},
             {"model_latency_seconds", c.metadata.model_latency_seconds},
             {"segment_eliminated", c.metadata.segment_eliminated},
             {"duplication_flagged", c.metadata.duplication_flagged},
             {"review_flags", c.metadata.review_flags},
         }},
    };
}

BenchmarkCase case_from_json(const json& j) {
    try {
        BenchmarkCase c;
        c.id = j.at("id").get<std::string>();
        c.spec = gen_spec_from_json(j.at("spec"));
        c.problem_description = j.value("problem_description", "");
        c.snippet_description = j.value("snippet_description", "");
        c.update_description = j.value("update_description", "");
        c.original_marked = j.at("original_marked").get<std::string>();
        c.updated_marked = j.at("updated_marked").get<std::string>();
        c.original_clean = j.at("original_clean").get<std::string>();
        c.gold_original = segment_from(j.at("gold_original"));
        c.updated_clean = j.at("updated_clean").get<std::string>();
        c.gold_updated = segment_from(j.at("gold_updated"));
        if (j.contains("metadata")) {
            const json& m = j.at("metadata");
            if (m.contains("usage")) c.metadata.usage = usage_from_json(m.at("usage"));
            c.metadata.model_latency_seconds = m.value("model_latency_seconds", 0.0);
            c.metadata.segment_eliminated = m.value("segment_eliminated", false);
            c.metadata.duplication_flagged = m.value("duplication_flagged", false);
            c.metadata.review_flags = m.value("review_flags", std::vector<std::string>{});
        }
        return c;
    } catch (const json::exception& e) {
        throw Error(ErrorCode::SchemaError, std::string("case: ") + e.what());
    }
}

json Suite::to_json() const {
    json list = json::array();
    for (const auto& c : cases) list.push_back(magic_markup::to_json(c));
    return {{"version", 1}, {"name", name}, {"cases", std::move(list)}};
}

Suite Suite::from_json(const json& j) {
    try {
        if (j.at("version").get<int>() != 1) throw Error(ErrorCode::SchemaError, "unsupported suite version");
        Suite s;
        s.name = j.value("name", "");
        for (const auto& c : j.at("cases")) s.cases.push_back(case_from_json(c));
        return s;
    } catch (const json::exception& e) {
        throw Error(ErrorCode::SchemaError, std::string("suite: ") + e.what());
    }
}

Suite Suite::load(const std::filesystem::path& path) {
    try {
        return from_json(json::parse(read_file(path)));
    } catch (const json::parse_error& e) {
        throw Error(ErrorCode::SchemaError, path.string() + ": " + e.what());
    }
}

void Suite::save(const std::filesystem::path& path) const {
    write_file_atomic(path, to_json().dump(2) + "\n");
}

json GenerationLogEntry::to_json() const {
    return {
        {"case", case_id},
        {"status", accepted ? "accepted" : "rejected"},
        {"reason", rejection ? json(to_string(rejection->reason)) : json(nullptr)},
        {"note", rejection ? json(rejection->note) : json(nullptr)},
        {"usage", magic_markup::to_json(usage)},
        {"wall_seconds", wall_seconds},
    };
}

GenerationRun generate_cases(const std::vector<GenSpec>& specs, ModelClient& client,
                             const GeneratorConfig& config, std::string suite_name) {
    const std::size_t n = specs.size();
    std::vector<std::optional<BenchmarkCase>> accepted(n);
    std::vector<GenerationLogEntry> log(n);

    auto run_one = [&](std::size_t i) {
        std::ostringstream id;
        id << "case-" << std::string(i + 1 < 10 ? "00" : i + 1 < 100 ? "0" : "") << (i + 1);
        GenerationLogEntry& entry = log[i];
        entry.case_id = id.str();
        MeteredClient metered(client);
        const auto started = std::chrono::steady_clock::now();

        CaseDraft draft;
        draft.id = entry.case_id;
        draft.spec = specs[i];
        try {
            draft.problem_description = gen_problem(draft.spec, metered, config);
            GeneratedCode code = gen_solution(draft.problem_description, draft.spec, metered, config);
            if (code.delimiter_collision) {
                draft.spec.delimiter = choose_delimiter(std::vector<std::string>{code.code});
            }
            draft.snippet_description = gen_snippet_description(code.code, draft.spec, metered, config);
            draft.original_marked = delimit_snippet(code.code, draft.snippet_description, draft.spec, metered, config);
            draft.update_description = gen_update_description(draft.original_marked, draft.spec, metered, config);
            draft.updated_marked = gen_updated_code(draft.problem_description, draft.original_marked,
                                                    draft.snippet_description, draft.update_description,
                                                    draft.spec, metered, config);
            draft.metadata.usage = metered.total_usage();
            draft.metadata.model_latency_seconds = metered.latency();
            auto verdict = validate_case(draft);
            if (auto* c = std::get_if<BenchmarkCase>(&verdict)) {
                accepted[i] = std::move(*c);
                entry.accepted = true;
            } else {
                entry.rejection = std::get<Rejection>(verdict);
            }
        } catch (const CaseRejected& e) {
            entry.rejection = e.rejection();
        } catch (const std::exception& e) {
            entry.rejection = Rejection{RejectionReason::GenerationError, e.what()};
        }
        entry.usage = metered.total_usage();
        entry.wall_seconds =
            std::chrono::duration<double>(std::chrono::steady_clock::now() - started).count();
    };

    std::atomic<std::size_t> next{0};
    auto worker = [&] {
        for (std::size_t i = next++; i < n; i = next++) run_one(i);
    };
    const std::size_t threads = std::clamp<std::size_t>(config.max_parallel, 1, std::max<std::size_t>(n, 1));
    if (threads == 1) {
        worker();
    } else {
        std::vector<std::jthread> pool;
        for (std::size_t t = 0; t < threads; ++t) pool.emplace_back(worker);
    }

    GenerationRun run;
    run.suite.name = std::move(suite_name);
    for (auto& c : accepted) {
        if (c) run.suite.cases.push_back(std::move(*c));
    }
    run.log = std::move(log);
    return run;
}

GenerationRun generate_suite(const std::vector<GenSpec>& specs, ModelClient& client,
                             const std::filesystem::path& suite_path, const std::filesystem::path& log_path,
                             const GeneratorConfig& config) {
    GenerationRun run = generate_cases(specs, client, config, suite_path.stem().string());
    run.suite.save(suite_path);
    std::string lines;
    for (const auto& entry : run.log) lines += entry.to_json().dump() + "\n";
    write_file_atomic(log_path, lines);
    return run;
}

}  // namespace magic_markup
