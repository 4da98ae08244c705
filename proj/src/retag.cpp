#include "magic_markup/retag.hpp"

#include <algorithm>
#include <array>
#include <atomic>
#include <cmath>
#include <regex>
#include <thread>

#include "magic_markup/error.hpp"
#include "magic_markup/utf8.hpp"

namespace magic_markup {

using nlohmann::json;

namespace {

constexpr std::array<char32_t, 8> kCandidates = {
    U'\u2605',  // ★
    U'\u2726',  // ✦
    U'\u2756',  // ❖
    U'\u25C6',  // ◆
    U'\u2042',  // ⁂
    U'\u29EB',  // ⧫
    U'\u2318',  // ⌘
    U'\u00A7',  // §
};

bool contains(std::string_view doc, char32_t c) {
    return doc.find(utf8::encode(c)) != std::string_view::npos;
}

// Fixed text of the re-tagging prompt. The delimiter, documents and segment
// are spliced in by build_retag_prompt.
constexpr std::string_view kInstructions =
    "You are responsible for placing an identical annotation on this updated file. It is "
    "extremely important that you place the annotation in the correct place. Important metadata "
    "is attached to this segment.\n";

constexpr std::string_view kQuestions =
    "Describe possible sections the specific segment could be said to be located in. It is "
    "possible the segment has not changed, or that it has been refactored. Pick the most correct "
    "choice. Remember to be detailed about the start and stop of the segment. If the segment has "
    "been updated, it may need to expand or shrink. BE CAREFUL TO INCLUDE NOTHING EXTRA. Then, "
    "provide the following numbered answers as a JSON object:\n"
    "\n"
    "1) Print ONLY the text of the updated specific segment. You must print all of the text here.\n"
    "\n"
    "2) State ONLY the line number in UPDATED that (1) starts on.\n"
    "\n"
    "3) State ONLY the line number in UPDATED that (1) ends on.\n"
    "\n"
    "4) (1) may occur multiple times in the section given by [(2),(3)]. Which number occurrence, "
    "as ONLY a 1-indexed number, is (1)?\n"
    "\n"
    "The object must look like: {1: <code>, 2: <number>, 3: <number>, 4: <number>}\n"
    "\n"
    "The answer to 1 should be a code string only, without markdown formatting or extra notes.";

// Only this prompt family exists. Not implemented: full-file regeneration,
// plain-English answers, section-first focusing, self-reevaluation and
// confidence ratings.

[[noreturn]] void malformed(const std::string& what) {
    throw Error(ErrorCode::MalformedAnswer, what);
}

std::optional<std::size_t> positive_integer(const json& value) {
    if (value.is_number_unsigned()) {
        const auto v = value.get<std::uint64_t>();
        if (v > 0) return static_cast<std::size_t>(v);
        return std::nullopt;
    }
    if (value.is_number_integer()) return std::nullopt;  // negative
    if (value.is_number_float()) {
        const double v = value.get<double>();
        if (v >= 1.0 && v == std::floor(v) && v < 1e15) return static_cast<std::size_t>(v);
        return std::nullopt;
    }
    if (value.is_string()) {
        const auto s = value.get<std::string>();
        if (s.empty() || s.size() > 15 || !std::all_of(s.begin(), s.end(), ::isdigit)) return std::nullopt;
        const auto v = std::stoull(s);
        if (v > 0) return static_cast<std::size_t>(v);
    }
    return std::nullopt;
}

struct ResolveAttempt {
    std::optional<Resolution> resolution;
    ErrorCode error = ErrorCode::NoMatch;
    std::string message;
    LineSpan searched;
    bool expanded = false;
};

ResolveAttempt search_lines(std::string_view updated, const RetagAnswer& answer, LineSpan span) {
    ResolveAttempt out;
    out.searched = span;
    const TextSegment region = line_span_chars(updated, span);

    const auto exact = find_matches_in(updated, region, answer.text, MatchMode::Exact);
    if (exact.size() >= answer.occurrence) {
        out.resolution = Resolution{exact[answer.occurrence - 1].segment, MatchMode::Exact, false, span};
        return out;
    }
    std::vector<MatchResult> normalized;
    try {
        normalized = find_matches_in(updated, region, answer.text, MatchMode::Normalized);
    } catch (const Error& e) {
        if (e.code() != ErrorCode::EmptyNeedle) throw;
    }
    if (normalized.size() >= answer.occurrence) {
        out.resolution =
            Resolution{normalized[answer.occurrence - 1].segment, MatchMode::Normalized, false, span};
        return out;
    }
    const std::string lines = std::to_string(span.start_line) + ".." + std::to_string(span.end_line);
    if (!exact.empty() || !normalized.empty()) {
        out.error = ErrorCode::OccurrenceOutOfRange;
        out.message = "occurrence " + std::to_string(answer.occurrence) + " requested but lines " +
                      lines + " hold " + std::to_string(exact.size()) + " exact / " +
                      std::to_string(normalized.size()) + " normalized match(es)";
    } else {
        out.error = ErrorCode::NoMatch;
        out.message = "answer text not found in lines " + lines;
    }
    return out;
}

ResolveAttempt try_resolve(std::string_view updated, const RetagAnswer& answer, const RetagConfig& config) {
    const std::size_t lines = line_count(updated);
    if (answer.start_line > lines) {
        ResolveAttempt out;
        out.searched = {answer.start_line, answer.end_line};
        out.message = "answer lines " + std::to_string(answer.start_line) + ".." +
                      std::to_string(answer.end_line) + " outside updated file of " +
                      std::to_string(lines) + " line(s)";
        return out;
    }
    LineSpan span{answer.start_line, std::min(answer.end_line, lines)};
    ResolveAttempt first = search_lines(updated, answer, span);
    if (first.resolution || first.error != ErrorCode::NoMatch || !config.expand_retry) return first;

    const LineSpan wider{std::max<std::size_t>(1, span.start_line - 1), std::min(lines, span.end_line + 1)};
    if (wider == span) return first;
    ResolveAttempt second = search_lines(updated, answer, wider);
    second.expanded = true;
    if (second.resolution) {
        second.resolution->expanded = true;
    } else {
        second.message += " (after expanding from " + std::to_string(span.start_line) + ".." +
                          std::to_string(span.end_line) + ")";
    }
    return second;
}

RetagEntry retag_one(const DocumentView& view, const Annotation& annotation, std::string_view updated,
                     ModelClient& client, const RetagConfig& config, MappedAnnotation& mapped) {
    RetagEntry entry;
    entry.annotation_id = annotation.id;
    mapped.source = annotation;

    if (annotation.segment.is_point()) {
        entry.resolver = "baseline";
        mapped = baseline_map(annotation, view.document, updated, config.baseline);
        entry.outcome = mapped.outcome;
        entry.segment = mapped.segment;
        entry.diagnostics = mapped.diagnostics;
        if (!mapped.placed()) entry.failure = "Orphaned";
        return entry;
    }

    entry.resolver = "llm";
    auto fail = [&](std::string failure, std::string diagnostics) {
        entry.outcome = Outcome::Failed;
        entry.failure = std::move(failure);
        entry.diagnostics = std::move(diagnostics);
        mapped.outcome = Outcome::Failed;
        mapped.segment.reset();
        mapped.diagnostics = entry.failure + ": " + entry.diagnostics;
        return entry;
    };

    const ChatRequest request =
        build_retag_prompt(view.document, annotation.segment, updated, config, annotation.intent);

    std::optional<RetagAnswer> answer;
    for (std::size_t round = 0; round <= config.malformed_retries && !answer; ++round) {
        std::optional<ChatResponse> response;
        for (std::size_t attempt = 0; !response; ++attempt) {
            ++entry.attempts;
            try {
                response = client.complete(request);
            } catch (const Error& e) {
                if (e.code() == ErrorCode::TransportError && attempt < config.transport_retries) continue;
                if (e.code() == ErrorCode::JsonModeViolation) break;
                return fail(std::string(to_string(e.code())), e.what());
            }
        }
        if (!response) {
            if (round == config.malformed_retries) {
                return fail("MalformedAnswer", "model output was not JSON");
            }
            continue;
        }
        entry.latency_seconds += response->latency_seconds;
        entry.usage += response->usage;
        entry.raw_response = response->text;
        try {
            answer = parse_retag_response(response->text);
        } catch (const Error& e) {
            if (round == config.malformed_retries) return fail("MalformedAnswer", e.what());
        }
    }
    entry.answer = answer;

    const ResolveAttempt resolved = try_resolve(updated, *answer, config);
    entry.searched = resolved.searched;
    entry.expanded = resolved.expanded;
    if (!resolved.resolution) {
        return fail(std::string(to_string(resolved.error)), resolved.message);
    }
    const Resolution& r = *resolved.resolution;
    entry.mode = r.mode;
    entry.segment = r.segment;
    entry.outcome = r.segment == annotation.segment ? Outcome::Unchanged : Outcome::Moved;
    entry.diagnostics = std::string(to_string(r.mode)) + " match in lines " +
                        std::to_string(r.searched.start_line) + ".." + std::to_string(r.searched.end_line);
    if (r.expanded) entry.diagnostics += "; expanded";
    if (r.segment.anchor_text != answer->text) {
        entry.diagnostics += "; answer text differs from document text";
    }
    mapped.segment = r.segment;
    mapped.outcome = entry.outcome;
    mapped.diagnostics = entry.diagnostics;
    return entry;
}

}  // namespace

std::span<const char32_t> delimiter_candidates() { return kCandidates; }

char32_t choose_delimiter(std::span<const std::string> docs) {
    for (char32_t c : kCandidates) {
        if (std::none_of(docs.begin(), docs.end(), [c](const std::string& d) { return contains(d, c); })) {
            return c;
        }
    }
    throw Error(ErrorCode::NoDelimiterAvailable, "every candidate delimiter occurs in the documents");
}

std::size_t count_delimiters(std::string_view text, char32_t delimiter) {
    const std::string needle = utf8::encode(delimiter);
    std::size_t n = 0;
    for (auto pos = text.find(needle); pos != std::string_view::npos; pos = text.find(needle, pos + needle.size())) {
        ++n;
    }
    return n;
}

std::string insert_delimiters(std::string_view doc, const TextSegment& segment, char32_t delimiter) {
    if (contains(doc, delimiter)) {
        throw Error(ErrorCode::DelimiterCollision, "delimiter " + utf8::encode(delimiter) + " already occurs in document");
    }
    try {
        check_segment(doc, segment);
    } catch (const Error& e) {
        throw Error(ErrorCode::InvalidSegment, e.what());
    }
    const std::u32string text = utf8::decode(doc);
    std::u32string out;
    out.reserve(text.size() + 2);
    out.append(text, 0, segment.start.index);
    out.push_back(delimiter);
    out.append(text, segment.start.index, segment.length());
    out.push_back(delimiter);
    out.append(text, segment.end.index);
    return utf8::encode(out);
}

StrippedText strip_delimiters(std::string_view marked, char32_t delimiter) {
    const std::u32string text = utf8::decode(marked);
    std::vector<std::size_t> at;
    for (std::size_t i = 0; i < text.size(); ++i) {
        if (text[i] == delimiter) at.push_back(i);
    }
    if (at.size() != 2) {
        throw Error(ErrorCode::DelimiterCountError,
                    "expected 2 delimiters, found " + std::to_string(at.size()));
    }
    std::u32string clean;
    clean.reserve(text.size() - 2);
    clean.append(text, 0, at[0]);
    clean.append(text, at[0] + 1, at[1] - at[0] - 1);
    clean.append(text, at[1] + 1);
    const std::size_t start = at[0];
    const std::size_t end = at[1] - 1;
    StrippedText out;
    out.segment = TextSegment{TextPoint{start}, TextPoint{end},
                              utf8::encode(std::u32string_view(clean).substr(start, end - start))};
    out.text = utf8::encode(clean);
    return out;
}

ChatRequest build_retag_prompt(std::string_view original, const TextSegment& segment,
                               std::string_view updated, const RetagConfig& config,
                               const std::optional<std::string>& intent) {
    if (contains(updated, config.delimiter)) {
        throw Error(ErrorCode::DelimiterCollision,
                    "delimiter " + utf8::encode(config.delimiter) + " already occurs in updated document");
    }
    const std::string marked = insert_delimiters(original, segment, config.delimiter);
    const std::string delim = utf8::encode(config.delimiter);

    std::string prompt;
    prompt += "Consider the following file:\n\n<INPUT>\n";
    prompt += number_lines(marked);
    prompt += "\n</INPUT>\n\nA specific segment of code has been marked with \"" + delim +
              "\". The segment refers to ONLY THE TEXT BETWEEN THE \"" + delim + "\" marks:\n\n";
    prompt += "<SEGMENT>\n" + segment.anchor_text + "\n</SEGMENT>\n\n";
    prompt += "Next, consider the following updated file:\n\n<UPDATED>\n";
    prompt += number_lines(updated);
    prompt += "\n</UPDATED>\n\n";
    prompt += kInstructions;
    prompt += "\n";
    if (config.include_intent && intent) {
        // Not part of the evaluated prompt; opt-in via include_intent.
        prompt += "The intent of the annotation on this segment is: " + *intent + "\n\n";
    }
    prompt += kQuestions;

    ChatRequest request;
    request.user_text = std::move(prompt);
    request.json_mode = true;
    request.temperature = config.temperature;
    request.model_name = config.model_name;
    return request;
}

RetagAnswer parse_retag_response(std::string_view text) {
    json reply = json::parse(text, nullptr, false);
    if (reply.is_discarded()) {
        // Models sometimes echo the prompt's shape literally: {1: "...", 2: 3}.
        static const std::regex bare_key(R"(([\{,]\s*)(\d+)\s*:)");
        reply = json::parse(std::regex_replace(std::string(text), bare_key, "$1\"$2\":"), nullptr, false);
    }
    if (reply.is_discarded()) malformed("answer is not JSON");
    if (!reply.is_object()) malformed("answer is not a JSON object");

    auto field = [&](const char* key) -> const json* {
        auto it = reply.find(key);
        return it == reply.end() ? nullptr : &*it;
    };
    const json* segment_text = field("1");
    if (segment_text == nullptr) malformed("missing answer 1");
    if (!segment_text->is_string()) malformed("answer 1 is not a string");

    RetagAnswer answer;
    answer.text = segment_text->get<std::string>();
    if (answer.text.empty()) malformed("answer 1 is empty");
    const std::pair<const char*, std::size_t*> numbers[] = {
        {"2", &answer.start_line}, {"3", &answer.end_line}, {"4", &answer.occurrence}};
    for (const auto& [key, slot] : numbers) {
        const json* value = field(key);
        if (value == nullptr) {
            if (std::string_view(key) == "4") continue;  // occurrence defaults to 1
            malformed(std::string("missing answer ") + key);
        }
        auto number = positive_integer(*value);
        if (!number) malformed(std::string("answer ") + key + " is not a positive integer");
        *slot = *number;
    }
    if (answer.start_line > answer.end_line) {
        malformed("start line " + std::to_string(answer.start_line) + " after end line " +
                  std::to_string(answer.end_line));
    }
    return answer;
}

Resolution resolve_answer(std::string_view updated, const RetagAnswer& answer, const RetagConfig& config) {
    ResolveAttempt attempt = try_resolve(updated, answer, config);
    if (!attempt.resolution) throw Error(attempt.error, attempt.message);
    return *attempt.resolution;
}

std::size_t RetagReport::count(Outcome outcome) const {
    return static_cast<std::size_t>(std::count_if(entries.begin(), entries.end(),
                                                  [outcome](const RetagEntry& e) { return e.outcome == outcome; }));
}

json to_json(const RetagAnswer& answer) {
    return {{"1", answer.text}, {"2", answer.start_line}, {"3", answer.end_line}, {"4", answer.occurrence}};
}

json to_json(const TextSegment& segment) {
    return {{"start", segment.start.index}, {"end", segment.end.index}, {"anchor_text", segment.anchor_text}};
}

json RetagReport::to_json() const {
    json list = json::array();
    for (const auto& e : entries) {
        json j = {
            {"id", e.annotation_id},
            {"resolver", e.resolver},
            {"outcome", to_string(e.outcome)},
            {"answer", e.answer ? magic_markup::to_json(*e.answer) : json(nullptr)},
            {"segment", e.segment ? magic_markup::to_json(*e.segment) : json(nullptr)},
            {"mode", e.mode ? json(to_string(*e.mode)) : json(nullptr)},
            {"searched_lines", e.searched ? json::array({e.searched->start_line, e.searched->end_line}) : json(nullptr)},
            {"expanded", e.expanded},
            {"failure", e.failure.empty() ? json(nullptr) : json(e.failure)},
            {"diagnostics", e.diagnostics},
            {"attempts", e.attempts},
            {"latency_seconds", e.latency_seconds},
            {"usage", magic_markup::to_json(e.usage)},
        };
        list.push_back(std::move(j));
    }
    return {
        {"entries", std::move(list)},
        {"total_latency_seconds", total_latency_seconds},
        {"max_latency_seconds", max_latency_seconds},
        {"usage", magic_markup::to_json(usage)},
    };
}

RetagResult retag(const DocumentView& view, std::string_view updated, ModelClient& client,
                  const RetagConfig& config) {
    if (is_stale(view)) {
        throw Error(ErrorCode::StaleSidecar, "view digest does not match its document");
    }
    validate_view(view);
    if (contains(view.document, config.delimiter) || contains(updated, config.delimiter)) {
        throw Error(ErrorCode::DelimiterCollision,
                    "delimiter " + utf8::encode(config.delimiter) + " occurs in a document version");
    }
    utf8::decode(updated);  // reject invalid UTF-8 before any request is sent

    const std::size_t n = view.annotations.size();
    RetagResult result;
    result.mapped.resize(n);
    result.report.entries.resize(n);

    std::atomic<std::size_t> next{0};
    auto worker = [&] {
        for (std::size_t i = next++; i < n; i = next++) {
            const Annotation& annotation = view.annotations[i];
            try {
                result.report.entries[i] =
                    retag_one(view, annotation, updated, client, config, result.mapped[i]);
            } catch (const std::exception& e) {
                RetagEntry entry;
                entry.annotation_id = annotation.id;
                entry.resolver = "llm";
                entry.failure = "Error";
                entry.diagnostics = e.what();
                result.report.entries[i] = std::move(entry);
                result.mapped[i] = MappedAnnotation{annotation, std::nullopt, Outcome::Failed, e.what()};
            }
        }
    };
    const std::size_t threads = std::clamp<std::size_t>(config.max_parallel, 1, std::max<std::size_t>(n, 1));
    if (threads == 1) {
        worker();
    } else {
        std::vector<std::jthread> pool;
        pool.reserve(threads);
        for (std::size_t t = 0; t < threads; ++t) pool.emplace_back(worker);
    }

    for (const auto& e : result.report.entries) {
        result.report.usage += e.usage;
        result.report.total_latency_seconds += e.latency_seconds;
        result.report.max_latency_seconds = std::max(result.report.max_latency_seconds, e.latency_seconds);
    }
    return result;
}

}  // namespace magic_markup
