#include "magic_markup/cli.hpp"

#include <filesystem>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "magic_markup/annotation.hpp"
#include "magic_markup/baseline.hpp"
#include "magic_markup/benchmark.hpp"
#include "magic_markup/error.hpp"
#include "magic_markup/eval.hpp"
#include "magic_markup/model_client.hpp"
#include "magic_markup/retag.hpp"
#include "magic_markup/sidecar.hpp"
#include "magic_markup/text_location.hpp"
#include "magic_markup/utf8.hpp"

namespace magic_markup {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

constexpr const char* kExitHelp =
    "Exit status: 0 success, 1 unplaced annotations or data/model errors, 2 usage errors.\n"
    "Model credentials are read from MAGIC_MARKUP_API_KEY; MAGIC_MARKUP_API_BASE and\n"
    "MAGIC_MARKUP_MODEL select the endpoint and default model.";

struct UsageError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

struct ModelOptions {
    std::string fixtures;
    std::string record;
    std::size_t max_parallel = 1;
};

struct RetagOptions {
    std::string resolver = "llm";
    bool expand_retry = false;
    bool include_intent = false;
    std::string delimiter;
    bool allow_failures = false;
};

struct Options {
    // annot
    std::string doc;
    std::string sidecar;
    std::optional<std::size_t> start;
    std::optional<std::size_t> end;
    std::optional<std::string> anchor;
    std::string content;
    std::optional<std::string> intent;
    std::string id;
    std::string metadata;
    // retag
    std::string old_doc;
    std::string new_doc;
    std::string out;
    RetagOptions retag;
    ModelOptions model;
    // bench
    std::string suite;
    std::string specs;
    std::string log;
    std::string templates;
};

/// The model client selected by --fixtures / --record, created on first use
/// so baseline runs never need credentials.
class ClientSource {
public:
    explicit ClientSource(const ModelOptions& options) : options_(options) {}

    ModelClient& get() {
        if (!base_) {
            if (!options_.fixtures.empty()) {
                base_ = ReplayClient::from_file(options_.fixtures);
            } else {
                LiveClientConfig config = LiveClientConfig::from_env();
                config.max_concurrent = std::max<std::size_t>(options_.max_parallel, 1);
                base_ = std::make_unique<HttpModelClient>(std::move(config));
            }
            if (!options_.record.empty()) {
                recorder_ = std::make_unique<RecordingClient>(*base_, fs::path(options_.record).stem().string());
            }
        }
        return recorder_ ? static_cast<ModelClient&>(*recorder_) : *base_;
    }

    void save() const {
        if (recorder_) recorder_->transcript().save(options_.record);
    }

private:
    const ModelOptions& options_;
    std::unique_ptr<ModelClient> base_;
    std::unique_ptr<RecordingClient> recorder_;
};

std::optional<char32_t> parse_delimiter(const std::string& text) {
    if (text.empty()) return std::nullopt;
    std::u32string d;
    try {
        d = utf8::decode(text);
    } catch (const Error&) {
        throw UsageError("--delimiter is not valid UTF-8");
    }
    if (d.size() != 1 || utf8::is_space(d.front())) throw UsageError("--delimiter must be a single visible character");
    return d.front();
}

fs::path sidecar_for(const std::string& doc, const std::string& explicit_path) {
    return explicit_path.empty() ? default_sidecar_path(doc) : fs::path(explicit_path);
}

std::string source_name(const fs::path& doc, const fs::path& sidecar) {
    const fs::path dir = fs::absolute(sidecar).parent_path();
    return fs::proximate(fs::absolute(doc), dir).generic_string();
}

std::string preview(std::string_view text, std::size_t limit = 40) {
    std::u32string s = utf8::decode(text);
    const bool cut = s.size() > limit;
    if (cut) s.resize(limit);
    std::string out;
    for (char32_t c : s) {
        if (c == U'\n') {
            out += "\\n";
        } else if (c == U'\t') {
            out += "\\t";
        } else {
            out += utf8::encode(c);
        }
    }
    return "\"" + out + (cut ? "...\"" : "\"");
}

std::string span_text(const TextSegment& s) {
    return "[" + std::to_string(s.start.index) + ", " + std::to_string(s.end.index) + ")";
}

DocumentView load_or_create(const fs::path& doc, const fs::path& sidecar) {
    if (fs::exists(sidecar)) return load_view(doc, sidecar, LoadMode::Strict);
    return make_view(source_name(doc, sidecar), read_file(doc));
}

std::string next_id(const DocumentView& view) {
    for (std::size_t n = view.annotations.size() + 1;; ++n) {
        std::string id = "a" + std::to_string(n);
        const bool taken = std::any_of(view.annotations.begin(), view.annotations.end(),
                                       [&](const Annotation& a) { return a.id == id; });
        if (!taken) return id;
    }
}

int cmd_annot_add(const Options& o, std::ostream& out) {
    if (o.anchor.has_value() == (o.start.has_value() || o.end.has_value())) {
        throw UsageError("give either --start and --end, or --anchor");
    }
    if (!o.anchor && !(o.start && o.end)) throw UsageError("--start and --end go together");
    json metadata = json::object();
    if (!o.metadata.empty()) {
        try {
            metadata = json::parse(o.metadata);
        } catch (const json::parse_error& e) {
            throw UsageError(std::string("--metadata is not JSON: ") + e.what());
        }
        if (!metadata.is_object()) throw UsageError("--metadata must be a JSON object");
    }

    const fs::path sidecar = sidecar_for(o.doc, o.sidecar);
    DocumentView view = load_or_create(o.doc, sidecar);

    Annotation a;
    a.id = o.id.empty() ? next_id(view) : o.id;
    a.content = o.content;
    a.intent = o.intent;
    a.metadata = std::move(metadata);
    if (o.anchor) {
        const auto matches = find_matches(view.document, *o.anchor, MatchMode::Exact);
        if (matches.size() != 1) {
            throw Error(ErrorCode::ValidationError,
                        "anchor text occurs " + std::to_string(matches.size()) +
                            " times; give --start and --end offsets instead");
        }
        a.segment = matches.front().segment;
    } else {
        a.segment = make_segment(view.document, TextPoint{*o.start}, TextPoint{*o.end});
    }
    view.annotations.push_back(a);
    save_view(view, sidecar);
    out << "added " << a.id << " " << span_text(a.segment) << " " << preview(a.segment.anchor_text) << "\n";
    return kExitOk;
}

int cmd_annot_list(const Options& o, std::ostream& out) {
    const fs::path sidecar = sidecar_for(o.doc, o.sidecar);
    const DocumentView view = load_view(o.doc, sidecar, LoadMode::Strict);
    for (const auto& a : view.annotations) {
        out << a.id << "\t" << span_text(a.segment) << "\t" << preview(a.segment.anchor_text) << "\t"
            << a.content;
        if (a.intent) out << "\tintent: " << *a.intent;
        out << "\n";
    }
    return kExitOk;
}

int cmd_annot_rm(const Options& o, std::ostream& out) {
    const fs::path sidecar = sidecar_for(o.doc, o.sidecar);
    DocumentView view = load_view(o.doc, sidecar, LoadMode::Strict);
    auto it = std::find_if(view.annotations.begin(), view.annotations.end(),
                           [&](const Annotation& a) { return a.id == o.id; });
    if (it == view.annotations.end()) throw Error(ErrorCode::ValidationError, "no annotation with id '" + o.id + "'");
    view.annotations.erase(it);
    save_view(view, sidecar);
    out << "removed " << o.id << "\n";
    return kExitOk;
}

int cmd_retag(const Options& o, std::ostream& out) {
    const Resolver resolver = parse_resolver(o.retag.resolver);
    const std::optional<char32_t> delimiter = parse_delimiter(o.retag.delimiter);

    const fs::path old_sidecar = sidecar_for(o.old_doc, o.sidecar);
    const fs::path new_sidecar = o.out.empty() ? default_sidecar_path(o.new_doc) : fs::path(o.out);
    const DocumentView view = load_view(o.old_doc, old_sidecar, LoadMode::Strict);
    const std::string updated = read_file(o.new_doc);

    std::vector<MappedAnnotation> mapped;
    ClientSource clients(o.model);
    if (resolver == Resolver::Baseline) {
        for (const auto& a : view.annotations) mapped.push_back(baseline_map(a, view.document, updated));
    } else {
        RetagConfig config;
        config.expand_retry = o.retag.expand_retry;
        config.include_intent = o.retag.include_intent;
        config.max_parallel = std::max<std::size_t>(o.model.max_parallel, 1);
        config.delimiter = delimiter ? *delimiter
                                     : choose_delimiter(std::vector<std::string>{view.document, updated});
        RetagResult result = retag(view, updated, clients.get(), config);
        clients.save();
        mapped = std::move(result.mapped);
        out << "model requests: " << clients.get().request_count() << ", tokens in/out: "
            << result.report.usage.input_tokens << "/" << result.report.usage.output_tokens
            << ", max latency: " << result.report.max_latency_seconds << "s\n";
    }

    std::size_t unplaced = 0;
    DocumentView next = make_view(source_name(o.new_doc, new_sidecar), updated);
    for (const auto& m : mapped) {
        out << m.source.id << "\t" << to_string(m.outcome);
        if (m.segment) {
            out << "\t" << span_text(*m.segment) << "\t" << preview(m.segment->anchor_text);
            next.annotations.push_back(m.rebased());
        } else {
            ++unplaced;
            out << "\t" << m.diagnostics;
        }
        out << "\n";
    }
    save_view(next, new_sidecar);
    out << "wrote " << new_sidecar.string() << " (" << next.annotations.size() << " of " << mapped.size()
        << " annotations placed)\n";
    return unplaced == 0 || o.retag.allow_failures ? kExitOk : kExitFailure;
}

int cmd_bench_gen(const Options& o, std::ostream& out) {
    const std::vector<GenSpec> specs = load_gen_specs(o.specs);
    GeneratorConfig config;
    if (!o.templates.empty()) config.templates = PromptTemplates::load(o.templates);
    config.max_parallel = std::max<std::size_t>(o.model.max_parallel, 1);
    const fs::path log = o.log.empty() ? fs::path(o.out + ".rejections.jsonl") : fs::path(o.log);
    ClientSource clients(o.model);
    const GenerationRun run = generate_suite(specs, clients.get(), o.out, log, config);
    clients.save();
    for (const auto& entry : run.log) {
        out << entry.case_id << "\t" << (entry.accepted ? "accepted" : "rejected");
        if (entry.rejection) out << "\t" << to_string(entry.rejection->reason) << "\t" << entry.rejection->note;
        out << "\n";
    }
    out << "wrote " << o.out << " (" << run.suite.cases.size() << " of " << specs.size() << " cases accepted)\n";
    return kExitOk;
}

int cmd_bench_run(const Options& o, std::ostream& out) {
    const Resolver resolver = parse_resolver(o.retag.resolver);
    const std::optional<char32_t> delimiter = parse_delimiter(o.retag.delimiter);
    const Suite suite = Suite::load(o.suite);
    EvalConfig config;
    config.max_parallel = std::max<std::size_t>(o.model.max_parallel, 1);
    config.retag.expand_retry = o.retag.expand_retry;
    config.retag.include_intent = o.retag.include_intent;
    if (delimiter) config.retag.delimiter = *delimiter;
    ClientSource clients(o.model);
    const SuiteRun run = run_suite(suite, resolver, resolver == Resolver::Llm ? &clients.get() : nullptr, config);
    clients.save();
    out << report_render(run.report);
    if (!o.out.empty()) {
        write_file_atomic(o.out, run.to_json().dump(2) + "\n");
        out << "wrote " << o.out << "\n";
    }
    return kExitOk;
}

int cmd_bench_validate(const Options& o, std::ostream& out) {
    const Suite suite = Suite::load(o.suite);
    std::size_t bad = 0;
    std::vector<std::string> ids;
    for (const auto& c : suite.cases) {
        std::vector<std::string> problems = check_case(c);
        if (problems.empty() && !gold_self_test(c)) problems.push_back("gold answer does not resolve to the gold segment");
        if (std::find(ids.begin(), ids.end(), c.id) != ids.end()) problems.push_back("duplicate case id");
        ids.push_back(c.id);
        for (const auto& p : problems) out << c.id << ": " << p << "\n";
        if (!problems.empty()) ++bad;
    }
    out << suite.cases.size() - bad << " of " << suite.cases.size() << " cases valid\n";
    return bad == 0 ? kExitOk : kExitFailure;
}

void add_model_flags(CLI::App* cmd, ModelOptions& m) {
    cmd->add_option("--fixtures", m.fixtures, "Replay model answers from a recorded transcript")
        ->check(CLI::ExistingFile);
    cmd->add_option("--record", m.record, "Record model exchanges to a transcript file");
    cmd->add_option("--max-parallel", m.max_parallel, "Concurrent model requests")->check(CLI::Range(1, 256));
}

void add_retag_flags(CLI::App* cmd, RetagOptions& r) {
    cmd->add_option("--resolver", r.resolver, "Resolver to use")->check(CLI::IsMember({"llm", "baseline"}));
    cmd->add_flag("--expand-retry", r.expand_retry, "Retry a failed match with one extra line on each side");
    cmd->add_flag("--include-intent", r.include_intent, "Tell the model each annotation's intent");
    cmd->add_option("--delimiter", r.delimiter, "Segment delimiter character (default: first one absent from both files)");
}

}  // namespace

int run_cli(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
    CLI::App app{"Keeps annotations attached to text documents as they change."};
    app.footer(kExitHelp);
    app.require_subcommand(1);
    Options o;

    CLI::App* annot = app.add_subcommand("annot", "Manage the annotations of a document");
    annot->require_subcommand(1);
    CLI::App* add = annot->add_subcommand("add", "Anchor a new annotation");
    add->add_option("doc", o.doc, "Document")->required()->check(CLI::ExistingFile);
    add->add_option("--start", o.start, "Start offset in characters");
    add->add_option("--end", o.end, "End offset in characters (exclusive)");
    add->add_option("--anchor", o.anchor, "Anchor on the unique occurrence of this text");
    add->add_option("--content,-c", o.content, "Annotation text")->required();
    add->add_option("--intent", o.intent, "What the annotation is for");
    add->add_option("--id", o.id, "Annotation id (default: next free aN)");
    add->add_option("--metadata", o.metadata, "Extra JSON object stored with the annotation");
    add->add_option("--sidecar", o.sidecar, "Sidecar path (default: DOC.annotations.json)");

    CLI::App* list = annot->add_subcommand("list", "Show a document's annotations");
    list->add_option("doc", o.doc, "Document")->required()->check(CLI::ExistingFile);
    list->add_option("--sidecar", o.sidecar, "Sidecar path");

    CLI::App* rm = annot->add_subcommand("rm", "Remove an annotation");
    rm->add_option("doc", o.doc, "Document")->required()->check(CLI::ExistingFile);
    rm->add_option("id", o.id, "Annotation id")->required();
    rm->add_option("--sidecar", o.sidecar, "Sidecar path");

    CLI::App* retag_cmd = app.add_subcommand("retag", "Carry annotations from one version of a document to the next");
    retag_cmd->add_option("old", o.old_doc, "Annotated document")->required()->check(CLI::ExistingFile);
    retag_cmd->add_option("new", o.new_doc, "Updated document")->required()->check(CLI::ExistingFile);
    retag_cmd->add_option("--sidecar", o.sidecar, "Sidecar of the old document");
    retag_cmd->add_option("--out", o.out, "Sidecar to write for the new document");
    retag_cmd->add_flag("--allow-failures", o.retag.allow_failures, "Exit 0 even if some annotations were not placed");
    add_retag_flags(retag_cmd, o.retag);
    add_model_flags(retag_cmd, o.model);

    CLI::App* bench = app.add_subcommand("bench", "Generate and evaluate re-tagging benchmarks");
    bench->require_subcommand(1);
    CLI::App* gen = bench->add_subcommand("gen", "Generate a benchmark suite with a model");
    gen->add_option("--specs", o.specs, "JSON array of generation specs")->required()->check(CLI::ExistingFile);
    gen->add_option("--out", o.out, "Suite file to write")->required();
    gen->add_option("--log", o.log, "Rejection log (default: OUT.rejections.jsonl)");
    gen->add_option("--templates", o.templates, "JSON file overriding prompt templates")->check(CLI::ExistingFile);
    add_model_flags(gen, o.model);

    CLI::App* run = bench->add_subcommand("run", "Evaluate a resolver on a suite");
    run->add_option("--suite", o.suite, "Suite file")->required()->check(CLI::ExistingFile);
    run->add_option("--out", o.out, "Report JSON to write");
    add_retag_flags(run, o.retag);
    add_model_flags(run, o.model);

    CLI::App* validate = bench->add_subcommand("validate", "Check every case of a suite");
    validate->add_option("--suite", o.suite, "Suite file")->required()->check(CLI::ExistingFile);

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e, out, err);
        return code == 0 ? kExitOk : kExitUsage;
    }

    try {
        if (add->parsed()) return cmd_annot_add(o, out);
        if (list->parsed()) return cmd_annot_list(o, out);
        if (rm->parsed()) return cmd_annot_rm(o, out);
        if (retag_cmd->parsed()) return cmd_retag(o, out);
        if (gen->parsed()) return cmd_bench_gen(o, out);
        if (run->parsed()) return cmd_bench_run(o, out);
        if (validate->parsed()) return cmd_bench_validate(o, out);
    } catch (const UsageError& e) {
        err << "error: " << e.what() << "\n";
        return kExitUsage;
    } catch (const std::exception& e) {
        err << "error: " << e.what() << "\n";
        return kExitFailure;
    }
    err << app.help();
    return kExitUsage;
}

}  // namespace magic_markup
