#include <pybind11/functional.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>
#include <pybind11/stl/filesystem.h>

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

namespace py = pybind11;
using namespace magic_markup;

namespace {

char32_t to_char(const std::string& s) {
    const std::u32string d = utf8::decode(s);
    if (d.size() != 1) throw Error(ErrorCode::ValidationError, "delimiter must be one character");
    return d.front();
}

std::string segment_repr(const TextSegment& s) {
    return "TextSegment(" + std::to_string(s.start.index) + ", " + std::to_string(s.end.index) + ", " +
           py::repr(py::str(s.anchor_text)).cast<std::string>() + ")";
}

RetagConfig make_retag_config(bool expand_retry, bool include_intent, std::size_t max_parallel,
                              const std::string& delimiter) {
    RetagConfig c;
    c.expand_retry = expand_retry;
    c.include_intent = include_intent;
    c.max_parallel = max_parallel;
    c.delimiter = to_char(delimiter);
    return c;
}

}  // namespace

PYBIND11_MODULE(_core, m) {
    m.doc() = "Annotation anchoring and re-tagging across document edits";

    static py::handle error_type = py::exception<Error>(m, "MagicMarkupError").release();
    py::register_exception_translator([](std::exception_ptr p) {
        try {
            if (p) std::rethrow_exception(p);
        } catch (const Error& e) {
            py::object exc = py::reinterpret_borrow<py::object>(error_type)(e.what());
            exc.attr("code") = std::string(to_string(e.code()));
            PyErr_SetObject(error_type.ptr(), exc.ptr());
        }
    });

    py::class_<TextSegment>(m, "TextSegment")
        .def(py::init([](std::size_t start, std::size_t end, std::string anchor_text) {
                 return TextSegment{TextPoint{start}, TextPoint{end}, std::move(anchor_text)};
             }),
             py::arg("start"), py::arg("end"), py::arg("anchor_text"))
        .def_property_readonly("start", [](const TextSegment& s) { return s.start.index; })
        .def_property_readonly("end", [](const TextSegment& s) { return s.end.index; })
        .def_readonly("anchor_text", &TextSegment::anchor_text)
        .def("is_point", &TextSegment::is_point)
        .def("__eq__", [](const TextSegment& a, const TextSegment& b) { return a == b; })
        .def("__repr__", &segment_repr);

    py::class_<Annotation>(m, "Annotation")
        .def(py::init([](std::string id, TextSegment segment, std::string content,
                         std::optional<std::string> intent) {
                 return Annotation{std::move(id), std::move(segment), std::move(content), std::move(intent),
                                   nlohmann::json::object()};
             }),
             py::arg("id"), py::arg("segment"), py::arg("content") = "", py::arg("intent") = py::none())
        .def_readonly("id", &Annotation::id)
        .def_readonly("segment", &Annotation::segment)
        .def_readonly("content", &Annotation::content)
        .def_readonly("intent", &Annotation::intent);

    py::class_<DocumentView>(m, "DocumentView")
        .def_readonly("source", &DocumentView::source)
        .def_readonly("document", &DocumentView::document)
        .def_property_readonly("digest", [](const DocumentView& v) { return v.digest.hex; })
        .def_readonly("annotations", &DocumentView::annotations)
        .def("__eq__", [](const DocumentView& a, const DocumentView& b) { return a == b; });

    m.def("make_segment",
          [](std::string_view doc, std::size_t start, std::size_t end) {
              return make_segment(doc, TextPoint{start}, TextPoint{end});
          },
          py::arg("doc"), py::arg("start"), py::arg("end"));
    m.def("make_view", &make_view, py::arg("source"), py::arg("document"),
          py::arg("annotations") = std::vector<Annotation>{});
    m.def("validate_view", &validate_view);
    m.def("sidecar_dumps", [](const DocumentView& v) { return sidecar_to_json(v).dump(2); });
    m.def("sidecar_loads",
          [](const std::string& text, std::string document, bool allow_stale) {
              return sidecar_from_json(nlohmann::json::parse(text), std::move(document),
                                       allow_stale ? LoadMode::AllowStale : LoadMode::Strict);
          },
          py::arg("text"), py::arg("document"), py::arg("allow_stale") = false);
    m.def("load_view",
          [](const std::filesystem::path& doc, std::optional<std::filesystem::path> sidecar) {
              return load_view(doc, sidecar ? *sidecar : default_sidecar_path(doc), LoadMode::Strict);
          },
          py::arg("doc"), py::arg("sidecar") = py::none());
    m.def("save_view", &save_view, py::arg("view"), py::arg("sidecar"));

    m.def("number_lines", &number_lines);
    m.def("normalize_ws", &normalize_ws);
    m.def(
        "find_matches",
        [](std::string_view haystack, std::string_view needle, bool normalized) {
            std::vector<TextSegment> out;
            for (auto& r : find_matches(haystack, needle, normalized ? MatchMode::Normalized : MatchMode::Exact)) {
                out.push_back(std::move(r.segment));
            }
            return out;
        },
        py::arg("haystack"), py::arg("needle"), py::arg("normalized") = false);

    m.def("insert_delimiters",
          [](std::string_view doc, const TextSegment& s, const std::string& d) {
              return insert_delimiters(doc, s, to_char(d));
          },
          py::arg("doc"), py::arg("segment"), py::arg("delimiter") = "★");
    m.def("strip_delimiters",
          [](std::string_view marked, const std::string& d) {
              StrippedText s = strip_delimiters(marked, to_char(d));
              return py::make_tuple(s.text, s.segment);
          },
          py::arg("marked"), py::arg("delimiter") = "★");
    m.def("build_retag_prompt",
          [](std::string_view original, const TextSegment& s, std::string_view updated, const std::string& d) {
              RetagConfig c;
              c.delimiter = to_char(d);
              return build_retag_prompt(original, s, updated, c).user_text;
          },
          py::arg("original"), py::arg("segment"), py::arg("updated"), py::arg("delimiter") = "★");

    py::class_<RetagAnswer>(m, "RetagAnswer")
        .def(py::init<std::string, std::size_t, std::size_t, std::size_t>(), py::arg("text"),
             py::arg("start_line"), py::arg("end_line"), py::arg("occurrence") = 1)
        .def_readonly("text", &RetagAnswer::text)
        .def_readonly("start_line", &RetagAnswer::start_line)
        .def_readonly("end_line", &RetagAnswer::end_line)
        .def_readonly("occurrence", &RetagAnswer::occurrence);
    m.def("parse_retag_response", &parse_retag_response);
    m.def("resolve_answer",
          [](std::string_view updated, const RetagAnswer& a, bool expand_retry) {
              RetagConfig c;
              c.expand_retry = expand_retry;
              return resolve_answer(updated, a, c).segment;
          },
          py::arg("updated"), py::arg("answer"), py::arg("expand_retry") = false);

    py::class_<ModelClient>(m, "ModelClient")
        .def("request_count", &ModelClient::request_count)
        .def_property_readonly("input_tokens", [](const ModelClient& c) { return c.total_usage().input_tokens; })
        .def_property_readonly("output_tokens", [](const ModelClient& c) { return c.total_usage().output_tokens; });
    py::class_<ScriptedClient, ModelClient>(m, "ScriptedClient")
        .def(py::init([](py::function handler) {
                 auto fn = std::make_shared<py::function>(std::move(handler));
                 return std::make_unique<ScriptedClient>([fn](const ChatRequest& r) {
                     py::gil_scoped_acquire gil;
                     return (*fn)(r.user_text).cast<std::string>();
                 });
             }),
             py::arg("handler"), "Answers each prompt with handler(prompt_text) -> str")
        .def(py::init<std::vector<std::string>, double>(), py::arg("replies"), py::arg("latency_seconds") = 0.0);
    py::class_<ReplayClient, ModelClient>(m, "ReplayClient")
        .def(py::init([](const std::filesystem::path& p) { return ReplayClient::from_file(p); }));

    m.def(
        "retag",
        [](const DocumentView& view, std::string_view updated, ModelClient& client, bool expand_retry,
           bool include_intent, std::size_t max_parallel, const std::string& delimiter) {
            RetagResult r;
            {
                py::gil_scoped_release release;
                r = retag(view, updated, client,
                          make_retag_config(expand_retry, include_intent, max_parallel, delimiter));
            }
            py::list out;
            for (const auto& mapped : r.mapped) {
                py::dict d;
                d["id"] = mapped.source.id;
                d["outcome"] = std::string(to_string(mapped.outcome));
                d["segment"] = mapped.segment ? py::cast(*mapped.segment) : py::none();
                d["diagnostics"] = mapped.diagnostics;
                out.append(d);
            }
            return out;
        },
        py::arg("view"), py::arg("updated"), py::arg("client"), py::arg("expand_retry") = false,
        py::arg("include_intent") = false, py::arg("max_parallel") = 1, py::arg("delimiter") = "★");

    m.def(
        "baseline_retag",
        [](std::string_view original, const TextSegment& s, std::string_view updated) {
            BaselineResult r = baseline_retag(original, s, updated);
            return py::make_tuple(std::string(to_string(r.outcome)),
                                  r.segment ? py::cast(*r.segment) : py::none(), r.score);
        },
        py::arg("original"), py::arg("segment"), py::arg("updated"));
    m.def("edit_distance", py::overload_cast<std::string_view, std::string_view>(&edit_distance));

    m.def(
        "run_suite",
        [](const std::filesystem::path& suite_path, const std::string& resolver, ModelClient* client,
           bool expand_retry) {
            const Suite suite = Suite::load(suite_path);
            EvalConfig config;
            config.retag.expand_retry = expand_retry;
            SuiteRun run;
            {
                py::gil_scoped_release release;
                run = run_suite(suite, parse_resolver(resolver), client, config);
            }
            return run.report.to_json().dump();
        },
        py::arg("suite"), py::arg("resolver") = "baseline", py::arg("client") = nullptr,
        py::arg("expand_retry") = false, "Returns the report as a JSON string");
    m.def(
        "validate_suite",
        [](const std::filesystem::path& suite_path) {
            std::vector<std::string> problems;
            for (const auto& c : Suite::load(suite_path).cases) {
                for (auto& p : check_case(c)) problems.push_back(c.id + ": " + p);
                if (!gold_self_test(c)) problems.push_back(c.id + ": gold self-test failed");
            }
            return problems;
        },
        py::arg("suite"));
}
