#include "magic_markup/sidecar.hpp"

#include <fstream>
#include <sstream>

#include <unistd.h>

#include "magic_markup/error.hpp"

namespace magic_markup {

using nlohmann::json;

namespace {

[[noreturn]] void schema_error(const std::string& what) {
    throw Error(ErrorCode::SchemaError, what);
}

const json& require(const json& object, const char* key, json::value_t type) {
    auto it = object.find(key);
    if (it == object.end()) schema_error(std::string("missing field '") + key + "'");
    const bool ok = it->type() == type ||
                    (type == json::value_t::number_unsigned &&
                     it->type() == json::value_t::number_integer && it->get<std::int64_t>() >= 0);
    if (!ok) schema_error(std::string("field '") + key + "' has wrong type");
    return *it;
}

Annotation annotation_from_json(const json& entry) {
    if (!entry.is_object()) schema_error("annotation entry is not an object");
    Annotation a;
    a.id = require(entry, "id", json::value_t::string).get<std::string>();
    a.segment.start.index = require(entry, "start", json::value_t::number_unsigned).get<std::size_t>();
    a.segment.end.index = require(entry, "end", json::value_t::number_unsigned).get<std::size_t>();
    a.segment.anchor_text = require(entry, "anchor_text", json::value_t::string).get<std::string>();
    a.content = require(entry, "content", json::value_t::string).get<std::string>();
    auto intent = entry.find("intent");
    if (intent == entry.end()) schema_error("missing field 'intent'");
    if (intent->is_string()) {
        a.intent = intent->get<std::string>();
    } else if (!intent->is_null()) {
        schema_error("field 'intent' must be a string or null");
    }
    a.metadata = require(entry, "metadata", json::value_t::object);
    if (a.segment.start > a.segment.end) schema_error("annotation '" + a.id + "' has start > end");
    return a;
}

}  // namespace

std::filesystem::path default_sidecar_path(const std::filesystem::path& document_path) {
    auto path = document_path;
    path += ".annotations.json";
    return path;
}

json sidecar_to_json(const DocumentView& view) {
    json annotations = json::array();
    for (const auto& a : view.annotations) {
        annotations.push_back({
            {"id", a.id},
            {"start", a.segment.start.index},
            {"end", a.segment.end.index},
            {"anchor_text", a.segment.anchor_text},
            {"content", a.content},
            {"intent", a.intent ? json(*a.intent) : json(nullptr)},
            {"metadata", a.metadata},
        });
    }
    return {
        {"version", kSidecarVersion},
        {"document", view.source},
        {"digest", {{"algo", view.digest.algo}, {"hex", view.digest.hex}}},
        {"annotations", std::move(annotations)},
    };
}

DocumentView sidecar_from_json(const json& sidecar, std::string document, LoadMode mode) {
    if (!sidecar.is_object()) schema_error("sidecar root is not an object");
    const auto version = require(sidecar, "version", json::value_t::number_unsigned).get<int>();
    if (version != kSidecarVersion) schema_error("unsupported sidecar version " + std::to_string(version));

    DocumentView view;
    view.source = require(sidecar, "document", json::value_t::string).get<std::string>();
    const json& digest = require(sidecar, "digest", json::value_t::object);
    view.digest.algo = require(digest, "algo", json::value_t::string).get<std::string>();
    view.digest.hex = require(digest, "hex", json::value_t::string).get<std::string>();
    for (const auto& entry : require(sidecar, "annotations", json::value_t::array)) {
        view.annotations.push_back(annotation_from_json(entry));
    }
    view.document = std::move(document);

    if (mode == LoadMode::Strict) {
        if (view.digest.algo != "sha256") schema_error("unsupported digest algorithm '" + view.digest.algo + "'");
        if (is_stale(view)) {
            throw Error(ErrorCode::StaleSidecar,
                        "document digest differs from sidecar; re-tag against the previous version");
        }
        for (const auto& a : view.annotations) {
            try {
                check_segment(view.document, a.segment);
            } catch (const Error& e) {
                throw Error(ErrorCode::AnchorMismatch, "annotation '" + a.id + "': " + e.what());
            }
        }
    }
    return view;
}

DocumentView load_view(const std::filesystem::path& document_path,
                       const std::filesystem::path& sidecar_path, LoadMode mode) {
    std::string document = read_file(document_path);
    json sidecar;
    try {
        sidecar = json::parse(read_file(sidecar_path));
    } catch (const json::parse_error& e) {
        schema_error(sidecar_path.string() + ": " + e.what());
    }
    return sidecar_from_json(sidecar, std::move(document), mode);
}

void save_view(const DocumentView& view, const std::filesystem::path& sidecar_path) {
    validate_view(view);
    write_file_atomic(sidecar_path, sidecar_to_json(view).dump(2) + "\n");
}

std::string read_file(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw Error(ErrorCode::IoError, "cannot read " + path.string());
    std::ostringstream buffer;
    buffer << in.rdbuf();
    return buffer.str();
}

void write_file_atomic(const std::filesystem::path& path, std::string_view content) {
    auto tmp = path;
    tmp += ".tmp." + std::to_string(::getpid());
    {
        std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
        if (!out) throw Error(ErrorCode::IoError, "cannot write " + tmp.string());
        out.write(content.data(), static_cast<std::streamsize>(content.size()));
        out.flush();
        if (!out) throw Error(ErrorCode::IoError, "short write to " + tmp.string());
    }
    std::error_code ec;
    std::filesystem::rename(tmp, path, ec);
    if (ec) {
        std::filesystem::remove(tmp);
        throw Error(ErrorCode::IoError, "cannot rename onto " + path.string() + ": " + ec.message());
    }
}

}  // namespace magic_markup
