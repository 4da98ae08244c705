#pragma once

#include <filesystem>
#include <string>
#include <string_view>

#include <json.hpp>

#include "magic_markup/annotation.hpp"

namespace magic_markup {

inline constexpr int kSidecarVersion = 1;

/// `<document>.annotations.json` next to the document.
std::filesystem::path default_sidecar_path(const std::filesystem::path& document_path);

enum class LoadMode {
    Strict,      ///< digest and every anchor must agree with the document
    AllowStale,  ///< skip digest and anchor checks; see is_stale()
};

nlohmann::json sidecar_to_json(const DocumentView& view);

/// Parses sidecar JSON against `document`. Throws SchemaError for shape
/// problems; in Strict mode also StaleSidecar and AnchorMismatch.
DocumentView sidecar_from_json(const nlohmann::json& sidecar, std::string document,
                               LoadMode mode = LoadMode::Strict);

DocumentView load_view(const std::filesystem::path& document_path,
                       const std::filesystem::path& sidecar_path,
                       LoadMode mode = LoadMode::Strict);

/// Validates then writes the sidecar atomically.
void save_view(const DocumentView& view, const std::filesystem::path& sidecar_path);

// File helpers shared by the sidecar, suite and report writers.
std::string read_file(const std::filesystem::path& path);
void write_file_atomic(const std::filesystem::path& path, std::string_view content);

}  // namespace magic_markup
