#pragma once

#include <filesystem>
#include <functional>
#include <optional>
#include <string>

#include <nlohmann/json.hpp>

#include "qualnet/model.hpp"

namespace qualnet::store {

inline constexpr int kFormatVersion = 1;

struct ProjectFile {
    Project project;
    std::optional<std::string> provider_transcript_ref;
    bool operator==(const ProjectFile&) const = default;
};

// Collections are written in id order (concept edges by (cause, effect),
// merge records by canonical). Object keys come out sorted.
nlohmann::json to_json(const Project& project);
Project project_from_json(const nlohmann::json& j);

nlohmann::json to_json(const ProjectFile& file);
ProjectFile file_from_json(const nlohmann::json& j);

// Canonical text: two-space indent, trailing newline.
std::string serialize(const ProjectFile& file);

// Test hook: runs after the temp file is written and before the rename.
// Throwing from it simulates a crash at that point.
using FaultHook = std::function<void(const std::filesystem::path& temp)>;

// Throws ValidationFailed (file untouched) or IoError.
void save(const ProjectFile& file, const std::filesystem::path& path, const FaultHook& hook = {});
void save(const Project& project, const std::filesystem::path& path);

// Throws IoError, SchemaMismatch, or ValidationFailed.
ProjectFile load_file(const std::filesystem::path& path);
Project load(const std::filesystem::path& path);

// indicator_id,sentence_id,text,concept_name,status with RFC 4180 quoting.
std::string indicators_csv(const Project& project);

}  // namespace qualnet::store
