#pragma once

#include <filesystem>
#include <map>
#include <string>
#include <string_view>
#include <vector>

#include "json.hpp"

#include "hscan/core/types.hpp"

namespace hscan {

/// Columns appended on export and recognised again on import.
namespace reserved_columns {
inline constexpr std::string_view id = "hscan_id";
inline constexpr std::string_view label = "hscan_label";
inline constexpr std::string_view label_source = "hscan_label_source";
inline constexpr std::string_view score = "hscan_score";
inline constexpr std::string_view llm_bit = "hscan_llm_bit";
bool is_reserved(std::string_view column);
}  // namespace reserved_columns

/// Builds a project from CSV bytes. Rows whose label cell equals the positive
/// value (after trimming) become gold includes, other non-empty cells gold
/// excludes. When the input carries `hscan_label` columns from a previous
/// export, those are authoritative.
Project import_csv(std::string_view bytes, const ImportMapping& mapping);

/// Rows in current ranked order: screened records in the order they were
/// viewed, then the unlabeled pool in the latest ranking order.
std::string export_csv(const Project& project, bool include_scores);

/// Indices of `project.records` in ranked order (see export_csv).
std::vector<std::size_t> ranked_order(const Project& project);

/// Indices of labeled records in the order they were screened. Records
/// labeled at import come first (import order), then records in the order
/// of their first label event.
std::vector<std::size_t> viewed_order(const Project& project);

void apply_label(Project& project, std::string_view record_id, Label new_label, Timestamp at);
void apply_label(Project& project, std::string_view record_id, Label new_label);

/// Label map obtained by replaying `events` over `base` (typically the project as imported).
std::map<std::string, Label> replay_labels(const Project& base, const std::vector<LabelEvent>& events);

std::string format_timestamp(Timestamp t);
Timestamp parse_timestamp(std::string_view s);

inline constexpr int kProjectFormatVersion = 1;

/// Self-contained project file: JSON with the records CSV embedded.
std::string serialize_project(const Project& project);
Project deserialize_project(std::string_view text);

void save_project(const Project& project, const std::filesystem::path& path);
Project load_project(const std::filesystem::path& path);

nlohmann::json to_json(const RankingSummary& s);
nlohmann::json to_json(const ImportMapping& m);
ImportMapping mapping_from_json(const nlohmann::json& j);

std::string read_file(const std::filesystem::path& path);
void write_file(const std::filesystem::path& path, std::string_view bytes);

}  // namespace hscan
