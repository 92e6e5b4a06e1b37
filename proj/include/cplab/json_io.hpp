#pragma once

#include <filesystem>
#include <string>

#include "json.hpp"

#include "cplab/geometry.hpp"
#include "cplab/rates.hpp"

namespace cplab {

nlohmann::json to_json(const Rect& r);
Rect rect_from_json(const nlohmann::json& j);
nlohmann::json to_json(const RateParams& p);
RateParams params_from_json(const nlohmann::json& j);

/// Writes to a sibling temporary file and renames it over `path`, so readers
/// never observe a partially written file.
void write_file_atomic(const std::filesystem::path& path, const std::string& contents);

std::string read_file(const std::filesystem::path& path);

}  // namespace cplab
