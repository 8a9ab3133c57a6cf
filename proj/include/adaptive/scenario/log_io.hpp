#pragma once

#include <filesystem>
#include <string>
#include <string_view>

#include "adaptive/scenario/types.hpp"

namespace adaptive::scenario {

// JSON Lines: a header object on line 1, then one object per frame. Keys are
// written in a fixed order and every float with six decimals (docs/log_format.md).
std::string serialize_log(const DrivingLog& log);
DrivingLog parse_log(std::string_view text, const std::string& source = "<memory>");

DrivingLog load_log(const std::filesystem::path& path);
void save_log(const DrivingLog& log, const std::filesystem::path& path);

// Writes `contents` to `path` via a temporary sibling and rename.
void write_text_file(const std::filesystem::path& path, std::string_view contents);
std::string read_text_file(const std::filesystem::path& path);

}  // namespace adaptive::scenario
