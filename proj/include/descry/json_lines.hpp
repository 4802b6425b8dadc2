#pragma once

#include <filesystem>
#include <functional>
#include <iosfwd>
#include <string>
#include <vector>

#include "json.hpp"

namespace descry {

using json = nlohmann::json;

/// Calls `fn(object, line_number)` for every non-blank line of a JSONL stream.
/// Lines starting with '#' are comments. Throws ParseError with the line number
/// on malformed JSON or a non-object line.
void for_each_json_line(std::istream& in,
                        const std::function<void(const json&, std::size_t)>& fn);

void for_each_json_line(const std::filesystem::path& path,
                        const std::function<void(const json&, std::size_t)>& fn);

std::string read_file(const std::filesystem::path& path);

/// Writes via a temporary sibling and rename, so readers never see a partial file.
void write_file_atomic(const std::filesystem::path& path, const std::string& content);

}  // namespace descry
