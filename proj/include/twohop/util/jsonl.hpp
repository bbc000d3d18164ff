#pragma once

#include <filesystem>
#include <fstream>
#include <string>
#include <vector>

#include "json.hpp"

namespace twohop::util {

using json = nlohmann::json;

// One JSON object per line. Throws std::runtime_error on I/O or parse failure,
// with the path and line number in the message.
std::vector<json> read_jsonl(const std::filesystem::path& path);
void write_jsonl(const std::filesystem::path& path, const std::vector<json>& rows);

json read_json_file(const std::filesystem::path& path);
void write_json_file(const std::filesystem::path& path, const json& value, int indent = 2);

std::string read_text_file(const std::filesystem::path& path);
void write_text_file(const std::filesystem::path& path, std::string_view content);

// Creates the parent directory chain of `path` if missing.
void ensure_parent_dir(const std::filesystem::path& path);

class JsonlWriter {
public:
    explicit JsonlWriter(const std::filesystem::path& path);
    void write(const json& row);
    std::size_t rows_written() const { return rows_; }

private:
    std::ofstream out_;
    std::filesystem::path path_;
    std::size_t rows_ = 0;
};

}  // namespace twohop::util
