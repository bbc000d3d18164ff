#include "twohop/util/jsonl.hpp"

#include <sstream>
#include <stdexcept>

namespace twohop::util {

namespace fs = std::filesystem;

std::vector<json> read_jsonl(const fs::path& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot open " + path.string());
    std::vector<json> rows;
    std::string line;
    std::size_t lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        if (line.empty()) continue;
        try {
            rows.push_back(json::parse(line));
        } catch (const json::parse_error& e) {
            throw std::runtime_error(path.string() + ":" + std::to_string(lineno) + ": " + e.what());
        }
    }
    return rows;
}

void write_jsonl(const fs::path& path, const std::vector<json>& rows) {
    JsonlWriter w(path);
    for (const auto& row : rows) w.write(row);
}

json read_json_file(const fs::path& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot open " + path.string());
    try {
        return json::parse(in);
    } catch (const json::parse_error& e) {
        throw std::runtime_error(path.string() + ": " + e.what());
    }
}

void write_json_file(const fs::path& path, const json& value, int indent) {
    ensure_parent_dir(path);
    std::ofstream out(path);
    if (!out) throw std::runtime_error("cannot write " + path.string());
    out << value.dump(indent) << "\n";
    if (!out) throw std::runtime_error("write failed: " + path.string());
}

std::string read_text_file(const fs::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw std::runtime_error("cannot open " + path.string());
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

void write_text_file(const fs::path& path, std::string_view content) {
    ensure_parent_dir(path);
    std::ofstream out(path, std::ios::binary);
    if (!out) throw std::runtime_error("cannot write " + path.string());
    out.write(content.data(), (std::streamsize)content.size());
    if (!out) throw std::runtime_error("write failed: " + path.string());
}

void ensure_parent_dir(const fs::path& path) {
    const fs::path dir = path.parent_path();
    if (!dir.empty()) fs::create_directories(dir);
}

JsonlWriter::JsonlWriter(const fs::path& path) : path_(path) {
    ensure_parent_dir(path);
    out_.open(path, std::ios::binary);
    if (!out_) throw std::runtime_error("cannot write " + path.string());
}

void JsonlWriter::write(const json& row) {
    out_ << row.dump() << "\n";
    if (!out_) throw std::runtime_error("write failed: " + path_.string());
    ++rows_;
}

}  // namespace twohop::util
