#include "fundliq/csv.hpp"

#include <charconv>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <stdexcept>

#include "fundliq/rng.hpp"

namespace fundliq {

std::string to_hex(uint64_t value) {
    char buf[20];
    std::snprintf(buf, sizeof(buf), "%016llx", static_cast<unsigned long long>(value));
    return buf;
}

std::string read_file(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw std::runtime_error("cannot open file: " + path);
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

bool file_exists(const std::string& path) {
    std::error_code ec;
    return std::filesystem::exists(path, ec);
}

std::string file_digest(const std::string& path) {
    std::string content = read_file(path);
    return string_digest(content);
}

std::string string_digest(const std::string& content) {
    return to_hex(fnv1a64(content.data(), content.size()));
}

CsvReader::CsvReader(const std::string& path, const std::string& header) : path_(path) {
    content_ = read_file(path);
    pos_ = 0;
    line_ = 0;
    // Count header columns for the per-row field check.
    n_expected_ = 1;
    for (char c : header)
        if (c == ',') ++n_expected_;
    // Read the header line.
    size_t eol = content_.find('\n', pos_);
    std::string_view head(content_.data() + pos_,
                          (eol == std::string::npos ? content_.size() : eol) - pos_);
    if (!head.empty() && head.back() == '\r') head.remove_suffix(1);
    line_ = 1;
    if (head != header)
        throw std::runtime_error(path + ": expected header '" + header + "', got '" +
                                 std::string(head) + "'");
    pos_ = (eol == std::string::npos) ? content_.size() : eol + 1;
}

bool CsvReader::next_row() {
    while (pos_ < content_.size()) {
        size_t eol = content_.find('\n', pos_);
        size_t end = (eol == std::string::npos) ? content_.size() : eol;
        std::string_view row(content_.data() + pos_, end - pos_);
        if (!row.empty() && row.back() == '\r') row.remove_suffix(1);
        pos_ = (eol == std::string::npos) ? content_.size() : eol + 1;
        ++line_;
        if (row.empty()) continue;  // tolerate trailing blank lines
        fields_.clear();
        size_t start = 0;
        while (true) {
            size_t comma = row.find(',', start);
            if (comma == std::string_view::npos) {
                fields_.push_back(row.substr(start));
                break;
            }
            fields_.push_back(row.substr(start, comma - start));
            start = comma + 1;
        }
        return true;
    }
    return false;
}

bool try_parse_double(std::string_view field, double& out) {
    if (field.empty()) return false;
    const char* first = field.data();
    const char* last = first + field.size();
    auto [ptr, ec] = std::from_chars(first, last, out);
    return ec == std::errc() && ptr == last;
}

bool try_parse_long(std::string_view field, long& out) {
    if (field.empty()) return false;
    const char* first = field.data();
    const char* last = first + field.size();
    auto [ptr, ec] = std::from_chars(first, last, out);
    return ec == std::errc() && ptr == last;
}

std::string format_double(double value) {
    char buf[40];
    auto [ptr, ec] = std::to_chars(buf, buf + sizeof(buf), value);
    if (ec != std::errc()) throw std::runtime_error("double formatting failed");
    return std::string(buf, ptr);
}

void write_file_atomic(const std::string& path, const std::string& content) {
    namespace fs = std::filesystem;
    fs::path target(path);
    if (target.has_parent_path()) {
        std::error_code ec;
        fs::create_directories(target.parent_path(), ec);
    }
    fs::path tmp = target;
    tmp += ".tmp";
    {
        std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
        if (!out) throw std::runtime_error("cannot open for write: " + tmp.string());
        out.write(content.data(), static_cast<std::streamsize>(content.size()));
        if (!out) throw std::runtime_error("write failed: " + tmp.string());
    }
    std::error_code ec;
    fs::rename(tmp, target, ec);
    if (ec) throw std::runtime_error("rename failed for " + path + ": " + ec.message());
}

}  // namespace fundliq
