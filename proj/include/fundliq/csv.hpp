#pragma once

#include <string>
#include <string_view>
#include <vector>

namespace fundliq {

// Minimal CSV layer for the fixed schemas used by this project: UTF-8, header
// row required, comma separator, '.' decimal separator, no quoting (field
// values never contain commas). Line numbers are 1-based with the header on
// line 1 so validation reports can point at offending rows.

class CsvReader {
  public:
    // Opens the file and verifies the header matches `header` exactly.
    // Throws std::runtime_error if the file is missing or the header differs.
    CsvReader(const std::string& path, const std::string& header);

    // Advances to the next data row; returns false at end of file.
    // Fields are views into an internal buffer valid until the next call.
    bool next_row();

    const std::vector<std::string_view>& fields() const { return fields_; }
    int line() const { return line_; }
    const std::string& path() const { return path_; }
    size_t expected_fields() const { return n_expected_; }

  private:
    std::string path_;
    std::string content_;
    size_t pos_ = 0;
    int line_ = 0;
    size_t n_expected_ = 0;
    std::vector<std::string_view> fields_;
};

// Strict numeric field parsing: the whole field must be consumed.
bool try_parse_double(std::string_view field, double& out);
bool try_parse_long(std::string_view field, long& out);

// Shortest round-trip decimal formatting (std::to_chars), so that written
// files re-ingest to bit-identical doubles and digests are stable.
std::string format_double(double value);

// Writes content to path atomically: temp file in the same directory, then
// rename. Throws std::runtime_error on I/O failure.
void write_file_atomic(const std::string& path, const std::string& content);

std::string read_file(const std::string& path);
bool file_exists(const std::string& path);

// Hex FNV-1a digest of a file's bytes (see rng.hpp for the hash).
std::string file_digest(const std::string& path);
std::string string_digest(const std::string& content);

}  // namespace fundliq
