#pragma once

#include <string>
#include <vector>

namespace moppo {

/// Shortest decimal form that round-trips an IEEE double exactly.
std::string fmt_full(double v);

/// Fixed 9-decimal form used for weight columns.
std::string fmt_weight(double v);

/// General-purpose value form for report columns (9 significant digits).
std::string fmt_value(double v);

std::string join_row(const std::vector<std::string>& cells);

/// Minimal CSV file writer with a fixed header row. All formatting is
/// deterministic so identical data always produces identical bytes.
class CsvFile {
public:
    CsvFile(const std::string& path, const std::vector<std::string>& header);
    ~CsvFile();
    CsvFile(const CsvFile&) = delete;
    CsvFile& operator=(const CsvFile&) = delete;

    void row(const std::vector<std::string>& cells);

private:
    struct Impl;
    Impl* impl_;
};

/// Splits one CSV line on commas (no quoting; the library never emits quotes).
std::vector<std::string> split_csv_line(const std::string& line);

/// Reads a whole CSV file into rows (first row is the header).
std::vector<std::vector<std::string>> read_csv(const std::string& path);

} // namespace moppo
