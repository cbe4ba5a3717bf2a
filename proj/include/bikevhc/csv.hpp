#pragma once

#include <iosfwd>
#include <map>
#include <string>
#include <vector>

namespace bikevhc::csv {

/// Formats a double with 17 significant digits (round-trip exact).
std::string num(double v);

/// Numeric CSV with optional "# key=value ..." metadata lines before the
/// header. Columns are validated against the expected header on read.
struct Table {
    std::vector<std::string> header;
    std::vector<std::vector<double>> data;  // row major
    std::map<std::string, double> metadata;

    std::size_t rows() const { return data.size(); }
    double cell(std::size_t row, std::size_t col) const { return data[row][col]; }
};

Table read(std::istream& is, const std::vector<std::string>& expected_header);

}  // namespace bikevhc::csv
