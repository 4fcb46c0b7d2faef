#pragma once

#include <iosfwd>
#include <string>
#include <utility>
#include <vector>

namespace sphtrap::cli {

/// Tabulated figure data with its reproducibility header.
struct FigureSeries {
    std::vector<std::pair<std::string, std::string>> metadata;
    /// First entry is the axis column.
    std::vector<std::string> columns;
    std::vector<std::vector<double>> rows;

    void add_meta(std::string key, std::string value) { metadata.emplace_back(std::move(key), std::move(value)); }
    /// Value of the first metadata entry named `key`, or empty.
    std::string meta(const std::string& key) const;

    /// Throws std::runtime_error on ragged rows or non-finite values.
    void validate() const;
};

/// "# key=value" lines, the column row, then rows at 17 significant digits.
void write_series(std::ostream& out, const FigureSeries& series);
void save_series(const std::string& path, const FigureSeries& series);

FigureSeries read_series(std::istream& in);
FigureSeries load_series(const std::string& path);

} // namespace sphtrap::cli
