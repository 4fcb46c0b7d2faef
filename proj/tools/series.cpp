#include "series.hpp"

#include "sphtrap/numfmt.hpp"

#include <cmath>
#include <fstream>
#include <sstream>
#include <stdexcept>

namespace sphtrap::cli {

std::string FigureSeries::meta(const std::string& key) const
{
    for (const auto& [k, v] : metadata)
        if (k == key)
            return v;
    return {};
}

void FigureSeries::validate() const
{
    if (columns.empty())
        throw std::runtime_error("figure series has no columns");
    for (const auto& row : rows) {
        if (row.size() != columns.size())
            throw std::runtime_error("figure series row has " + std::to_string(row.size()) + " values for " +
                                     std::to_string(columns.size()) + " columns");
        for (double v : row)
            if (!std::isfinite(v))
                throw std::runtime_error("figure series holds a non-finite value");
    }
}

void write_series(std::ostream& out, const FigureSeries& series)
{
    series.validate();
    for (const auto& [k, v] : series.metadata)
        out << "# " << k << '=' << v << '\n';
    for (std::size_t i = 0; i < series.columns.size(); ++i)
        out << (i ? "," : "") << series.columns[i];
    out << '\n';
    for (const auto& row : series.rows) {
        for (std::size_t i = 0; i < row.size(); ++i)
            out << (i ? "," : "") << format_double(row[i]);
        out << '\n';
    }
}

void save_series(const std::string& path, const FigureSeries& series)
{
    std::ofstream out(path, std::ios::binary);
    if (!out)
        throw std::runtime_error("cannot write " + path);
    write_series(out, series);
    if (!out)
        throw std::runtime_error("write failed for " + path);
}

FigureSeries read_series(std::istream& in)
{
    FigureSeries s;
    std::string line;
    bool have_columns = false;
    while (std::getline(in, line)) {
        if (!line.empty() && line.back() == '\r')
            line.pop_back();
        if (line.empty())
            continue;
        if (line.rfind("# ", 0) == 0) {
            if (have_columns)
                throw std::runtime_error("metadata after the column row");
            const auto eq = line.find('=');
            if (eq == std::string::npos)
                throw std::runtime_error("metadata line without '=': " + line);
            s.add_meta(line.substr(2, eq - 2), line.substr(eq + 1));
            continue;
        }
        std::vector<std::string> cells;
        std::stringstream ss(line);
        std::string cell;
        while (std::getline(ss, cell, ','))
            cells.push_back(cell);
        if (!have_columns) {
            s.columns = cells;
            have_columns = true;
            continue;
        }
        std::vector<double> row;
        for (const auto& c : cells)
            row.push_back(parse_double(c));
        s.rows.push_back(std::move(row));
    }
    if (!have_columns)
        throw std::runtime_error("figure file has no column row");
    s.validate();
    return s;
}

FigureSeries load_series(const std::string& path)
{
    std::ifstream in(path, std::ios::binary);
    if (!in)
        throw std::runtime_error("cannot open " + path);
    return read_series(in);
}

} // namespace sphtrap::cli
