#include "flockfp/csv.hpp"

#include <charconv>
#include <cmath>
#include <fstream>
#include <limits>
#include <sstream>

#include "flockfp/errors.hpp"

namespace flockfp {

std::string format_double(double x) {
    if (std::isnan(x)) return "";
    char buf[32];
    const auto [ptr, ec] = std::to_chars(buf, buf + sizeof(buf), x);
    if (ec != std::errc{}) throw NumericalError("floating-point formatting failed");
    return std::string(buf, ptr);
}

void CsvWriter::comment(const std::string& line) { os_ << "# " << line << '\n'; }

void CsvWriter::header(const std::vector<std::string>& names) {
    for (std::size_t i = 0; i < names.size(); ++i) {
        if (i) os_ << ',';
        os_ << names[i];
    }
    os_ << '\n';
}

void CsvWriter::row(const std::vector<double>& values) {
    for (std::size_t i = 0; i < values.size(); ++i) {
        if (i) os_ << ',';
        os_ << format_double(values[i]);
    }
    os_ << '\n';
}

void CsvWriter::row_strings(const std::vector<std::string>& cells) {
    for (std::size_t i = 0; i < cells.size(); ++i) {
        if (i) os_ << ',';
        os_ << cells[i];
    }
    os_ << '\n';
}

int CsvTable::column(const std::string& name) const {
    for (std::size_t i = 0; i < header.size(); ++i)
        if (header[i] == name) return static_cast<int>(i);
    return -1;
}

std::vector<double> CsvTable::column_values(const std::string& name) const {
    const int c = column(name);
    if (c < 0) throw ConfigError("CSV has no column named '" + name + "'");
    std::vector<double> out;
    out.reserve(rows.size());
    for (const std::vector<double>& r : rows)
        out.push_back(static_cast<std::size_t>(c) < r.size()
                          ? r[static_cast<std::size_t>(c)]
                          : std::numeric_limits<double>::quiet_NaN());
    return out;
}

namespace {

std::vector<std::string> split_cells(const std::string& line) {
    std::vector<std::string> cells;
    std::string cell;
    std::istringstream in(line);
    while (std::getline(in, cell, ',')) cells.push_back(cell);
    if (!line.empty() && line.back() == ',') cells.emplace_back();
    return cells;
}

}  // namespace

CsvTable read_csv(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot open CSV file '" + path + "'");
    CsvTable table;
    std::string line;
    bool have_header = false;
    while (std::getline(in, line)) {
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line.empty()) continue;
        if (line.front() == '#') {
            table.comments.push_back(line.size() > 1 && line[1] == ' ' ? line.substr(2)
                                                                       : line.substr(1));
            continue;
        }
        if (!have_header) {
            table.header = split_cells(line);
            have_header = true;
            continue;
        }
        std::vector<double> row;
        for (const std::string& cell : split_cells(line)) {
            if (cell.empty()) {
                row.push_back(std::numeric_limits<double>::quiet_NaN());
                continue;
            }
            double x = 0.0;
            const auto [ptr, ec] = std::from_chars(cell.data(), cell.data() + cell.size(), x);
            if (ec != std::errc{} || ptr != cell.data() + cell.size())
                throw ConfigError("CSV cell '" + cell + "' in " + path + " is not numeric");
            row.push_back(x);
        }
        table.rows.push_back(std::move(row));
    }
    return table;
}

}  // namespace flockfp
