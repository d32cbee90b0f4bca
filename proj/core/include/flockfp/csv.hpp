#pragma once

#include <optional>
#include <ostream>
#include <string>
#include <vector>

namespace flockfp {

// shortest round-trip decimal form; NaN becomes the empty cell
std::string format_double(double x);

class CsvWriter {
  public:
    explicit CsvWriter(std::ostream& os) : os_(os) {}

    void comment(const std::string& line);
    void header(const std::vector<std::string>& names);
    void row(const std::vector<double>& values);
    void row_strings(const std::vector<std::string>& cells);

  private:
    std::ostream& os_;
};

struct CsvTable {
    std::vector<std::string> comments;
    std::vector<std::string> header;
    std::vector<std::vector<double>> rows;  // NaN for empty cells

    [[nodiscard]] int column(const std::string& name) const;  // -1 if absent
    [[nodiscard]] std::vector<double> column_values(const std::string& name) const;
};

CsvTable read_csv(const std::string& path);

}  // namespace flockfp
