#pragma once

#include <string>
#include <vector>

namespace cbfpa {

// All experiment outputs are CSV so that golden files diff cleanly and
// aggregates can be recomputed by external tools. Numbers are printed with
// %.17g: enough digits to round-trip a double exactly, so a rerun of the
// same config produces byte-identical files.
std::string format_double(double v);

class CsvWriter {
 public:
  explicit CsvWriter(const std::string& path);
  ~CsvWriter();
  CsvWriter(const CsvWriter&) = delete;
  CsvWriter& operator=(const CsvWriter&) = delete;

  void write_header(const std::vector<std::string>& columns);
  void write_row(const std::vector<std::string>& cells);
  void write_row(const std::vector<double>& values);

 private:
  struct Impl;
  Impl* impl_;
};

struct CsvTable {
  std::vector<std::string> columns;
  std::vector<std::vector<std::string>> rows;

  int column_index(const std::string& name) const;  // -1 when absent
  double value(std::size_t row, const std::string& column) const;
};

CsvTable read_csv(const std::string& path);

}  // namespace cbfpa
