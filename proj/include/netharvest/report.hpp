#pragma once

#include <ostream>
#include <string>
#include <variant>
#include <vector>

namespace netharvest {

using Cell = std::variant<std::string, double>;

/// A titled block of either labelled fields or a table. `key` prefixes the
/// section's entries in the key/value format; table rows are keyed by their
/// first cell.
struct Section {
  std::string key;
  std::string title;
  std::vector<std::pair<std::string, Cell>> fields;
  std::vector<std::string> columns;
  std::vector<std::vector<Cell>> rows;

  Section& field(std::string name, Cell value);
  Section& row(std::vector<Cell> cells);
};

struct RunReport {
  std::string command;
  std::string scenario;
  std::vector<Section> sections;
  std::vector<std::string> artifacts;  // file names relative to the output dir

  Section& add(std::string key, std::string title);
};

enum class ReportFormat { kText, kKeyValue };

/// Fixed-width tables with numbers at 6 significant digits.
void write_text(std::ostream& os, const RunReport& report);
/// One key=value per line, keys sorted, numbers at 12 significant digits.
void write_keyvalue(std::ostream& os, const RunReport& report);
void write_report(std::ostream& os, const RunReport& report, ReportFormat format);

std::string format_significant(double v, int digits);

}  // namespace netharvest
