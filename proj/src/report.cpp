#include "netharvest/report.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <map>

namespace netharvest {

namespace {

std::string render(const Cell& cell, int digits) {
  if (const auto* s = std::get_if<std::string>(&cell)) return *s;
  return format_significant(std::get<double>(cell), digits);
}

std::string slug(const std::string& s) {
  std::string out;
  for (char c : s) {
    out += (c == ' ' || c == '=' || c == '\n') ? '_' : c;
  }
  return out;
}

}  // namespace

std::string format_significant(double v, int digits) {
  if (std::isnan(v)) return "nan";
  if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
  if (v == 0) return "0";  // folds -0
  char buf[48];
  std::snprintf(buf, sizeof buf, "%.*g", digits, v);
  return buf;
}

Section& Section::field(std::string name, Cell value) {
  fields.emplace_back(std::move(name), std::move(value));
  return *this;
}

Section& Section::row(std::vector<Cell> cells) {
  rows.push_back(std::move(cells));
  return *this;
}

Section& RunReport::add(std::string key, std::string title) {
  sections.push_back(Section{std::move(key), std::move(title), {}, {}, {}});
  return sections.back();
}

void write_text(std::ostream& os, const RunReport& report) {
  os << "netharvest " << report.command << ": " << report.scenario << '\n';
  for (const auto& sec : report.sections) {
    if (sec.fields.empty() && sec.rows.empty()) continue;
    os << '\n' << sec.title << '\n' << std::string(sec.title.size(), '-') << '\n';
    std::size_t label_width = 0;
    for (const auto& [name, _] : sec.fields) label_width = std::max(label_width, name.size());
    for (const auto& [name, value] : sec.fields) {
      os << "  " << name << std::string(label_width - name.size(), ' ') << "  " << render(value, 6)
         << '\n';
    }
    if (sec.rows.empty()) continue;
    if (!sec.fields.empty()) os << '\n';
    std::vector<std::size_t> width(sec.columns.size(), 0);
    for (std::size_t c = 0; c < sec.columns.size(); ++c) width[c] = sec.columns[c].size();
    std::vector<std::vector<std::string>> text;
    for (const auto& row : sec.rows) {
      auto& line = text.emplace_back();
      for (std::size_t c = 0; c < row.size() && c < width.size(); ++c) {
        line.push_back(render(row[c], 6));
        width[c] = std::max(width[c], line.back().size());
      }
    }
    auto emit = [&](const std::vector<std::string>& cells) {
      std::string line = " ";
      for (std::size_t c = 0; c < cells.size(); ++c) {
        const bool last = c + 1 == cells.size();
        line += ' ' + cells[c];
        if (!last) line += std::string(width[c] - cells[c].size() + 1, ' ');
      }
      os << line << '\n';
    };
    emit(sec.columns);
    std::vector<std::string> rule;
    for (auto w : width) rule.emplace_back(w, '-');
    emit(rule);
    for (const auto& line : text) emit(line);
  }
  if (!report.artifacts.empty()) {
    os << "\nArtifacts\n---------\n";
    for (const auto& a : report.artifacts) os << "  " << a << '\n';
  }
}

void write_keyvalue(std::ostream& os, const RunReport& report) {
  std::map<std::string, std::string> kv;
  kv["command"] = report.command;
  kv["scenario"] = report.scenario;
  for (const auto& sec : report.sections) {
    for (const auto& [name, value] : sec.fields) kv[sec.key + "." + slug(name)] = render(value, 12);
    for (const auto& row : sec.rows) {
      if (row.empty()) continue;
      const std::string prefix = sec.key + "." + slug(render(row[0], 12));
      for (std::size_t c = 1; c < row.size() && c < sec.columns.size(); ++c) {
        kv[prefix + "." + slug(sec.columns[c])] = render(row[c], 12);
      }
    }
  }
  for (std::size_t i = 0; i < report.artifacts.size(); ++i) {
    kv["artifact." + std::to_string(i + 1)] = report.artifacts[i];
  }
  for (const auto& [k, v] : kv) os << k << '=' << v << '\n';
}

void write_report(std::ostream& os, const RunReport& report, ReportFormat format) {
  if (format == ReportFormat::kText) {
    write_text(os, report);
  } else {
    write_keyvalue(os, report);
  }
}

}  // namespace netharvest
