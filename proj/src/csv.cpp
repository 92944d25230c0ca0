#include "latroute/csv.hpp"

#include "latroute/common.hpp"

#include <boost/tokenizer.hpp>
#include <fmt/format.h>

#include <algorithm>
#include <charconv>
#include <fstream>

namespace latroute::csv {

std::size_t Table::column(const std::string& name) const {
  auto it = std::find(header.begin(), header.end(), name);
  if (it == header.end()) throw Error(fmt::format("csv: missing column '{}'", name));
  return static_cast<std::size_t>(it - header.begin());
}

bool Table::has_column(const std::string& name) const {
  return std::find(header.begin(), header.end(), name) != header.end();
}

std::vector<std::string> split_line(const std::string& line) {
  using Sep = boost::escaped_list_separator<char>;
  boost::tokenizer<Sep> tok(line, Sep('\\', ',', '"'));
  return {tok.begin(), tok.end()};
}

std::string join_line(const std::vector<std::string>& fields) {
  std::string out;
  for (std::size_t i = 0; i < fields.size(); ++i) {
    if (i) out += ',';
    const std::string& f = fields[i];
    if (f.find_first_of(",\"\n\\") == std::string::npos) {
      out += f;
      continue;
    }
    out += '"';
    for (char c : f) {
      if (c == '"' || c == '\\') out += '\\';
      out += c;
    }
    out += '"';
  }
  return out;
}

Table read(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw Error(fmt::format("csv: cannot open '{}'", path));
  Table table;
  std::string line;
  bool first = true;
  while (std::getline(in, line)) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    auto fields = split_line(line);
    if (first) {
      table.header = std::move(fields);
      first = false;
    } else {
      table.rows.push_back(std::move(fields));
    }
  }
  if (first) throw Error(fmt::format("csv: '{}' is empty", path));
  return table;
}

void write(const std::string& path, const Table& table) {
  std::ofstream out(path);
  if (!out) throw Error(fmt::format("csv: cannot write '{}'", path));
  out << join_line(table.header) << '\n';
  for (const auto& row : table.rows) out << join_line(row) << '\n';
}

double to_double(const std::string& field, const std::string& context) {
  double value = 0.0;
  const char* begin = field.data();
  const char* end = begin + field.size();
  while (begin < end && *begin == ' ') ++begin;
  auto [ptr, ec] = std::from_chars(begin, end, value);
  if (ec != std::errc() || ptr != end)
    throw Error(fmt::format("csv: {}: '{}' is not a number", context, field));
  return value;
}

}  // namespace latroute::csv
