#pragma once

#include <string>
#include <vector>

namespace latroute::csv {

struct Table {
  std::vector<std::string> header;
  std::vector<std::vector<std::string>> rows;

  // Index of a header column; throws if absent.
  std::size_t column(const std::string& name) const;
  bool has_column(const std::string& name) const;
};

Table read(const std::string& path);
std::vector<std::string> split_line(const std::string& line);
std::string join_line(const std::vector<std::string>& fields);
void write(const std::string& path, const Table& table);

double to_double(const std::string& field, const std::string& context);

}  // namespace latroute::csv
