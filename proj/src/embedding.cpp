#include "latroute/embedding.hpp"

#include <boost/archive/iterators/base64_from_binary.hpp>
#include <boost/archive/iterators/binary_from_base64.hpp>
#include <boost/archive/iterators/transform_width.hpp>
#include <fmt/format.h>

#include <algorithm>
#include <bit>
#include <cctype>
#include <cstdint>
#include <cmath>
#include <cstring>
#include <fstream>
#include <sstream>

namespace latroute {

namespace bai = boost::archive::iterators;

std::string base64_encode(const std::string& bytes) {
  using It = bai::base64_from_binary<bai::transform_width<std::string::const_iterator, 6, 8>>;
  std::string out(It(bytes.begin()), It(bytes.end()));
  out.append((3 - bytes.size() % 3) % 3, '=');
  return out;
}

std::string base64_decode(const std::string& text) {
  if (text.size() % 4 != 0) throw Error("base64: length is not a multiple of 4");
  const auto pad = static_cast<std::size_t>(std::count(text.end() - std::min<std::size_t>(2, text.size()), text.end(), '='));
  for (std::size_t i = 0; i + pad < text.size(); ++i) {
    const char c = text[i];
    if (!(std::isalnum(static_cast<unsigned char>(c)) || c == '+' || c == '/'))
      throw Error(fmt::format("base64: invalid character at offset {}", i));
  }
  std::string body = text;
  std::replace(body.end() - static_cast<std::ptrdiff_t>(pad), body.end(), '=', 'A');
  using It = bai::transform_width<bai::binary_from_base64<std::string::const_iterator>, 8, 6>;
  std::string out(It(body.begin()), It(body.end()));
  out.resize(out.size() - pad);
  return out;
}

namespace {

std::string pack_row(const std::vector<float>& row) {
  std::string bytes(row.size() * 4, '\0');
  for (std::size_t i = 0; i < row.size(); ++i) {
    auto bits = std::bit_cast<std::uint32_t>(row[i]);
    for (int k = 0; k < 4; ++k) bytes[i * 4 + k] = static_cast<char>((bits >> (8 * k)) & 0xFF);
  }
  return bytes;
}

std::vector<float> unpack_row(const std::string& bytes) {
  std::vector<float> row(bytes.size() / 4);
  for (std::size_t i = 0; i < row.size(); ++i) {
    std::uint32_t bits = 0;
    for (int k = 0; k < 4; ++k) bits |= static_cast<std::uint32_t>(static_cast<unsigned char>(bytes[i * 4 + k])) << (8 * k);
    row[i] = std::bit_cast<float>(bits);
  }
  return row;
}

}  // namespace

Vec EmbeddingTable::lookup(const std::string& id) const {
  auto it = index_.find(id);
  if (it == index_.end()) throw Error(fmt::format("no embedding for query '{}'", id));
  const auto& row = rows[it->second];
  Vec v(static_cast<Eigen::Index>(row.size()));
  for (std::size_t i = 0; i < row.size(); ++i) v(static_cast<Eigen::Index>(i)) = row[i];
  return v;
}

void EmbeddingTable::add(std::string id, std::vector<float> row) {
  if (rows.empty() && dim == 0) dim = row.size();
  require_same_dim("embedding row", dim, row.size());
  if (index_.count(id)) throw Error(fmt::format("duplicate embedding id '{}'", id));
  index_[id] = ids.size();
  ids.push_back(std::move(id));
  rows.push_back(std::move(row));
}

EmbeddingTable read_embeddings(std::istream& in, const std::string& source) {
  std::string line;
  if (!std::getline(in, line)) throw Error(fmt::format("{}: missing EMB header", source));
  std::istringstream header(line);
  std::string magic, version;
  long long count = -1, dim = -1;
  header >> magic >> version >> count >> dim;
  std::string trailing;
  if (magic != "EMB" || version != "v1" || count < 0 || dim < 1 || (header >> trailing))
    throw Error(fmt::format("{}:1: malformed header '{}'", source, line));

  EmbeddingTable table;
  table.dim = static_cast<std::size_t>(dim);
  std::size_t line_no = 1;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    const auto tab = line.find('\t');
    if (tab == std::string::npos || tab == 0)
      throw Error(fmt::format("{}:{}: expected '<id>\\t<base64>'", source, line_no));
    std::string bytes;
    try {
      bytes = base64_decode(line.substr(tab + 1));
    } catch (const Error& e) {
      throw Error(fmt::format("{}:{}: {}", source, line_no, e.what()));
    }
    if (bytes.size() != table.dim * 4)
      throw Error(fmt::format("{}:{}: row has {} bytes, expected {}", source, line_no, bytes.size(), table.dim * 4));
    auto row = unpack_row(bytes);
    for (float x : row)
      if (!std::isfinite(x)) throw Error(fmt::format("{}:{}: non-finite value", source, line_no));
    std::string id = line.substr(0, tab);
    if (table.index_.count(id)) throw Error(fmt::format("{}:{}: duplicate id '{}'", source, line_no, id));
    table.index_[id] = table.ids.size();
    table.ids.push_back(std::move(id));
    table.rows.push_back(std::move(row));
  }
  if (table.ids.size() != static_cast<std::size_t>(count))
    throw Error(fmt::format("{}: header declares {} records, found {}", source, count, table.ids.size()));
  return table;
}

EmbeddingTable read_embeddings(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(fmt::format("cannot open embedding file '{}'", path));
  return read_embeddings(in, path);
}

void write_embeddings(std::ostream& out, const EmbeddingTable& table) {
  out << "EMB v1 " << table.ids.size() << ' ' << table.dim << '\n';
  for (std::size_t i = 0; i < table.ids.size(); ++i) {
    require_same_dim("embedding row", table.dim, table.rows[i].size());
    out << table.ids[i] << '\t' << base64_encode(pack_row(table.rows[i])) << '\n';
  }
}

void write_embeddings(const std::string& path, const EmbeddingTable& table) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error(fmt::format("cannot write embedding file '{}'", path));
  write_embeddings(out, table);
}

std::uint64_t row_checksum(const std::vector<float>& row) {
  std::uint64_t h = 1469598103934665603ULL;
  for (unsigned char c : pack_row(row)) {
    h ^= c;
    h *= 1099511628211ULL;
  }
  return h;
}

}  // namespace latroute
