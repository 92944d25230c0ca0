#pragma once

#include "latroute/common.hpp"

#include <iosfwd>
#include <map>
#include <string>
#include <vector>

namespace latroute {

// Text container for precomputed query embeddings:
//   EMB v1 <count> <d_sem>
//   <query_id>\t<base64 of d_sem little-endian float32>
struct EmbeddingTable {
  std::size_t dim = 0;
  std::vector<std::string> ids;
  std::vector<std::vector<float>> rows;

  std::size_t size() const { return ids.size(); }
  // Row for `id` widened to double; throws if absent.
  Vec lookup(const std::string& id) const;
  void add(std::string id, std::vector<float> row);

 private:
  std::map<std::string, std::size_t> index_;
  friend EmbeddingTable read_embeddings(std::istream& in, const std::string& source);
};

EmbeddingTable read_embeddings(std::istream& in, const std::string& source = "<stream>");
EmbeddingTable read_embeddings(const std::string& path);
void write_embeddings(std::ostream& out, const EmbeddingTable& table);
void write_embeddings(const std::string& path, const EmbeddingTable& table);

std::string base64_encode(const std::string& bytes);
std::string base64_decode(const std::string& text);

// Order-sensitive FNV-1a checksum over a row's raw bytes.
std::uint64_t row_checksum(const std::vector<float>& row);

}  // namespace latroute
