#include "latroute/estimators.hpp"

#include "latroute/csv.hpp"

#include <fmt/format.h>

#include <algorithm>
#include <cctype>
#include <cmath>
#include <set>

namespace latroute {

// ---------------------------------------------------------------------------
// tokenizers

std::uint64_t count_whitespace_tokens(std::string_view text) {
  std::uint64_t n = 0;
  bool in_word = false;
  for (unsigned char c : text) {
    const bool space = std::isspace(c) != 0;
    if (!space && !in_word) ++n;
    in_word = !space;
  }
  return n;
}

std::uint64_t count_chars4_tokens(std::string_view text) { return (text.size() + 3) / 4; }

TokenizerRegistry::TokenizerRegistry() {
  add("whitespace", count_whitespace_tokens);
  add("chars4", count_chars4_tokens);
}

void TokenizerRegistry::add(std::string id, CountFn fn) { tokenizers_[std::move(id)] = std::move(fn); }

std::uint64_t TokenizerRegistry::count(const std::string& id, std::string_view text) const {
  auto it = tokenizers_.find(id);
  if (it == tokenizers_.end()) throw Error(fmt::format("unknown tokenizer '{}'", id));
  return it->second(text);
}

std::uint64_t count_input_tokens(const TokenizerRegistry& tokenizers, const std::string& tokenizer_id,
                                 std::string_view query) {
  return tokenizers.count(tokenizer_id, query);
}

// ---------------------------------------------------------------------------
// cost / complexity

double estimate_cost(const ModelPricing& pricing, const TokenCounts& tokens) {
  return pricing.price_in * static_cast<double>(tokens.input_tokens) +
         pricing.price_out * static_cast<double>(tokens.output_tokens);
}

double estimate_cost(const ModelPricing& pricing, double input_tokens, double output_tokens) {
  return pricing.price_in * input_tokens + pricing.price_out * output_tokens;
}

double complexity_score(const ItemParams& item) {
  require_same_dim("complexity_score alpha vs b", static_cast<std::size_t>(item.b.size()),
                   static_cast<std::size_t>(item.alpha.size()));
  return item.alpha.dot(item.b);
}

// ---------------------------------------------------------------------------
// verbosity

void VerbosityTable::validate() const {
  if (mean_lengths.empty()) throw Error("verbosity table has no bins");
  if (bin_edges.size() != mean_lengths.size() + 1)
    throw Error(fmt::format("verbosity table: {} edges for {} bins", bin_edges.size(), mean_lengths.size()));
  for (std::size_t k = 1; k < bin_edges.size(); ++k) {
    if (!(bin_edges[k] > bin_edges[k - 1])) throw Error("verbosity table: bin edges must be strictly increasing");
  }
  for (double m : mean_lengths)
    if (!(m >= 0.0) || !std::isfinite(m)) throw Error("verbosity table: mean lengths must be finite and >= 0");
  if (!(global_mean >= 0.0)) throw Error("verbosity table: global mean must be >= 0");
}

std::size_t verbosity_bin(const VerbosityTable& table, double score) {
  // Bin k covers [edge_k, edge_{k+1}); the last bin is closed on the right.
  const auto& e = table.bin_edges;
  const std::size_t k = table.bins();
  if (score < e[1]) return 0;
  if (score >= e[k - 1]) return k - 1;
  auto it = std::upper_bound(e.begin(), e.end(), score);
  return static_cast<std::size_t>(it - e.begin()) - 1;
}

double estimate_output_length(const VerbosityTable& table, double score) {
  return table.mean_lengths[verbosity_bin(table, score)];
}

VerbosityTable calibrate_verbosity(std::vector<VerbosityRecord> records, std::size_t bins) {
  if (bins < 1) throw Error("calibrate_verbosity: need at least one bin");
  if (records.size() < bins)
    throw Error(fmt::format("calibrate_verbosity: need at least {} records, got {}", bins, records.size()));
  std::set<double> distinct;
  for (const auto& r : records) {
    if (!std::isfinite(r.score) || !(r.length >= 0.0))
      throw Error(fmt::format("calibrate_verbosity: invalid record for '{}'", r.item_id));
    distinct.insert(r.score);
  }
  if (bins > 1 && distinct.size() < 2)
    throw Error("calibrate_verbosity: need at least 2 distinct complexity scores");

  std::stable_sort(records.begin(), records.end(),
                   [](const VerbosityRecord& a, const VerbosityRecord& b) { return a.score < b.score; });
  const std::size_t n = records.size();
  double total = 0.0;
  for (const auto& r : records) total += r.length;

  VerbosityTable table;
  table.global_mean = total / static_cast<double>(n);
  const double lo = records.front().score;
  const double hi = records.back().score;

  std::vector<double> edges{lo};
  for (std::size_t k = 1; k < bins; ++k) {
    const std::size_t split = k * n / bins;
    const double edge = 0.5 * (records[split - 1].score + records[split].score);
    if (edge > edges.back() && edge < hi) edges.push_back(edge);
  }
  // A single distinct score (only possible with K = 1) still needs a width.
  edges.push_back(hi > lo ? hi : lo + 1.0);
  table.bin_edges = std::move(edges);
  table.mean_lengths.assign(table.bin_edges.size() - 1, 0.0);

  std::vector<double> sums(table.bins(), 0.0);
  std::vector<std::size_t> counts(table.bins(), 0);
  for (const auto& r : records) {
    const auto k = verbosity_bin(table, r.score);
    sums[k] += r.length;
    ++counts[k];
  }
  for (std::size_t k = 0; k < table.bins(); ++k)
    table.mean_lengths[k] = counts[k] ? sums[k] / static_cast<double>(counts[k]) : table.global_mean;
  return table;
}

// ---------------------------------------------------------------------------
// latency

LatencyProfile calibrate_latency(const std::vector<LatencyMeasurement>& measurements) {
  if (measurements.size() < 2)
    throw Error(fmt::format("calibrate_latency: need at least 2 measurements, got {}", measurements.size()));
  const double n = static_cast<double>(measurements.size());
  double mean_l = 0.0, mean_t = 0.0;
  for (const auto& m : measurements) {
    mean_l += m.output_length;
    mean_t += m.seconds;
  }
  mean_l /= n;
  mean_t /= n;
  double sxx = 0.0, sxy = 0.0;
  for (const auto& m : measurements) {
    sxx += (m.output_length - mean_l) * (m.output_length - mean_l);
    sxy += (m.output_length - mean_l) * (m.seconds - mean_t);
  }
  if (!(sxx > 0.0)) throw Error("calibrate_latency: degenerate design, all output lengths are equal");

  double slope = sxy / sxx;
  double intercept = mean_t - slope * mean_l;
  // Non-negative least squares over the two coefficients.
  if (slope < 0.0) {
    slope = 0.0;
    intercept = std::max(0.0, mean_t);
  } else if (intercept < 0.0) {
    intercept = 0.0;
    double sll = 0.0, slt = 0.0;
    for (const auto& m : measurements) {
      sll += m.output_length * m.output_length;
      slt += m.output_length * m.seconds;
    }
    slope = sll > 0.0 ? std::max(0.0, slt / sll) : 0.0;
  }

  LatencyProfile profile{intercept, slope, 0.0};
  double ss = 0.0;
  for (const auto& m : measurements) {
    const double r = m.seconds - estimate_latency(profile, m.output_length);
    ss += r * r;
  }
  profile.residual_rms = std::sqrt(ss / n);
  return profile;
}

double estimate_latency(const LatencyProfile& profile, double output_length) {
  return profile.ttft + output_length * profile.tpot;
}

// ---------------------------------------------------------------------------
// measurement CSV

std::vector<AnchorMeasurement> read_measurement_csv(const std::string& path) {
  const auto table = csv::read(path);
  const auto id_col = table.column("item_id");
  const auto score_col = table.column("score");
  const bool has_out = table.has_column("output_tokens");
  const bool has_lat = table.has_column("latency_seconds");
  const auto out_col = has_out ? table.column("output_tokens") : 0;
  const auto lat_col = has_lat ? table.column("latency_seconds") : 0;
  std::vector<AnchorMeasurement> rows;
  for (std::size_t r = 0; r < table.rows.size(); ++r) {
    const auto& row = table.rows[r];
    const std::string ctx = fmt::format("{} row {}", path, r + 2);
    auto field = [&](std::size_t c) -> const std::string& {
      if (c >= row.size()) throw Error(fmt::format("{}: missing field {}", ctx, c + 1));
      return row[c];
    };
    AnchorMeasurement m;
    m.item_id = field(id_col);
    m.score = csv::to_double(field(score_col), ctx);
    if (!(m.score >= 0.0 && m.score <= 1.0)) throw Error(fmt::format("{}: score {} outside [0, 1]", ctx, m.score));
    if (has_out && out_col < row.size() && !row[out_col].empty()) {
      m.output_tokens = csv::to_double(row[out_col], ctx);
      if (!(m.output_tokens >= 0.0)) throw Error(fmt::format("{}: negative output_tokens", ctx));
      m.has_output = true;
    }
    if (has_lat && lat_col < row.size() && !row[lat_col].empty()) {
      m.latency_seconds = csv::to_double(row[lat_col], ctx);
      if (!(m.latency_seconds >= 0.0)) throw Error(fmt::format("{}: negative latency_seconds", ctx));
      m.has_latency = true;
    }
    rows.push_back(std::move(m));
  }
  return rows;
}

void write_measurement_csv(const std::vector<AnchorMeasurement>& rows, const std::string& path) {
  csv::Table table;
  table.header = {"item_id", "score", "output_tokens", "latency_seconds"};
  for (const auto& m : rows) {
    table.rows.push_back({m.item_id, fmt::format("{}", m.score), m.has_output ? fmt::format("{}", m.output_tokens) : "",
                          m.has_latency ? fmt::format("{}", m.latency_seconds) : ""});
  }
  csv::write(path, table);
}

}  // namespace latroute
