#pragma once

#include "latroute/irt.hpp"

#include <cstdint>
#include <functional>
#include <map>
#include <string>
#include <string_view>
#include <vector>

namespace latroute {

struct ModelPricing {
  double price_in = 0.0;   // currency per input token
  double price_out = 0.0;  // currency per output token
};

struct TokenCounts {
  std::uint64_t input_tokens = 0;
  std::uint64_t output_tokens = 0;
};

// Deterministic text -> token count function, selected by id.
class TokenizerRegistry {
 public:
  using CountFn = std::function<std::uint64_t(std::string_view)>;

  // Ships "whitespace" and "chars4" (ceil(bytes / 4)).
  TokenizerRegistry();

  void add(std::string id, CountFn fn);
  bool contains(const std::string& id) const { return tokenizers_.count(id) != 0; }
  std::uint64_t count(const std::string& id, std::string_view text) const;

 private:
  std::map<std::string, CountFn, std::less<>> tokenizers_;
};

std::uint64_t count_whitespace_tokens(std::string_view text);
std::uint64_t count_chars4_tokens(std::string_view text);

struct VerbosityTable {
  std::vector<double> bin_edges;     // K + 1, strictly increasing
  std::vector<double> mean_lengths;  // K
  double global_mean = 0.0;

  std::size_t bins() const { return mean_lengths.size(); }
  void validate() const;
};

struct LatencyProfile {
  double ttft = 0.0;  // seconds
  double tpot = 0.0;  // seconds per output token
  double residual_rms = 0.0;
};

struct VerbosityRecord {
  std::string item_id;
  double score = 0.0;   // complexity s = alpha . b
  double length = 0.0;  // observed output tokens
};

struct LatencyMeasurement {
  double output_length = 0.0;
  double seconds = 0.0;
};

double estimate_cost(const ModelPricing& pricing, const TokenCounts& tokens);
// Fractional output length variant used with table estimates.
double estimate_cost(const ModelPricing& pricing, double input_tokens, double output_tokens);

std::uint64_t count_input_tokens(const TokenizerRegistry& tokenizers, const std::string& tokenizer_id,
                                 std::string_view query);

double complexity_score(const ItemParams& item);

// Equal-frequency bins over the observed scores; bins that end up empty
// fall back to the global mean.
VerbosityTable calibrate_verbosity(std::vector<VerbosityRecord> records, std::size_t bins = 10);
// Index of the bin holding `score`, clamped to the edge bins.
std::size_t verbosity_bin(const VerbosityTable& table, double score);
double estimate_output_length(const VerbosityTable& table, double score);

// Least squares of seconds on output length, with both coefficients kept >= 0.
LatencyProfile calibrate_latency(const std::vector<LatencyMeasurement>& measurements);
double estimate_latency(const LatencyProfile& profile, double output_length);

// Anchor measurement CSV: item_id, score, output_tokens, latency_seconds.
struct AnchorMeasurement {
  std::string item_id;
  double score = 0.0;
  double output_tokens = 0.0;
  double latency_seconds = 0.0;
  bool has_output = false;
  bool has_latency = false;
};

std::vector<AnchorMeasurement> read_measurement_csv(const std::string& path);
void write_measurement_csv(const std::vector<AnchorMeasurement>& rows, const std::string& path);

}  // namespace latroute
