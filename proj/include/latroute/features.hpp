#pragma once

#include "latroute/common.hpp"

#include <array>
#include <string>
#include <string_view>

namespace latroute {

inline constexpr std::size_t kStructuralFeatures = 11;

// Order of the structural feature vector.
enum class StructuralFeature : std::size_t {
  kChars = 0,          // bytes in the text
  kWords,              // whitespace-separated tokens
  kSentences,          // runs of . ! ? plus a trailing unterminated sentence
  kMeanWordLength,     // word bytes / words
  kTypeTokenRatio,     // distinct lowercased words / words
  kFleschEase,         // 206.835 - 1.015 w/s - 84.6 syl/w
  kFleschKincaid,      // 0.39 w/s + 11.8 syl/w - 15.59
  kDigitRatio,         // digits / chars
  kPunctuationRatio,   // ASCII punctuation / chars
  kNestingDepth,       // deepest (), [], {} nesting
  kInterrogatives,     // what why how when where who whom whose which
};

// Every ratio and readability score is 0 when its denominator is 0.
Vec extract_structural_features(std::string_view query);

// Heuristic syllable count: vowel groups (y counts as a vowel), minus a
// silent trailing 'e', at least one per word containing a letter.
int count_syllables(std::string_view word);

// Signed feature hashing of lowercased alphanumeric tokens, L2-normalised.
class HashingEmbedder {
 public:
  explicit HashingEmbedder(std::size_t dim = 64) : dim_(dim) {}
  std::size_t dim() const { return dim_; }
  Vec embed(std::string_view text) const;

 private:
  std::size_t dim_;
};

}  // namespace latroute
