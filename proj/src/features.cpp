#include "latroute/features.hpp"

#include <algorithm>
#include <cctype>
#include <cstdint>
#include <set>
#include <vector>

namespace latroute {

namespace {

bool is_vowel(char c) {
  switch (std::tolower(static_cast<unsigned char>(c))) {
    case 'a': case 'e': case 'i': case 'o': case 'u': case 'y':
      return true;
    default:
      return false;
  }
}

std::string lower_letters(std::string_view word) {
  std::string out;
  for (unsigned char c : word)
    if (std::isalnum(c)) out += static_cast<char>(std::tolower(c));
  return out;
}

std::vector<std::string_view> split_words(std::string_view text) {
  std::vector<std::string_view> words;
  std::size_t i = 0;
  while (i < text.size()) {
    while (i < text.size() && std::isspace(static_cast<unsigned char>(text[i]))) ++i;
    const std::size_t start = i;
    while (i < text.size() && !std::isspace(static_cast<unsigned char>(text[i]))) ++i;
    if (i > start) words.push_back(text.substr(start, i - start));
  }
  return words;
}

std::uint64_t fnv1a(std::string_view s) {
  std::uint64_t h = 1469598103934665603ULL;
  for (unsigned char c : s) {
    h ^= c;
    h *= 1099511628211ULL;
  }
  return h;
}

}  // namespace

int count_syllables(std::string_view word) {
  std::string w;
  for (unsigned char c : word)
    if (std::isalpha(c)) w += static_cast<char>(std::tolower(c));
  if (w.empty()) return 0;
  int groups = 0;
  bool prev = false;
  for (char c : w) {
    const bool v = is_vowel(c);
    if (v && !prev) ++groups;
    prev = v;
  }
  // Silent final e, except consonant + "le" as in "table".
  const bool le = w.size() > 2 && w[w.size() - 2] == 'l' && !is_vowel(w[w.size() - 3]);
  if (w.size() > 2 && w.back() == 'e' && !is_vowel(w[w.size() - 2]) && !le && groups > 1) --groups;
  return std::max(groups, 1);
}

Vec extract_structural_features(std::string_view query) {
  Vec f = Vec::Zero(kStructuralFeatures);
  auto at = [&](StructuralFeature k) -> double& { return f(static_cast<Eigen::Index>(k)); };

  const double chars = static_cast<double>(query.size());
  const auto words = split_words(query);
  const double word_count = static_cast<double>(words.size());

  double sentences = 0.0;
  bool in_terminator = false;
  bool pending = false;  // non-space content since the last terminator
  std::size_t digits = 0, punct = 0;
  int depth = 0, max_depth = 0;
  for (unsigned char c : query) {
    const bool term = c == '.' || c == '!' || c == '?';
    if (term) {
      if (!in_terminator) sentences += 1.0;
      pending = false;
    } else if (!std::isspace(c)) {
      pending = true;
    }
    in_terminator = term;
    if (std::isdigit(c)) ++digits;
    if (std::ispunct(c)) ++punct;
    if (c == '(' || c == '[' || c == '{') max_depth = std::max(max_depth, ++depth);
    if ((c == ')' || c == ']' || c == '}') && depth > 0) --depth;
  }
  if (pending) sentences += 1.0;

  double word_bytes = 0.0, syllables = 0.0, interrogatives = 0.0;
  std::set<std::string> types;
  static const std::set<std::string> kQuestionWords{"what", "why", "how", "when", "where",
                                                    "who", "whom", "whose", "which"};
  for (auto w : words) {
    word_bytes += static_cast<double>(w.size());
    syllables += count_syllables(w);
    const auto norm = lower_letters(w);
    types.insert(norm.empty() ? std::string(w) : norm);
    if (kQuestionWords.count(norm)) interrogatives += 1.0;
  }

  at(StructuralFeature::kChars) = chars;
  at(StructuralFeature::kWords) = word_count;
  at(StructuralFeature::kSentences) = sentences;
  if (word_count > 0) {
    at(StructuralFeature::kMeanWordLength) = word_bytes / word_count;
    at(StructuralFeature::kTypeTokenRatio) = static_cast<double>(types.size()) / word_count;
    const double wps = sentences > 0 ? word_count / sentences : word_count;
    const double spw = syllables / word_count;
    at(StructuralFeature::kFleschEase) = 206.835 - 1.015 * wps - 84.6 * spw;
    at(StructuralFeature::kFleschKincaid) = 0.39 * wps + 11.8 * spw - 15.59;
  }
  if (chars > 0) {
    at(StructuralFeature::kDigitRatio) = static_cast<double>(digits) / chars;
    at(StructuralFeature::kPunctuationRatio) = static_cast<double>(punct) / chars;
  }
  at(StructuralFeature::kNestingDepth) = max_depth;
  at(StructuralFeature::kInterrogatives) = interrogatives;
  return f;
}

Vec HashingEmbedder::embed(std::string_view text) const {
  Vec v = Vec::Zero(static_cast<Eigen::Index>(dim_));
  std::string token;
  auto flush = [&] {
    if (token.empty()) return;
    const auto h = fnv1a(token);
    const auto idx = static_cast<Eigen::Index>(h % dim_);
    v(idx) += (h >> 63) ? -1.0 : 1.0;
    token.clear();
  };
  for (unsigned char c : text) {
    if (std::isalnum(c))
      token += static_cast<char>(std::tolower(c));
    else
      flush();
  }
  flush();
  const double n = v.norm();
  if (n > 0.0) v /= n;
  return v;
}

}  // namespace latroute
