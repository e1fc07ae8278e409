#pragma once

#include <algorithm>
#include <cctype>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <stdexcept>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

namespace lecseg {

// Bad or inconsistent input files (CLI exit code 2).
class InputError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Failure inside a pipeline stage; carries the module that raised it (exit code 3).
class PipelineError : public std::runtime_error {
 public:
  PipelineError(std::string module, const std::string& what)
      : std::runtime_error("[" + module + "] " + what), module_(std::move(module)) {}
  const std::string& module() const noexcept { return module_; }

 private:
  std::string module_;
};

using Vector = std::vector<double>;

struct Interval {
  double start = 0.0;
  double end = 0.0;

  double length() const { return end - start; }
  bool operator==(const Interval&) const = default;
};

// Ordered list of topic segments, each (start, end) in seconds.
using TopicBoundaryList = std::vector<Interval>;

// Unordered concept pair stored with the lexicographically smaller concept first.
using ConceptPair = std::pair<std::string, std::string>;

inline ConceptPair make_pair_key(std::string a, std::string b) {
  if (b < a) std::swap(a, b);
  return {std::move(a), std::move(b)};
}

inline std::string format_double(double x, int precision = 17) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.*g", precision, x);
  return buf;
}

inline double round_millis(double seconds) { return std::round(seconds * 1000.0) / 1000.0; }

inline std::uint64_t fnv1a64(std::string_view s, std::uint64_t h = 1469598103934665603ULL) {
  for (unsigned char c : s) {
    h ^= c;
    h *= 1099511628211ULL;
  }
  return h;
}

namespace text {

inline std::string to_lower(std::string_view s) {
  std::string out(s);
  for (char& c : out) c = static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
  return out;
}

// Conservative lemma: strips "-ing", "-es", "-s" when the remaining stem has at least 4 characters.
inline std::string strip_suffix(std::string w) {
  auto ends_with = [&](std::string_view suf) {
    return w.size() >= suf.size() && std::string_view(w).substr(w.size() - suf.size()) == suf;
  };
  if (ends_with("ing") && w.size() - 3 >= 4) return w.substr(0, w.size() - 3);
  if (ends_with("es") && w.size() - 2 >= 4) return w.substr(0, w.size() - 2);
  if (ends_with("s") && !ends_with("ss") && !ends_with("us") && !ends_with("is") &&
      w.size() - 1 >= 4)
    return w.substr(0, w.size() - 1);
  return w;
}

// Lower-cases, drops non-alphanumeric characters and applies strip_suffix.
// Returns an empty string for tokens made only of punctuation.
inline std::string normalize_token(std::string_view raw) {
  std::string w;
  w.reserve(raw.size());
  for (unsigned char c : raw) {
    if (std::isalnum(c)) w.push_back(static_cast<char>(std::tolower(c)));
  }
  // Repeated until stable so normalization is idempotent ("buildings" -> "build").
  for (;;) {
    auto next = strip_suffix(w);
    if (next == w) return w;
    w = std::move(next);
  }
}

inline std::vector<std::string> split_whitespace(std::string_view s) {
  std::vector<std::string> out;
  std::size_t i = 0;
  while (i < s.size()) {
    while (i < s.size() && std::isspace(static_cast<unsigned char>(s[i]))) ++i;
    std::size_t j = i;
    while (j < s.size() && !std::isspace(static_cast<unsigned char>(s[j]))) ++j;
    if (j > i) out.emplace_back(s.substr(i, j - i));
    i = j;
  }
  return out;
}

// Whitespace-split, normalized words with empty results dropped.
inline std::vector<std::string> normalize_words(std::string_view phrase) {
  std::vector<std::string> out;
  for (const auto& w : split_whitespace(phrase)) {
    auto n = normalize_token(w);
    if (!n.empty()) out.push_back(std::move(n));
  }
  return out;
}

inline std::string join(const std::vector<std::string>& words, std::string_view sep = " ") {
  std::string out;
  for (std::size_t i = 0; i < words.size(); ++i) {
    if (i) out += sep;
    out += words[i];
  }
  return out;
}

inline std::string canonical_phrase(std::string_view phrase) { return join(normalize_words(phrase)); }

inline bool is_stop_word(std::string_view w) {
  static constexpr std::string_view kStop[] = {
      "a",    "an",   "and",  "are",  "as",   "at",   "be",   "by",    "for",  "from",
      "how",  "in",   "into", "is",   "it",   "its",  "of",   "on",    "or",   "that",
      "the",  "this", "to",   "via",  "what", "when", "with", "using"};
  return std::find(std::begin(kStop), std::end(kStop), w) != std::end(kStop);
}

// normalize_words without stop words.
inline std::vector<std::string> content_words(std::string_view phrase) {
  std::vector<std::string> out;
  for (auto& w : normalize_words(phrase)) {
    if (!is_stop_word(w)) out.push_back(std::move(w));
  }
  return out;
}

}  // namespace text
}  // namespace lecseg
