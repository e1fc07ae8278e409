#pragma once

#include <algorithm>
#include <fstream>
#include <map>
#include <optional>
#include <set>
#include <span>
#include <sstream>
#include <string>
#include <unordered_map>
#include <vector>

#include <json.hpp>

#include "lecseg/common.hpp"

namespace lecseg {

struct Anchor {
  std::size_t token_index = 0;
  double time = 0.0;
};

struct TokenRange {
  std::size_t begin = 0;
  std::size_t end = 0;

  std::size_t size() const { return end - begin; }
  bool empty() const { return end <= begin; }
};

// Token stream with sparse (token_index, seconds) anchors. Immutable once created.
//
// Anchors may sit at index n (one past the last token), which acts as the end
// anchor. An explicit duration adds a virtual end anchor at index n. Tokens past
// the last anchor are extrapolated with the last inter-anchor rate.
class TimedTranscript {
 public:
  static TimedTranscript create(std::vector<std::string> tokens, std::vector<Anchor> anchors,
                                std::optional<double> duration = std::nullopt) {
    if (tokens.empty()) throw InputError("empty transcript");
    if (anchors.empty()) throw InputError("transcript has no time anchors");
    if (anchors.front().token_index != 0)
      throw InputError("first anchor must be at token index 0");
    for (std::size_t i = 0; i < anchors.size(); ++i) {
      if (!std::isfinite(anchors[i].time) || anchors[i].time < 0.0)
        throw InputError("anchor time must be finite and non-negative");
      if (anchors[i].token_index > tokens.size())
        throw InputError("anchor token index beyond transcript end");
      if (i > 0 && anchors[i].token_index <= anchors[i - 1].token_index)
        throw InputError("anchor token indices must be strictly increasing");
      if (i > 0 && anchors[i].time <= anchors[i - 1].time)
        throw InputError("anchor times must be strictly increasing");
    }
    TimedTranscript t;
    t.tokens_ = std::move(tokens);
    t.anchors_ = std::move(anchors);
    t.timeline_ = t.anchors_;
    const std::size_t n = t.tokens_.size();
    if (duration) {
      if (!std::isfinite(*duration)) throw InputError("duration must be finite");
      if (t.timeline_.back().token_index < n) {
        if (*duration <= t.timeline_.back().time)
          throw InputError("duration must exceed the last anchor time");
        t.timeline_.push_back({n, *duration});
      } else if (*duration < t.timeline_.back().time) {
        throw InputError("duration precedes the end anchor");
      }
    }
    if (t.timeline_.size() < 2)
      throw InputError("transcript needs at least two anchors or an explicit duration");
    t.normalized_.reserve(n);
    for (const auto& tok : t.tokens_) t.normalized_.push_back(text::normalize_token(tok));
    t.duration_ = std::max(duration.value_or(0.0), t.time_at(n));
    return t;
  }

  const std::vector<std::string>& tokens() const { return tokens_; }
  const std::vector<std::string>& normalized_tokens() const { return normalized_; }
  const std::vector<Anchor>& anchors() const { return anchors_; }
  std::size_t size() const { return tokens_.size(); }
  double duration() const { return duration_; }

  // Linear interpolation between the enclosing anchors; index may equal size().
  double time_at(std::size_t token_index) const {
    auto it = std::upper_bound(timeline_.begin(), timeline_.end(), token_index,
                               [](std::size_t idx, const Anchor& a) { return idx < a.token_index; });
    // it points past the enclosing left anchor; the first anchor is at 0 so it != begin.
    auto left = std::prev(it);
    if (left->token_index == token_index) return left->time;
    auto right = it;
    if (right == timeline_.end()) {
      right = left;
      left = std::prev(left);
      const double rate = (right->time - left->time) /
                          static_cast<double>(right->token_index - left->token_index);
      return right->time + rate * static_cast<double>(token_index - right->token_index);
    }
    const double span_words = static_cast<double>(right->token_index - left->token_index);
    const double preceding = static_cast<double>(token_index - left->token_index);
    return left->time + ((right->time - left->time) / span_words) * preceding;
  }

  std::span<const std::string> tokens_in(TokenRange r) const {
    return std::span<const std::string>(tokens_).subspan(r.begin, r.size());
  }

 private:
  std::vector<std::string> tokens_;
  std::vector<std::string> normalized_;
  std::vector<Anchor> anchors_;
  std::vector<Anchor> timeline_;
  double duration_ = 0.0;
};

// Video time of a token: t_S + ((t_{S+1} - t_S) / W) * W_p between enclosing anchors.
inline double map_token_time(const TimedTranscript& transcript, std::size_t token_index) {
  if (token_index > transcript.size())
    throw std::out_of_range("token index outside transcript");
  return transcript.time_at(token_index);
}

// Tokens whose interpolated time lies in [start, end).
inline TokenRange slice_transcript(const TimedTranscript& transcript, double start, double end) {
  const std::size_t n = transcript.size();
  auto first_at_or_after = [&](double t) {
    std::size_t lo = 0, hi = n;
    while (lo < hi) {
      const std::size_t mid = lo + (hi - lo) / 2;
      if (transcript.time_at(mid) < t)
        lo = mid + 1;
      else
        hi = mid;
    }
    return lo;
  };
  if (!(end > start)) return {0, 0};
  const std::size_t b = first_at_or_after(start);
  const std::size_t e = first_at_or_after(end);
  return {b, std::max(b, e)};
}

struct SlideEntry {
  std::string slide_id;
  double start = 0.0;
  double end = 0.0;
  std::vector<std::string> titles;

  Interval interval() const { return {start, end}; }
};

using SlideTimeline = std::vector<SlideEntry>;

inline void validate_timeline(const SlideTimeline& timeline) {
  std::set<std::string> ids;
  for (std::size_t i = 0; i < timeline.size(); ++i) {
    const auto& e = timeline[i];
    if (!(e.start < e.end)) throw InputError("slide '" + e.slide_id + "' has start >= end");
    if (i > 0 && e.start < timeline[i - 1].end)
      throw InputError("slide '" + e.slide_id + "' overlaps or precedes the previous slide");
    if (!ids.insert(e.slide_id).second)
      throw InputError("duplicate slide id '" + e.slide_id + "'");
  }
}

// Canonical (lower-cased, lemma-stripped) concept phrases.
class ConceptLexicon {
 public:
  ConceptLexicon() = default;

  static ConceptLexicon create(const std::vector<std::string>& raw_phrases) {
    ConceptLexicon lex;
    for (const auto& raw : raw_phrases) {
      auto words = text::normalize_words(raw);
      if (words.empty()) throw InputError("empty concept phrase '" + raw + "'");
      auto canon = text::join(words);
      if (lex.words_.count(canon)) throw InputError("duplicate concept '" + canon + "'");
      lex.phrases_.push_back(canon);
      lex.words_.emplace(canon, std::move(words));
    }
    for (const auto& [canon, words] : lex.words_) lex.by_first_word_[words.front()].push_back(canon);
    for (auto& [first, list] : lex.by_first_word_) {
      std::sort(list.begin(), list.end(), [&](const std::string& a, const std::string& b) {
        const auto la = lex.words_.at(a).size(), lb = lex.words_.at(b).size();
        return la != lb ? la > lb : a < b;
      });
    }
    return lex;
  }

  const std::vector<std::string>& phrases() const { return phrases_; }
  bool contains(const std::string& canonical) const { return words_.count(canonical) > 0; }
  std::size_t size() const { return phrases_.size(); }
  const std::vector<std::string>& words_of(const std::string& canonical) const {
    return words_.at(canonical);
  }
  // Candidate phrases whose first word is `word`, longest first.
  const std::vector<std::string>* candidates(const std::string& word) const {
    auto it = by_first_word_.find(word);
    return it == by_first_word_.end() ? nullptr : &it->second;
  }

 private:
  std::vector<std::string> phrases_;
  std::map<std::string, std::vector<std::string>> words_;
  std::unordered_map<std::string, std::vector<std::string>> by_first_word_;
};

struct Mention {
  std::string concept_name;
  std::size_t token_index = 0;
  std::size_t length = 1;  // tokens covered

  bool operator==(const Mention&) const = default;
};

// Longest-match-first, left-to-right, non-overlapping concept occurrences.
inline std::vector<Mention> find_concept_mentions(const TimedTranscript& transcript,
                                                  const ConceptLexicon& lexicon) {
  const auto& norm = transcript.normalized_tokens();
  std::vector<Mention> out;
  std::size_t i = 0;
  while (i < norm.size()) {
    std::size_t advance = 1;
    if (const auto* cands = norm[i].empty() ? nullptr : lexicon.candidates(norm[i])) {
      for (const auto& canon : *cands) {
        const auto& words = lexicon.words_of(canon);
        if (i + words.size() > norm.size()) continue;
        if (std::equal(words.begin(), words.end(), norm.begin() + static_cast<std::ptrdiff_t>(i))) {
          out.push_back({canon, i, words.size()});
          advance = words.size();
          break;
        }
      }
    }
    i += advance;
  }
  return out;
}

// Undirected concept graph; edge direction from the source file is discarded.
class KnowledgeGraph {
 public:
  void add_edge(const std::string& a, const std::string& b) {
    if (a == b) throw InputError("self-loop on concept '" + a + "'");
    nodes_.insert(a);
    nodes_.insert(b);
    edges_.insert(make_pair_key(a, b));
  }
  bool has_edge(const std::string& a, const std::string& b) const {
    return edges_.count(make_pair_key(a, b)) > 0;
  }
  const std::set<std::string>& nodes() const { return nodes_; }
  const std::set<ConceptPair>& edges() const { return edges_; }

  void validate_against(const ConceptLexicon& lexicon) const {
    for (const auto& n : nodes_)
      if (!lexicon.contains(n))
        throw InputError("knowledge graph concept '" + n + "' is not in the lexicon");
  }

 private:
  std::set<std::string> nodes_;
  std::set<ConceptPair> edges_;
};

struct GroundTruthTopic {
  std::string name;
  double start = 0.0;
  double end = 0.0;

  Interval interval() const { return {start, end}; }
};

using GroundTruth = std::vector<GroundTruthTopic>;
using Syllabus = std::vector<std::string>;

inline void validate_ground_truth(const GroundTruth& gt) {
  for (std::size_t i = 0; i < gt.size(); ++i) {
    if (!(gt[i].start < gt[i].end)) throw InputError("ground-truth topic with start >= end");
    if (i > 0 && gt[i].start < gt[i - 1].start)
      throw InputError("ground-truth topics must be sorted by start");
  }
}

// ---------------------------------------------------------------------------
// File ingestion

namespace io {

inline std::string read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw InputError("cannot open '" + path + "'");
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

inline void write_file(const std::string& path, const std::string& contents) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw InputError("cannot write '" + path + "'");
  out << contents;
}

inline nlohmann::json parse_json(const std::string& text, const std::string& what) {
  try {
    return nlohmann::json::parse(text);
  } catch (const nlohmann::json::parse_error& e) {
    throw InputError("parse error in " + what + ": " + e.what());
  }
}

template <typename F>
auto with_schema(const std::string& what, F&& f) -> decltype(f()) {
  try {
    return f();
  } catch (const nlohmann::json::exception& e) {
    throw InputError("malformed " + what + ": " + e.what());
  }
}

inline TimedTranscript parse_transcript(const std::string& text, const std::string& what = "transcript") {
  const auto j = parse_json(text, what);
  return with_schema(what, [&] {
    if (!j.is_object()) throw InputError("malformed " + what + ": expected an object");
    auto tokens = j.at("tokens").get<std::vector<std::string>>();
    std::vector<Anchor> anchors;
    for (const auto& a : j.at("anchors")) {
      if (!a.is_array() || a.size() != 2) throw InputError("malformed " + what + ": bad anchor");
      const auto idx = a[0].get<long long>();
      if (idx < 0) throw InputError("negative anchor index");
      anchors.push_back({static_cast<std::size_t>(idx), a[1].get<double>()});
    }
    std::optional<double> duration;
    if (j.contains("duration")) duration = j["duration"].get<double>();
    return TimedTranscript::create(std::move(tokens), std::move(anchors), duration);
  });
}

inline TimedTranscript load_transcript(const std::string& path) {
  return parse_transcript(read_file(path), "transcript '" + path + "'");
}

inline std::string transcript_to_json(const TimedTranscript& t, std::optional<double> duration = {}) {
  nlohmann::ordered_json j;
  j["tokens"] = t.tokens();
  auto anchors = nlohmann::ordered_json::array();
  for (const auto& a : t.anchors()) anchors.push_back({a.token_index, a.time});
  j["anchors"] = std::move(anchors);
  if (duration) j["duration"] = *duration;
  return j.dump() + "\n";
}

inline SlideTimeline parse_timeline(const std::string& text, const std::string& what = "timeline") {
  const auto j = parse_json(text, what);
  auto timeline = with_schema(what, [&] {
    SlideTimeline out;
    for (const auto& e : j) {
      SlideEntry s;
      const auto& id = e.at("slide_id");
      s.slide_id = id.is_string() ? id.get<std::string>() : id.dump();
      s.start = e.at("start").get<double>();
      s.end = e.at("end").get<double>();
      if (e.contains("titles")) s.titles = e["titles"].get<std::vector<std::string>>();
      out.push_back(std::move(s));
    }
    return out;
  });
  validate_timeline(timeline);
  return timeline;
}

inline SlideTimeline load_timeline(const std::string& path) {
  return parse_timeline(read_file(path), "timeline '" + path + "'");
}

inline std::string timeline_to_json(const SlideTimeline& timeline) {
  auto arr = nlohmann::ordered_json::array();
  for (const auto& s : timeline) {
    nlohmann::ordered_json e;
    e["slide_id"] = s.slide_id;
    e["start"] = s.start;
    e["end"] = s.end;
    e["titles"] = s.titles;
    arr.push_back(std::move(e));
  }
  return arr.dump(1) + "\n";
}

// Plain text (one phrase per line, '#' comments) or a JSON array of strings.
inline ConceptLexicon parse_lexicon(const std::string& text, const std::string& what = "lexicon") {
  const auto first = text.find_first_not_of(" \t\r\n");
  if (first != std::string::npos && text[first] == '[') {
    const auto j = parse_json(text, what);
    return ConceptLexicon::create(with_schema(what, [&] { return j.get<std::vector<std::string>>(); }));
  }
  std::vector<std::string> phrases;
  std::istringstream in(text);
  std::string line;
  while (std::getline(in, line)) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    const auto p = line.find_first_not_of(" \t");
    if (p == std::string::npos || line[p] == '#') continue;
    phrases.push_back(line);
  }
  return ConceptLexicon::create(phrases);
}

inline ConceptLexicon load_lexicon(const std::string& path) {
  return parse_lexicon(read_file(path), "lexicon '" + path + "'");
}

// One edge per line "conceptA<TAB>conceptB"; '#' starts a comment line.
inline KnowledgeGraph parse_knowledge_graph(const std::string& text) {
  KnowledgeGraph kg;
  std::istringstream in(text);
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    const auto p = line.find_first_not_of(" \t");
    if (p == std::string::npos || line[p] == '#') continue;
    const auto tab = line.find('\t');
    if (tab == std::string::npos || line.find('\t', tab + 1) != std::string::npos)
      throw InputError("knowledge graph line " + std::to_string(lineno) + ": expected two tab-separated concepts");
    const auto a = text::canonical_phrase(line.substr(0, tab));
    const auto b = text::canonical_phrase(line.substr(tab + 1));
    if (a.empty() || b.empty())
      throw InputError("knowledge graph line " + std::to_string(lineno) + ": empty concept");
    kg.add_edge(a, b);
  }
  return kg;
}

inline KnowledgeGraph load_knowledge_graph(const std::string& path) {
  return parse_knowledge_graph(read_file(path));
}

inline Syllabus parse_syllabus(const std::string& text, const std::string& what = "syllabus") {
  const auto j = parse_json(text, what);
  return with_schema(what, [&] {
    const auto& list = j.is_object() ? j.at("topics") : j;
    auto s = list.get<std::vector<std::string>>();
    if (s.empty()) throw InputError(what + " is empty");
    return s;
  });
}

inline Syllabus load_syllabus(const std::string& path) {
  return parse_syllabus(read_file(path), "syllabus '" + path + "'");
}

inline GroundTruth parse_ground_truth(const std::string& text, const std::string& what = "ground truth") {
  const auto j = parse_json(text, what);
  auto gt = with_schema(what, [&] {
    GroundTruth out;
    for (const auto& e : j) {
      GroundTruthTopic t;
      t.name = e.value("topic", std::string{});
      t.start = e.at("start").get<double>();
      t.end = e.at("end").get<double>();
      out.push_back(std::move(t));
    }
    return out;
  });
  validate_ground_truth(gt);
  return gt;
}

inline GroundTruth load_ground_truth(const std::string& path) {
  return parse_ground_truth(read_file(path), "ground truth '" + path + "'");
}

}  // namespace io
}  // namespace lecseg
