#pragma once

#include <algorithm>
#include <cmath>
#include <map>
#include <optional>
#include <set>
#include <span>
#include <string>
#include <vector>

#include <json.hpp>

#include "lecseg/common.hpp"
#include "lecseg/corpus.hpp"
#include "lecseg/embedding.hpp"

namespace lecseg {

struct FusionConfig {
  double duration_threshold = 900.0;  // seconds; longer semantic segments are kept verbatim
  double pairing_min_overlap = 0.5;   // minimum IoU for a semantic/structural pair
};

inline double interval_iou(const Interval& a, const Interval& b) {
  const double inter = std::min(a.end, b.end) - std::max(a.start, b.start);
  const double uni = std::max(a.end, b.end) - std::min(a.start, b.start);
  if (inter <= 0.0 || uni <= 0.0) return 0.0;
  return inter / uni;
}

struct FusionPair {
  std::size_t semantic = 0;
  std::optional<std::size_t> structural;
};

// One-to-one pairing, greedily by descending IoU (ties: lower semantic, then
// lower structural index). Pairs below the minimum overlap stay unpaired.
inline std::vector<FusionPair> pair_segments(const TopicBoundaryList& structural, const TopicBoundaryList& semantic,
                                             double min_overlap) {
  struct Cand {
    double iou;
    std::size_t sem, str;
  };
  std::vector<Cand> cands;
  for (std::size_t s = 0; s < semantic.size(); ++s)
    for (std::size_t t = 0; t < structural.size(); ++t) {
      const double iou = interval_iou(semantic[s], structural[t]);
      if (iou > 0.0 && iou >= min_overlap) cands.push_back({iou, s, t});
    }
  std::stable_sort(cands.begin(), cands.end(), [](const Cand& a, const Cand& b) {
    if (a.iou != b.iou) return a.iou > b.iou;
    if (a.sem != b.sem) return a.sem < b.sem;
    return a.str < b.str;
  });
  std::vector<FusionPair> out(semantic.size());
  std::vector<bool> used(structural.size(), false);
  for (std::size_t s = 0; s < semantic.size(); ++s) out[s].semantic = s;
  for (const auto& c : cands) {
    if (out[c.sem].structural || used[c.str]) continue;
    out[c.sem].structural = c.str;
    used[c.str] = true;
  }
  return out;
}

// Semantic segments longer than the threshold pass through unchanged; shorter
// paired ones take the mean start and end of the pair. The result is sorted and
// neighbours that overlap or leave a gap meet at the midpoint.
inline TopicBoundaryList fuse(const TopicBoundaryList& structural, const TopicBoundaryList& semantic,
                              const FusionConfig& cfg = {}) {
  if (!(cfg.duration_threshold > 0.0)) throw std::invalid_argument("fusion threshold must be positive");
  if (!(cfg.pairing_min_overlap > 0.0 && cfg.pairing_min_overlap <= 1.0))
    throw std::invalid_argument("pairing overlap must lie in (0, 1]");
  if (structural.empty() || semantic.empty()) throw InputError("fuse: empty segmentation");
  constexpr double tol = 1e-6;
  if (std::abs(structural.front().start - semantic.front().start) > tol ||
      std::abs(structural.back().end - semantic.back().end) > tol)
    throw InputError("fuse: structural and semantic segmentations cover different spans");

  const auto pairs = pair_segments(structural, semantic, cfg.pairing_min_overlap);
  TopicBoundaryList out;
  for (const auto& p : pairs) {
    const auto& s = semantic[p.semantic];
    if (s.length() > cfg.duration_threshold || !p.structural) {
      out.push_back(s);
    } else {
      const auto& t = structural[*p.structural];
      out.push_back({(s.start + t.start) / 2.0, (s.end + t.end) / 2.0});
    }
  }
  std::stable_sort(out.begin(), out.end(), [](const Interval& a, const Interval& b) { return a.start < b.start; });

  out.front().start = semantic.front().start;
  out.back().end = semantic.back().end;
  for (std::size_t k = 0; k + 1 < out.size(); ++k) {
    if (out[k].end != out[k + 1].start) {
      const double mid = (out[k].end + out[k + 1].start) / 2.0;
      out[k].end = mid;
      out[k + 1].start = mid;
    }
  }
  // Averaging can collapse a short segment; fold empty ones into the previous segment.
  TopicBoundaryList tiled;
  for (const auto& seg : out) {
    if (seg.end - seg.start > 1e-9) {
      if (!tiled.empty()) tiled.back().end = seg.start;
      tiled.push_back(seg);
    } else if (!tiled.empty()) {
      tiled.back().end = std::max(tiled.back().end, seg.end);
    }
  }
  if (tiled.empty()) return {{semantic.front().start, semantic.back().end}};
  tiled.front().start = semantic.front().start;
  tiled.back().end = semantic.back().end;
  return tiled;
}

struct BagOfWords {
  std::vector<std::string> words;  // distinct, sorted
  std::vector<double> weights;     // normalized counts
};

inline BagOfWords make_bag(std::span<const std::string> words) {
  std::map<std::string, double> counts;
  for (const auto& w : words) counts[w] += 1.0;
  BagOfWords bag;
  for (const auto& [w, c] : counts) {
    bag.words.push_back(w);
    bag.weights.push_back(c / static_cast<double>(words.size()));
  }
  return bag;
}

// Relaxed Word Mover's Distance: the larger of the two one-sided bounds, each
// moving every word's mass to its nearest word on the other side.
inline double wmd(std::span<const std::string> wa, std::span<const std::string> wb, const EmbeddingProvider& provider) {
  if (wa.empty() || wb.empty()) throw std::invalid_argument("wmd: empty document after preprocessing");
  const auto a = make_bag(wa), b = make_bag(wb);
  std::vector<Vector> ea, eb;
  for (const auto& w : a.words) ea.push_back(provider.embed_global(w));
  for (const auto& w : b.words) eb.push_back(provider.embed_global(w));

  std::vector<std::vector<double>> cost(a.words.size(), std::vector<double>(b.words.size()));
  for (std::size_t i = 0; i < a.words.size(); ++i)
    for (std::size_t j = 0; j < b.words.size(); ++j)
      cost[i][j] = a.words[i] == b.words[j] ? 0.0 : euclidean(ea[i], eb[j]);

  double ab = 0.0, ba = 0.0;
  for (std::size_t i = 0; i < a.words.size(); ++i) {
    double m = cost[i][0];
    for (std::size_t j = 1; j < b.words.size(); ++j) m = std::min(m, cost[i][j]);
    ab += a.weights[i] * m;
  }
  for (std::size_t j = 0; j < b.words.size(); ++j) {
    double m = cost[0][j];
    for (std::size_t i = 1; i < a.words.size(); ++i) m = std::min(m, cost[i][j]);
    ba += b.weights[j] * m;
  }
  return std::max(ab, ba);
}

inline double wmd(std::string_view doc_a, std::string_view doc_b, const EmbeddingProvider& provider) {
  return wmd(text::content_words(doc_a), text::content_words(doc_b), provider);
}

struct AnnotatedSegment {
  double start = 0.0;
  double end = 0.0;
  std::optional<std::string> topic;
};

// Titles of slides whose midpoint lies in the segment, deduplicated on their
// normalized form.
inline std::vector<std::string> segment_titles(const SlideTimeline& timeline, const Interval& segment) {
  std::vector<std::string> out;
  std::set<std::string> seen;
  for (const auto& slide : timeline) {
    const double mid = (slide.start + slide.end) / 2.0;
    if (mid < segment.start || mid >= segment.end) continue;
    for (const auto& t : slide.titles) {
      if (text::content_words(t).empty()) continue;
      if (seen.insert(text::canonical_phrase(t)).second) out.push_back(t);
    }
  }
  return out;
}

// Chronological greedy naming: each segment takes the remaining syllabus entry
// with the highest sum over its slide titles of 1 / (1 + wmd), and that entry
// leaves the pool. Segments without titles stay unassigned.
inline std::vector<AnnotatedSegment> annotate(const TopicBoundaryList& segments, const SlideTimeline& timeline,
                                              const Syllabus& syllabus, const EmbeddingProvider& provider) {
  if (syllabus.empty()) throw InputError("annotate: empty syllabus");
  std::vector<std::size_t> pool;
  for (std::size_t k = 0; k < syllabus.size(); ++k)
    if (!text::content_words(syllabus[k]).empty()) pool.push_back(k);

  std::vector<AnnotatedSegment> out;
  for (const auto& seg : segments) {
    AnnotatedSegment a{seg.start, seg.end, std::nullopt};
    const auto titles = segment_titles(timeline, seg);
    if (!titles.empty() && !pool.empty()) {
      std::size_t best_pos = 0;
      double best = -1.0;
      for (std::size_t p = 0; p < pool.size(); ++p) {
        double score = 0.0;
        for (const auto& t : titles) score += 1.0 / (1.0 + wmd(syllabus[pool[p]], t, provider));
        if (score > best) {
          best = score;
          best_pos = p;
        }
      }
      a.topic = syllabus[pool[best_pos]];
      pool.erase(pool.begin() + static_cast<std::ptrdiff_t>(best_pos));
    }
    out.push_back(std::move(a));
  }
  return out;
}

inline nlohmann::ordered_json annotated_to_json(const std::vector<AnnotatedSegment>& segs) {
  auto arr = nlohmann::ordered_json::array();
  for (const auto& s : segs) {
    nlohmann::ordered_json e;
    e["topic"] = s.topic ? nlohmann::ordered_json(*s.topic) : nlohmann::ordered_json(nullptr);
    e["start"] = round_millis(s.start);
    e["end"] = round_millis(s.end);
    arr.push_back(std::move(e));
  }
  return arr;
}

// Accepts both annotated and plain segment lists.
inline std::vector<AnnotatedSegment> parse_segments(const std::string& text, const std::string& what = "segmentation") {
  const auto j = io::parse_json(text, what);
  return io::with_schema(what, [&] {
    std::vector<AnnotatedSegment> out;
    for (const auto& e : j) {
      AnnotatedSegment s{e.at("start").get<double>(), e.at("end").get<double>(), std::nullopt};
      if (!(s.start < s.end)) throw InputError(what + ": segment with start >= end");
      if (e.contains("topic") && e["topic"].is_string()) s.topic = e["topic"].get<std::string>();
      out.push_back(std::move(s));
    }
    return out;
  });
}

inline TopicBoundaryList strip_names(const std::vector<AnnotatedSegment>& segs) {
  TopicBoundaryList out;
  for (const auto& s : segs) out.push_back({s.start, s.end});
  return out;
}

}  // namespace lecseg
