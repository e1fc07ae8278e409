#pragma once

#include <algorithm>
#include <cmath>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include <json.hpp>

#include "lecseg/common.hpp"
#include "lecseg/corpus.hpp"
#include "lecseg/fuse_annotate.hpp"

namespace lecseg {

// Overlapping time ratio: interval Jaccard, 0 for disjoint intervals.
inline double otr(const Interval& gr, const Interval& sys) {
  const double uni = std::max(gr.end, sys.end) - std::min(gr.start, sys.start);
  if (!(uni > 0.0)) throw std::invalid_argument("otr: zero-length union");
  const double inter = std::min(gr.end, sys.end) - std::max(gr.start, sys.start);
  return std::max(0.0, inter / uni);
}

enum class TopicMatching {
  automatic,  // by name when every ground-truth topic and every segment is named
  greedy,     // one-to-one, descending otr
  by_name,
};

struct TopicScore {
  std::string name;
  double otr = 0.0;
};

inline std::vector<TopicScore> per_topic_otr(const GroundTruth& gt, const std::vector<AnnotatedSegment>& segments,
                                             TopicMatching mode = TopicMatching::automatic) {
  if (gt.empty()) throw InputError("empty ground truth");
  if (mode == TopicMatching::automatic) {
    const bool named = !segments.empty() &&
                       std::all_of(gt.begin(), gt.end(), [](const auto& t) { return !t.name.empty(); }) &&
                       std::all_of(segments.begin(), segments.end(), [](const auto& s) { return s.topic.has_value(); });
    mode = named ? TopicMatching::by_name : TopicMatching::greedy;
  }
  std::vector<TopicScore> out;
  for (const auto& t : gt) out.push_back({t.name, 0.0});

  if (mode == TopicMatching::by_name) {
    for (std::size_t g = 0; g < gt.size(); ++g) {
      const auto key = text::canonical_phrase(gt[g].name);
      for (const auto& s : segments)
        if (s.topic && text::canonical_phrase(*s.topic) == key) out[g].otr = std::max(out[g].otr, otr(gt[g].interval(), {s.start, s.end}));
    }
    return out;
  }

  struct Cand {
    double v;
    std::size_t g, s;
  };
  std::vector<Cand> cands;
  for (std::size_t g = 0; g < gt.size(); ++g)
    for (std::size_t s = 0; s < segments.size(); ++s) {
      const double v = otr(gt[g].interval(), {segments[s].start, segments[s].end});
      if (v > 0.0) cands.push_back({v, g, s});
    }
  std::stable_sort(cands.begin(), cands.end(), [](const Cand& a, const Cand& b) {
    if (a.v != b.v) return a.v > b.v;
    if (a.g != b.g) return a.g < b.g;
    return a.s < b.s;
  });
  std::vector<bool> gt_used(gt.size(), false), seg_used(segments.size(), false);
  for (const auto& c : cands) {
    if (gt_used[c.g] || seg_used[c.s]) continue;
    gt_used[c.g] = seg_used[c.s] = true;
    out[c.g].otr = c.v;
  }
  return out;
}

inline double mean_otr(const GroundTruth& gt, const std::vector<AnnotatedSegment>& segments,
                       TopicMatching mode = TopicMatching::automatic) {
  const auto scores = per_topic_otr(gt, segments, mode);
  double s = 0.0;
  for (const auto& t : scores) s += t.otr;
  return s / static_cast<double>(scores.size());
}

// ---------------------------------------------------------------------------
// Pk and WindowDiff on a discretized span.
//
// A span of n units has boundary positions b in [1, n-1]; b separates unit b-1
// from unit b. Probe i compares units i and i+k for i in [0, n-k).

struct UnitSegmentation {
  std::size_t n = 0;
  std::vector<std::size_t> ref;  // sorted, unique
  std::vector<std::size_t> hyp;  // sorted, unique
  std::size_t ref_segments = 1;
};

inline std::vector<std::size_t> to_unit_boundaries(const TopicBoundaryList& segs, double origin, double unit, std::size_t n) {
  std::vector<std::size_t> out;
  for (std::size_t i = 1; i < segs.size(); ++i) {
    const double u = std::round((segs[i].start - origin) / unit);
    if (u >= 1.0 && u <= static_cast<double>(n) - 1.0) out.push_back(static_cast<std::size_t>(u));
  }
  std::sort(out.begin(), out.end());
  out.erase(std::unique(out.begin(), out.end()), out.end());
  return out;
}

inline UnitSegmentation discretize(const TopicBoundaryList& ref, const TopicBoundaryList& hyp, double unit = 1.0) {
  if (!(unit > 0.0)) throw std::invalid_argument("unit must be positive");
  if (ref.empty() || hyp.empty()) throw InputError("segmentation metrics need non-empty segmentations");
  const double origin = ref.front().start;
  if (std::abs(hyp.front().start - origin) > unit / 2 || std::abs(hyp.back().end - ref.back().end) > unit / 2)
    throw InputError("reference and hypothesis cover different spans");
  UnitSegmentation u;
  u.n = static_cast<std::size_t>(std::max(0.0, std::round((ref.back().end - origin) / unit)));
  u.ref = to_unit_boundaries(ref, origin, unit, u.n);
  u.hyp = to_unit_boundaries(hyp, origin, unit, u.n);
  u.ref_segments = u.ref.size() + 1;
  return u;
}

// Half the mean reference segment length, rounded, at least 1.
inline std::size_t auto_k(std::size_t n, std::size_t ref_segments) {
  const double k = std::round(static_cast<double>(n) / static_cast<double>(std::max<std::size_t>(1, ref_segments)) / 2.0);
  return std::max<std::size_t>(1, static_cast<std::size_t>(k));
}

namespace detail {
inline std::vector<std::size_t> prefix_counts(std::size_t n, std::span<const std::size_t> boundaries) {
  std::vector<std::size_t> mark(n + 1, 0), pre(n + 1, 0);
  for (auto b : boundaries)
    if (b < n) mark[b] = 1;
  for (std::size_t i = 1; i <= n; ++i) pre[i] = pre[i - 1] + mark[i];
  return pre;  // pre[i] = boundaries in [1, i]
}

inline void check_k(std::size_t n, std::size_t k) {
  if (k < 1) throw std::invalid_argument("k must be >= 1");
  if (k >= n) throw InputError("span of " + std::to_string(n) + " units is not longer than k = " + std::to_string(k));
}
}  // namespace detail

inline double pk_units(std::size_t n, std::span<const std::size_t> ref, std::span<const std::size_t> hyp, std::size_t k) {
  detail::check_k(n, k);
  const auto pr = detail::prefix_counts(n, ref), ph = detail::prefix_counts(n, hyp);
  std::size_t miss = 0;
  for (std::size_t i = 0; i + k < n; ++i) {
    const bool same_ref = pr[i + k] == pr[i];
    const bool same_hyp = ph[i + k] == ph[i];
    if (same_ref != same_hyp) ++miss;
  }
  return static_cast<double>(miss) / static_cast<double>(n - k);
}

inline double window_diff_units(std::size_t n, std::span<const std::size_t> ref, std::span<const std::size_t> hyp,
                                std::size_t k) {
  detail::check_k(n, k);
  const auto pr = detail::prefix_counts(n, ref), ph = detail::prefix_counts(n, hyp);
  std::size_t miss = 0;
  for (std::size_t i = 0; i + k < n; ++i)
    if (pr[i + k] - pr[i] != ph[i + k] - ph[i]) ++miss;
  return static_cast<double>(miss) / static_cast<double>(n - k);
}

inline double pk(const TopicBoundaryList& ref, const TopicBoundaryList& hyp, double unit = 1.0,
                 std::optional<std::size_t> k = std::nullopt) {
  const auto u = discretize(ref, hyp, unit);
  return pk_units(u.n, u.ref, u.hyp, k.value_or(auto_k(u.n, u.ref_segments)));
}

inline double window_diff(const TopicBoundaryList& ref, const TopicBoundaryList& hyp, double unit = 1.0,
                          std::optional<std::size_t> k = std::nullopt) {
  const auto u = discretize(ref, hyp, unit);
  return window_diff_units(u.n, u.ref, u.hyp, k.value_or(auto_k(u.n, u.ref_segments)));
}

struct PrecisionRecall {
  double precision = 0.0;
  double recall = 0.0;
  double f1 = 0.0;
};

// A hypothesis boundary is a hit when it lies within `tolerance` seconds of a
// still-unmatched reference boundary; closest pairs are matched first.
inline PrecisionRecall boundary_f1(std::span<const double> ref, std::span<const double> hyp, double tolerance = 30.0) {
  if (tolerance < 0.0) throw std::invalid_argument("tolerance must be >= 0");
  if (ref.empty() && hyp.empty()) return {1.0, 1.0, 1.0};
  struct Cand {
    double dist;
    std::size_t h, r;
  };
  std::vector<Cand> cands;
  for (std::size_t h = 0; h < hyp.size(); ++h)
    for (std::size_t r = 0; r < ref.size(); ++r) {
      const double d = std::abs(hyp[h] - ref[r]);
      if (d <= tolerance) cands.push_back({d, h, r});
    }
  std::stable_sort(cands.begin(), cands.end(), [](const Cand& a, const Cand& b) {
    if (a.dist != b.dist) return a.dist < b.dist;
    if (a.h != b.h) return a.h < b.h;
    return a.r < b.r;
  });
  std::vector<bool> hu(hyp.size(), false), ru(ref.size(), false);
  std::size_t tp = 0;
  for (const auto& c : cands) {
    if (hu[c.h] || ru[c.r]) continue;
    hu[c.h] = ru[c.r] = true;
    ++tp;
  }
  PrecisionRecall pr;
  pr.precision = hyp.empty() ? 0.0 : static_cast<double>(tp) / static_cast<double>(hyp.size());
  pr.recall = ref.empty() ? 0.0 : static_cast<double>(tp) / static_cast<double>(ref.size());
  pr.f1 = pr.precision + pr.recall > 0.0 ? 2.0 * pr.precision * pr.recall / (pr.precision + pr.recall) : 0.0;
  return pr;
}

inline std::vector<double> interior_boundaries(const TopicBoundaryList& segs) {
  std::vector<double> out;
  for (std::size_t i = 1; i < segs.size(); ++i) out.push_back(segs[i].start);
  return out;
}

struct EvalOptions {
  double tolerance = 30.0;
  double unit = 1.0;
  std::optional<std::size_t> k;
  TopicMatching matching = TopicMatching::automatic;
};

struct EvalReport {
  double mean_otr = 0.0;
  double pk = 0.0;
  double window_diff = 0.0;
  double precision = 0.0;
  double recall = 0.0;
  double f1 = 0.0;
  std::size_t k = 0;
  std::vector<TopicScore> per_topic;
};

// Ground truth as a segmentation of [start, end]: one boundary per topic start
// after the first; gaps between topics belong to the earlier topic.
inline TopicBoundaryList ground_truth_segmentation(const GroundTruth& gt, double start, double end) {
  TopicBoundaryList out;
  double s = start;
  for (std::size_t i = 1; i < gt.size(); ++i) {
    if (gt[i].start > s && gt[i].start < end) {
      out.push_back({s, gt[i].start});
      s = gt[i].start;
    }
  }
  out.push_back({s, end});
  return out;
}

inline EvalReport evaluate(const GroundTruth& gt, const std::vector<AnnotatedSegment>& segments, const EvalOptions& opts = {}) {
  if (gt.empty()) throw InputError("empty ground truth");
  if (segments.empty()) throw InputError("empty segmentation");
  EvalReport r;
  r.per_topic = per_topic_otr(gt, segments, opts.matching);
  for (const auto& t : r.per_topic) r.mean_otr += t.otr;
  r.mean_otr /= static_cast<double>(r.per_topic.size());

  const double start = std::min(gt.front().start, segments.front().start);
  double end = segments.back().end;
  for (const auto& t : gt) end = std::max(end, t.end);
  const auto ref = ground_truth_segmentation(gt, start, end);
  auto hyp = strip_names(segments);
  hyp.front().start = start;
  hyp.back().end = end;
  const auto u = discretize(ref, hyp, opts.unit);
  r.k = opts.k.value_or(auto_k(u.n, u.ref_segments));
  r.pk = pk_units(u.n, u.ref, u.hyp, r.k);
  r.window_diff = window_diff_units(u.n, u.ref, u.hyp, r.k);

  const auto pr = boundary_f1(interior_boundaries(ref), interior_boundaries(hyp), opts.tolerance);
  r.precision = pr.precision;
  r.recall = pr.recall;
  r.f1 = pr.f1;
  return r;
}

inline nlohmann::ordered_json report_to_json(const EvalReport& r) {
  nlohmann::ordered_json j;
  j["mean_otr"] = r.mean_otr;
  j["pk"] = r.pk;
  j["window_diff"] = r.window_diff;
  j["precision"] = r.precision;
  j["recall"] = r.recall;
  j["f1"] = r.f1;
  j["k"] = r.k;
  auto topics = nlohmann::ordered_json::array();
  for (const auto& t : r.per_topic) topics.push_back({{"name", t.name}, {"otr", t.otr}});
  j["per_topic"] = std::move(topics);
  return j;
}

inline std::string report_to_table(const EvalReport& r) {
  auto line = [](const std::string& label, double v) {
    char buf[128];
    std::snprintf(buf, sizeof buf, "%-40s %8.4f\n", label.c_str(), v);
    return std::string(buf);
  };
  std::string out;
  out += "Topic                                         OTR\n";
  out += "------------------------------------------------\n";
  for (const auto& t : r.per_topic) out += line(t.name.empty() ? "(unnamed)" : t.name.substr(0, 40), t.otr);
  out += "------------------------------------------------\n";
  out += line("Mean OTR", r.mean_otr);
  out += line("Precision", r.precision);
  out += line("Recall", r.recall);
  out += line("F1 Score", r.f1);
  out += line("Pk", r.pk);
  out += line("WindowDiff", r.window_diff);
  return out;
}

inline std::string report_to_csv(const EvalReport& r) {
  std::string out = "metric,value\n";
  auto row = [&](const char* name, double v) { out += std::string(name) + "," + format_double(v, 6) + "\n"; };
  row("mean_otr", r.mean_otr);
  row("pk", r.pk);
  row("window_diff", r.window_diff);
  row("precision", r.precision);
  row("recall", r.recall);
  row("f1", r.f1);
  for (const auto& t : r.per_topic) {
    std::string name = t.name;
    std::replace(name.begin(), name.end(), ',', ';');
    out += "otr:" + name + "," + format_double(t.otr, 6) + "\n";
  }
  return out;
}

}  // namespace lecseg
