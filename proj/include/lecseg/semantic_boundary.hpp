#pragma once

#include <algorithm>
#include <cmath>
#include <span>
#include <string>
#include <vector>

#include <json.hpp>

#include "lecseg/common.hpp"
#include "lecseg/corpus.hpp"
#include "lecseg/embedding.hpp"
#include "lecseg/slide_graph.hpp"

namespace lecseg {

// Primary-concept core of a cluster.
struct ClusterCentroid {
  Interval interval;
  ConceptGraph graph;
};

inline constexpr double kDefaultPrimaryFraction = 0.70;

// Vertices ranked by (tf desc, incident edge weight desc, name asc).
inline std::vector<std::string> rank_concepts(const ConceptGraph& g) {
  struct Row {
    std::string name;
    int tf;
    double incident;
  };
  std::vector<Row> rows;
  for (const auto& [v, tf] : g.vertices) rows.push_back({v, tf, g.incident_weight(v)});
  std::sort(rows.begin(), rows.end(), [](const Row& a, const Row& b) {
    if (a.tf != b.tf) return a.tf > b.tf;
    if (a.incident != b.incident) return a.incident > b.incident;
    return a.name < b.name;
  });
  std::vector<std::string> out;
  for (auto& r : rows) out.push_back(std::move(r.name));
  return out;
}

inline std::size_t primary_count(std::size_t n, double fraction) {
  if (n == 0) return 0;
  const auto k = static_cast<std::size_t>(std::ceil(fraction * static_cast<double>(n) - 1e-9));
  return std::clamp<std::size_t>(k, 1, n);
}

inline ClusterCentroid make_centroid(const SlideGraph& cluster, double primary_fraction = kDefaultPrimaryFraction) {
  if (!(primary_fraction > 0.0 && primary_fraction <= 1.0))
    throw std::invalid_argument("primary fraction must lie in (0, 1]");
  if (cluster.graph.empty()) throw std::invalid_argument("make_centroid: empty cluster");
  const auto ranked = rank_concepts(cluster.graph);
  const std::size_t keep = primary_count(ranked.size(), primary_fraction);
  ClusterCentroid c;
  c.interval = cluster.interval;
  for (std::size_t i = 0; i < keep; ++i) c.graph.vertices[ranked[i]] = cluster.graph.vertices.at(ranked[i]);
  for (const auto& [e, w] : cluster.graph.edges)
    if (c.graph.vertices.count(e.first) && c.graph.vertices.count(e.second)) c.graph.edges.emplace(e, w);
  return c;
}

// Sum of edge weights over N(N-1); 0 for graphs with fewer than two vertices.
inline double density(const ConceptGraph& g) {
  const double n = static_cast<double>(g.order());
  if (g.order() < 2) return 0.0;
  double total = 0.0;
  for (const auto& [e, w] : g.edges) total += w;
  return total / (n * (n - 1.0));
}

// Union of the centroids (tf summed, edges unioned) plus every knowledge-graph
// edge between two of its vertices that is not already present.
inline ConceptGraph combine(std::span<const ClusterCentroid* const> parts, const KnowledgeGraph& kg,
                            const SimilarityDictionary& dict) {
  ConceptGraph out;
  for (const auto* c : parts) {
    for (const auto& [v, tf] : c->graph.vertices) out.vertices[v] += tf;
    for (const auto& [e, w] : c->graph.edges) out.edges.emplace(e, w);
  }
  for (auto a = out.vertices.begin(); a != out.vertices.end(); ++a)
    for (auto b = std::next(a); b != out.vertices.end(); ++b)
      if (kg.has_edge(a->first, b->first)) out.edges.emplace(ConceptPair{a->first, b->first}, dict.weight(a->first, b->first));
  return out;
}

inline ConceptGraph combine(std::initializer_list<const ClusterCentroid*> parts, const KnowledgeGraph& kg,
                            const SimilarityDictionary& dict) {
  return combine(std::span<const ClusterCentroid* const>(parts.begin(), parts.size()), kg, dict);
}

inline bool shares_vertex(const ConceptGraph& a, const ConceptGraph& b) {
  auto x = a.vertices.begin(), y = b.vertices.begin();
  while (x != a.vertices.end() && y != b.vertices.end()) {
    if (x->first == y->first) return true;
    if (x->first < y->first)
      ++x;
    else
      ++y;
  }
  return false;
}

// How the "all three centroids" Case C guard combines its comparisons.
enum class CaseCStrictness {
  verbatim,  // density of the triple exceeds ANY pairwise density
  strict,    // density of the triple exceeds EVERY pairwise density
};

enum class TripleCase { A, C1, C234, B1, B2, none };

inline const char* to_string(TripleCase c) {
  switch (c) {
    case TripleCase::A: return "A";
    case TripleCase::C1: return "C-1";
    case TripleCase::C234: return "C-2/3/4";
    case TripleCase::B1: return "B-1";
    case TripleCase::B2: return "B-2";
    case TripleCase::none: return "none";
  }
  return "?";
}

struct TripleDecision {
  TripleCase kind = TripleCase::none;
  double d01 = 0.0, d02 = 0.0, d12 = 0.0, d012 = 0.0;
};

// One step of the boundary scan over centroids (c0, c1, c2), guards tested in order.
inline TripleDecision classify_triple(const ClusterCentroid& c0, const ClusterCentroid& c1, const ClusterCentroid& c2,
                                      const KnowledgeGraph& kg, const SimilarityDictionary& dict,
                                      CaseCStrictness strictness = CaseCStrictness::verbatim) {
  TripleDecision d;
  if (!shares_vertex(c0.graph, c1.graph) && !shares_vertex(c1.graph, c2.graph)) {
    d.kind = TripleCase::A;
    return d;
  }
  d.d01 = density(combine({&c0, &c1}, kg, dict));
  d.d02 = density(combine({&c0, &c2}, kg, dict));
  d.d12 = density(combine({&c1, &c2}, kg, dict));
  d.d012 = density(combine({&c0, &c1, &c2}, kg, dict));

  const bool triple_denser = strictness == CaseCStrictness::verbatim
                                 ? (d.d012 > d.d01 || d.d012 > d.d12 || d.d012 > d.d02)
                                 : (d.d012 > d.d01 && d.d012 > d.d12 && d.d012 > d.d02);
  if (d.d02 > d.d01 && d.d02 > d.d12)
    d.kind = TripleCase::C1;
  else if (triple_denser)
    d.kind = TripleCase::C234;
  else if (d.d01 > d.d12)
    d.kind = TripleCase::B1;
  else if (d.d12 > d.d01)
    d.kind = TripleCase::B2;
  return d;
}

struct BoundaryOptions {
  CaseCStrictness strictness = CaseCStrictness::verbatim;
  // When the scan stops with two centroids left unexamined, split them if they
  // share no concept.
  bool split_disjoint_tail = true;
};

struct BoundaryTrace {
  std::size_t index = 0;  // i of the triple
  TripleDecision decision;
};

// Density-comparison scan over consecutive centroid triples. Segments abut:
// each closes where the next one starts.
inline TopicBoundaryList topic_boundaries(std::span<const ClusterCentroid> centroids, const KnowledgeGraph& kg,
                                          const SimilarityDictionary& dict, const BoundaryOptions& opts = {},
                                          std::vector<BoundaryTrace>* trace = nullptr) {
  if (centroids.empty()) throw std::invalid_argument("topic_boundaries: no centroids");
  TopicBoundaryList out;
  double start_time = centroids[0].interval.start;
  auto close = [&](double end_time, double next_start) {
    out.push_back({start_time, end_time});
    start_time = next_start;
  };

  const std::size_t len = centroids.size();
  std::size_t i = 0;
  while (i + 2 < len) {
    const auto& c0 = centroids[i];
    const auto& c1 = centroids[i + 1];
    const auto& c2 = centroids[i + 2];
    const auto d = classify_triple(c0, c1, c2, kg, dict, opts.strictness);
    if (trace) trace->push_back({i, d});
    switch (d.kind) {
      case TripleCase::A:
        close(c0.interval.end, c1.interval.start);
        i += 1;
        break;
      case TripleCase::C1:
      case TripleCase::C234:
        i += 2;
        break;
      case TripleCase::B1:
        close(c1.interval.end, c2.interval.start);
        i += 2;
        break;
      case TripleCase::B2:
        close(c0.interval.end, c1.interval.start);
        i += 1;
        break;
      case TripleCase::none:
        i += 1;
        break;
    }
  }
  if (opts.split_disjoint_tail && i + 2 == len && !shares_vertex(centroids[i].graph, centroids[i + 1].graph))
    close(centroids[i].interval.end, centroids[i + 1].interval.start);
  out.push_back({start_time, centroids[len - 1].interval.end});

  // Gaps left by dropped slides belong to the earlier segment.
  for (std::size_t k = 0; k + 1 < out.size(); ++k) out[k].end = out[k + 1].start;
  return out;
}

inline nlohmann::ordered_json boundaries_to_json(const TopicBoundaryList& segments) {
  auto arr = nlohmann::ordered_json::array();
  for (const auto& s : segments) {
    nlohmann::ordered_json e;
    e["start"] = round_millis(s.start);
    e["end"] = round_millis(s.end);
    arr.push_back(std::move(e));
  }
  return arr;
}

inline TopicBoundaryList parse_boundaries(const std::string& text, const std::string& what = "segmentation") {
  const auto j = io::parse_json(text, what);
  auto out = io::with_schema(what, [&] {
    TopicBoundaryList segs;
    for (const auto& e : j) segs.push_back({e.at("start").get<double>(), e.at("end").get<double>()});
    return segs;
  });
  for (std::size_t k = 0; k < out.size(); ++k) {
    if (!(out[k].start < out[k].end)) throw InputError(what + ": segment with start >= end");
    if (k > 0 && out[k].start < out[k - 1].end - 1e-9) throw InputError(what + ": segments overlap or are unsorted");
  }
  return out;
}

}  // namespace lecseg
