#pragma once

#include <algorithm>
#include <map>
#include <numeric>
#include <set>
#include <span>
#include <string>
#include <vector>

#include <json.hpp>

#include "lecseg/common.hpp"
#include "lecseg/corpus.hpp"
#include "lecseg/embedding.hpp"

namespace lecseg {

// Undirected weighted graph over concepts; vertex weight is term frequency.
struct ConceptGraph {
  std::map<std::string, int> vertices;
  std::map<ConceptPair, double> edges;

  bool empty() const { return vertices.empty(); }
  std::size_t order() const { return vertices.size(); }

  int total_tf() const {
    int s = 0;
    for (const auto& [v, tf] : vertices) s += tf;
    return s;
  }

  double incident_weight(const std::string& v) const {
    double s = 0.0;
    for (const auto& [e, w] : edges)
      if (e.first == v || e.second == v) s += w;
    return s;
  }

  // Connected components, each sorted, ordered by their smallest vertex.
  std::vector<std::vector<std::string>> components() const {
    std::map<std::string, std::string> parent;
    for (const auto& [v, tf] : vertices) parent[v] = v;
    auto find = [&](std::string x) {
      while (parent[x] != x) x = parent[x] = parent[parent[x]];
      return x;
    };
    for (const auto& [e, w] : edges) {
      auto a = find(e.first), b = find(e.second);
      if (a != b) parent[std::max(a, b)] = std::min(a, b);
    }
    std::map<std::string, std::vector<std::string>> groups;
    for (const auto& [v, tf] : vertices) groups[find(v)].push_back(v);
    std::vector<std::vector<std::string>> out;
    for (auto& [root, members] : groups) out.push_back(std::move(members));
    return out;
  }

  bool connected() const { return components().size() <= 1; }
};

// Joins components until the graph is connected: each round adds the single
// highest-weight dictionary edge between two different components (missing
// entries weigh 0; ties go to the lexicographically smallest pair).
inline void repair_connectivity(ConceptGraph& g, const SimilarityDictionary& dict) {
  for (;;) {
    const auto comps = g.components();
    if (comps.size() <= 1) return;
    std::map<std::string, std::size_t> comp_of;
    for (std::size_t c = 0; c < comps.size(); ++c)
      for (const auto& v : comps[c]) comp_of[v] = c;
    std::optional<ConceptPair> best;
    double best_w = 0.0;
    for (auto a = g.vertices.begin(); a != g.vertices.end(); ++a) {
      for (auto b = std::next(a); b != g.vertices.end(); ++b) {
        if (comp_of[a->first] == comp_of[b->first]) continue;
        const double w = dict.weight(a->first, b->first);
        // Pairs are visited in lexicographic order, so strict > keeps the smallest on ties.
        if (!best || w > best_w) {
          best = ConceptPair{a->first, b->first};
          best_w = w;
        }
      }
    }
    g.edges[*best] = best_w;
  }
}

struct SlideGraph {
  std::vector<std::string> slide_ids;
  Interval interval;
  ConceptGraph graph;

  // Slides without any concept mention are skipped by the merge step.
  bool skipped() const { return graph.empty(); }
};

// Mentions whose first token lies inside `range` (mentions sorted by token index).
inline std::span<const Mention> mentions_in(std::span<const Mention> mentions, TokenRange range) {
  auto lo = std::lower_bound(mentions.begin(), mentions.end(), range.begin,
                             [](const Mention& m, std::size_t i) { return m.token_index < i; });
  auto hi = std::lower_bound(lo, mentions.end(), range.end,
                             [](const Mention& m, std::size_t i) { return m.token_index < i; });
  return {lo, hi};
}

inline SlideGraph build_slide_graph(const SlideEntry& slide, const TimedTranscript& transcript,
                                    std::span<const Mention> mentions, const KnowledgeGraph& kg,
                                    const SimilarityDictionary& dict) {
  if (!(slide.start < slide.end)) throw InputError("slide '" + slide.slide_id + "' has start >= end");
  SlideGraph sg;
  sg.slide_ids = {slide.slide_id};
  sg.interval = slide.interval();
  const auto span = slice_transcript(transcript, slide.start, slide.end);
  for (const auto& m : mentions_in(mentions, span)) ++sg.graph.vertices[m.concept_name];
  for (auto a = sg.graph.vertices.begin(); a != sg.graph.vertices.end(); ++a)
    for (auto b = std::next(a); b != sg.graph.vertices.end(); ++b)
      if (kg.has_edge(a->first, b->first))
        sg.graph.edges[{a->first, b->first}] = dict.weight(a->first, b->first);
  repair_connectivity(sg.graph, dict);
  return sg;
}

inline SlideGraph build_slide_graph(const SlideEntry& slide, const TimedTranscript& transcript,
                                    const ConceptLexicon& lexicon, const KnowledgeGraph& kg,
                                    const SimilarityDictionary& dict) {
  const auto mentions = find_concept_mentions(transcript, lexicon);
  return build_slide_graph(slide, transcript, mentions, kg, dict);
}

// Weighted Jaccard of the term-frequency vectors; 0 for disjoint vertex sets.
inline double concept_change_score(const ConceptGraph& g1, const ConceptGraph& g2) {
  if (g1.empty() || g2.empty()) throw std::invalid_argument("concept_change_score: empty graph");
  long long total_min = 0, total_max = 0;
  auto a = g1.vertices.begin(), b = g2.vertices.begin();
  while (a != g1.vertices.end() || b != g2.vertices.end()) {
    if (b == g2.vertices.end() || (a != g1.vertices.end() && a->first < b->first)) {
      total_max += a->second;
      ++a;
    } else if (a == g1.vertices.end() || b->first < a->first) {
      total_max += b->second;
      ++b;
    } else {
      total_min += std::min(a->second, b->second);
      total_max += std::max(a->second, b->second);
      ++a;
      ++b;
    }
  }
  if (total_min == 0) return 0.0;
  return static_cast<double>(total_min) / static_cast<double>(total_max);
}

inline double concept_change_score(const SlideGraph& g1, const SlideGraph& g2) {
  return concept_change_score(g1.graph, g2.graph);
}

struct CcsMarking {
  std::vector<double> scores;  // one per consecutive pair of non-empty slide graphs
  double mean = 0.0;
  std::vector<std::size_t> potential_boundaries;  // j such that scores[j] < mean
};

struct MergeResult {
  std::vector<SlideGraph> clusters;
  CcsMarking marking;
};

// Vertex tf summed, edges unioned (an edge already present keeps its weight),
// interval widened to the hull.
inline void merge_into(SlideGraph& into, const SlideGraph& from) {
  for (const auto& [v, tf] : from.graph.vertices) into.graph.vertices[v] += tf;
  for (const auto& [e, w] : from.graph.edges) into.graph.edges.emplace(e, w);
  into.slide_ids.insert(into.slide_ids.end(), from.slide_ids.begin(), from.slide_ids.end());
  into.interval.start = std::min(into.interval.start, from.interval.start);
  into.interval.end = std::max(into.interval.end, from.interval.end);
}

// Scores every consecutive pair once, then merges each maximal run of
// transitions scoring at or above the mean. Slides without concepts are folded
// into the preceding graph (or the following one when they lead).
inline MergeResult mark_and_merge(std::span<const SlideGraph> graphs, const SimilarityDictionary& dict) {
  std::vector<SlideGraph> kept;
  std::vector<const SlideGraph*> leading_empty;
  for (const auto& g : graphs) {
    if (!g.skipped()) {
      kept.push_back(g);
      if (!leading_empty.empty()) {
        std::vector<std::string> ids;
        for (const auto* e : leading_empty) {
          kept.back().interval.start = std::min(kept.back().interval.start, e->interval.start);
          ids.insert(ids.end(), e->slide_ids.begin(), e->slide_ids.end());
        }
        kept.back().slide_ids.insert(kept.back().slide_ids.begin(), ids.begin(), ids.end());
        leading_empty.clear();
      }
    } else if (!kept.empty()) {
      kept.back().interval.end = std::max(kept.back().interval.end, g.interval.end);
      kept.back().slide_ids.insert(kept.back().slide_ids.end(), g.slide_ids.begin(), g.slide_ids.end());
    } else {
      leading_empty.push_back(&g);
    }
  }
  MergeResult out;
  if (kept.size() < 2) {
    out.clusters = std::move(kept);
    return out;
  }

  auto& m = out.marking;
  for (std::size_t j = 0; j + 1 < kept.size(); ++j) m.scores.push_back(concept_change_score(kept[j], kept[j + 1]));
  m.mean = std::accumulate(m.scores.begin(), m.scores.end(), 0.0) / static_cast<double>(m.scores.size());
  const double tie = 1e-12 * std::max(1.0, std::abs(m.mean));
  for (std::size_t j = 0; j < m.scores.size(); ++j)
    if (m.scores[j] < m.mean - tie) m.potential_boundaries.push_back(j);

  SlideGraph current = kept[0];
  std::size_t next_boundary = 0;
  for (std::size_t j = 0; j + 1 < kept.size(); ++j) {
    const bool boundary = next_boundary < m.potential_boundaries.size() && m.potential_boundaries[next_boundary] == j;
    if (boundary) {
      ++next_boundary;
      repair_connectivity(current.graph, dict);
      out.clusters.push_back(std::move(current));
      current = kept[j + 1];
    } else {
      merge_into(current, kept[j + 1]);
    }
  }
  repair_connectivity(current.graph, dict);
  out.clusters.push_back(std::move(current));
  return out;
}

inline nlohmann::ordered_json slide_graph_to_json(const SlideGraph& g) {
  nlohmann::ordered_json j;
  j["slide_ids"] = g.slide_ids;
  j["interval"] = {g.interval.start, g.interval.end};
  nlohmann::ordered_json verts = nlohmann::ordered_json::object();
  for (const auto& [v, tf] : g.graph.vertices) verts[v] = tf;
  j["vertices"] = std::move(verts);
  auto edges = nlohmann::ordered_json::array();
  for (const auto& [e, w] : g.graph.edges) edges.push_back({e.first, e.second, w});
  j["edges"] = std::move(edges);
  return j;
}

inline SlideGraph slide_graph_from_json(const nlohmann::json& j) {
  return io::with_schema("slide graph", [&] {
    SlideGraph g;
    g.slide_ids = j.at("slide_ids").get<std::vector<std::string>>();
    g.interval = {j.at("interval").at(0).get<double>(), j.at("interval").at(1).get<double>()};
    for (const auto& [v, tf] : j.at("vertices").items()) {
      const int n = tf.get<int>();
      if (n <= 0) throw InputError("slide graph vertex '" + v + "' has non-positive tf");
      g.graph.vertices[v] = n;
    }
    for (const auto& e : j.at("edges")) {
      const auto a = e.at(0).get<std::string>(), b = e.at(1).get<std::string>();
      if (!g.graph.vertices.count(a) || !g.graph.vertices.count(b))
        throw InputError("slide graph edge endpoint missing from vertices");
      g.graph.edges[make_pair_key(a, b)] = e.at(2).get<double>();
    }
    return g;
  });
}

}  // namespace lecseg
