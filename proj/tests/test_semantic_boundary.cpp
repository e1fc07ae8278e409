#include <gtest/gtest.h>

#include <random>

#include "case_fixtures.hpp"
#include "lecseg/lecseg.hpp"

using namespace lecseg;
using lecseg::testing::case_fixtures;
using lecseg::testing::instantiate;
using lecseg::testing::scan_boundaries;

namespace {

ClusterCentroid centroid(double start, double end, std::initializer_list<std::pair<const char*, int>> tf) {
  ClusterCentroid c;
  c.interval = {start, end};
  for (const auto& [v, n] : tf) c.graph.vertices[v] = n;
  return c;
}

}  // namespace

TEST(Centroid, KeepsCeilingOfSeventyPercent) {
  SlideGraph g;
  g.interval = {0, 10};
  for (int i = 0; i < 10; ++i) g.graph.vertices["c" + std::to_string(i)] = 10 - i;
  const auto c = make_centroid(g);
  EXPECT_EQ(c.graph.order(), 7u);
  EXPECT_TRUE(c.graph.vertices.count("c0"));
  EXPECT_FALSE(c.graph.vertices.count("c7"));

  SlideGraph one;
  one.interval = {0, 1};
  one.graph.vertices["solo"] = 1;
  EXPECT_EQ(make_centroid(one).graph.order(), 1u);
  EXPECT_EQ(primary_count(3, 0.7), 3u);  // ceil(2.1)
  EXPECT_EQ(primary_count(20, 0.7), 14u);
}

TEST(Centroid, TfTieBrokenByIncidentWeight) {
  ConceptGraph g;
  g.vertices = {{"a", 5}, {"b", 2}, {"c", 2}, {"d", 1}};
  g.edges[{"a", "b"}] = 0.7;
  g.edges[{"b", "d"}] = 0.5;
  g.edges[{"a", "c"}] = 0.9;
  const auto r = rank_concepts(g);
  EXPECT_EQ(r, (std::vector<std::string>{"a", "b", "c", "d"}));  // b: 1.2, c: 0.9

  SlideGraph sg{{"s"}, {0, 1}, g};
  const auto c = make_centroid(sg, 0.5);
  EXPECT_EQ(c.graph.order(), 2u);
  EXPECT_EQ(c.graph.edges.size(), 1u);
  EXPECT_TRUE(c.graph.edges.count({"a", "b"}));
}

TEST(Centroid, FullTieFallsBackToName) {
  ConceptGraph g;
  g.vertices = {{"z", 1}, {"m", 1}, {"a", 1}};
  EXPECT_EQ(rank_concepts(g), (std::vector<std::string>{"a", "m", "z"}));
}

TEST(Density, DirectFormula) {
  ConceptGraph two;
  two.vertices = {{"a", 1}, {"b", 1}};
  two.edges[{"a", "b"}] = 0.8;
  EXPECT_DOUBLE_EQ(density(two), 0.4);

  ConceptGraph tri;
  tri.vertices = {{"a", 1}, {"b", 1}, {"c", 1}};
  tri.edges = {{{"a", "b"}, 1.0}, {{"a", "c"}, 1.0}, {{"b", "c"}, 1.0}};
  EXPECT_DOUBLE_EQ(density(tri), 0.5);

  tri.edges.clear();
  EXPECT_DOUBLE_EQ(density(tri), 0.0);
  ConceptGraph single;
  single.vertices = {{"a", 4}};
  EXPECT_DOUBLE_EQ(density(single), 0.0);
}

TEST(Combine, SharedConceptAppearsOnceWithSummedTf) {
  const auto c0 = centroid(0, 1, {{"x", 2}, {"a", 1}});
  const auto c1 = centroid(1, 2, {{"x", 3}, {"b", 1}});
  const auto g = combine({&c0, &c1}, KnowledgeGraph{}, {});
  EXPECT_EQ(g.order(), 3u);
  EXPECT_EQ(g.vertices.at("x"), 5);
}

TEST(Combine, DisjointWithoutKgCrossEdgesKeepsPartEdges) {
  auto c0 = centroid(0, 1, {{"a", 1}, {"b", 1}});
  auto c1 = centroid(1, 2, {{"c", 1}, {"d", 1}});
  c0.graph.edges[{"a", "b"}] = 0.6;
  c1.graph.edges[{"c", "d"}] = 0.4;
  const auto g = combine({&c0, &c1}, KnowledgeGraph{}, {});
  EXPECT_EQ(g.edges.size(), 2u);
  EXPECT_DOUBLE_EQ(density(g), 1.0 / 12.0);
}

// Every KG pair among the union vertices missing from the parts is added with
// its dictionary weight; the expected set is enumerated by brute force.
TEST(Combine, AddsKgCrossEdgesFromDictionary) {
  auto c0 = centroid(0, 1, {{"a", 1}, {"p", 1}});
  auto c1 = centroid(1, 2, {{"b", 1}, {"q", 1}});
  c0.graph.edges[{"a", "p"}] = 0.3;
  KnowledgeGraph kg;
  kg.add_edge("a", "b");
  kg.add_edge("p", "q");
  kg.add_edge("a", "p");
  kg.add_edge("a", "zzz");
  SimilarityDictionary dict;
  dict.set("a", "b", 0.9);
  dict.set("a", "p", 0.99);

  const auto g = combine({&c0, &c1}, kg, dict);
  std::map<ConceptPair, double> expect = c0.graph.edges;
  const std::vector<std::string> vs{"a", "b", "p", "q"};
  for (std::size_t i = 0; i < vs.size(); ++i)
    for (std::size_t j = i + 1; j < vs.size(); ++j)
      if (kg.has_edge(vs[i], vs[j]) && !expect.count({vs[i], vs[j]})) expect[{vs[i], vs[j]}] = dict.weight(vs[i], vs[j]);
  EXPECT_EQ(g.edges, expect);
  EXPECT_DOUBLE_EQ(g.edges.at({"a", "b"}), 0.9);
  EXPECT_DOUBLE_EQ(g.edges.at({"a", "p"}), 0.3);  // part edge kept
  EXPECT_DOUBLE_EQ(g.edges.at({"p", "q"}), 0.0);  // missing weight
}

TEST(CaseFixtures, DecisionsUnderBothReadings) {
  for (const auto& f : case_fixtures()) {
    const auto inst = instantiate(f);
    const auto& c = inst.centroids;
    const auto verbatim = classify_triple(c[0], c[1], c[2], inst.kg, inst.dict, CaseCStrictness::verbatim);
    const auto strict = classify_triple(c[0], c[1], c[2], inst.kg, inst.dict, CaseCStrictness::strict);
    EXPECT_EQ(verbatim.kind, f.expected) << f.name;
    EXPECT_EQ(scan_boundaries(inst, CaseCStrictness::verbatim), f.boundaries) << f.name;
    if (f.diverges) {
      EXPECT_EQ(strict.kind, f.strict_expected) << f.name;
      EXPECT_EQ(scan_boundaries(inst, CaseCStrictness::strict), f.strict_boundaries) << f.name;
    } else {
      EXPECT_EQ(strict.kind, f.expected) << f.name;
      EXPECT_EQ(scan_boundaries(inst, CaseCStrictness::strict), f.boundaries) << f.name;
    }
  }
}

TEST(CaseFixtures, DensitiesByHand) {
  const auto fx = case_fixtures();
  // B-1: unions {a,b,c,d}, {b,c,d,x,y,z}, {a,b,c,x,y,z}, all seven.
  const auto inst = instantiate(fx[1]);
  const auto d = classify_triple(inst.centroids[0], inst.centroids[1], inst.centroids[2], inst.kg, inst.dict);
  EXPECT_NEAR(d.d01, 4.5 / 12.0, 1e-15);
  EXPECT_NEAR(d.d12, 5.5 / 30.0, 1e-15);
  EXPECT_NEAR(d.d02, 5.4 / 30.0, 1e-15);
  EXPECT_NEAR(d.d012, 7.3 / 42.0, 1e-15);
}

TEST(TopicBoundaries, SingleCentroidIsOneSegment) {
  const std::vector<ClusterCentroid> cs{centroid(3, 50, {{"a", 1}})};
  const auto segs = topic_boundaries(cs, KnowledgeGraph{}, {});
  ASSERT_EQ(segs.size(), 1u);
  EXPECT_EQ(segs[0], (Interval{3, 50}));
}

TEST(TopicBoundaries, GapsBelongToTheEarlierSegment) {
  const std::vector<ClusterCentroid> cs{centroid(0, 10, {{"a", 1}}), centroid(12, 20, {{"b", 1}}),
                                        centroid(25, 30, {{"c", 1}})};
  BoundaryOptions verbatim;
  verbatim.split_disjoint_tail = false;
  const auto segs = topic_boundaries(cs, KnowledgeGraph{}, {}, verbatim);
  ASSERT_EQ(segs.size(), 2u);
  EXPECT_EQ(segs[0], (Interval{0, 12}));
  EXPECT_EQ(segs[1], (Interval{12, 30}));
}

TEST(TopicBoundaries, TailRuleSplitsDisjointLastPair) {
  const std::vector<ClusterCentroid> cs{centroid(0, 10, {{"a", 1}}), centroid(10, 20, {{"b", 1}}),
                                        centroid(20, 30, {{"c", 1}})};
  const auto with = topic_boundaries(cs, KnowledgeGraph{}, {});
  EXPECT_EQ(with.size(), 3u);
  BoundaryOptions off;
  off.split_disjoint_tail = false;
  EXPECT_EQ(topic_boundaries(cs, KnowledgeGraph{}, {}, off).size(), 2u);

  // Two centroids only: the scan never runs, the tail rule decides alone.
  const std::vector<ClusterCentroid> two{centroid(0, 10, {{"a", 1}}), centroid(10, 20, {{"a", 2}})};
  EXPECT_EQ(topic_boundaries(two, KnowledgeGraph{}, {}).size(), 1u);
}

TEST(TopicBoundaries, OutputTilesAndIsDeterministic) {
  std::mt19937_64 rng(23);
  for (int rep = 0; rep < 100; ++rep) {
    std::vector<ClusterCentroid> cs;
    KnowledgeGraph kg;
    SimilarityDictionary dict;
    double t = 0;
    for (int k = 0; k < 2 + static_cast<int>(rng() % 10); ++k) {
      ClusterCentroid c;
      c.interval = {t, t + 1 + rng() % 50};
      t = c.interval.end + (rng() % 3 == 0 ? 5 : 0);
      for (int v = 0; v < 1 + static_cast<int>(rng() % 4); ++v) c.graph.vertices["c" + std::to_string(rng() % 9)] = 1;
      cs.push_back(std::move(c));
    }
    for (int a = 0; a < 9; ++a)
      for (int b = a + 1; b < 9; ++b)
        if (rng() % 2) {
          kg.add_edge("c" + std::to_string(a), "c" + std::to_string(b));
          dict.set("c" + std::to_string(a), "c" + std::to_string(b), (rng() % 100) / 100.0);
        }
    for (auto mode : {CaseCStrictness::verbatim, CaseCStrictness::strict}) {
      BoundaryOptions o;
      o.strictness = mode;
      const auto segs = topic_boundaries(cs, kg, dict, o);
      EXPECT_EQ(segs.front().start, cs.front().interval.start);
      EXPECT_EQ(segs.back().end, cs.back().interval.end);
      for (std::size_t k = 0; k < segs.size(); ++k) {
        EXPECT_LT(segs[k].start, segs[k].end);
        if (k) EXPECT_EQ(segs[k].start, segs[k - 1].end);
        // Boundaries only ever fall on cluster starts.
        if (k) {
          bool on_cluster = false;
          for (const auto& c : cs) on_cluster |= c.interval.start == segs[k].start;
          EXPECT_TRUE(on_cluster);
        }
      }
      EXPECT_EQ(segs, topic_boundaries(cs, kg, dict, o));
    }
  }
}

TEST(BoundaryJson, RoundTripAndValidation) {
  const TopicBoundaryList segs{{0, 10.1234}, {10.1234, 20}};
  const auto back = parse_boundaries(boundaries_to_json(segs).dump());
  ASSERT_EQ(back.size(), 2u);
  EXPECT_DOUBLE_EQ(back[0].end, 10.123);
  EXPECT_THROW(parse_boundaries(R"([{"start":5,"end":1}])"), InputError);
  EXPECT_THROW(parse_boundaries(R"([{"start":0,"end":5},{"start":3,"end":8}])"), InputError);
}
