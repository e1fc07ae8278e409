#include <gtest/gtest.h>

#include <random>

#include "lecseg/lecseg.hpp"

using namespace lecseg;

namespace {

TimedTranscript make(std::vector<std::string> toks, std::vector<Anchor> anchors) {
  return TimedTranscript::create(std::move(toks), std::move(anchors));
}

std::vector<std::string> words(std::size_t n, const std::string& w = "w") { return std::vector<std::string>(n, w); }

}  // namespace

TEST(Text, NormalizeStripsPunctuationAndSuffixes) {
  EXPECT_EQ(text::normalize_token("Models,"), "model");
  EXPECT_EQ(text::normalize_token("Testing"), "test");
  EXPECT_EQ(text::normalize_token("classes"), "class");
  EXPECT_EQ(text::normalize_token("class"), "class");
  EXPECT_EQ(text::normalize_token("status"), "status");
  EXPECT_EQ(text::normalize_token("analysis"), "analysis");
  EXPECT_EQ(text::normalize_token("uses"), "uses");  // stem too short
  EXPECT_EQ(text::normalize_token("--"), "");
}

TEST(Text, NormalizeIsIdempotent) {
  for (const char* w : {"buildings", "requirements", "testings", "processes", "design", "scrum"}) {
    const auto once = text::normalize_token(w);
    EXPECT_EQ(text::normalize_token(once), once) << w;
  }
}

TEST(Transcript, MinimalFileLoads) {
  const auto t = io::parse_transcript(R"({"tokens":["a","b","c","d"],"anchors":[[0,0.0],[2,4.0]]})");
  EXPECT_EQ(t.size(), 4u);
  EXPECT_EQ(t.anchors().size(), 2u);
  EXPECT_EQ(t.tokens()[3], "d");
}

TEST(Transcript, RejectsNonMonotonicAnchors) {
  EXPECT_THROW(io::parse_transcript(R"({"tokens":["a","b","c","d"],"anchors":[[2,4.0],[0,0.0]]})"), InputError);
  EXPECT_THROW(make(words(4), {{0, 0.0}, {2, 4.0}, {3, 4.0}}), InputError);
}

TEST(Transcript, RejectsEmptyTokenList) {
  try {
    io::parse_transcript(R"({"tokens":[],"anchors":[[0,0.0]]})");
    FAIL();
  } catch (const InputError& e) {
    EXPECT_NE(std::string(e.what()).find("empty transcript"), std::string::npos);
  }
}

TEST(Transcript, MalformedJsonIsInputError) {
  EXPECT_THROW(io::parse_transcript("{\"tokens\": [1,"), InputError);
  EXPECT_THROW(io::parse_transcript(R"({"tokens":["a"]})"), InputError);
}

TEST(Transcript, DurationAddsVirtualEndAnchor) {
  const auto t = TimedTranscript::create(words(4), {{0, 0.0}}, 8.0);
  EXPECT_DOUBLE_EQ(t.time_at(2), 4.0);
  EXPECT_DOUBLE_EQ(t.duration(), 8.0);
  EXPECT_THROW(TimedTranscript::create(words(4), {{0, 0.0}}), InputError);
}

TEST(Transcript, ExtrapolatesPastLastAnchor) {
  const auto t = make(words(10), {{0, 0.0}, {4, 8.0}});
  EXPECT_DOUBLE_EQ(t.time_at(6), 12.0);
  EXPECT_DOUBLE_EQ(t.duration(), 20.0);
}

TEST(Transcript, JsonRoundTrip) {
  const auto t = make({"x", "y", "z"}, {{0, 0.5}, {3, 3.5}});
  const auto u = io::parse_transcript(io::transcript_to_json(t));
  EXPECT_EQ(u.tokens(), t.tokens());
  EXPECT_DOUBLE_EQ(u.time_at(3), 3.5);
}

TEST(Mentions, LongestMatchWins) {
  const auto t = make({"the", "waterfall", "model"}, {{0, 0.0}, {3, 3.0}});
  const auto lex = ConceptLexicon::create({"waterfall model", "waterfall"});
  const auto m = find_concept_mentions(t, lex);
  ASSERT_EQ(m.size(), 1u);
  EXPECT_EQ(m[0].concept_name, "waterfall model");
  EXPECT_EQ(m[0].token_index, 1u);
  EXPECT_EQ(m[0].length, 2u);
}

TEST(Mentions, RepeatedMention) {
  const auto t = make({"scrum", "and", "scrum"}, {{0, 0.0}, {3, 3.0}});
  const auto m = find_concept_mentions(t, ConceptLexicon::create({"scrum"}));
  ASSERT_EQ(m.size(), 2u);
  EXPECT_EQ(m[0].token_index, 0u);
  EXPECT_EQ(m[1].token_index, 2u);
}

TEST(Mentions, CaseAndInflectionInsensitive) {
  const auto t = make({"Unit", "Tests,", "unit", "testing"}, {{0, 0.0}, {4, 4.0}});
  const auto m = find_concept_mentions(t, ConceptLexicon::create({"unit test"}));
  ASSERT_EQ(m.size(), 2u);
  EXPECT_EQ(m[1].token_index, 2u);
}

// 200 random filler tokens with 5 planted phrases; the oracle scans every
// substring and keeps the leftmost-longest non-overlapping matches.
TEST(Mentions, PlantedPhrasesMatchBruteForce) {
  std::mt19937_64 rng(42);
  const std::vector<std::string> filler = {"alpha", "beta", "gamma", "delta", "omega", "kappa"};
  const std::vector<std::vector<std::string>> phrases = {
      {"waterfall", "model"}, {"scrum"}, {"use", "case", "diagram"}, {"sprint"}, {"agile", "method"}};
  std::vector<std::string> toks(200);
  for (auto& t : toks) t = filler[rng() % filler.size()];
  const std::size_t slots[] = {3, 41, 90, 133, 170};
  for (std::size_t k = 0; k < 5; ++k)
    for (std::size_t j = 0; j < phrases[k].size(); ++j) toks[slots[k] + j] = phrases[k][j];
  const auto t = make(toks, {{0, 0.0}, {200, 100.0}});
  std::vector<std::string> lexs;
  for (const auto& p : phrases) lexs.push_back(text::join(p));
  const auto lex = ConceptLexicon::create(lexs);

  std::vector<std::pair<std::size_t, std::string>> oracle;
  std::size_t i = 0;
  while (i < toks.size()) {
    std::size_t best_len = 0;
    std::string best;
    for (std::size_t len = 1; i + len <= toks.size() && len <= 4; ++len) {
      std::vector<std::string> sub(toks.begin() + i, toks.begin() + i + len);
      for (const auto& p : phrases)
        if (sub == p && len > best_len) best_len = len, best = text::join(p);
    }
    if (best_len) {
      oracle.push_back({i, best});
      i += best_len;
    } else {
      ++i;
    }
  }
  const auto m = find_concept_mentions(t, lex);
  ASSERT_EQ(m.size(), 5u);
  ASSERT_EQ(oracle.size(), 5u);
  for (std::size_t k = 0; k < 5; ++k) {
    EXPECT_EQ(m[k].token_index, oracle[k].first);
    EXPECT_EQ(m[k].concept_name, oracle[k].second);
  }
}

TEST(Slice, WholeVideoReturnsAllTokens) {
  const auto t = make(words(10), {{0, 0.0}, {10, 20.0}});
  const auto r = slice_transcript(t, 0.0, 20.0);
  EXPECT_EQ(r.begin, 0u);
  EXPECT_EQ(r.end, 10u);
}

TEST(Slice, NoOverlapIsEmpty) {
  const auto t = make(words(10), {{0, 0.0}, {10, 20.0}});
  EXPECT_TRUE(slice_transcript(t, 50.0, 60.0).empty());
}

TEST(Slice, HandInterpolationAtTwoSecondsPerToken) {
  const auto t = make(words(10), {{0, 0.0}, {10, 20.0}});
  const auto r = slice_transcript(t, 10.0, 20.0);
  EXPECT_EQ(r.begin, 5u);
  EXPECT_EQ(r.end, 10u);
}

TEST(Slice, PartitionReproducesEveryTokenOnce) {
  std::mt19937_64 rng(7);
  for (int rep = 0; rep < 50; ++rep) {
    const std::size_t n = 5 + rng() % 200;
    std::vector<Anchor> anchors{{0, 0.0}};
    while (anchors.back().token_index < n) {
      const std::size_t next = std::min(n, anchors.back().token_index + 1 + rng() % 15);
      anchors.push_back({next, anchors.back().time + 0.1 + (rng() % 1000) / 100.0});
    }
    const auto t = make(words(n), anchors);
    std::vector<double> cuts{0.0};
    for (int c = 0; c < 6; ++c) cuts.push_back(cuts.back() + t.duration() / 7.0 * (0.5 + (rng() % 100) / 100.0));
    cuts.push_back(t.duration() + 1.0);
    std::sort(cuts.begin(), cuts.end());
    std::size_t expect = 0;
    for (std::size_t k = 0; k + 1 < cuts.size(); ++k) {
      const auto r = slice_transcript(t, cuts[k], cuts[k + 1]);
      if (r.empty()) continue;
      EXPECT_EQ(r.begin, expect);
      expect = r.end;
    }
    EXPECT_EQ(expect, n);
  }
}

TEST(Timeline, ValidatesOrderAndIds) {
  EXPECT_NO_THROW(io::parse_timeline(
      R"([{"slide_id":"s1","start":0,"end":5,"titles":["Intro"]},{"slide_id":"s2","start":5,"end":9,"titles":[]}])"));
  EXPECT_THROW(io::parse_timeline(R"([{"slide_id":"s1","start":0,"end":5},{"slide_id":"s1","start":5,"end":9}])"),
               InputError);
  EXPECT_THROW(io::parse_timeline(R"([{"slide_id":"s1","start":0,"end":5},{"slide_id":"s2","start":4,"end":9}])"),
               InputError);
  EXPECT_THROW(io::parse_timeline(R"([{"slide_id":"s1","start":5,"end":5}])"), InputError);
}

TEST(Lexicon, RejectsDuplicatesAndEmpty) {
  EXPECT_THROW(ConceptLexicon::create({"Use Cases", "use case"}), InputError);
  EXPECT_THROW(ConceptLexicon::create({"  ", "scrum"}), InputError);
  const auto lex = io::parse_lexicon("# concepts\nWaterfall Model\n\nscrum\n");
  EXPECT_EQ(lex.size(), 2u);
  EXPECT_TRUE(lex.contains("waterfall model"));
  EXPECT_EQ(io::parse_lexicon(R"(["a b", "c"])").size(), 2u);
}

TEST(KnowledgeGraphFile, DirectionDiscarded) {
  const auto kg = io::parse_knowledge_graph("# a\tb\nscrum\tsprint\nsprint\tscrum\n\nagile\tscrum\n");
  EXPECT_EQ(kg.edges().size(), 2u);
  EXPECT_TRUE(kg.has_edge("sprint", "scrum"));
  EXPECT_THROW(io::parse_knowledge_graph("a\ta\n"), InputError);
  EXPECT_THROW(io::parse_knowledge_graph("a b c\n"), InputError);
  EXPECT_THROW(kg.validate_against(ConceptLexicon::create({"scrum"})), InputError);
}

TEST(GroundTruthFile, SortedAndValid) {
  const auto gt = io::parse_ground_truth(R"([{"topic":"x","start":0,"end":10},{"topic":"y","start":10,"end":30}])");
  ASSERT_EQ(gt.size(), 2u);
  EXPECT_EQ(gt[1].name, "y");
  EXPECT_THROW(io::parse_ground_truth(R"([{"topic":"x","start":10,"end":5}])"), InputError);
  EXPECT_THROW(io::parse_ground_truth(R"([{"topic":"x","start":10,"end":20},{"topic":"y","start":0,"end":5}])"),
               InputError);
}

TEST(SyllabusFile, ArrayOrObject) {
  EXPECT_EQ(io::parse_syllabus(R"(["a","b"])").size(), 2u);
  EXPECT_EQ(io::parse_syllabus(R"({"topics":["a"]})").size(), 1u);
}
