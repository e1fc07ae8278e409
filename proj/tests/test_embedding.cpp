#include <gtest/gtest.h>

#include <cmath>
#include <map>

#include "lecseg/lecseg.hpp"

using namespace lecseg;

namespace {

TimedTranscript make(std::vector<std::string> toks) {
  const auto n = toks.size();
  return TimedTranscript::create(std::move(toks), {{0, 0.0}, {n, static_cast<double>(n)}});
}

std::string vec_line(const std::string& key, const Vector& v) {
  nlohmann::json j;
  j["key"] = key;
  j["vector"] = v;
  return j.dump() + "\n";
}

// Unit vector at angle acos(c) from (1, 0).
Vector at_cosine(double c) { return {c, std::sqrt(1.0 - c * c)}; }

}  // namespace

TEST(Cosine, HandExamples) {
  const Vector a{1, 2, 3};
  EXPECT_DOUBLE_EQ(cosine(a, a), 1.0);
  EXPECT_DOUBLE_EQ(cosine(Vector{1, 0}, Vector{0, 1}), 0.0);
  EXPECT_NEAR(cosine(Vector{1, 2}, Vector{2, 1}), 0.8, 1e-15);
  EXPECT_DOUBLE_EQ(cosine(Vector{0, 0}, Vector{1, 1}), 0.0);
  EXPECT_THROW(cosine(Vector{1}, Vector{1, 2}), std::invalid_argument);
}

TEST(FileProvider, ParsesHeaderAndChecksDimension) {
  const auto p = FileEmbeddingProvider::parse("{\"dimension\":2}\n" + vec_line("a", {1, 0}) + vec_line("b", {0, 1}));
  EXPECT_EQ(p.dimension(), 2u);
  EXPECT_TRUE(p.has("b"));
  EXPECT_THROW(FileEmbeddingProvider::parse(vec_line("a", {1, 0}) + vec_line("b", {0, 1, 2})), InputError);
  EXPECT_THROW(FileEmbeddingProvider::parse("{\"dimension\":3}\n" + vec_line("a", {1, 0})), InputError);
  EXPECT_THROW(FileEmbeddingProvider::parse("not json\n"), InputError);
  EXPECT_THROW(FileEmbeddingProvider::parse(""), InputError);
}

// Three co-occurrences of (alpha, beta) whose in-context vectors have cosines
// 0.2, 0.4 and 0.9. Occurrences are far apart so no cross pairs form.
TEST(Dictionary, AveragesAllCoOccurrences) {
  std::vector<std::string> toks;
  for (int k = 0; k < 3; ++k) {
    toks.push_back("alpha");
    toks.push_back("f" + std::to_string(k));
    toks.push_back("beta");
    for (int j = 0; j < 150; ++j) toks.push_back("pad" + std::to_string(k));
  }
  const auto t = make(toks);
  const auto mentions = find_concept_mentions(t, ConceptLexicon::create({"alpha", "beta"}));
  ASSERT_EQ(mentions.size(), 6u);

  // Brute-force pairing: every (alpha, beta) start pair within the window.
  const double cosines[] = {0.2, 0.4, 0.9};
  std::string file;
  int occ = 0;
  for (std::size_t i = 0; i < mentions.size(); ++i)
    for (std::size_t j = i + 1; j < mentions.size(); ++j) {
      if (mentions[j].token_index - mentions[i].token_index > 100) continue;
      if (mentions[i].concept_name == mentions[j].concept_name) continue;
      const auto c = chunk_for(mentions[i], mentions[j], t.size(), 10);
      const auto chunk = t.tokens_in(c.chunk);
      file += vec_line(context_key(chunk, c.first), {1.0, 0.0});
      file += vec_line(context_key(chunk, c.second), at_cosine(cosines[occ++]));
    }
  ASSERT_EQ(occ, 3);
  file += vec_line("alpha", {1, 0}) + vec_line("beta", {0, 1});
  const auto provider = FileEmbeddingProvider::parse(file);
  const auto dict = build_similarity_dictionary(t, mentions, provider);
  EXPECT_NEAR(dict.weight("alpha", "beta"), 0.5, 1e-12);
  EXPECT_EQ(dict.lookup("alpha", "beta"), dict.lookup("beta", "alpha"));
}

TEST(Dictionary, IdenticalVectorsScoreOne) {
  std::vector<std::string> toks{"alpha", "x", "x", "x", "x", "beta"};
  const auto t = make(toks);
  const auto mentions = find_concept_mentions(t, ConceptLexicon::create({"alpha", "beta"}));
  std::string file;
  const auto c = chunk_for(mentions[0], mentions[1], t.size(), 10);
  const auto chunk = t.tokens_in(c.chunk);
  file += vec_line(context_key(chunk, c.first), {0.3, 0.4});
  file += vec_line(context_key(chunk, c.second), {0.3, 0.4});
  file += vec_line("alpha", {1, 0}) + vec_line("beta", {0, 1});
  const auto dict = build_similarity_dictionary(t, mentions, FileEmbeddingProvider::parse(file));
  EXPECT_DOUBLE_EQ(dict.weight("alpha", "beta"), 1.0);
}

TEST(Dictionary, NeverCoOccurringPairsUseGlobalCosine) {
  std::vector<std::string> toks{"alpha"};
  for (int j = 0; j < 150; ++j) toks.push_back("pad");
  toks.push_back("beta");
  const auto t = make(toks);
  const auto mentions = find_concept_mentions(t, ConceptLexicon::create({"alpha", "beta"}));
  const auto p = FileEmbeddingProvider::parse(vec_line("alpha", {1, 2}) + vec_line("beta", {2, 1}));
  const auto dict = build_similarity_dictionary(t, mentions, p);
  EXPECT_NEAR(dict.weight("alpha", "beta"), 0.8, 1e-15);
}

TEST(Dictionary, ProviderFailureNamesThePair) {
  std::vector<std::string> toks{"alpha", "x", "beta"};
  const auto t = make(toks);
  const auto mentions = find_concept_mentions(t, ConceptLexicon::create({"alpha", "beta"}));
  const auto p = FileEmbeddingProvider::parse(vec_line("alpha", {1, 0}));
  try {
    build_similarity_dictionary(t, mentions, p);
    FAIL();
  } catch (const PipelineError& e) {
    EXPECT_EQ(e.module(), "embedding");
    EXPECT_NE(std::string(e.what()).find("alpha, beta"), std::string::npos);
  }
}

TEST(Dictionary, ParallelMatchesSerial) {
  synthetic::FixtureSpec spec;
  spec.seed = 5;
  spec.topics = 3;
  const auto fx = synthetic::generate(spec);
  const auto mentions = find_concept_mentions(fx.transcript, ConceptLexicon::create(fx.lexicon));
  // Materialize the fallback as a file so the per-pair (non-cached) path runs.
  const FallbackEmbedder fb(fx.transcript);
  std::string file;
  std::istringstream req(embedding_requests_jsonl(fx.transcript, mentions));
  std::string line;
  while (std::getline(req, line)) {
    const auto j = nlohmann::json::parse(line);
    const auto toks = j["tokens"].get<std::vector<std::string>>();
    const TokenRange span{j["span"][0].get<std::size_t>(), j["span"][1].get<std::size_t>()};
    file += vec_line(j["key"].get<std::string>(), fb.embed_in_context(toks, span));
  }
  const auto p = FileEmbeddingProvider::parse(file);
  DictionaryOptions serial, parallel;
  parallel.jobs = 4;
  const auto a = build_similarity_dictionary(fx.transcript, mentions, p, serial);
  const auto b = build_similarity_dictionary(fx.transcript, mentions, p, parallel);
  EXPECT_EQ(a.to_tsv(), b.to_tsv());
  // Same numbers as the cached fallback path.
  EXPECT_EQ(a.to_tsv(), build_similarity_dictionary(fx.transcript, mentions, fb).to_tsv());
}

TEST(Dictionary, TsvRoundTrip) {
  SimilarityDictionary d;
  d.set("b", "a", -0.25);
  d.set("a", "c", 0.1);
  const auto e = SimilarityDictionary::parse_tsv(d.to_tsv());
  EXPECT_EQ(e.to_tsv(), d.to_tsv());
  EXPECT_DOUBLE_EQ(e.weight("a", "b"), -0.25);
  EXPECT_THROW(SimilarityDictionary::parse_tsv("a\tb\n"), InputError);
}

TEST(Fallback, RepeatedSentenceSelfCosineIsOne) {
  std::vector<std::string> doc;
  for (int r = 0; r < 5; ++r)
    for (const char* w : {"the", "agile", "team", "plans", "a", "sprint"}) doc.push_back(w);
  const FallbackEmbedder fb({doc});
  for (const auto& w : fb.vocabulary()) {
    const auto v = fb.word_vector(w);
    EXPECT_NEAR(cosine(v, v), 1.0, 1e-12) << w;
  }
}

TEST(Fallback, EmptyCorpusThrows) {
  EXPECT_THROW(FallbackEmbedder(std::vector<std::vector<std::string>>{{"--", "!!"}}), InputError);
  EXPECT_THROW(FallbackEmbedder(std::vector<std::vector<std::string>>{}), InputError);
}

// Direct PPMI computation over the same corpus as an oracle, and the
// shared-context property it implies.
TEST(Fallback, MatchesDirectPpmiAndRewardsSharedContexts) {
  std::vector<std::string> doc;
  const std::vector<std::vector<std::string>> sentences = {
      {"car", "road", "drive", "wheel", "fast"},   {"auto", "road", "drive", "wheel", "fast"},
      {"banana", "fruit", "eat", "yellow", "sweet"}, {"car", "drive", "road", "engine"},
      {"auto", "engine", "drive", "road"},          {"banana", "eat", "sweet", "peel"}};
  for (int r = 0; r < 4; ++r)
    for (const auto& s : sentences)
      for (int pad = 0; pad < 3; ++pad) {
        doc.insert(doc.end(), s.begin(), s.end());
        for (int f = 0; f < 6; ++f) doc.push_back("filler" + std::to_string((r + pad + f) % 5));
      }
  const FallbackEmbedder fb({doc});

  std::vector<std::string> vocab(doc.begin(), doc.end());
  std::sort(vocab.begin(), vocab.end());
  vocab.erase(std::unique(vocab.begin(), vocab.end()), vocab.end());
  ASSERT_EQ(vocab, fb.vocabulary());
  const std::size_t V = vocab.size();
  std::map<std::string, std::size_t> id;
  for (std::size_t i = 0; i < V; ++i) id[vocab[i]] = i;
  std::vector<std::vector<double>> n(V, std::vector<double>(V, 0.0));
  std::vector<double> row(V, 0.0), col(V, 0.0);
  double total = 0.0;
  const long W = 10;
  for (long i = 0; i < static_cast<long>(doc.size()); ++i)
    for (long j = i - W; j <= i + W; ++j) {
      if (j < 0 || j >= static_cast<long>(doc.size()) || j == i) continue;
      n[id[doc[i]]][id[doc[j]]] += 1;
      row[id[doc[i]]] += 1;
      col[id[doc[j]]] += 1;
      total += 1;
    }
  for (const char* w : {"car", "auto", "banana", "road"}) {
    const auto v = fb.word_vector(w);
    const auto wi = id[w];
    for (std::size_t c = 0; c < V; ++c) {
      double expect = 0.0;
      if (n[wi][c] > 0) expect = std::max(0.0, std::log(n[wi][c] * total / (row[wi] * col[c])));
      EXPECT_NEAR(v[c], expect, 1e-12) << w << " / " << vocab[c];
    }
  }
  EXPECT_GT(cosine(fb.word_vector("car"), fb.word_vector("auto")),
            cosine(fb.word_vector("car"), fb.word_vector("banana")));
}

TEST(Fallback, InContextIsMeanOfSpanVectors) {
  std::vector<std::string> doc{"a", "b", "c", "a", "d", "b", "c", "e"};
  const FallbackEmbedder fb({doc});
  const auto m = fb.embed_in_context(doc, {1, 3});
  const auto b = fb.word_vector("b"), c = fb.word_vector("c");
  for (std::size_t i = 0; i < m.size(); ++i) EXPECT_DOUBLE_EQ(m[i], (b[i] + c[i]) / 2.0);
  EXPECT_EQ(fb.embed_global("b c"), m);
}

TEST(Requests, CoverEveryKeyTheBuilderAsks) {
  std::vector<std::string> toks{"alpha", "x", "beta", "y", "alpha", "gamma"};
  const auto t = make(toks);
  const auto mentions = find_concept_mentions(t, ConceptLexicon::create({"alpha", "beta", "gamma"}));
  std::istringstream req(embedding_requests_jsonl(t, mentions));
  std::string line, file;
  while (std::getline(req, line)) {
    const auto j = nlohmann::json::parse(line);
    file += vec_line(j["key"].get<std::string>(), {1.0, static_cast<double>(file.size() % 7)});
  }
  EXPECT_NO_THROW(build_similarity_dictionary(t, mentions, FileEmbeddingProvider::parse(file)));
}
