#pragma once

#include <algorithm>
#include <cmath>
#include <random>
#include <set>
#include <string>
#include <vector>

#include <json.hpp>

#include "lecseg/common.hpp"
#include "lecseg/corpus.hpp"

namespace lecseg::synthetic {

// Planted-topic lecture generator. Every topic owns its concept vocabulary and
// context words; within a topic, subsections drift through their own words so
// that purely lexical segmenters see spurious valleys. Slides never straddle a
// topic change and the knowledge graph is block-diagonal over topics.
struct FixtureSpec {
  std::uint64_t seed = 1;
  std::size_t topics = 4;
  double min_topic_minutes = 10.0;
  double max_topic_minutes = 15.0;
  double words_per_second = 2.0;
  std::size_t min_slides_per_topic = 2;
  std::size_t max_slides_per_topic = 4;
  std::size_t concepts_per_topic = 8;
  double concept_rate = 0.18;
  double subsection_minutes = 4.0;
  std::size_t context_words_per_topic = 40;
  std::size_t words_per_subsection = 15;
};

struct Fixture {
  TimedTranscript transcript;
  SlideTimeline timeline;
  std::vector<std::string> lexicon;
  std::vector<ConceptPair> kg_edges;
  Syllabus syllabus;
  GroundTruth ground_truth;
};

namespace detail {

inline const std::vector<std::string>& filler_words() {
  static const std::vector<std::string> words = {
      "the", "a", "we", "this", "that", "so", "now", "here", "then", "and", "of", "to", "in", "it",
      "you", "can", "will", "be", "see", "let", "look", "at", "one", "way", "what", "if", "when",
      "how", "there", "very", "just", "also", "right", "okay", "about", "like", "have", "do", "our", "next"};
  return words;
}

class WordFactory {
 public:
  explicit WordFactory(std::mt19937_64& rng) : rng_(rng) {
    for (const auto& w : filler_words()) used_.insert(w);
  }

  // Three consonant-vowel syllables plus a closing consonant: never ends in "s" or "ing".
  std::string fresh() {
    static constexpr char kCons[] = "bdfgklmnprtvz";
    static constexpr char kVow[] = "aeiou";
    std::uniform_int_distribution<int> c(0, 12), v(0, 4);
    for (;;) {
      std::string w;
      for (int s = 0; s < 3; ++s) {
        w += kCons[c(rng_)];
        w += kVow[v(rng_)];
      }
      w += kCons[c(rng_)];
      if (used_.insert(w).second) return w;
    }
  }

 private:
  std::mt19937_64& rng_;
  std::set<std::string> used_;
};

// Splits `total` into `parts` positive integers, each near total/parts.
inline std::vector<std::size_t> split_evenly(std::size_t total, std::size_t parts, std::mt19937_64& rng) {
  std::vector<double> w(parts);
  std::uniform_real_distribution<double> jitter(0.8, 1.2);
  double sum = 0.0;
  for (auto& x : w) sum += (x = jitter(rng));
  std::vector<std::size_t> out(parts);
  std::size_t used = 0;
  for (std::size_t i = 0; i < parts; ++i) {
    out[i] = i + 1 == parts ? total - used : std::max<std::size_t>(1, static_cast<std::size_t>(std::round(total * w[i] / sum)));
    used += out[i];
  }
  return out;
}

}  // namespace detail

inline Fixture generate(const FixtureSpec& spec) {
  if (spec.topics < 1) throw std::invalid_argument("fixture needs at least one topic");
  if (spec.min_slides_per_topic < 1 || spec.max_slides_per_topic < spec.min_slides_per_topic)
    throw std::invalid_argument("bad slide count range");
  std::mt19937_64 rng(spec.seed);
  detail::WordFactory words(rng);
  std::uniform_real_distribution<double> unit(0.0, 1.0);

  struct Topic {
    std::vector<std::vector<std::string>> concepts;  // phrase words
    std::vector<double> concept_cdf;
    std::vector<std::string> context;
    std::string name;
    std::size_t tokens = 0;
  };
  std::vector<Topic> topics(spec.topics);
  Fixture fx;
  for (std::size_t t = 0; t < spec.topics; ++t) {
    auto& tp = topics[t];
    double total = 0.0;
    for (std::size_t c = 0; c < spec.concepts_per_topic; ++c) {
      std::vector<std::string> phrase{words.fresh()};
      if (unit(rng) < 0.3) phrase.push_back(words.fresh());
      tp.concepts.push_back(phrase);
      fx.lexicon.push_back(text::join(phrase));
      total += 1.0 / static_cast<double>(c + 1);
      tp.concept_cdf.push_back(total);
    }
    for (auto& x : tp.concept_cdf) x /= total;
    for (std::size_t c = 0; c < spec.context_words_per_topic; ++c) tp.context.push_back(words.fresh());
    tp.name = text::join(tp.concepts[0]) + " " + tp.context[0];
    const double minutes = spec.min_topic_minutes + (spec.max_topic_minutes - spec.min_topic_minutes) * unit(rng);
    tp.tokens = static_cast<std::size_t>(std::round(minutes * 60.0 * spec.words_per_second));
    fx.syllabus.push_back(tp.name);

    // Chain keeps every topic block connected; extra edges at random.
    for (std::size_t c = 1; c < tp.concepts.size(); ++c)
      fx.kg_edges.push_back(make_pair_key(text::join(tp.concepts[c - 1]), text::join(tp.concepts[c])));
    for (std::size_t a = 0; a < tp.concepts.size(); ++a)
      for (std::size_t b = a + 2; b < tp.concepts.size(); ++b)
        if (unit(rng) < 0.4) fx.kg_edges.push_back(make_pair_key(text::join(tp.concepts[a]), text::join(tp.concepts[b])));
  }

  // Tokens.
  std::vector<std::string> tokens;
  std::vector<std::size_t> topic_start;
  const auto& filler = detail::filler_words();
  const std::size_t subsection_tokens =
      std::max<std::size_t>(20, static_cast<std::size_t>(spec.subsection_minutes * 60.0 * spec.words_per_second));
  for (const auto& tp : topics) {
    topic_start.push_back(tokens.size());
    const std::size_t end = tokens.size() + tp.tokens;
    std::vector<std::string> sub;
    std::size_t sub_left = 0;
    while (tokens.size() < end) {
      if (sub_left == 0) {
        sub.clear();
        for (std::size_t k = 0; k < spec.words_per_subsection; ++k) sub.push_back(words.fresh());
        sub_left = subsection_tokens;
      }
      const double r = unit(rng);
      std::size_t emitted = 1;
      if (r < spec.concept_rate) {
        const double u = unit(rng);
        const auto c = static_cast<std::size_t>(std::lower_bound(tp.concept_cdf.begin(), tp.concept_cdf.end(), u) - tp.concept_cdf.begin());
        const auto& phrase = tp.concepts[std::min(c, tp.concepts.size() - 1)];
        tokens.insert(tokens.end(), phrase.begin(), phrase.end());
        emitted = phrase.size();
      } else if (r < spec.concept_rate + 0.40) {
        tokens.push_back(filler[std::uniform_int_distribution<std::size_t>(0, filler.size() - 1)(rng)]);
      } else if (r < spec.concept_rate + 0.62) {
        tokens.push_back(tp.context[std::uniform_int_distribution<std::size_t>(0, tp.context.size() - 1)(rng)]);
      } else {
        tokens.push_back(sub[std::uniform_int_distribution<std::size_t>(0, sub.size() - 1)(rng)]);
      }
      sub_left = sub_left > emitted ? sub_left - emitted : 0;
    }
  }
  topic_start.push_back(tokens.size());

  // Anchors every 8..30 tokens at a jittered speaking rate, plus an end anchor.
  std::vector<Anchor> anchors{{0, 0.0}};
  std::uniform_int_distribution<std::size_t> gap(8, 30);
  std::uniform_real_distribution<double> pace(0.85, 1.15);
  while (anchors.back().token_index < tokens.size()) {
    const std::size_t next = std::min(tokens.size(), anchors.back().token_index + gap(rng));
    const double dt = static_cast<double>(next - anchors.back().token_index) / spec.words_per_second * pace(rng);
    anchors.push_back({next, anchors.back().time + dt});
  }
  for (auto& a : anchors) a.time = round_millis(a.time);
  fx.transcript = TimedTranscript::create(tokens, anchors);

  // Slides and ground truth.
  std::size_t slide_no = 0;
  for (std::size_t t = 0; t < spec.topics; ++t) {
    const std::size_t n_tok = topic_start[t + 1] - topic_start[t];
    const auto n_slides = std::uniform_int_distribution<std::size_t>(spec.min_slides_per_topic, spec.max_slides_per_topic)(rng);
    const auto sizes = detail::split_evenly(n_tok, std::min(n_slides, n_tok), rng);
    std::size_t pos = topic_start[t];
    for (std::size_t s = 0; s < sizes.size(); ++s) {
      SlideEntry e;
      e.slide_id = "s" + std::to_string(++slide_no);
      e.start = fx.transcript.time_at(pos);
      pos += sizes[s];
      e.end = fx.transcript.time_at(pos);
      e.titles = {topics[t].name};
      if (s > 0) e.titles.push_back(topics[t].name + " continued");
      fx.timeline.push_back(std::move(e));
    }
    fx.ground_truth.push_back({topics[t].name, fx.transcript.time_at(topic_start[t]), fx.transcript.time_at(topic_start[t + 1])});
  }
  std::sort(fx.kg_edges.begin(), fx.kg_edges.end());
  fx.kg_edges.erase(std::unique(fx.kg_edges.begin(), fx.kg_edges.end()), fx.kg_edges.end());
  return fx;
}

inline KnowledgeGraph knowledge_graph_of(const Fixture& fx) {
  KnowledgeGraph kg;
  for (const auto& [a, b] : fx.kg_edges) kg.add_edge(a, b);
  return kg;
}

inline std::string kg_to_tsv(const Fixture& fx) {
  std::string out = "# conceptA\tconceptB\n";
  for (const auto& [a, b] : fx.kg_edges) out += a + "\t" + b + "\n";
  return out;
}

inline std::string ground_truth_to_json(const GroundTruth& gt) {
  auto arr = nlohmann::ordered_json::array();
  for (const auto& t : gt) {
    nlohmann::ordered_json e;
    e["topic"] = t.name;
    e["start"] = t.start;
    e["end"] = t.end;
    arr.push_back(std::move(e));
  }
  return arr.dump(1) + "\n";
}

}  // namespace lecseg::synthetic
