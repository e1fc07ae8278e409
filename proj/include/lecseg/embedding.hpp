#pragma once

#include <cmath>
#include <future>
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
#include "lecseg/corpus.hpp"

namespace lecseg {

// Cosine similarity; 0 when either vector is all-zero.
inline double cosine(std::span<const double> u, std::span<const double> v) {
  if (u.size() != v.size())
    throw std::invalid_argument("cosine: dimension mismatch (" + std::to_string(u.size()) + " vs " +
                                std::to_string(v.size()) + ")");
  double dot = 0.0, nu = 0.0, nv = 0.0;
  for (std::size_t i = 0; i < u.size(); ++i) {
    dot += u[i] * v[i];
    nu += u[i] * u[i];
    nv += v[i] * v[i];
  }
  if (nu == 0.0 || nv == 0.0) return 0.0;
  const double c = dot / (std::sqrt(nu) * std::sqrt(nv));
  return std::clamp(c, -1.0, 1.0);
}

inline double euclidean(std::span<const double> u, std::span<const double> v) {
  if (u.size() != v.size()) throw std::invalid_argument("euclidean: dimension mismatch");
  double s = 0.0;
  for (std::size_t i = 0; i < u.size(); ++i) s += (u[i] - v[i]) * (u[i] - v[i]);
  return std::sqrt(s);
}

class EmbeddingProvider {
 public:
  virtual ~EmbeddingProvider() = default;

  virtual std::size_t dimension() const = 0;
  // Embedding of chunk[target.begin, target.end) read in the context of the whole chunk.
  virtual Vector embed_in_context(std::span<const std::string> chunk, TokenRange target) const = 0;
  virtual Vector embed_global(const std::string& phrase) const = 0;

  // False when implementations must not be called from several threads at once.
  virtual bool concurrent_safe() const { return true; }
  // True when embed_in_context ignores everything outside the target span.
  virtual bool context_free() const { return false; }
};

// Key under which an in-context embedding is stored in an embedding file.
inline std::string context_key(std::span<const std::string> chunk, TokenRange target) {
  std::uint64_t h = 1469598103934665603ULL;
  for (const auto& tok : chunk) {
    h = fnv1a64(tok, h);
    h = fnv1a64("\x1f", h);
  }
  char buf[80];
  std::snprintf(buf, sizeof buf, "ctx:%016llx:%zu:%zu", static_cast<unsigned long long>(h),
                target.begin, target.end);
  return buf;
}

// Vectors read from JSON Lines {"key": ..., "vector": [...]}. A line carrying
// "dimension" and no "key" is a header.
class FileEmbeddingProvider final : public EmbeddingProvider {
 public:
  static FileEmbeddingProvider parse(const std::string& text, const std::string& what = "embeddings") {
    FileEmbeddingProvider p;
    std::istringstream in(text);
    std::string line;
    std::size_t lineno = 0;
    std::optional<std::size_t> dim;
    while (std::getline(in, line)) {
      ++lineno;
      if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
      const auto j = io::parse_json(line, what + " line " + std::to_string(lineno));
      io::with_schema(what, [&] {
        if (!j.contains("key")) {
          if (j.contains("dimension")) {
            const auto d = j["dimension"].get<std::size_t>();
            if (dim && *dim != d) throw InputError(what + ": header dimension disagrees with vectors");
            dim = d;
            return 0;
          }
          throw InputError(what + " line " + std::to_string(lineno) + ": missing key");
        }
        auto key = j.at("key").get<std::string>();
        auto vec = j.at("vector").get<Vector>();
        if (vec.empty()) throw InputError(what + ": empty vector for key '" + key + "'");
        if (!dim) dim = vec.size();
        if (vec.size() != *dim)
          throw InputError(what + ": vector for key '" + key + "' has dimension " +
                           std::to_string(vec.size()) + ", expected " + std::to_string(*dim));
        for (double x : vec)
          if (!std::isfinite(x)) throw InputError(what + ": non-finite entry for key '" + key + "'");
        p.vectors_[std::move(key)] = std::move(vec);
        return 0;
      });
    }
    if (!dim) throw InputError(what + " contains no vectors");
    p.dim_ = *dim;
    return p;
  }

  static FileEmbeddingProvider load(const std::string& path) {
    return parse(io::read_file(path), "embeddings '" + path + "'");
  }

  std::size_t dimension() const override { return dim_; }

  Vector embed_in_context(std::span<const std::string> chunk, TokenRange target) const override {
    return lookup(context_key(chunk, target));
  }
  Vector embed_global(const std::string& phrase) const override { return lookup(phrase); }

  bool has(const std::string& key) const { return vectors_.count(key) > 0; }
  const std::map<std::string, Vector>& vectors() const { return vectors_; }

 private:
  const Vector& lookup(const std::string& key) const {
    auto it = vectors_.find(key);
    if (it == vectors_.end()) throw std::out_of_range("no embedding for key '" + key + "'");
    return it->second;
  }

  std::map<std::string, Vector> vectors_;
  std::size_t dim_ = 0;
};

// Deterministic stand-in for a contextual encoder: positive pointwise mutual
// information over a +/-10 token co-occurrence window, contexts folded into at
// most 1024 features (direct indexing when the vocabulary fits, else hashing).
class FallbackEmbedder final : public EmbeddingProvider {
 public:
  static constexpr std::size_t kWindow = 10;
  static constexpr std::size_t kMaxDim = 1024;

  // Each document is a raw token list; windows never cross documents.
  explicit FallbackEmbedder(const std::vector<std::vector<std::string>>& documents) {
    std::vector<std::vector<std::string>> docs;
    std::set<std::string> vocab;
    for (const auto& d : documents) {
      std::vector<std::string> nd;
      for (const auto& tok : d) {
        auto w = text::normalize_token(tok);
        if (!w.empty()) {
          vocab.insert(w);
          nd.push_back(std::move(w));
        }
      }
      if (!nd.empty()) docs.push_back(std::move(nd));
    }
    if (vocab.empty()) throw InputError("fallback embedder: empty corpus");

    for (const auto& w : vocab) index_.emplace(w, static_cast<int>(words_.size())), words_.push_back(w);
    const std::size_t V = words_.size();
    dim_ = std::min(V, kMaxDim);

    std::vector<std::map<int, double>> counts(V);
    std::vector<double> row(V, 0.0), col(V, 0.0);
    double total = 0.0;
    for (const auto& d : docs) {
      std::vector<int> ids;
      ids.reserve(d.size());
      for (const auto& w : d) ids.push_back(index_.at(w));
      for (std::size_t i = 0; i < ids.size(); ++i) {
        const std::size_t lo = i >= kWindow ? i - kWindow : 0;
        const std::size_t hi = std::min(ids.size(), i + kWindow + 1);
        for (std::size_t j = lo; j < hi; ++j) {
          if (j == i) continue;
          counts[ids[i]][ids[j]] += 1.0;
          row[ids[i]] += 1.0;
          col[ids[j]] += 1.0;
          total += 1.0;
        }
      }
    }

    vectors_.assign(V, Vector(dim_, 0.0));
    for (std::size_t w = 0; w < V; ++w) {
      for (const auto& [c, n] : counts[w]) {
        const double pmi = std::log((n * total) / (row[w] * col[c]));
        if (pmi > 0.0) vectors_[w][feature_of(static_cast<std::size_t>(c))] += pmi;
      }
    }
  }

  explicit FallbackEmbedder(const TimedTranscript& transcript)
      : FallbackEmbedder(std::vector<std::vector<std::string>>{transcript.tokens()}) {}

  std::size_t dimension() const override { return dim_; }
  bool context_free() const override { return true; }

  // Zero vector for out-of-vocabulary words.
  Vector word_vector(const std::string& normalized_word) const {
    auto it = index_.find(normalized_word);
    if (it == index_.end()) return Vector(dim_, 0.0);
    return vectors_[static_cast<std::size_t>(it->second)];
  }

  Vector embed_in_context(std::span<const std::string> chunk, TokenRange target) const override {
    if (target.end > chunk.size()) throw std::out_of_range("target span outside chunk");
    std::vector<std::string> words;
    for (std::size_t i = target.begin; i < target.end; ++i) {
      auto w = text::normalize_token(chunk[i]);
      if (!w.empty()) words.push_back(std::move(w));
    }
    return mean_of(words);
  }

  Vector embed_global(const std::string& phrase) const override {
    return mean_of(text::normalize_words(phrase));
  }

  const std::vector<std::string>& vocabulary() const { return words_; }

 private:
  std::size_t feature_of(std::size_t context_id) const {
    if (words_.size() <= kMaxDim) return context_id;
    return static_cast<std::size_t>(fnv1a64(words_[context_id]) % kMaxDim);
  }

  Vector mean_of(const std::vector<std::string>& words) const {
    Vector out(dim_, 0.0);
    if (words.empty()) return out;
    for (const auto& w : words) {
      auto it = index_.find(w);
      if (it == index_.end()) continue;
      const auto& v = vectors_[static_cast<std::size_t>(it->second)];
      for (std::size_t i = 0; i < dim_; ++i) out[i] += v[i];
    }
    for (double& x : out) x /= static_cast<double>(words.size());
    return out;
  }

  std::vector<std::string> words_;
  std::unordered_map<std::string, int> index_;
  std::vector<Vector> vectors_;
  std::size_t dim_ = 0;
};

// Contextual similarity per unordered concept pair.
class SimilarityDictionary {
 public:
  void set(const std::string& a, const std::string& b, double score) {
    if (!std::isfinite(score)) throw std::invalid_argument("non-finite similarity for (" + a + ", " + b + ")");
    scores_[make_pair_key(a, b)] = score;
  }
  std::optional<double> lookup(const std::string& a, const std::string& b) const {
    auto it = scores_.find(make_pair_key(a, b));
    if (it == scores_.end()) return std::nullopt;
    return it->second;
  }
  double weight(const std::string& a, const std::string& b, double missing = 0.0) const {
    return lookup(a, b).value_or(missing);
  }
  std::size_t size() const { return scores_.size(); }
  const std::map<ConceptPair, double>& scores() const { return scores_; }

  // "a<TAB>b<TAB>score" rows in key order.
  std::string to_tsv() const {
    std::string out;
    for (const auto& [k, v] : scores_) out += k.first + "\t" + k.second + "\t" + format_double(v) + "\n";
    return out;
  }

  static SimilarityDictionary parse_tsv(const std::string& text) {
    SimilarityDictionary d;
    std::istringstream in(text);
    std::string line;
    std::size_t lineno = 0;
    while (std::getline(in, line)) {
      ++lineno;
      if (!line.empty() && line.back() == '\r') line.pop_back();
      if (line.empty() || line[0] == '#') continue;
      const auto t1 = line.find('\t');
      const auto t2 = t1 == std::string::npos ? t1 : line.find('\t', t1 + 1);
      if (t2 == std::string::npos)
        throw InputError("dictionary line " + std::to_string(lineno) + ": expected three columns");
      double v = 0.0;
      try {
        std::size_t used = 0;
        v = std::stod(line.substr(t2 + 1), &used);
      } catch (const std::exception&) {
        throw InputError("dictionary line " + std::to_string(lineno) + ": bad score");
      }
      d.set(line.substr(0, t1), line.substr(t1 + 1, t2 - t1 - 1), v);
    }
    return d;
  }

 private:
  std::map<ConceptPair, double> scores_;
};

struct CoOccurrence {
  std::size_t first = 0;   // index into the mention list
  std::size_t second = 0;  // index into the mention list, mentions[second] starts later
};

// Mention pairs of distinct concepts whose start indices are at most `window` tokens apart.
inline std::vector<CoOccurrence> enumerate_cooccurrences(std::span<const Mention> mentions,
                                                         std::size_t window) {
  std::vector<CoOccurrence> out;
  for (std::size_t i = 0; i < mentions.size(); ++i) {
    for (std::size_t j = i + 1; j < mentions.size(); ++j) {
      if (mentions[j].token_index - mentions[i].token_index > window) break;
      if (mentions[i].concept_name != mentions[j].concept_name) out.push_back({i, j});
    }
  }
  return out;
}

// Text chunk for a co-occurrence: the span covering both mentions plus `margin`
// tokens each side, clipped to the transcript.
struct CoOccurrenceChunk {
  TokenRange chunk;
  TokenRange first;   // relative to chunk
  TokenRange second;  // relative to chunk
};

inline CoOccurrenceChunk chunk_for(const Mention& a, const Mention& b, std::size_t transcript_size,
                                   std::size_t margin) {
  const std::size_t lo0 = std::min(a.token_index, b.token_index);
  const std::size_t hi0 = std::max(a.token_index + a.length, b.token_index + b.length);
  const std::size_t lo = lo0 >= margin ? lo0 - margin : 0;
  const std::size_t hi = std::min(transcript_size, hi0 + margin);
  return {{lo, hi},
          {a.token_index - lo, a.token_index - lo + a.length},
          {b.token_index - lo, b.token_index - lo + b.length}};
}

struct DictionaryOptions {
  std::size_t window = 100;
  std::size_t margin = 10;
  unsigned jobs = 1;
};

// Averaged in-context cosine over all co-occurrences of each concept pair;
// concept pairs present in the transcript but never co-occurring fall back to
// the cosine of their global embeddings.
inline SimilarityDictionary build_similarity_dictionary(const TimedTranscript& transcript,
                                                        std::span<const Mention> mentions,
                                                        const EmbeddingProvider& provider,
                                                        const DictionaryOptions& opts = {}) {
  if (opts.window < 1) throw std::invalid_argument("co-occurrence window must be >= 1");
  const auto pairs = enumerate_cooccurrences(mentions, opts.window);
  const auto& tokens = transcript.tokens();
  const std::size_t dim = provider.dimension();

  auto fail = [](const std::string& a, const std::string& b, const std::string& why) {
    return PipelineError("embedding", "provider failed for pair (" + a + ", " + b + "): " + why);
  };
  auto checked = [&](Vector v, const std::string& a, const std::string& b) {
    if (v.size() != dim)
      throw fail(a, b, "vector dimension " + std::to_string(v.size()) + " != " + std::to_string(dim));
    return v;
  };

  // Context-free providers: one embedding per mention, computed once.
  std::vector<Vector> own;
  if (provider.context_free()) {
    own.reserve(mentions.size());
    for (const auto& m : mentions) {
      try {
        own.push_back(checked(provider.embed_in_context(
                                  std::span<const std::string>(tokens).subspan(m.token_index, m.length),
                                  {0, m.length}),
                              m.concept_name, m.concept_name));
      } catch (const PipelineError&) {
        throw;
      } catch (const std::exception& e) {
        throw fail(m.concept_name, m.concept_name, e.what());
      }
    }
  }

  std::vector<double> sims(pairs.size(), 0.0);
  auto work = [&](std::size_t from, std::size_t to) {
    for (std::size_t k = from; k < to; ++k) {
      const auto& ma = mentions[pairs[k].first];
      const auto& mb = mentions[pairs[k].second];
      if (!own.empty()) {
        sims[k] = cosine(own[pairs[k].first], own[pairs[k].second]);
        continue;
      }
      const auto c = chunk_for(ma, mb, tokens.size(), opts.margin);
      const auto chunk = transcript.tokens_in(c.chunk);
      try {
        const auto ea = checked(provider.embed_in_context(chunk, c.first), ma.concept_name, mb.concept_name);
        const auto eb = checked(provider.embed_in_context(chunk, c.second), ma.concept_name, mb.concept_name);
        sims[k] = cosine(ea, eb);
      } catch (const PipelineError&) {
        throw;
      } catch (const std::exception& e) {
        throw fail(ma.concept_name, mb.concept_name, e.what());
      }
    }
  };
  const unsigned jobs = provider.concurrent_safe() ? std::max(1u, opts.jobs) : 1u;
  if (jobs == 1 || pairs.size() < 2 * jobs) {
    work(0, pairs.size());
  } else {
    std::vector<std::future<void>> tasks;
    const std::size_t step = (pairs.size() + jobs - 1) / jobs;
    for (std::size_t from = 0; from < pairs.size(); from += step)
      tasks.push_back(std::async(std::launch::async, work, from, std::min(pairs.size(), from + step)));
    for (auto& t : tasks) t.get();
  }

  std::map<ConceptPair, std::vector<double>> grouped;
  for (std::size_t k = 0; k < pairs.size(); ++k)
    grouped[make_pair_key(mentions[pairs[k].first].concept_name, mentions[pairs[k].second].concept_name)]
        .push_back(sims[k]);

  SimilarityDictionary dict;
  for (auto& [key, values] : grouped) {
    // Sorted summation keeps the mean independent of enumeration order.
    std::sort(values.begin(), values.end());
    double sum = 0.0;
    for (double v : values) sum += v;
    dict.set(key.first, key.second, sum / static_cast<double>(values.size()));
  }

  std::set<std::string> present;
  for (const auto& m : mentions) present.insert(m.concept_name);
  std::map<std::string, Vector> global;
  for (const auto& c : present) {
    try {
      global.emplace(c, checked(provider.embed_global(c), c, c));
    } catch (const PipelineError&) {
      throw;
    } catch (const std::exception& e) {
      throw fail(c, c, e.what());
    }
  }
  for (auto a = present.begin(); a != present.end(); ++a) {
    for (auto b = std::next(a); b != present.end(); ++b) {
      if (dict.lookup(*a, *b)) continue;
      dict.set(*a, *b, cosine(global.at(*a), global.at(*b)));
    }
  }
  return dict;
}

// Embedding requests a file-backed provider must be able to answer for
// build_similarity_dictionary: one line per distinct chunk/span and one per concept.
inline std::string embedding_requests_jsonl(const TimedTranscript& transcript,
                                            std::span<const Mention> mentions,
                                            const DictionaryOptions& opts = {}) {
  std::set<std::string> seen;
  std::string out;
  auto emit = [&](const std::string& key, std::span<const std::string> toks, TokenRange span) {
    if (!seen.insert(key).second) return;
    nlohmann::ordered_json j;
    j["key"] = key;
    j["tokens"] = std::vector<std::string>(toks.begin(), toks.end());
    j["span"] = {span.begin, span.end};
    out += j.dump() + "\n";
  };
  for (const auto& p : enumerate_cooccurrences(mentions, opts.window)) {
    const auto c = chunk_for(mentions[p.first], mentions[p.second], transcript.size(), opts.margin);
    const auto chunk = transcript.tokens_in(c.chunk);
    emit(context_key(chunk, c.first), chunk, c.first);
    emit(context_key(chunk, c.second), chunk, c.second);
  }
  std::set<std::string> present;
  for (const auto& m : mentions) present.insert(m.concept_name);
  for (const auto& c : present) {
    const auto words = text::split_whitespace(c);
    emit(c, words, {0, words.size()});
  }
  return out;
}

}  // namespace lecseg
