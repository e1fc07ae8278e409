#pragma once

#include <algorithm>
#include <cmath>
#include <map>
#include <numeric>
#include <span>
#include <string>
#include <vector>

#include <json.hpp>

#include "lecseg/common.hpp"
#include "lecseg/corpus.hpp"
#include "lecseg/embedding.hpp"

namespace lecseg {

inline constexpr std::size_t kDefaultSentenceLength = 20;
inline constexpr std::size_t kDefaultContextSize = 10;
inline constexpr double kDefaultDecisionThreshold = 0.5;

// Fixed-length token windows standing in for sentences, with one encoding each.
struct SentenceSequence {
  std::vector<TokenRange> sentences;
  std::vector<Vector> encodings;

  std::size_t size() const { return sentences.size(); }
};

inline SentenceSequence window_sentences(const TimedTranscript& transcript, std::size_t length = kDefaultSentenceLength) {
  if (length < 1) throw std::invalid_argument("sentence length must be >= 1");
  SentenceSequence seq;
  for (std::size_t b = 0; b < transcript.size(); b += length)
    seq.sentences.push_back({b, std::min(transcript.size(), b + length)});
  return seq;
}

// Encodes every sentence as the provider's embedding of the whole window.
inline void encode_sentences(SentenceSequence& seq, const TimedTranscript& transcript, const EmbeddingProvider& provider) {
  seq.encodings.clear();
  for (const auto& s : seq.sentences) {
    const auto toks = transcript.tokens_in(s);
    seq.encodings.push_back(provider.embed_in_context(toks, {0, toks.size()}));
  }
}

// Sentence encodings from JSON Lines keyed by sentence index ("0", "1", ...).
inline std::vector<Vector> load_sentence_encodings(const FileEmbeddingProvider& file, std::size_t count) {
  std::vector<Vector> out;
  out.reserve(count);
  for (std::size_t i = 0; i < count; ++i) {
    const auto key = std::to_string(i);
    if (!file.has(key)) throw InputError("sentence encodings: missing index " + key);
    out.push_back(file.vectors().at(key));
  }
  return out;
}

// One request line per sentence window, keyed by index, for an external sentence encoder.
inline std::string sentence_requests_jsonl(const SentenceSequence& seq, const TimedTranscript& transcript) {
  std::string out;
  for (std::size_t i = 0; i < seq.size(); ++i) {
    const auto toks = transcript.tokens_in(seq.sentences[i]);
    nlohmann::ordered_json j;
    j["key"] = std::to_string(i);
    j["tokens"] = std::vector<std::string>(toks.begin(), toks.end());
    out += j.dump() + "\n";
  }
  return out;
}

// Row-major K x d matrix view.
struct MatrixView {
  std::span<const double> data;
  std::size_t rows = 0;
  std::size_t cols = 0;

  std::span<const double> row(std::size_t r) const { return data.subspan(r * cols, cols); }
};

struct AttentionParams {
  Vector W;   // d x 1
  Vector b;   // K x 1
  Vector Zs;  // K x 1
};

struct AttentionResult {
  Vector context;  // v
  Vector alpha;    // attention weights, one per row of H
};

// e = H W + b;  a_j = exp(tanh(e_j * Zs_j));  alpha = a / sum(a);  v = sum_j alpha_j h_j.
inline AttentionResult attention_compose(const MatrixView& H, const AttentionParams& p) {
  if (H.data.size() != H.rows * H.cols) throw std::invalid_argument("attention: matrix storage mismatch");
  if (p.W.size() != H.cols) throw std::invalid_argument("attention: W must have one entry per column of H");
  if (p.b.size() != H.rows || p.Zs.size() != H.rows)
    throw std::invalid_argument("attention: b and Zs must have one entry per row of H");
  AttentionResult r;
  r.alpha.resize(H.rows);
  double total = 0.0;
  for (std::size_t j = 0; j < H.rows; ++j) {
    const auto h = H.row(j);
    const double e = std::inner_product(h.begin(), h.end(), p.W.begin(), 0.0) + p.b[j];
    r.alpha[j] = std::exp(std::tanh(e * p.Zs[j]));
    total += r.alpha[j];
  }
  for (double& a : r.alpha) a /= total;
  r.context.assign(H.cols, 0.0);
  for (std::size_t j = 0; j < H.rows; ++j) {
    const auto h = H.row(j);
    for (std::size_t c = 0; c < H.cols; ++c) r.context[c] += r.alpha[j] * h[c];
  }
  return r;
}

// [C_L, M, C_R, C_L*M, M*C_R, C_R*C_L] (elementwise products), length 6d.
inline Vector relation_features(std::span<const double> left, std::span<const double> middle, std::span<const double> right) {
  if (left.size() != middle.size() || right.size() != middle.size())
    throw std::invalid_argument("relation_features: dimension mismatch");
  const std::size_t d = middle.size();
  Vector f;
  f.reserve(6 * d);
  f.insert(f.end(), left.begin(), left.end());
  f.insert(f.end(), middle.begin(), middle.end());
  f.insert(f.end(), right.begin(), right.end());
  for (std::size_t i = 0; i < d; ++i) f.push_back(left[i] * middle[i]);
  for (std::size_t i = 0; i < d; ++i) f.push_back(middle[i] * right[i]);
  for (std::size_t i = 0; i < d; ++i) f.push_back(right[i] * left[i]);
  return f;
}

struct ClassWeights {
  double negative = 1.0;  // weight for target 0
  double positive = 1.0;  // weight for target 1
};

// Mean over the batch of class-weighted binary cross entropy. Probabilities are
// clamped to [1e-12, 1 - 1e-12].
inline double weighted_bce(std::span<const int> targets, std::span<const double> probs, ClassWeights w = {}) {
  if (targets.size() != probs.size()) throw std::invalid_argument("weighted_bce: size mismatch");
  if (targets.empty()) throw std::invalid_argument("weighted_bce: empty batch");
  if (!(w.negative > 0.0 && w.positive > 0.0)) throw std::invalid_argument("weighted_bce: weights must be positive");
  constexpr double eps = 1e-12;
  double sum = 0.0;
  for (std::size_t n = 0; n < targets.size(); ++n) {
    if (targets[n] != 0 && targets[n] != 1) throw std::invalid_argument("weighted_bce: targets must be 0 or 1");
    const double o = std::clamp(probs[n], eps, 1.0 - eps);
    const double t = targets[n];
    const double wn = targets[n] ? w.positive : w.negative;
    sum += wn * (t * std::log(o) + (1.0 - t) * std::log(1.0 - o));
  }
  return -sum / static_cast<double>(targets.size());
}

// Maps a relation-feature vector to a boundary probability.
class BoundaryScorer {
 public:
  virtual ~BoundaryScorer() = default;
  virtual double score(std::span<const double> features) const = 0;
};

// Affine map followed by the logistic function.
class LogisticHead final : public BoundaryScorer {
 public:
  LogisticHead(Vector weights, double bias) : w_(std::move(weights)), b_(bias) {}

  double score(std::span<const double> features) const override {
    if (features.size() != w_.size()) throw std::invalid_argument("logistic head: feature size mismatch");
    const double z = std::inner_product(features.begin(), features.end(), w_.begin(), b_);
    return 1.0 / (1.0 + std::exp(-z));
  }

 private:
  Vector w_;
  double b_;
};

struct ClassifierWeights {
  AttentionParams attention;
  Vector head_w;
  double head_b = 0.0;
};

// JSON {"W": [[...]], "b": [...], "Zs": [...], "head_w": [...], "head_b": x}; W is d x 1.
inline ClassifierWeights parse_classifier_weights(const std::string& text, const std::string& what = "classifier weights") {
  const auto j = io::parse_json(text, what);
  auto cw = io::with_schema(what, [&] {
    ClassifierWeights w;
    for (const auto& row : j.at("W")) {
      if (row.is_array()) {
        if (row.size() != 1) throw InputError(what + ": W must be d x 1");
        w.attention.W.push_back(row[0].get<double>());
      } else {
        w.attention.W.push_back(row.get<double>());
      }
    }
    w.attention.b = j.at("b").get<Vector>();
    w.attention.Zs = j.at("Zs").get<Vector>();
    w.head_w = j.at("head_w").get<Vector>();
    w.head_b = j.at("head_b").get<double>();
    return w;
  });
  if (cw.attention.b.size() != cw.attention.Zs.size()) throw InputError(what + ": b and Zs lengths differ");
  if (cw.head_w.size() != 6 * cw.attention.W.size()) throw InputError(what + ": head_w must have 6d entries");
  auto finite = [](const Vector& v) { return std::all_of(v.begin(), v.end(), [](double x) { return std::isfinite(x); }); };
  if (!finite(cw.attention.W) || !finite(cw.attention.b) || !finite(cw.attention.Zs) || !finite(cw.head_w) ||
      !std::isfinite(cw.head_b))
    throw InputError(what + ": non-finite entry");
  return cw;
}

// K-sentence contexts either side of sentence i, zero-padded at the sequence edges.
struct ContextWindow {
  std::vector<double> left;   // K x d, row-major, oldest first
  std::vector<double> right;  // K x d, row-major, nearest first
  std::span<const double> middle;
  bool padded = false;
};

inline ContextWindow context_window(const SentenceSequence& seq, std::size_t i, std::size_t K) {
  const std::size_t d = seq.encodings.at(i).size();
  ContextWindow w;
  w.left.assign(K * d, 0.0);
  w.right.assign(K * d, 0.0);
  w.middle = seq.encodings[i];
  for (std::size_t k = 0; k < K; ++k) {
    // left row k holds sentence i - K + k
    if (i + k >= K) {
      const auto& e = seq.encodings[i + k - K];
      std::copy(e.begin(), e.end(), w.left.begin() + static_cast<std::ptrdiff_t>(k * d));
    } else {
      w.padded = true;
    }
    if (i + 1 + k < seq.size()) {
      const auto& e = seq.encodings[i + 1 + k];
      std::copy(e.begin(), e.end(), w.right.begin() + static_cast<std::ptrdiff_t>(k * d));
    } else {
      w.padded = true;
    }
  }
  return w;
}

// Per-sentence boundary probability from attention-composed contexts and a scorer.
inline std::vector<double> attention_scores(const SentenceSequence& seq, const ClassifierWeights& weights,
                                            const BoundaryScorer& scorer) {
  const std::size_t K = weights.attention.b.size();
  std::vector<double> out(seq.size(), 0.0);
  for (std::size_t i = 0; i < seq.size(); ++i) {
    const std::size_t d = seq.encodings[i].size();
    if (d != weights.attention.W.size())
      throw PipelineError("structural-seg", "sentence encoding dimension does not match classifier weights");
    const auto w = context_window(seq, i, K);
    const auto cl = attention_compose({w.left, K, d}, weights.attention);
    const auto cr = attention_compose({w.right, K, d}, weights.attention);
    out[i] = scorer.score(relation_features(cl.context, w.middle, cr.context));
  }
  return out;
}

inline Vector mean_vector(std::span<const Vector> rows) {
  Vector m(rows.empty() ? 0 : rows.front().size(), 0.0);
  for (const auto& r : rows)
    for (std::size_t c = 0; c < m.size(); ++c) m[c] += r[c];
  for (double& x : m) x /= static_cast<double>(rows.size());
  return m;
}

// Deterministic depth-score stand-in for the trained classifier.
//
// For every sentence i with K sentences on each side, the gap coherence is the
// mean cosine between the left block [i-K, i) and the right block [i, i+K).
// Depth is the climb to the highest coherence on each side, TextTiling style.
// Strict local maxima of depth above mean + 0.5 * stddev score above 0.5.
inline std::vector<double> baseline_scores(const SentenceSequence& seq, std::size_t K = kDefaultContextSize) {
  const std::size_t n = seq.size();
  std::vector<double> probs(n, 0.0);
  if (K < 1 || n < 2 * K + 1) return probs;

  std::vector<std::size_t> positions;
  std::vector<double> coherence;
  for (std::size_t i = K; i + K <= n; ++i) {
    double s = 0.0;
    for (std::size_t a = i - K; a < i; ++a)
      for (std::size_t b = i; b < i + K; ++b) s += cosine(seq.encodings[a], seq.encodings[b]);
    positions.push_back(i);
    coherence.push_back(s / static_cast<double>(K * K));
  }

  const std::size_t m = coherence.size();
  std::vector<double> depth(m, 0.0);
  for (std::size_t p = 0; p < m; ++p) {
    double lmax = coherence[p], rmax = coherence[p];
    for (std::size_t q = p; q-- > 0;) {
      if (coherence[q] < lmax) break;
      lmax = coherence[q];
    }
    for (std::size_t q = p + 1; q < m; ++q) {
      if (coherence[q] < rmax) break;
      rmax = coherence[q];
    }
    depth[p] = (lmax - coherence[p]) + (rmax - coherence[p]);
  }

  const double mean = std::accumulate(depth.begin(), depth.end(), 0.0) / static_cast<double>(m);
  double var = 0.0;
  for (double d : depth) var += (d - mean) * (d - mean);
  const double sd = std::sqrt(var / static_cast<double>(m));
  const double cut = mean + 0.5 * sd;
  const double dmax = *std::max_element(depth.begin(), depth.end());
  constexpr double tiny = 1e-12;

  for (std::size_t p = 0; p < m; ++p) {
    const double norm = dmax > 0.0 ? depth[p] / dmax : 0.0;
    const bool peak = (p == 0 || depth[p] > depth[p - 1]) && (p + 1 == m || depth[p] > depth[p + 1]);
    const bool selected = peak && depth[p] > cut + tiny && depth[p] > tiny;
    probs[positions[p]] = selected ? 0.5 + 0.5 * norm : 0.5 * norm;
  }
  return probs;
}

// Sentences scoring above the threshold start a new segment at the time of their
// first token; segments run from 0 to the video duration.
inline TopicBoundaryList structural_segments(const TimedTranscript& transcript, const SentenceSequence& seq,
                                             std::span<const double> probs, double duration,
                                             double threshold = kDefaultDecisionThreshold) {
  if (probs.size() != seq.size()) throw std::invalid_argument("structural_segments: one probability per sentence");
  std::vector<double> stamps{0.0};
  for (std::size_t i = 0; i < seq.size(); ++i) {
    if (probs[i] <= threshold) continue;
    const double t = map_token_time(transcript, seq.sentences[i].begin);
    if (t > stamps.back() && t < duration) stamps.push_back(t);
  }
  stamps.push_back(duration);
  TopicBoundaryList out;
  for (std::size_t k = 0; k + 1 < stamps.size(); ++k) out.push_back({stamps[k], stamps[k + 1]});
  return out;
}

}  // namespace lecseg
