#pragma once

#include <filesystem>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "lecseg/common.hpp"
#include "lecseg/corpus.hpp"
#include "lecseg/embedding.hpp"
#include "lecseg/evaluation.hpp"
#include "lecseg/fuse_annotate.hpp"
#include "lecseg/semantic_boundary.hpp"
#include "lecseg/slide_graph.hpp"
#include "lecseg/structural.hpp"

namespace lecseg {

enum class SegmentMode { semantic, structural, fused };

inline SegmentMode parse_mode(const std::string& s) {
  if (s == "semantic") return SegmentMode::semantic;
  if (s == "structural") return SegmentMode::structural;
  if (s == "fused") return SegmentMode::fused;
  throw InputError("unknown mode '" + s + "' (expected semantic, structural or fused)");
}

inline CaseCStrictness parse_strictness(const std::string& s) {
  if (s == "verbatim") return CaseCStrictness::verbatim;
  if (s == "strict") return CaseCStrictness::strict;
  throw InputError("unknown case_c_strictness '" + s + "' (expected verbatim or strict)");
}

inline const char* to_string(CaseCStrictness s) { return s == CaseCStrictness::verbatim ? "verbatim" : "strict"; }

struct PipelineParams {
  std::size_t sentence_length = kDefaultSentenceLength;
  std::size_t context_k = kDefaultContextSize;
  double primary_fraction = kDefaultPrimaryFraction;
  double fusion_threshold = 900.0;
  std::size_t co_occurrence_window = 100;
  CaseCStrictness case_c_strictness = CaseCStrictness::verbatim;
  double eval_tolerance = 30.0;
  double decision_threshold = kDefaultDecisionThreshold;
  double pairing_min_overlap = 0.5;
  bool split_disjoint_tail = true;
  unsigned jobs = 1;
};

struct PipelinePaths {
  std::optional<std::string> transcript, timeline, kg, lexicon, syllabus, embeddings, sentence_encodings,
      classifier_weights, ground_truth, dictionary;
  std::string output_dir = ".";
};

struct PipelineConfig {
  PipelinePaths paths;
  PipelineParams params;
};

// Relative paths in a config file resolve against the file's directory.
inline PipelineConfig parse_config(const std::string& text, const std::filesystem::path& base_dir = {}) {
  const auto j = io::parse_json(text, "config");
  return io::with_schema("config", [&] {
    PipelineConfig cfg;
    const auto& src = j.contains("paths") ? j["paths"] : j;
    auto spath = [&](const char* key, std::optional<std::string>& dst) {
      if (src.contains(key) && !src[key].is_null()) {
        std::filesystem::path p = src[key].get<std::string>();
        dst = (p.is_relative() && !base_dir.empty() ? base_dir / p : p).string();
      }
    };
    spath("transcript", cfg.paths.transcript);
    spath("timeline", cfg.paths.timeline);
    spath("kg", cfg.paths.kg);
    spath("lexicon", cfg.paths.lexicon);
    spath("syllabus", cfg.paths.syllabus);
    spath("embeddings", cfg.paths.embeddings);
    spath("sentence_encodings", cfg.paths.sentence_encodings);
    spath("classifier_weights", cfg.paths.classifier_weights);
    spath("ground_truth", cfg.paths.ground_truth);
    spath("dictionary", cfg.paths.dictionary);
    std::optional<std::string> out;
    spath("output_dir", out);
    if (out) cfg.paths.output_dir = *out;

    if (j.contains("params")) {
      const auto& p = j["params"];
      auto& q = cfg.params;
      q.sentence_length = p.value("sentence_length", q.sentence_length);
      q.context_k = p.value("context_k", q.context_k);
      q.primary_fraction = p.value("primary_fraction", q.primary_fraction);
      q.fusion_threshold = p.value("fusion_threshold", q.fusion_threshold);
      q.co_occurrence_window = p.value("co_occurrence_window", q.co_occurrence_window);
      if (p.contains("case_c_strictness")) q.case_c_strictness = parse_strictness(p["case_c_strictness"].get<std::string>());
      q.eval_tolerance = p.value("eval_tolerance", q.eval_tolerance);
      q.decision_threshold = p.value("decision_threshold", q.decision_threshold);
      q.pairing_min_overlap = p.value("pairing_min_overlap", q.pairing_min_overlap);
      q.split_disjoint_tail = p.value("split_disjoint_tail", q.split_disjoint_tail);
    }
    return cfg;
  });
}

inline PipelineConfig load_config(const std::string& path) {
  return parse_config(io::read_file(path), std::filesystem::path(path).parent_path());
}

inline void validate_params(const PipelineParams& p) {
  if (p.sentence_length < 1) throw InputError("sentence_length must be >= 1");
  if (p.context_k < 1) throw InputError("context_k must be >= 1");
  if (!(p.primary_fraction > 0.0 && p.primary_fraction <= 1.0)) throw InputError("primary_fraction must lie in (0, 1]");
  if (!(p.fusion_threshold > 0.0)) throw InputError("fusion_threshold must be positive");
  if (p.co_occurrence_window < 1) throw InputError("co_occurrence_window must be >= 1");
  if (p.eval_tolerance < 0.0) throw InputError("eval_tolerance must be >= 0");
  if (!(p.pairing_min_overlap > 0.0 && p.pairing_min_overlap <= 1.0)) throw InputError("pairing_min_overlap must lie in (0, 1]");
}

// Whole-video span: from 0 to the later of the transcript end and the last slide.
inline Interval video_span(const TimedTranscript& transcript, const SlideTimeline& timeline) {
  double end = transcript.duration();
  if (!timeline.empty()) end = std::max(end, timeline.back().end);
  return {0.0, end};
}

struct SemanticResult {
  std::vector<SlideGraph> slide_graphs;
  MergeResult merge;
  std::vector<ClusterCentroid> centroids;
  std::vector<BoundaryTrace> trace;
  TopicBoundaryList segments;
};

inline SemanticResult run_semantic(const TimedTranscript& transcript, const SlideTimeline& timeline,
                                   std::span<const Mention> mentions, const KnowledgeGraph& kg,
                                   const SimilarityDictionary& dict, const PipelineParams& params) {
  SemanticResult r;
  const auto span = video_span(transcript, timeline);
  for (const auto& slide : timeline) r.slide_graphs.push_back(build_slide_graph(slide, transcript, mentions, kg, dict));
  r.merge = mark_and_merge(r.slide_graphs, dict);
  for (const auto& c : r.merge.clusters) r.centroids.push_back(make_centroid(c, params.primary_fraction));
  if (r.centroids.empty()) {
    r.segments = {span};
    return r;
  }
  BoundaryOptions opts;
  opts.strictness = params.case_c_strictness;
  opts.split_disjoint_tail = params.split_disjoint_tail;
  r.segments = topic_boundaries(r.centroids, kg, dict, opts, &r.trace);
  r.segments.front().start = span.start;
  r.segments.back().end = span.end;
  return r;
}

inline TopicBoundaryList run_structural(const TimedTranscript& transcript, double duration, const EmbeddingProvider& provider,
                                        const PipelineParams& params,
                                        const FileEmbeddingProvider* sentence_file = nullptr,
                                        const ClassifierWeights* weights = nullptr) {
  auto seq = window_sentences(transcript, params.sentence_length);
  if (sentence_file)
    seq.encodings = load_sentence_encodings(*sentence_file, seq.size());
  else
    encode_sentences(seq, transcript, provider);
  std::vector<double> probs;
  if (weights) {
    const LogisticHead head(weights->head_w, weights->head_b);
    probs = attention_scores(seq, *weights, head);
  } else {
    probs = baseline_scores(seq, params.context_k);
  }
  return structural_segments(transcript, seq, probs, duration, params.decision_threshold);
}

// Embedder for topic naming: covers transcript, slide titles and syllabus so every
// word that can be compared has a vector.
inline FallbackEmbedder annotation_embedder(const TimedTranscript& transcript, const SlideTimeline& timeline,
                                            const Syllabus& syllabus) {
  std::vector<std::vector<std::string>> docs{transcript.tokens()};
  for (const auto& s : timeline)
    for (const auto& t : s.titles) docs.push_back(text::split_whitespace(t));
  for (const auto& name : syllabus) docs.push_back(text::split_whitespace(name));
  return FallbackEmbedder(docs);
}

// Everything a run can read from disk; absent files stay empty.
struct LoadedInputs {
  std::optional<TimedTranscript> transcript;
  SlideTimeline timeline;
  std::optional<ConceptLexicon> lexicon;
  std::optional<KnowledgeGraph> kg;
  std::optional<Syllabus> syllabus;
  std::optional<GroundTruth> ground_truth;
  std::unique_ptr<FileEmbeddingProvider> embeddings;
  std::unique_ptr<FileEmbeddingProvider> sentence_encodings;
  std::optional<ClassifierWeights> classifier;
  std::optional<SimilarityDictionary> dictionary;
};

inline LoadedInputs load_inputs(const PipelinePaths& p) {
  LoadedInputs in;
  if (p.transcript) in.transcript = io::load_transcript(*p.transcript);
  if (p.timeline) in.timeline = io::load_timeline(*p.timeline);
  if (p.lexicon) in.lexicon = io::load_lexicon(*p.lexicon);
  if (p.kg) in.kg = io::load_knowledge_graph(*p.kg);
  if (p.syllabus) in.syllabus = io::load_syllabus(*p.syllabus);
  if (p.ground_truth) in.ground_truth = io::load_ground_truth(*p.ground_truth);
  if (p.embeddings) in.embeddings = std::make_unique<FileEmbeddingProvider>(FileEmbeddingProvider::load(*p.embeddings));
  if (p.sentence_encodings)
    in.sentence_encodings = std::make_unique<FileEmbeddingProvider>(FileEmbeddingProvider::load(*p.sentence_encodings));
  if (p.classifier_weights) in.classifier = parse_classifier_weights(io::read_file(*p.classifier_weights));
  if (p.dictionary) in.dictionary = SimilarityDictionary::parse_tsv(io::read_file(*p.dictionary));
  if (in.kg && in.lexicon) in.kg->validate_against(*in.lexicon);
  return in;
}

// Runs the requested stages over one video. Files written to output_dir:
// dictionary.tsv, semantic.json, structural.json, fused.json, segments.json
// (annotated when a syllabus is given) and, with ground truth, report.json and
// report.txt.
struct PipelineOutputs {
  SimilarityDictionary dictionary;
  TopicBoundaryList semantic, structural, fused;
  std::vector<AnnotatedSegment> final_segments;
  std::optional<EvalReport> report;
};

inline PipelineOutputs run_pipeline(const PipelineConfig& cfg, bool write_files = true) {
  validate_params(cfg.params);
  const auto in = load_inputs(cfg.paths);
  if (!in.transcript) throw InputError("pipeline needs a transcript");
  if (!in.lexicon) throw InputError("pipeline needs a concept lexicon");
  if (!in.kg) throw InputError("pipeline needs a knowledge graph");
  if (in.timeline.empty()) throw InputError("pipeline needs a slide timeline");
  const auto& tr = *in.transcript;

  std::unique_ptr<FallbackEmbedder> fallback;
  const EmbeddingProvider* provider = in.embeddings.get();
  if (!provider) {
    fallback = std::make_unique<FallbackEmbedder>(tr);
    provider = fallback.get();
  }

  PipelineOutputs out;
  const auto mentions = find_concept_mentions(tr, *in.lexicon);
  if (in.dictionary) {
    out.dictionary = *in.dictionary;
  } else {
    DictionaryOptions dopt;
    dopt.window = cfg.params.co_occurrence_window;
    dopt.jobs = cfg.params.jobs;
    out.dictionary = build_similarity_dictionary(tr, mentions, *provider, dopt);
  }
  const auto span = video_span(tr, in.timeline);
  out.semantic = run_semantic(tr, in.timeline, mentions, *in.kg, out.dictionary, cfg.params).segments;
  out.structural = run_structural(tr, span.end, *provider, cfg.params, in.sentence_encodings.get(),
                                  in.classifier ? &*in.classifier : nullptr);
  FusionConfig fc;
  fc.duration_threshold = cfg.params.fusion_threshold;
  fc.pairing_min_overlap = cfg.params.pairing_min_overlap;
  out.fused = fuse(out.structural, out.semantic, fc);

  if (in.syllabus) {
    const auto emb = annotation_embedder(tr, in.timeline, *in.syllabus);
    out.final_segments = annotate(out.fused, in.timeline, *in.syllabus, emb);
  } else {
    for (const auto& s : out.fused) out.final_segments.push_back({s.start, s.end, std::nullopt});
  }
  if (in.ground_truth) {
    EvalOptions eo;
    eo.tolerance = cfg.params.eval_tolerance;
    out.report = evaluate(*in.ground_truth, out.final_segments, eo);
  }

  if (write_files) {
    namespace fs = std::filesystem;
    const fs::path dir = cfg.paths.output_dir;
    fs::create_directories(dir);
    io::write_file((dir / "dictionary.tsv").string(), out.dictionary.to_tsv());
    io::write_file((dir / "semantic.json").string(), boundaries_to_json(out.semantic).dump(1) + "\n");
    io::write_file((dir / "structural.json").string(), boundaries_to_json(out.structural).dump(1) + "\n");
    io::write_file((dir / "fused.json").string(), boundaries_to_json(out.fused).dump(1) + "\n");
    io::write_file((dir / "segments.json").string(), annotated_to_json(out.final_segments).dump(1) + "\n");
    if (out.report) {
      io::write_file((dir / "report.json").string(), report_to_json(*out.report).dump(1) + "\n");
      io::write_file((dir / "report.txt").string(), report_to_table(*out.report));
    }
  }
  return out;
}

}  // namespace lecseg
