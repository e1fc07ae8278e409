#include <CLI11.hpp>

#include <cstdlib>
#include <filesystem>
#include <future>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include "lecseg/lecseg.hpp"

namespace fs = std::filesystem;
using namespace lecseg;

namespace {

int log_level() {
  const char* v = std::getenv("LECSEG_LOG");
  if (!v || !*v) return 0;
  const std::string s = v;
  if (s == "debug") return 2;
  if (s == "info") return 1;
  if (s == "quiet" || s == "off") return 0;
  return std::atoi(v);
}

void log(int level, const std::string& msg) {
  if (log_level() >= level) std::cerr << "lecseg: " << msg << "\n";
}

// Flags shared by every subcommand that reads pipeline inputs. Values set on
// the command line win over the config file.
struct CommonFlags {
  std::string config;
  PipelinePaths paths;
  std::optional<std::size_t> sentence_length, context_k, window;
  std::optional<double> primary_fraction, fusion_threshold, tolerance, decision_threshold, pairing_overlap;
  std::optional<std::string> strictness;
  bool no_tail_split = false;

  void attach(CLI::App* app, bool single_config = true) {
    if (single_config) app->add_option("--config", config, "JSON config file");
    add_path(app, "--transcript", paths.transcript, "transcript JSON");
    add_path(app, "--timeline", paths.timeline, "slide timeline JSON");
    add_path(app, "--kg", paths.kg, "knowledge graph TSV");
    add_path(app, "--lexicon", paths.lexicon, "concept lexicon (text or JSON list)");
    add_path(app, "--syllabus", paths.syllabus, "syllabus JSON");
    add_path(app, "--embeddings", paths.embeddings, "contextual embeddings JSONL");
    add_path(app, "--sentence-encodings", paths.sentence_encodings, "sentence encodings JSONL");
    add_path(app, "--classifier-weights", paths.classifier_weights, "boundary classifier weights JSON");
    add_path(app, "--ground-truth", paths.ground_truth, "ground truth JSON");
    add_path(app, "--dictionary", paths.dictionary, "precomputed similarity dictionary TSV");
    app->add_option("--sentence-length", sentence_length, "tokens per sentence window");
    app->add_option("--context-k", context_k, "sentences of context on each side");
    app->add_option("--window", window, "co-occurrence window in tokens");
    app->add_option("--primary-fraction", primary_fraction, "fraction of concepts kept in centroids");
    app->add_option("--fusion-threshold", fusion_threshold, "seconds above which semantic segments are kept");
    app->add_option("--tolerance", tolerance, "boundary F1 tolerance in seconds");
    app->add_option("--decision-threshold", decision_threshold, "structural boundary probability threshold");
    app->add_option("--pairing-overlap", pairing_overlap, "minimum IoU to pair segments during fusion");
    app->add_option("--strictness", strictness, "Case C reading: verbatim or strict");
    app->add_flag("--no-tail-split", no_tail_split, "never split the last two clusters");
  }

  static void add_path(CLI::App* app, const std::string& name, std::optional<std::string>& dst, const std::string& help) {
    app->add_option_function<std::string>(name, [&dst](const std::string& v) { dst = v; }, help);
  }

  PipelineConfig resolve(const std::string& config_path) const {
    PipelineConfig cfg = config_path.empty() ? PipelineConfig{} : load_config(config_path);
    auto over = [](std::optional<std::string>& dst, const std::optional<std::string>& src) {
      if (src) dst = src;
    };
    over(cfg.paths.transcript, paths.transcript);
    over(cfg.paths.timeline, paths.timeline);
    over(cfg.paths.kg, paths.kg);
    over(cfg.paths.lexicon, paths.lexicon);
    over(cfg.paths.syllabus, paths.syllabus);
    over(cfg.paths.embeddings, paths.embeddings);
    over(cfg.paths.sentence_encodings, paths.sentence_encodings);
    over(cfg.paths.classifier_weights, paths.classifier_weights);
    over(cfg.paths.ground_truth, paths.ground_truth);
    over(cfg.paths.dictionary, paths.dictionary);
    auto& p = cfg.params;
    if (sentence_length) p.sentence_length = *sentence_length;
    if (context_k) p.context_k = *context_k;
    if (window) p.co_occurrence_window = *window;
    if (primary_fraction) p.primary_fraction = *primary_fraction;
    if (fusion_threshold) p.fusion_threshold = *fusion_threshold;
    if (tolerance) p.eval_tolerance = *tolerance;
    if (decision_threshold) p.decision_threshold = *decision_threshold;
    if (pairing_overlap) p.pairing_min_overlap = *pairing_overlap;
    if (strictness) p.case_c_strictness = parse_strictness(*strictness);
    if (no_tail_split) p.split_disjoint_tail = false;
    validate_params(p);
    return cfg;
  }

  PipelineConfig resolve() const { return resolve(config); }
};

template <class T>
const T& need(const std::optional<T>& v, const char* what) {
  if (!v) throw InputError(std::string("missing required input: ") + what);
  return *v;
}

void emit(const std::string& out_path, const std::string& contents) {
  if (out_path.empty() || out_path == "-") {
    std::cout << contents;
  } else {
    if (const auto dir = fs::path(out_path).parent_path(); !dir.empty()) fs::create_directories(dir);
    io::write_file(out_path, contents);
  }
}

SimilarityDictionary dictionary_for(const PipelineConfig& cfg, const LoadedInputs& in, std::span<const Mention> mentions,
                                    const EmbeddingProvider& provider) {
  if (in.dictionary) return *in.dictionary;
  DictionaryOptions opts;
  opts.window = cfg.params.co_occurrence_window;
  return build_similarity_dictionary(*in.transcript, mentions, provider, opts);
}

int cmd_edge_weights(const CommonFlags& flags, bool fallback, const std::string& out, const std::string& requests) {
  const auto cfg = flags.resolve();
  const auto in = load_inputs(cfg.paths);
  const auto& tr = need(in.transcript, "transcript");
  const auto& lex = need(in.lexicon, "lexicon");
  const auto mentions = find_concept_mentions(tr, lex);
  log(1, std::to_string(mentions.size()) + " concept mentions");
  DictionaryOptions opts;
  opts.window = cfg.params.co_occurrence_window;

  if (!requests.empty()) {
    emit(requests, embedding_requests_jsonl(tr, mentions, opts));
    if (!in.embeddings && !fallback) return 0;
  }
  std::unique_ptr<FallbackEmbedder> fb;
  const EmbeddingProvider* provider = in.embeddings.get();
  if (!provider) {
    if (!fallback) throw InputError("edge-weights needs --embeddings or --fallback-embedder");
    fb = std::make_unique<FallbackEmbedder>(tr);
    provider = fb.get();
  }
  const auto dict = build_similarity_dictionary(tr, mentions, *provider, opts);
  emit(out, dict.to_tsv());
  (out.empty() || out == "-" ? std::cerr : std::cout) << "pairs: " << dict.size() << "\n";
  return 0;
}

int cmd_segment(const CommonFlags& flags, const std::string& mode_name, const std::string& out,
                const std::string& sentences_out) {
  const auto mode = parse_mode(mode_name);
  const auto cfg = flags.resolve();
  const auto in = load_inputs(cfg.paths);
  const auto& tr = need(in.transcript, "transcript");
  const auto& p = cfg.params;

  if (!sentences_out.empty()) emit(sentences_out, sentence_requests_jsonl(window_sentences(tr, p.sentence_length), tr));

  std::unique_ptr<FallbackEmbedder> fb;
  const EmbeddingProvider* provider = in.embeddings.get();
  if (!provider) {
    log(1, "no embeddings given; using the fallback embedder");
    fb = std::make_unique<FallbackEmbedder>(tr);
    provider = fb.get();
  }
  const auto span = video_span(tr, in.timeline);

  TopicBoundaryList semantic, structural, result;
  if (mode != SegmentMode::structural) {
    if (in.timeline.empty()) throw InputError("semantic segmentation needs a slide timeline");
    const auto& lex = need(in.lexicon, "lexicon");
    const auto& kg = need(in.kg, "knowledge graph");
    const auto mentions = find_concept_mentions(tr, lex);
    const auto dict = dictionary_for(cfg, in, mentions, *provider);
    const auto r = run_semantic(tr, in.timeline, mentions, kg, dict, p);
    for (const auto& t : r.trace)
      log(2, "triple " + std::to_string(t.index) + ": " + to_string(t.decision.kind));
    semantic = r.segments;
  }
  if (mode != SegmentMode::semantic) {
    structural = run_structural(tr, span.end, *provider, p, in.sentence_encodings.get(),
                                in.classifier ? &*in.classifier : nullptr);
  }
  switch (mode) {
    case SegmentMode::semantic: result = semantic; break;
    case SegmentMode::structural: result = structural; break;
    case SegmentMode::fused: {
      FusionConfig fc;
      fc.duration_threshold = p.fusion_threshold;
      fc.pairing_min_overlap = p.pairing_min_overlap;
      result = fuse(structural, semantic, fc);
      break;
    }
  }
  log(1, std::to_string(result.size()) + " segments");
  if (in.syllabus) {
    const auto emb = annotation_embedder(tr, in.timeline, *in.syllabus);
    emit(out, annotated_to_json(annotate(result, in.timeline, *in.syllabus, emb)).dump(1) + "\n");
  } else {
    emit(out, boundaries_to_json(result).dump(1) + "\n");
  }
  return 0;
}

int cmd_annotate(const CommonFlags& flags, const std::string& segments_path, const std::string& out) {
  const auto cfg = flags.resolve();
  const auto in = load_inputs(cfg.paths);
  const auto& tr = need(in.transcript, "transcript");
  const auto& syl = need(in.syllabus, "syllabus");
  if (in.timeline.empty()) throw InputError("annotate needs a slide timeline");
  const auto segs = strip_names(parse_segments(io::read_file(segments_path)));
  const auto emb = annotation_embedder(tr, in.timeline, syl);
  emit(out, annotated_to_json(annotate(segs, in.timeline, syl, emb)).dump(1) + "\n");
  return 0;
}

int cmd_fuse(const CommonFlags& flags, const std::string& structural_path, const std::string& semantic_path,
             const std::string& out) {
  const auto cfg = flags.resolve();
  const auto str = parse_boundaries(io::read_file(structural_path), "structural segmentation");
  const auto sem = parse_boundaries(io::read_file(semantic_path), "semantic segmentation");
  FusionConfig fc;
  fc.duration_threshold = cfg.params.fusion_threshold;
  fc.pairing_min_overlap = cfg.params.pairing_min_overlap;
  emit(out, boundaries_to_json(fuse(str, sem, fc)).dump(1) + "\n");
  return 0;
}

int cmd_eval(const CommonFlags& flags, const std::string& segments_path, const std::string& format,
             std::optional<std::size_t> k, const std::string& out) {
  const auto cfg = flags.resolve();
  const auto gt = io::load_ground_truth(need(cfg.paths.ground_truth, "ground truth"));
  const auto segs = parse_segments(io::read_file(segments_path));
  EvalOptions eo;
  eo.tolerance = cfg.params.eval_tolerance;
  eo.k = k;
  const auto report = evaluate(gt, segs, eo);
  if (format == "json")
    emit(out, report_to_json(report).dump(1) + "\n");
  else if (format == "table")
    emit(out, report_to_table(report));
  else if (format == "csv")
    emit(out, report_to_csv(report));
  else
    throw InputError("unknown format '" + format + "' (expected json, table or csv)");
  return 0;
}

int cmd_pipeline(const CommonFlags& flags, const std::vector<std::string>& configs, unsigned jobs,
                 const std::string& out_dir) {
  std::vector<PipelineConfig> cfgs;
  if (configs.empty()) {
    cfgs.push_back(flags.resolve(""));
  } else {
    for (const auto& c : configs) cfgs.push_back(flags.resolve(c));
  }
  if (!out_dir.empty()) {
    if (cfgs.size() > 1) throw InputError("--out-dir applies to a single video; set output_dir per config instead");
    cfgs[0].paths.output_dir = out_dir;
  }
  if (jobs < 1) jobs = 1;

  std::vector<std::optional<PipelineOutputs>> results(cfgs.size());
  std::vector<std::exception_ptr> errors(cfgs.size());
  for (std::size_t first = 0; first < cfgs.size(); first += jobs) {
    std::vector<std::future<void>> running;
    for (std::size_t v = first; v < std::min(cfgs.size(), first + jobs); ++v) {
      running.push_back(std::async(std::launch::async, [&, v] {
        try {
          results[v] = run_pipeline(cfgs[v]);
        } catch (...) {
          errors[v] = std::current_exception();
        }
      }));
    }
    for (auto& f : running) f.get();
  }
  for (std::size_t v = 0; v < cfgs.size(); ++v) {
    if (errors[v]) std::rethrow_exception(errors[v]);
    const auto& r = *results[v];
    std::cout << cfgs[v].paths.output_dir << ": " << r.final_segments.size() << " segments";
    if (r.report) std::cout << ", mean OTR " << format_double(r.report->mean_otr, 4) << ", Pk " << format_double(r.report->pk, 4);
    std::cout << "\n";
  }
  return 0;
}

int cmd_gen_fixture(const synthetic::FixtureSpec& spec, const std::string& out_dir) {
  const auto fx = synthetic::generate(spec);
  const fs::path dir = out_dir;
  fs::create_directories(dir);
  io::write_file((dir / "transcript.json").string(), io::transcript_to_json(fx.transcript));
  io::write_file((dir / "timeline.json").string(), io::timeline_to_json(fx.timeline));
  io::write_file((dir / "kg.tsv").string(), synthetic::kg_to_tsv(fx));
  std::string lex;
  for (const auto& c : fx.lexicon) lex += c + "\n";
  io::write_file((dir / "lexicon.txt").string(), lex);
  io::write_file((dir / "syllabus.json").string(), nlohmann::json(fx.syllabus).dump(1) + "\n");
  io::write_file((dir / "ground_truth.json").string(), synthetic::ground_truth_to_json(fx.ground_truth));
  nlohmann::ordered_json cfg;
  cfg["paths"] = {{"transcript", "transcript.json"}, {"timeline", "timeline.json"}, {"kg", "kg.tsv"},
                  {"lexicon", "lexicon.txt"},       {"syllabus", "syllabus.json"}, {"ground_truth", "ground_truth.json"},
                  {"output_dir", "out"}};
  cfg["params"] = nlohmann::ordered_json::object();
  io::write_file((dir / "config.json").string(), cfg.dump(1) + "\n");
  std::cout << dir.string() << ": " << fx.ground_truth.size() << " topics, " << fx.timeline.size() << " slides, "
            << fx.transcript.size() << " tokens\n";
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Topic segmentation for lecture recordings"};
  app.require_subcommand(1);

  CommonFlags ew_flags, seg_flags, ann_flags, fuse_flags, eval_flags, pipe_flags;

  auto* ew = app.add_subcommand("edge-weights", "build the concept-pair similarity dictionary");
  ew_flags.attach(ew);
  bool fallback = false;
  std::string ew_out, ew_requests;
  ew->add_flag("--fallback-embedder", fallback, "use the built-in co-occurrence embedder");
  ew->add_option("--out", ew_out, "dictionary TSV (default stdout)");
  ew->add_option("--emit-requests", ew_requests, "write embedding requests JSONL for an external encoder");

  auto* seg = app.add_subcommand("segment", "segment one video");
  seg_flags.attach(seg);
  std::string mode = "fused", seg_out, seg_sentences;
  seg->add_option("--mode", mode, "semantic, structural or fused")->capture_default_str();
  seg->add_option("--out", seg_out, "segmentation JSON (default stdout)");
  seg->add_option("--emit-sentences", seg_sentences, "write sentence-window requests JSONL");

  auto* ann = app.add_subcommand("annotate", "name segments from the syllabus");
  ann_flags.attach(ann);
  std::string ann_segments, ann_out;
  ann->add_option("--segments", ann_segments, "segmentation JSON")->required();
  ann->add_option("--out", ann_out, "annotated JSON (default stdout)");

  auto* fu = app.add_subcommand("fuse", "fuse structural and semantic segmentations");
  fuse_flags.attach(fu);
  std::string fu_structural, fu_semantic, fu_out;
  fu->add_option("--structural", fu_structural, "structural segmentation JSON")->required();
  fu->add_option("--semantic", fu_semantic, "semantic segmentation JSON")->required();
  fu->add_option("--out", fu_out, "fused JSON (default stdout)");

  auto* ev = app.add_subcommand("eval", "score a segmentation against ground truth");
  eval_flags.attach(ev);
  std::string ev_segments, ev_format = "json", ev_out;
  std::optional<std::size_t> ev_k;
  ev->add_option("--segments", ev_segments, "segmentation JSON")->required();
  ev->add_option("--format", ev_format, "json, table or csv")->capture_default_str();
  ev->add_option("-k", ev_k, "Pk/WindowDiff probe width in units (default: half the mean segment length)");
  ev->add_option("--out", ev_out, "report file (default stdout)");

  auto* pipe = app.add_subcommand("pipeline", "run every stage end to end");
  pipe_flags.attach(pipe, false);
  std::vector<std::string> pipe_configs;
  unsigned jobs = 1;
  std::string pipe_out;
  pipe->add_option("--config", pipe_configs, "config file, one per video (repeatable)");
  pipe->add_option("--jobs", jobs, "videos processed in parallel")->capture_default_str();
  pipe->add_option("--out-dir", pipe_out, "output directory (single video)");

  auto* gen = app.add_subcommand("gen-fixture", "write a synthetic planted-topic lecture");
  synthetic::FixtureSpec spec;
  std::string gen_out;
  gen->add_option("--seed", spec.seed, "random seed")->capture_default_str();
  gen->add_option("--topics", spec.topics, "number of topics")->capture_default_str();
  gen->add_option("--min-minutes", spec.min_topic_minutes, "shortest topic")->capture_default_str();
  gen->add_option("--max-minutes", spec.max_topic_minutes, "longest topic")->capture_default_str();
  gen->add_option("--out-dir", gen_out, "output directory")->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? 0 : 2;
  }

  try {
    if (*ew) return cmd_edge_weights(ew_flags, fallback, ew_out, ew_requests);
    if (*seg) return cmd_segment(seg_flags, mode, seg_out, seg_sentences);
    if (*ann) return cmd_annotate(ann_flags, ann_segments, ann_out);
    if (*fu) return cmd_fuse(fuse_flags, fu_structural, fu_semantic, fu_out);
    if (*ev) return cmd_eval(eval_flags, ev_segments, ev_format, ev_k, ev_out);
    if (*pipe) return cmd_pipeline(pipe_flags, pipe_configs, jobs, pipe_out);
    if (*gen) {
      if (spec.topics < 1) throw InputError("--topics must be >= 1");
      if (!(spec.min_topic_minutes > 0.0 && spec.max_topic_minutes >= spec.min_topic_minutes))
        throw InputError("topic minutes must satisfy 0 < min <= max");
      return cmd_gen_fixture(spec, gen_out);
    }
  } catch (const InputError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  } catch (const std::invalid_argument& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  } catch (const PipelineError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 3;
  } catch (const std::filesystem::filesystem_error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "error: [pipeline] " << e.what() << "\n";
    return 3;
  }
  return 0;
}
