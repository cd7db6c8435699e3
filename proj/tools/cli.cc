#include "cli.h"

#include <algorithm>
#include <atomic>
#include <cstdlib>
#include <fstream>
#include <set>
#include <sstream>
#include <thread>

#include "CLI11.hpp"
#include "synthehr/analytics.h"
#include "synthehr/corpus_store.h"
#include "synthehr/error.h"
#include "synthehr/generation.h"
#include "synthehr/review_service.h"
#include "synthehr/run_config.h"
#include "synthehr/validation.h"

namespace synthehr::cli {

namespace {

namespace fs = std::filesystem;

struct Globals {
  std::string config;
  std::string corpus;
  std::string annotations;
  std::optional<std::uint64_t> seed;
};

struct Selection {
  std::vector<std::string> models;
  std::vector<std::string> genres;
  std::vector<std::string> where;  // dimension=value[,value]

  void add_to(CLI::App *cmd) {
    cmd->add_option("--models", models, "Model ids")->delimiter(',');
    cmd->add_option("--genres", genres, "Genre codes (Init, GP, Ref, Care)")->delimiter(',');
    cmd->add_option("--where", where, "Parameter restriction, e.g. ethnicity=white-british");
  }

  std::vector<GenreId> genre_ids() const {
    std::vector<GenreId> out;
    for (const auto &g : genres) {
      const auto id = parse_genre(g);
      if (!id) throw Error(ErrorCode::kInvalidArgument, "unknown genre '" + g + "'");
      out.push_back(*id);
    }
    return out;
  }

  RecordFilter filter(const ParameterGrid &grid) const {
    RecordFilter f;
    f.models = models;
    f.genres = genre_ids();
    for (const auto &w : where) f.add_assignment(w, grid);
    return f;
  }
};

RunConfig load_config(const Globals &g) {
  RunConfig c = g.config.empty() ? RunConfig{} : RunConfig::from_yaml_file(g.config);
  if (!g.corpus.empty()) c.corpus = g.corpus;
  if (!g.annotations.empty()) c.annotations = g.annotations;
  if (g.seed) c.seed = *g.seed;
  return c;
}

// Writes to a sibling temp file and renames, so a failed run leaves no
// partial artifact.
void write_file(const fs::path &path, const std::string &content) {
  if (path.has_parent_path()) fs::create_directories(path.parent_path());
  const fs::path tmp = path.string() + ".tmp";
  {
    std::ofstream f(tmp, std::ios::binary | std::ios::trunc);
    f << content;
    f.flush();
    if (!f) throw Error(ErrorCode::kStoreWrite, "cannot write " + path.string());
  }
  fs::rename(tmp, path);
}

void emit(const std::string &content, const std::string &out_path, std::ostream &out) {
  if (out_path.empty() || out_path == "-") {
    out << content;
  } else {
    write_file(out_path, content);
  }
}

std::vector<std::string> store_models(const CorpusStore &store) {
  std::set<std::string> models;
  for (const auto &k : store.keys()) models.insert(k.model);
  return {models.begin(), models.end()};
}

std::string fmt(double v) {
  std::ostringstream s;
  s << v;
  return s.str();
}

std::optional<Keyword> find_keyword(const std::vector<Keyword> &lex, const std::string &name) {
  for (const auto &k : lex) {
    if (k.display == name || k.term == name) return k;
  }
  return std::nullopt;
}

std::vector<Keyword> lexicon_from(const std::string &path) {
  return path.empty() ? builtin_keywords() : load_keywords(path);
}

// ---- subcommands ----

int cmd_grid(const Globals &g, bool count, std::optional<StoryId> show, std::ostream &out) {
  const auto grid = load_config(g).grid();
  if (count) out << grid.size() << "\n";
  if (show) out << grid.render_story(grid.at(*show)) << "\n";
  return kOk;
}

struct GenerateArgs {
  Selection sel;
  std::optional<StoryId> limit;
  bool resume = false;
  std::optional<int> parallelism;
};

int cmd_generate(const Globals &g, const GenerateArgs &a, std::ostream &out, std::ostream &err) {
  auto cfg = load_config(g);
  if (!a.sel.where.empty()) {
    throw Error(ErrorCode::kInvalidArgument, "--where is not supported by generate");
  }
  auto models = cfg.select_models(a.sel.models);
  for (auto &m : models) {
    if (a.parallelism) m.parallelism = *a.parallelism;
    m.validate();
  }
  auto genres = a.sel.genre_ids();
  if (genres.empty()) {
    for (const auto &gi : all_genres()) genres.push_back(gi.id);
  }
  const auto grid = cfg.grid();
  auto stories = grid.enumerate();
  if (a.limit) stories.resize(std::min<std::size_t>(*a.limit, stories.size()));

  auto store = CorpusStore::open(cfg.corpus_dir(), grid);
  if (!a.resume) {
    std::size_t present = 0;
    for (const auto &m : models) {
      for (auto gen : genres) {
        for (std::size_t i = 0; i < stories.size(); ++i) {
          present += store->contains({m.model_id, gen, static_cast<StoryId>(i)});
        }
      }
    }
    if (present > 0) {
      throw Error(ErrorCode::kInvalidArgument,
                  std::to_string(present) +
                      " requested documents are already stored; pass --resume to continue");
    }
  }
  BatchOptions opts;
  opts.markers = cfg.markers;
  opts.seed = cfg.seed;
  const auto m = run_batch(stories, genres, models, *store, opts);
  out << "requested " << m.total << ", generated " << m.generated << ", skipped " << m.skipped
      << ", failed " << m.failures.size() << "\n";
  for (const auto &[flag, n] : m.flag_counts) out << "flag " << flag << ": " << n << "\n";
  out << "manifest: " << (store->root() / "manifest.json").string() << "\n";
  for (const auto &f : m.failures) {
    err << "failed " << to_string(f.key) << " [" << f.code << "]: " << f.message << "\n";
  }
  return m.failures.empty() ? kOk : kPartial;
}

int cmd_stats(const Globals &g, const Selection &sel, const std::string &format,
              std::ostream &out) {
  const auto cfg = load_config(g);
  const auto grid = cfg.grid();
  auto store = CorpusStore::open(cfg.corpus_dir(), grid);
  const auto base = sel.filter(grid);
  const Annotator annotator;
  std::map<Column, CorpusStats> stats;
  const auto models = base.models.empty() ? store_models(*store) : base.models;
  for (const auto &m : models) {
    for (const auto &gi : all_genres()) {
      if (!base.genres.empty() &&
          std::find(base.genres.begin(), base.genres.end(), gi.id) == base.genres.end()) {
        continue;
      }
      RecordFilter f = base;
      f.models = {m};
      f.genres = {gi.id};
      if (store->keys(f).empty()) continue;
      stats[{m, gi.id}] = store->stats(f, annotator);
    }
  }
  if (stats.empty()) throw Error(ErrorCode::kEmptySelection, "no documents match");
  if (format == "json") {
    auto j = nlohmann::json::array();
    for (const auto &[c, s] : stats) {
      auto row = s.to_json();
      row["model"] = c.model;
      row["genre"] = genre_code(c.genre);
      j.push_back(std::move(row));
    }
    out << j.dump(2) << "\n";
  } else if (format == "csv") {
    out << "model,genre,texts,sentences,words,median,mean,q1,q3,min,max\n";
    for (const auto &[c, s] : stats) {
      out << c.model << ',' << genre_code(c.genre) << ',' << s.n_texts << ',' << s.n_sentences
          << ',' << s.n_words << ',' << fmt(s.length_median) << ',' << fmt(s.length_mean) << ','
          << fmt(s.length_q1) << ',' << fmt(s.length_q3) << ',' << s.length_min << ','
          << s.length_max << "\n";
    }
  } else {
    ReportInputs in;
    in.stats = stats;
    out << render_markdown(in);
  }
  return kOk;
}

struct SampleArgs {
  Selection sel;
  std::size_t per_cell = 24;
  std::string batch;
};

int cmd_sample(const Globals &g, const SampleArgs &a, std::ostream &out) {
  const auto cfg = load_config(g);
  const auto grid = cfg.grid();
  auto store = CorpusStore::open(cfg.corpus_dir(), grid);
  const auto keys = sample_for_validation(*store, a.per_cell, cfg.seed, a.sel.filter(grid));
  auto ann = AnnotationStore::open(cfg.annotations_dir());
  SampleBatch b{a.batch.empty() ? "batch-" + std::to_string(cfg.seed) : a.batch, cfg.seed,
                a.per_cell, keys};
  ann->save_batch(b);
  out << keys.size() << " keys written to "
      << (ann->dir() / "batches" / (b.batch_id + ".json")).string() << "\n";
  return kOk;
}

struct AnnotateArgs {
  Selection sel;
  std::string batch;
  unsigned jobs = 0;
};

int cmd_annotate(const Globals &g, const AnnotateArgs &a, std::ostream &out) {
  const auto cfg = load_config(g);
  const auto grid = cfg.grid();
  auto store = CorpusStore::open(cfg.corpus_dir(), grid);
  auto ann = AnnotationStore::open(cfg.annotations_dir());
  std::vector<DocKey> keys;
  if (!a.batch.empty()) {
    keys = ann->batch(a.batch).keys;
  } else {
    for (const auto &k : store->keys(a.sel.filter(grid))) {
      if (analysable(store->get(k))) keys.push_back(k);
    }
  }
  if (keys.empty()) throw Error(ErrorCode::kEmptySelection, "nothing to annotate");

  const Annotator annotator;
  std::vector<AnnotationSet> fresh(keys.size());
  std::atomic<std::size_t> next{0};
  std::exception_ptr failure;
  std::mutex failure_mu;
  const unsigned jobs =
      a.jobs ? a.jobs : std::max(1u, std::min(8u, std::thread::hardware_concurrency()));
  std::vector<std::thread> workers;
  for (unsigned w = 0; w < jobs; ++w) {
    workers.emplace_back([&] {
      try {
        for (std::size_t i; (i = next++) < keys.size();) {
          fresh[i] = annotate_record(annotator, store->get(keys[i]), grid);
        }
      } catch (...) {
        std::lock_guard lock(failure_mu);
        if (!failure) failure = std::current_exception();
      }
    });
  }
  for (auto &t : workers) t.join();
  if (failure) std::rethrow_exception(failure);

  std::size_t p = 0, m = 0, t = 0;
  for (const auto &s : fresh) {
    p += s.processes.size();
    m += s.modalities.size();
    t += s.themes.size();
  }
  // Keep earlier annotations of other documents.
  std::map<std::string, AnnotationSet, std::less<>> merged;
  for (auto &s : ann->all()) merged[s.doc_key] = std::move(s);
  for (auto &s : fresh) merged[s.doc_key] = std::move(s);
  std::vector<AnnotationSet> all;
  for (auto &[k, s] : merged) all.push_back(std::move(s));
  ann->write_annotations(std::move(all));

  out << "annotated " << keys.size() << " documents: " << p << " process, " << m
      << " modality, " << t << " theme annotations\n";
  out << "annotations: " << (ann->dir() / "annotations.jsonl").string() << "\n";
  return kOk;
}

struct ReportArgs {
  std::string layer = "all";
  std::string format = "markdown";
  bool validated_only = false;
  bool keywords = false;
  bool stats = false;
  std::string lexicon;
  std::string out;
  Selection sel;
};

int cmd_report(const Globals &g, const ReportArgs &a, std::ostream &out) {
  const auto cfg = load_config(g);
  const auto grid = cfg.grid();
  if (a.format != "csv" && a.format != "markdown") {
    throw Error(ErrorCode::kInvalidArgument, "--format must be csv or markdown");
  }
  ReportInputs in;
  const auto manifest = cfg.corpus_dir() / "manifest.json";
  if (fs::exists(manifest)) in.provenance = file_digest(manifest);

  if (a.keywords || a.stats) {
    auto store = CorpusStore::open(cfg.corpus_dir(), grid);
    const auto filter = a.sel.filter(grid);
    if (a.keywords) in.keywords = keyword_counts(*store, filter, lexicon_from(a.lexicon));
    if (a.stats) {
      const Annotator annotator;
      for (const auto &m : filter.models.empty() ? store_models(*store) : filter.models) {
        for (const auto &gi : all_genres()) {
          RecordFilter f = filter;
          f.models = {m};
          f.genres = {gi.id};
          if (!store->keys(f).empty()) in.stats[{m, gi.id}] = store->stats(f, annotator);
        }
      }
    }
    if (a.format == "csv" && a.keywords) {
      emit(render_keywords_csv(in.keywords), a.out, out);
      return kOk;
    }
  }

  {
    auto ann = AnnotationStore::open(cfg.annotations_dir());
    auto sets = ann->all();
    if (!a.sel.models.empty() || !a.sel.genres.empty()) {
      const auto genres = a.sel.genre_ids();
      std::erase_if(sets, [&](const AnnotationSet &s) {
        const auto k = parse_doc_key(s.doc_key);
        if (!k) return true;
        if (!a.sel.models.empty() &&
            std::find(a.sel.models.begin(), a.sel.models.end(), k->model) == a.sel.models.end()) {
          return true;
        }
        return !genres.empty() && std::find(genres.begin(), genres.end(), k->genre) == genres.end();
      });
    }
    std::vector<TableLayer> layers;
    if (a.layer == "all") {
      layers = {TableLayer::kProcess, TableLayer::kModality, TableLayer::kModalityRequirement,
                TableLayer::kTheme};
    } else {
      const auto l = parse_table_layer(a.layer);
      if (!l) throw Error(ErrorCode::kInvalidArgument, "unknown layer '" + a.layer + "'");
      layers = {*l};
    }
    for (auto l : layers) {
      try {
        in.tables.push_back(frequency_table(sets, l, a.validated_only));
      } catch (const Error &e) {
        // With every layer requested, an empty one is left out.
        if (e.code() != ErrorCode::kEmptyLayer || (a.layer != "all" && !a.keywords)) throw;
      }
    }
    if (in.tables.empty() && !a.keywords) {
      throw Error(ErrorCode::kEmptyLayer, "no annotations to report");
    }
    if (std::any_of(layers.begin(), layers.end(),
                    [](TableLayer l) { return l == TableLayer::kTheme; })) {
      in.interpersonal = interpersonal_theme_counts(sets, a.validated_only);
    }
  }
  emit(a.format == "csv" ? render_csv(in.tables) : render_markdown(in), a.out, out);
  return kOk;
}

struct AuditArgs {
  std::string keyword;
  std::string dimension;
  std::string baseline;
  std::vector<std::string> comparison;
  std::vector<std::string> models;
  std::string lexicon;
  std::string format = "text";
};

int cmd_audit(const Globals &g, const AuditArgs &a, std::ostream &out) {
  const auto cfg = load_config(g);
  const auto grid = cfg.grid();
  auto store = CorpusStore::open(cfg.corpus_dir(), grid);
  const auto kw = find_keyword(lexicon_from(a.lexicon), a.keyword)
                      .value_or(Keyword{a.keyword, a.keyword, false});
  const auto models = a.models.empty() ? store_models(*store) : a.models;
  if (models.empty()) throw Error(ErrorCode::kEmptySelection, "corpus is empty");
  std::vector<BiasResult> results;
  for (const auto &m : models) {
    results.push_back(stratified_bias(*store, kw, a.dimension, a.baseline, a.comparison, m));
  }
  if (a.format == "csv") {
    out << render_audits_csv(results);
  } else if (a.format == "markdown") {
    ReportInputs in;
    in.audits = results;
    out << render_markdown(in);
  } else {
    for (const auto &r : results) {
      std::string cmp;
      for (const auto &v : r.comparison.values) cmp += (cmp.empty() ? "" : ",") + v;
      out << r.baseline.model << " " << kw.display << " by " << a.dimension << ": "
          << a.baseline << " " << r.baseline.count << " in " << r.baseline.docs << "/"
          << r.baseline.population << " docs, " << cmp << " " << r.comparison.count << " in "
          << r.comparison.docs << "/" << r.comparison.population << " docs, ratio "
          << (std::isinf(r.ratio) ? std::string("inf") : fmt(r.ratio)) << "\n";
    }
  }
  return kOk;
}

struct ServeArgs {
  std::string bind = "127.0.0.1";
  int port = 8080;
  std::string static_dir;
  std::string auth_env;
};

int cmd_serve(const Globals &g, const ServeArgs &a, std::ostream &out) {
  const auto cfg = load_config(g);
  auto store = CorpusStore::open(cfg.corpus_dir(), cfg.grid());
  auto ann = AnnotationStore::open(cfg.annotations_dir());
  ServiceOptions o;
  o.bind = a.bind;
  o.port = a.port;
  if (!a.static_dir.empty()) o.static_dir = a.static_dir;
  if (!a.auth_env.empty()) {
    const char *token = std::getenv(a.auth_env.c_str());
    if (!token || !*token) {
      throw Error(ErrorCode::kInvalidConfig, "environment variable " + a.auth_env + " is not set");
    }
    o.bearer_token = token;
  }
  ReviewService svc(*store, *ann, o);
  const int port = svc.bind();
  out << "listening on http://" << a.bind << ":" << port << std::endl;
  svc.listen();
  return kOk;
}

}  // namespace

int run(const std::vector<std::string> &args, std::ostream &out, std::ostream &err) {
  CLI::App app{"Synthetic mental-health record corpus: generation and SFL analysis", "synthehr"};
  app.require_subcommand(1);
  app.fallthrough();
  Globals g;
  app.add_option("--config", g.config, "YAML run configuration")->check(CLI::ExistingFile);
  app.add_option("--corpus", g.corpus, "Corpus directory (overrides the config)");
  app.add_option("--annotations", g.annotations, "Annotation directory (overrides the config)");
  app.add_option("--seed", g.seed, "Seed for sampling and the stub model");

  auto *grid_cmd = app.add_subcommand("grid", "Inspect the story grid");
  bool count = false;
  std::optional<StoryId> show;
  auto *count_opt = grid_cmd->add_flag("--count", count, "Print the number of stories");
  auto *show_opt = grid_cmd->add_option("--show", show, "Print the story at a 0-based index");
  count_opt->excludes(show_opt);
  grid_cmd->callback([&] {
    if (!count && !show) throw CLI::RequiredError("--count or --show");
  });

  auto *gen_cmd = app.add_subcommand("generate", "Generate missing documents");
  GenerateArgs gen;
  gen.sel.add_to(gen_cmd);
  gen_cmd->add_option("--limit", gen.limit, "Use only the first N stories");
  gen_cmd->add_flag("--resume", gen.resume, "Continue a run; stored documents are skipped");
  gen_cmd->add_option("--parallelism", gen.parallelism, "Requests in flight per model")
      ->check(CLI::PositiveNumber);

  auto *stats_cmd = app.add_subcommand("stats", "Corpus statistics per model and genre");
  Selection stats_sel;
  std::string stats_format = "markdown";
  stats_sel.add_to(stats_cmd);
  stats_cmd->add_option("--format", stats_format)->check(CLI::IsMember({"markdown", "csv", "json"}));

  auto *sample_cmd = app.add_subcommand("sample", "Draw a validation sample");
  SampleArgs sample;
  sample.sel.add_to(sample_cmd);
  sample_cmd->add_option("--per-cell", sample.per_cell, "Documents per model and genre")
      ->required()
      ->check(CLI::PositiveNumber);
  sample_cmd->add_option("--batch", sample.batch, "Batch id");

  auto *ann_cmd = app.add_subcommand("annotate", "Run the SFL annotator");
  AnnotateArgs annotate;
  annotate.sel.add_to(ann_cmd);
  ann_cmd->add_option("--batch", annotate.batch, "Annotate a stored sample");
  ann_cmd->add_option("--jobs", annotate.jobs, "Worker threads");

  auto *report_cmd = app.add_subcommand("report", "Frequency tables and keyword counts");
  ReportArgs report;
  report.sel.add_to(report_cmd);
  report_cmd->add_option("--layer", report.layer)
      ->check(CLI::IsMember({"all", "process", "modality", "modality-requirement", "theme"}));
  report_cmd->add_option("--format", report.format)->check(CLI::IsMember({"markdown", "csv"}));
  report_cmd->add_flag("--validated-only", report.validated_only,
                       "Count accepted and relabeled annotations only");
  report_cmd->add_flag("--keywords", report.keywords, "Keyword mentions over the corpus");
  report_cmd->add_flag("--stats", report.stats, "Include corpus statistics");
  report_cmd->add_option("--lexicon", report.lexicon, "Keyword file")->check(CLI::ExistingFile);
  report_cmd->add_option("--out", report.out, "Output file (default stdout)");

  auto *audit_cmd = app.add_subcommand("audit", "Keyword counts by demographic stratum");
  AuditArgs audit;
  audit_cmd->add_option("--keyword", audit.keyword)->required();
  audit_cmd->add_option("--dimension", audit.dimension)->required();
  audit_cmd->add_option("--baseline", audit.baseline)->required();
  audit_cmd->add_option("--comparison", audit.comparison)->required()->delimiter(',');
  audit_cmd->add_option("--model", audit.models, "Model ids (default: all)")->delimiter(',');
  audit_cmd->add_option("--lexicon", audit.lexicon)->check(CLI::ExistingFile);
  audit_cmd->add_option("--format", audit.format)->check(CLI::IsMember({"text", "csv", "markdown"}));

  auto *serve_cmd = app.add_subcommand("serve", "Run the review service");
  ServeArgs serve;
  serve_cmd->add_option("--bind", serve.bind);
  serve_cmd->add_option("--port", serve.port)->check(CLI::Range(0, 65535));
  serve_cmd->add_option("--static", serve.static_dir, "UI bundle directory");
  serve_cmd->add_option("--auth-env", serve.auth_env,
                        "Environment variable holding a bearer token to require");

  std::vector<std::string> rev(args.rbegin(), args.rend());
  try {
    app.parse(rev);
  } catch (const CLI::ParseError &e) {
    const int code = app.exit(e, out, err);
    return code == 0 ? kOk : kUsage;
  }

  try {
    if (grid_cmd->parsed()) return cmd_grid(g, count, show, out);
    if (gen_cmd->parsed()) return cmd_generate(g, gen, out, err);
    if (stats_cmd->parsed()) return cmd_stats(g, stats_sel, stats_format, out);
    if (sample_cmd->parsed()) return cmd_sample(g, sample, out);
    if (ann_cmd->parsed()) return cmd_annotate(g, annotate, out);
    if (report_cmd->parsed()) return cmd_report(g, report, out);
    if (audit_cmd->parsed()) return cmd_audit(g, audit, out);
    if (serve_cmd->parsed()) return cmd_serve(g, serve, out);
  } catch (const Error &e) {
    err << "error [" << error_code_name(e.code()) << "]: " << e.what() << "\n";
    return kFailed;
  } catch (const std::exception &e) {
    err << "error: " << e.what() << "\n";
    return kFailed;
  }
  return kUsage;
}

}  // namespace synthehr::cli
