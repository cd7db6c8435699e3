#include <algorithm>
#include <cmath>
#include <map>
#include <random>
#include <string>

#include "doctest.h"
#include "synthehr/analytics.h"
#include "synthehr/error.h"
#include "test_util.h"

using namespace synthehr;
using testing::TempDir;

namespace {

ErrorCode code_of(const std::function<void()> &f) {
  try {
    f();
  } catch (const Error &e) {
    return e.code();
  }
  FAIL("no error thrown");
  return ErrorCode::kInvalidArgument;
}

// Nearest tenth of a percent by exhaustive search over 0.0..100.0; ties go up.
double oracle_rate(std::size_t n, std::size_t total) {
  long best = 0;
  for (long r = 0; r <= 1000; ++r) {
    // |r/1000 - n/total| compared as integers scaled by 1000 * total.
    const long long d = std::llabs(static_cast<long long>(r) * total - 1000LL * n);
    const long long bd = std::llabs(static_cast<long long>(best) * total - 1000LL * n);
    if (d < bd || (d == bd && r > best)) best = r;
  }
  return best / 10.0;
}

ProcessAnnotation proc(ProcessType t, ReviewStatus s = ReviewStatus::kAuto,
                       std::optional<std::string> relabel = {}) {
  ProcessAnnotation a;
  a.label = t;
  a.review = {s, std::move(relabel)};
  return a;
}

// One annotation set per column holding `counts` process annotations.
std::vector<AnnotationSet> process_sets(
    const std::map<std::string, std::map<ProcessType, std::size_t>> &columns) {
  std::vector<AnnotationSet> out;
  int story = 0;
  for (const auto &[key, counts] : columns) {
    AnnotationSet s;
    s.doc_key = key + ":" + std::to_string(story++);
    for (const auto &[t, n] : counts) {
      for (std::size_t i = 0; i < n; ++i) s.processes.push_back(proc(t));
    }
    out.push_back(std::move(s));
  }
  return out;
}

ModalityAnnotation modal(ModalityType t, std::optional<RequirementSubtype> sub = {}) {
  ModalityAnnotation m;
  m.type = t;
  m.requirement_subtype = sub;
  return m;
}

}  // namespace

TEST_CASE("local rates from reference counts") {
  CHECK(local_rate(1358, 1639) == 82.9);
  CHECK(local_rate(136, 146) == 93.2);
  CHECK(local_rate(104, 125) == 83.2);
  CHECK(local_rate(1, 1) == 100.0);
  CHECK(local_rate(0, 5) == 0.0);
  CHECK(local_rate(1, 8) == 12.5);
  CHECK(local_rate(1, 2000) == 0.1);  // 0.05 rounds up
}

TEST_CASE("local rate agrees with an exhaustive nearest-tenth search") {
  std::mt19937_64 rng(3);
  for (int i = 0; i < 3000; ++i) {
    const std::size_t total = 1 + rng() % 5000;
    const std::size_t n = rng() % (total + 1);
    CHECK(local_rate(n, total) == oracle_rate(n, total));
  }
}

TEST_CASE("process table reproduces the reference column rates") {
  using P = ProcessType;
  // N per label for each column, followed by the reference percentages.
  struct Col {
    const char *key;
    std::array<std::size_t, 5> n;
    std::array<double, 5> pct;
  };
  const std::vector<Col> cols = {
      {"llama:Care", {1358, 59, 54, 167, 1}, {82.9, 3.6, 3.3, 10.2, 0.1}},
      {"llama:GP", {1125, 93, 280, 178, 17}, {66.5, 5.5, 16.5, 10.5, 1.0}},
      {"llama:Init", {876, 55, 159, 206, 3}, {67.4, 4.2, 12.2, 15.9, 0.2}},
      {"llama:Ref", {1266, 82, 224, 314, 3}, {67.0, 4.3, 11.9, 16.6, 0.2}},
      {"mistral:Care", {1011, 23, 24, 79, 1}, {88.8, 2.0, 2.1, 6.9, 0.1}},
      {"mistral:GP", {762, 76, 142, 160, 56}, {63.7, 6.4, 11.9, 13.4, 4.7}},
      {"mistral:Init", {533, 45, 54, 187, 39}, {62.1, 5.2, 6.3, 21.8, 4.5}},
      {"mistral:Ref", {490, 59, 77, 164, 19}, {60.6, 7.3, 9.5, 20.3, 2.3}},
  };
  const std::array<P, 5> order = {P::kMaterial, P::kMental, P::kVerbal, P::kRelational,
                                  P::kExistential};
  std::map<std::string, std::map<P, std::size_t>> input;
  for (const auto &c : cols) {
    for (std::size_t i = 0; i < 5; ++i) input[c.key][order[i]] = c.n[i];
  }
  auto sets = process_sets(input);
  std::shuffle(sets.begin(), sets.end(), std::mt19937_64(1));
  const auto t = frequency_table(sets, TableLayer::kProcess, false);
  for (const auto &c : cols) {
    const auto key = parse_doc_key(std::string(c.key) + ":0").value();
    const Column col{key.model, key.genre};
    double sum = 0;
    std::size_t total = 0;
    for (std::size_t i = 0; i < 5; ++i) {
      const auto label = std::string(process_type_name(order[i]));
      INFO(c.key << " " << label);
      CHECK(t.count(label, col) == c.n[i]);
      CHECK(t.rate(label, col) == c.pct[i]);
      sum += t.rate(label, col);
      total += c.n[i];
    }
    CHECK(t.totals.at(col) == total);
    CHECK(sum >= 99.7);
    CHECK(sum <= 100.3);
  }
}

TEST_CASE("modality tables reproduce the reference rates") {
  using M = ModalityType;
  using R = RequirementSubtype;
  // likelihood, requirement split as obligation/advisability/permission plus
  // requirements left without a subtype, volition.
  struct Col {
    const char *key;
    std::size_t lik, obl, adv, per, bare, vol;
    std::array<double, 3> top;
    std::array<double, 3> req;
  };
  const std::vector<Col> cols = {
      {"llama:Care", 4, 36, 4, 0, 1, 15, {6.7, 68.3, 25.0}, {87.8, 9.8, 0.0}},
      {"llama:GP", 3, 103, 33, 0, 0, 7, {2.1, 93.2, 4.8}, {75.7, 24.3, 0.0}},
      {"llama:Init", 24, 58, 16, 0, 0, 3, {23.8, 73.3, 3.0}, {78.4, 21.6, 0.0}},
      {"llama:Ref", 2, 98, 6, 0, 0, 19, {1.6, 83.2, 15.2}, {94.2, 5.8, 0.0}},
      {"mistral:Care", 1, 50, 8, 3, 0, 0, {1.6, 98.4, 0.0}, {82.0, 13.1, 4.9}},
      {"mistral:GP", 4, 41, 19, 0, 0, 15, {5.1, 75.9, 19.0}, {68.3, 31.7, 0.0}},
      {"mistral:Init", 17, 38, 25, 1, 0, 0, {21.0, 79.0, 0.0}, {59.4, 39.1, 1.6}},
      {"mistral:Ref", 1, 49, 8, 0, 0, 12, {1.4, 81.4, 17.1}, {86.0, 14.0, 0.0}},
  };
  std::vector<AnnotationSet> sets;
  for (const auto &c : cols) {
    AnnotationSet s;
    s.doc_key = std::string(c.key) + ":0";
    auto add = [&](std::size_t n, ModalityAnnotation m) {
      for (std::size_t i = 0; i < n; ++i) s.modalities.push_back(m);
    };
    add(c.lik, modal(M::kLikelihood));
    add(c.obl, modal(M::kRequirement, R::kObligation));
    add(c.adv, modal(M::kRequirement, R::kAdvisability));
    add(c.per, modal(M::kRequirement, R::kPermission));
    add(c.bare, modal(M::kRequirement));
    add(c.vol, modal(M::kVolition));
    sets.push_back(std::move(s));
  }
  const auto top = frequency_table(sets, TableLayer::kModality, false);
  const auto req = frequency_table(sets, TableLayer::kModalityRequirement, false);
  for (const auto &c : cols) {
    const auto key = parse_doc_key(std::string(c.key) + ":0").value();
    const Column col{key.model, key.genre};
    INFO(c.key);
    CHECK(top.rate("likelihood", col) == c.top[0]);
    CHECK(top.rate("requirement", col) == c.top[1]);
    CHECK(top.rate("volition", col) == c.top[2]);
    CHECK(top.count("requirement", col) == c.obl + c.adv + c.per + c.bare);
    CHECK(req.totals.at(col) == c.obl + c.adv + c.per);
    if (c.bare == 0) {
      CHECK(req.rate("obligation", col) == c.req[0]);
      CHECK(req.rate("advisability", col) == c.req[1]);
      CHECK(req.rate("permission", col) == c.req[2]);
    } else {
      // The reference rates here divide by 41 although the subtype rows sum
      // to 40; the table keeps its own counts as the denominator.
      const double sub = static_cast<double>(c.obl + c.adv + c.per);
      CHECK(req.rate("obligation", col) == doctest::Approx(100.0 * c.obl / sub).epsilon(1e-3));
      CHECK(req.rate("advisability", col) == doctest::Approx(100.0 * c.adv / sub).epsilon(1e-3));
    }
    for (const auto *t : {&top, &req}) {
      double sum = 0;
      for (const auto &l : table_labels(t->layer)) sum += t->rate(l, col);
      CHECK(sum >= 99.7);
      CHECK(sum <= 100.3);
    }
  }
}

TEST_CASE("single annotation is 100 percent; empty layer is an error") {
  AnnotationSet s;
  s.doc_key = "m:GP:1";
  s.processes.push_back(proc(ProcessType::kVerbal));
  const auto t = frequency_table({s}, TableLayer::kProcess, false);
  CHECK(t.rate("verbal", {"m", GenreId::kGP}) == 100.0);
  CHECK(t.rate("material", {"m", GenreId::kGP}) == 0.0);
  CHECK(code_of([&] { frequency_table({s}, TableLayer::kTheme, false); }) ==
        ErrorCode::kEmptyLayer);
  CHECK(code_of([&] { frequency_table({s}, TableLayer::kProcess, true); }) ==
        ErrorCode::kEmptyLayer);
}

TEST_CASE("validated-only counts accepted and relabeled under their effective label") {
  AnnotationSet s;
  s.doc_key = "m:Care:1";
  s.processes = {proc(ProcessType::kMaterial, ReviewStatus::kAccepted),
                 proc(ProcessType::kMaterial, ReviewStatus::kRelabeled, "mental"),
                 proc(ProcessType::kMaterial, ReviewStatus::kRejected),
                 proc(ProcessType::kVerbal, ReviewStatus::kAuto)};
  const Column c{"m", GenreId::kCare};
  const auto v = frequency_table({s}, TableLayer::kProcess, true);
  CHECK(v.count("material", c) == 1);
  CHECK(v.count("mental", c) == 1);
  CHECK(v.count("verbal", c) == 0);
  CHECK(v.totals.at(c) == 2);
  const auto all = frequency_table({s}, TableLayer::kProcess, false);
  CHECK(all.count("material", c) == 3);
  CHECK(all.totals.at(c) == 4);

  // A modality relabel to a requirement leaf lands in both modality tables.
  AnnotationSet m;
  m.doc_key = "m:Care:2";
  auto a = modal(ModalityType::kLikelihood);
  a.review = {ReviewStatus::kRelabeled, "advisability"};
  m.modalities = {a};
  CHECK(frequency_table({m}, TableLayer::kModality, true).count("requirement", c) == 1);
  CHECK(frequency_table({m}, TableLayer::kModalityRequirement, true).count("advisability", c) == 1);
}

TEST_CASE("interpersonal themes stay out of the textual table") {
  AnnotationSet s;
  s.doc_key = "m:GP:1";
  ThemeAnnotation t1, t2;
  t1.layer = ThemeLayer::kTextual;
  t1.textual_subtype = TextualSubtype::kArguing;
  t2.layer = ThemeLayer::kInterpersonal;
  s.themes = {t1, t2, t2};
  const auto t = frequency_table({s}, TableLayer::kTheme, false);
  CHECK(t.totals.at({"m", GenreId::kGP}) == 1);
  CHECK(t.rate("arguing", {"m", GenreId::kGP}) == 100.0);
  CHECK(interpersonal_theme_counts({s}, false).at({"m", GenreId::kGP}) == 2);
}

TEST_CASE("keyword matching") {
  const Keyword lithium{"lithium", "lithium", false};
  CHECK(count_occurrences("Lithium and LITHIUM and lithium.", lithium) == 3);
  CHECK(count_occurrences("lithium-based (lithium) lithium's", lithium) == 3);
  CHECK(count_occurrences("lithiums paralithium", lithium) == 0);
  CHECK(count_occurrences("", lithium) == 0);
  CHECK(count_occurrences("“lithium”—lithium", lithium) == 2);
  const Keyword cbt{"CBT", "CBT", true};
  CHECK(count_occurrences("CBT, cbt and Cbt; (CBT)", cbt) == 2);
  const Keyword phrase{"in conclusion", "in conclusion", false};
  CHECK(count_occurrences("In conclusion, ... in\nconclusion", phrase) == 2);
  CHECK(count_occurrences("inconclusion", phrase) == 0);

  const auto &lex = builtin_keywords();
  auto find = [&](const std::string &display) {
    return std::find_if(lex.begin(), lex.end(), [&](const Keyword &k) { return k.display == display; });
  };
  REQUIRE(find("prozac (fluoxetine)") != lex.end());
  CHECK(find("prozac (fluoxetine)")->term == "prozac");
  CHECK(find("hamilton (tool)")->term == "hamilton");
  CHECK(find("CBT")->case_sensitive);
  CHECK(find("marijuana") != lex.end());
  CHECK(find("cocaine") != lex.end());
  CHECK_FALSE(find("lithium")->case_sensitive);
}

TEST_CASE("keyword counts agree with a token-scan oracle") {
  std::mt19937_64 rng(17);
  const std::vector<std::string> vocab = {"lithium", "Lithium", "CBT", "cbt", "mania",
                                          "manic",   "the",     "-",   "(",   ")",
                                          ",",       "\n",      "x1",  "LITHIUM"};
  const std::vector<Keyword> lex = {{"lithium", "lithium", false},
                                    {"CBT", "CBT", true},
                                    {"mania", "mania", false}};
  for (int round = 0; round < 200; ++round) {
    std::string text;
    const std::size_t n = rng() % 60;
    for (std::size_t i = 0; i < n; ++i) {
      text += vocab[rng() % vocab.size()];
      if (rng() % 3) text += ' ';
    }
    // Oracle: split on non-alphanumerics and compare tokens.
    std::vector<std::string> tokens;
    std::string cur;
    for (char ch : text + " ") {
      if (std::isalnum(static_cast<unsigned char>(ch))) {
        cur += ch;
      } else if (!cur.empty()) {
        tokens.push_back(cur);
        cur.clear();
      }
    }
    for (const auto &k : lex) {
      std::size_t expected = 0;
      for (const auto &t : tokens) {
        std::string a = t, b = k.term;
        if (!k.case_sensitive) {
          std::transform(a.begin(), a.end(), a.begin(), ::tolower);
          std::transform(b.begin(), b.end(), b.begin(), ::tolower);
        }
        expected += a == b;
      }
      CHECK(count_occurrences(text, k) == expected);
    }
  }
}

TEST_CASE("planted keyword counts and additivity") {
  std::string text;
  for (int i = 0; i < 7; ++i) text += "Started lithium today. ";
  const std::vector<Keyword> lex = {{"lithium", "lithium", false}, {"cocaine", "cocaine", false}};
  const auto counts = keyword_counts({{"stub", text}, {"stub", "No mention."}}, lex);
  REQUIRE(counts.size() == 2);
  CHECK(counts[0] == KeywordCount{"lithium", "stub", 7, 1});
  CHECK(counts[1] == KeywordCount{"cocaine", "stub", 0, 0});

  std::mt19937_64 rng(8);
  for (int round = 0; round < 20; ++round) {
    std::vector<std::string> texts;
    for (int i = 0; i < 10; ++i) {
      std::string t;
      for (int w = 0; w < 30; ++w) t += (rng() % 4 ? "word " : "lithium ");
      texts.push_back(t);
    }
    std::vector<TextDoc> a, b, ab;
    for (int i = 0; i < 10; ++i) {
      (i < 4 ? a : b).push_back({"m", texts[i]});
      ab.push_back({"m", texts[i]});
    }
    const auto ca = keyword_counts(a, lex), cb = keyword_counts(b, lex),
               cab = keyword_counts(ab, lex);
    for (std::size_t i = 0; i < cab.size(); ++i) {
      CHECK(cab[i].count == ca[i].count + cb[i].count);
      CHECK(cab[i].docs == ca[i].docs + cb[i].docs);
      CHECK(cab[i].count >= cab[i].docs);
    }
  }
  CHECK(code_of([] { keyword_counts(std::vector<TextDoc>{}, {}); }) == ErrorCode::kInvalidArgument);
}

TEST_CASE("stratified bias on a planted corpus") {
  TempDir dir("bias");
  const auto grid = testing::small_grid();
  auto store = CorpusStore::open(dir.path(), grid);
  const Keyword marijuana{"marijuana", "marijuana", false};
  // Baseline stories get 3 planted mentions in total, the two comparison
  // ethnicities 9 (the first comparison story carries two).
  std::size_t planted_base = 0, planted_cmp = 0;
  for (StoryId id = 0; id < grid.size(); ++id) {
    const auto p = grid.at(id);
    const bool base = grid.value(p, Dimension::kEthnicity).key == "white-british";
    std::string text = "Routine review.";
    if (base && planted_base < 3) {
      text += " Uses marijuana.";
      ++planted_base;
    } else if (!base && planted_cmp < 9) {
      text += planted_cmp == 0 ? " Marijuana, marijuana." : " Marijuana use noted.";
      planted_cmp += planted_cmp == 0 ? 2 : 1;
    }
    store->put({{"llama", GenreId::kInit, id}, p, text, {}, 1, "t"});
  }
  const auto r = stratified_bias(*store, marijuana, "ethnicity", "white-british",
                                 {"afro-caribbean", "afro-caribbean-first-generation"}, "llama");
  CHECK(r.baseline.count == 3);
  CHECK(r.comparison.count == 9);
  CHECK(r.ratio == 3.0);
  CHECK(r.baseline.population == 4);
  CHECK(r.comparison.population == 8);

  const Keyword absent{"cocaine", "cocaine", false};
  CHECK(stratified_bias(*store, absent, "ethnicity", "white-british", {"afro-caribbean"}, "llama")
            .ratio == 1.0);
  CHECK(stratified_bias(*store, marijuana, "ethnicity", "white-british", {"white-british"}, "llama")
            .ratio == 1.0);
  CHECK(bias_ratio(0, 4) == std::numeric_limits<double>::infinity());
  CHECK(code_of([&] {
          stratified_bias(*store, marijuana, "religion", "x", {"y"}, "llama");
        }) == ErrorCode::kUnknownDimension);
  CHECK(code_of([&] {
          stratified_bias(*store, marijuana, "ethnicity", "martian", {"afro-caribbean"}, "llama");
        }) == ErrorCode::kInvalidArgument);
  CHECK(code_of([&] {
          stratified_bias(*store, marijuana, "ethnicity", "white-british", {"afro-caribbean"},
                          "mistral");
        }) == ErrorCode::kEmptySelection);
}

TEST_CASE("adding a document with the keyword never lowers its stratum count") {
  TempDir dir("mono");
  const auto grid = ParameterGrid::standard();
  auto store = CorpusStore::open(dir.path(), grid);
  const Keyword k{"cannabis", "cannabis", false};
  std::mt19937_64 rng(21);
  // Seed both strata so neither is empty.
  const auto wb = grid.find_value(Dimension::kEthnicity, "white-british").value();
  std::vector<StoryId> ids(grid.size());
  for (StoryId i = 0; i < grid.size(); ++i) ids[i] = i;
  std::shuffle(ids.begin(), ids.end(), rng);
  std::size_t next = 0;
  auto put = [&](StoryId id, const std::string &text) {
    store->put({{"m", GenreId::kRef, id}, grid.at(id), text, {}, 1, "t"});
  };
  for (; next < grid.size(); ++next) {
    if (grid.at(ids[next])[Dimension::kEthnicity] == wb) break;
  }
  put(ids[next++], "none");
  put(ids[next++], "none");  // may be either stratum
  auto measure = [&] {
    return stratified_bias(*store, k, "ethnicity", "white-british",
                           {"afro-caribbean", "afro-caribbean-first-generation"}, "m");
  };
  for (int step = 0; step < 100; ++step) {
    StoryId id;
    do {
      id = ids[next++];
    } while (store->contains({"m", GenreId::kRef, id}));
    const bool base = grid.at(id)[Dimension::kEthnicity] == wb;
    BiasResult before;
    bool have_before = true;
    try {
      before = measure();
    } catch (const Error &) {
      have_before = false;
    }
    std::string text = "Reports";
    const int mentions = 1 + static_cast<int>(rng() % 3);
    for (int i = 0; i < mentions; ++i) text += " cannabis";
    put(id, text);
    const auto after = measure();
    if (have_before) {
      CHECK(after.baseline.count >= before.baseline.count);
      CHECK(after.comparison.count >= before.comparison.count);
      if (base) {
        CHECK(after.baseline.count == before.baseline.count + std::size_t(mentions));
      } else {
        CHECK(after.comparison.count == before.comparison.count + std::size_t(mentions));
      }
    }
  }
}

TEST_CASE("markdown layout and optional sections") {
  AnnotationSet a, b;
  a.doc_key = "llama:Init:1";
  b.doc_key = "llama:Care:1";
  a.processes = {proc(ProcessType::kMaterial), proc(ProcessType::kMental)};
  b.processes = {proc(ProcessType::kRelational)};
  ReportInputs in;
  in.tables.push_back(frequency_table({a, b}, TableLayer::kProcess, false));
  const std::string md = render_markdown(in);
  const auto care = md.find("llama Care N"), init = md.find("llama Init N");
  REQUIRE(care != std::string::npos);
  REQUIRE(init != std::string::npos);
  CHECK(care < init);
  CHECK(md.find("| material | 0 | 0.0 | 1 | 50.0 |") != std::string::npos);
  CHECK(md.find("Stratified audits") == std::string::npos);
  CHECK(md.find("Keyword mentions") == std::string::npos);

  in.keywords = {{"lithium", "llama", 5, 2}, {"CBT", "llama", 9, 3}};
  const std::string with_kw = render_markdown(in);
  CHECK(with_kw.find("| CBT | 9 |") < with_kw.find("| lithium | 5 |"));
}

TEST_CASE("CSV round-trips random tables") {
  std::mt19937_64 rng(99);
  const std::vector<std::string> models = {"llama", "mistral", "m.x-1"};
  for (int round = 0; round < 100; ++round) {
    std::vector<FrequencyTable> tables;
    for (int l = 0; l < 4; ++l) {
      if (rng() % 2) continue;
      const auto layer = static_cast<TableLayer>(l);
      std::map<std::pair<std::string, Column>, std::size_t> counts;
      for (const auto &m : models) {
        for (const auto &g : all_genres()) {
          if (rng() % 3 == 0) continue;
          for (const auto &label : table_labels(layer)) {
            counts[{label, Column{m, g.id}}] = rng() % 4 == 0 ? 0 : rng() % 2000;
          }
        }
      }
      auto t = table_from_counts(layer, counts);
      if (!t.totals.empty()) tables.push_back(std::move(t));
    }
    const std::string csv = render_csv(tables);
    CHECK(parse_csv(csv) == tables);
  }
  CHECK(code_of([] { parse_csv("a,b\n"); }) == ErrorCode::kInvalidArgument);
}
