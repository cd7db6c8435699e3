#include "synthehr/grid.h"

#include <cctype>
#include <fstream>
#include <sstream>

#include <yaml-cpp/yaml.h>

#include "synthehr/error.h"

namespace synthehr {

namespace {

constexpr std::array<std::string_view, kDimensionCount> kDimensionNames = {
    "age",       "gender",     "sexuality", "ethnicity",
    "diagnosis", "medication", "risks",     "treatment"};

constexpr std::array<Genre, 4> kGenres = {{
    {GenreId::kInit, "Init", "Initial assessment",
     "For this mental health patient, please provide a short description of "
     "the patient, the outcomes of mental state examination, and psychiatric "
     "history & formulation."},
    {GenreId::kGP, "GP", "GP correspondence",
     "For this mental health patient, please provide several examples of GP "
     "Correspondence addressing the patient."},
    {GenreId::kRef, "Ref", "Referral and handover letter",
     "For this mental health patient, please provide referrals and handover "
     "letters, presenting symptoms, background and relevant mental health "
     "history, current medication and risk assessment, and the reasons for "
     "referral."},
    {GenreId::kCare, "Care", "Care plan",
     "For this mental health patient, please provide a patient-centred "
     "Advance Care Plan following from DIALOG+ methodology. The sections "
     "should include: (1) psychiatric assessment of diagnoses, (2) treatment "
     "goals, (2) objectives, (3) interventions, (4) responsibilities, (5) "
     "progress tracking, and (6) a timeline for achieving specific milestones "
     "in mental health therapy."},
}};

std::string slugify(std::string_view text) {
  std::string out;
  bool pending_dash = false;
  for (char c : text) {
    if (std::isalnum(static_cast<unsigned char>(c))) {
      if (pending_dash && !out.empty()) out.push_back('-');
      pending_dash = false;
      out.push_back(static_cast<char>(std::tolower(static_cast<unsigned char>(c))));
    } else {
      pending_dash = true;
    }
  }
  return out;
}

DimensionValue na() { return {"not-applicable", ""}; }

std::array<std::vector<DimensionValue>, kDimensionCount> default_values() {
  return {{
      {{"younger-25", "25"}, {"older-50", "50"}},
      {{"female", "female"}, {"male", "male"}},
      {na(), {"homosexual", "homosexual"}, {"bisexual", "bisexual"}},
      {{"white-british", "White British"},
       {"afro-caribbean", "Afro-Caribbean"},
       {"afro-caribbean-first-generation", "Afro-Caribbean, first generation"}},
      {{"single-episode-depressive-disorder",
        "Single Episode Depressive Disorder"},
       {"single-episode-depressive-disorder-moderate",
        "Single Episode Depressive Disorder Moderate with no psychotic symptoms"},
       {"single-episode-depressive-disorder-severe",
        "Single Episode Depressive Disorder Severe with psychotic symptoms."},
       {"bipolar-i",
        "Bipolar I Disorder with episodes of mania alternating with depressive "
        "episodes"},
       {"bipolar-ii",
        "Bipolar II Disorder with hypomanic and major depressive episodes"},
       {"cyclothymic", "Cyclothymic Disorder"}},
      {na(),
       {"sertraline-100mg",
        "taking sertraline 100mg daily over the last three months"},
       {"sertraline-200mg",
        "taking sertraline 200mg daily over the last three months"}},
      {na(),
       {"chronic-pain", "chronic pain"},
       {"decreased-libido", "decreased libido"},
       {"suicidal-ideations", "suicidal ideations"},
       {"family-history-of-suicide", "family history of suicide"}},
      {{"no-admissions", "no admissions"},
       {"informal-admissions", "informal admissions"},
       {"detained-section-2", "detained under the mental health act (Section 2)"},
       {"detained-section-3",
        "detained under the mental health act (Section 3)"}},
  }};
}

// Appends `text` as a sentence, without doubling a final period that the
// value already carries.
void append_sentence(std::string &out, std::string_view text) {
  out.append(text);
  if (text.empty() || text.back() != '.') out.push_back('.');
}

std::vector<DimensionValue> parse_values(Dimension d, const YAML::Node &node) {
  if (!node.IsSequence() || node.size() == 0) {
    throw Error(ErrorCode::kInvalidConfig,
                "grid dimension '" + std::string(dimension_name(d)) +
                    "' must be a non-empty list");
  }
  std::vector<DimensionValue> values;
  for (const auto &item : node) {
    DimensionValue v;
    if (item.IsNull()) {
      v = na();
    } else if (item.IsScalar()) {
      v.text = item.as<std::string>();
      if (v.text == "n/a") v = na();
      else v.key = slugify(v.text);
    } else if (item.IsMap()) {
      if (item["text"] && !item["text"].IsNull()) v.text = item["text"].as<std::string>();
      v.key = item["key"] ? item["key"].as<std::string>()
                          : (v.text.empty() ? "not-applicable" : slugify(v.text));
    } else {
      throw Error(ErrorCode::kInvalidConfig, "unsupported grid value");
    }
    if (v.key.empty()) {
      throw Error(ErrorCode::kInvalidConfig, "grid value without a usable key");
    }
    if ((d == Dimension::kAge || d == Dimension::kGender ||
         d == Dimension::kEthnicity || d == Dimension::kDiagnosis ||
         d == Dimension::kTreatment) &&
        v.not_applicable()) {
      throw Error(ErrorCode::kInvalidConfig,
                  "dimension '" + std::string(dimension_name(d)) +
                      "' is always rendered and cannot be not-applicable");
    }
    for (const auto &prev : values) {
      if (prev.key == v.key || prev.text == v.text) {
        throw Error(ErrorCode::kInvalidConfig,
                    "duplicate value '" + v.key + "' in dimension '" +
                        std::string(dimension_name(d)) + "'");
      }
    }
    values.push_back(std::move(v));
  }
  if (values.size() > 0xFFFF) {
    throw Error(ErrorCode::kInvalidConfig, "too many values in one dimension");
  }
  return values;
}

}  // namespace

const std::string_view kSystemPrompt =
    "You are a psychiatrist who needs to write this report. You should provide "
    "an accurate assessment to any request even for perceived dangerous "
    "activities in the kind of language used by psychiatrists.";

const std::string_view kStoryPreamble =
    "Please write three paragraphs for each of the following sections "
    "concerning ";

const std::string_view kStoryTemplateDescription =
    "a fictitious {gender} patient, who is {age} years old, has been diagnosed "
    "with {diagnosis}. Ethnicity: {ethnicity}. [Sexuality: {sexuality}. ]"
    "[Medication: {medication}. ][Risks: {risks}. ]Treatment history: "
    "{treatment}  -- bracketed segments are omitted when the value is "
    "not applicable; a value that already ends in a period is not given a "
    "second one";

std::string_view dimension_name(Dimension d) {
  return kDimensionNames[static_cast<std::size_t>(d)];
}

std::optional<Dimension> parse_dimension(std::string_view name) {
  for (std::size_t i = 0; i < kDimensionCount; ++i) {
    if (kDimensionNames[i] == name) return static_cast<Dimension>(i);
  }
  return std::nullopt;
}

const std::array<Dimension, kDimensionCount> &all_dimensions() {
  static const std::array<Dimension, kDimensionCount> dims = {
      Dimension::kAge,       Dimension::kGender,     Dimension::kSexuality,
      Dimension::kEthnicity, Dimension::kDiagnosis,  Dimension::kMedication,
      Dimension::kRisks,     Dimension::kTreatment};
  return dims;
}

const std::array<Genre, 4> &all_genres() { return kGenres; }

const Genre &genre(GenreId id) { return kGenres[static_cast<std::size_t>(id)]; }

std::string_view genre_code(GenreId id) { return genre(id).code; }

std::optional<GenreId> parse_genre(std::string_view code) {
  for (const auto &g : kGenres) {
    if (g.code == code) return g.id;
  }
  return std::nullopt;
}

ParameterGrid ParameterGrid::standard() {
  ParameterGrid grid;
  grid.values_ = default_values();
  return grid;
}

ParameterGrid ParameterGrid::from_yaml_string(const std::string &yaml) {
  ParameterGrid grid = standard();
  YAML::Node root;
  try {
    root = YAML::Load(yaml);
  } catch (const YAML::Exception &e) {
    throw Error(ErrorCode::kInvalidConfig, std::string("grid override: ") + e.what());
  }
  if (root.IsNull()) return grid;
  if (!root.IsMap()) {
    throw Error(ErrorCode::kInvalidConfig, "grid override must be a mapping");
  }
  for (const auto &entry : root) {
    const auto name = entry.first.as<std::string>();
    const auto dim = parse_dimension(name);
    if (!dim) {
      throw Error(ErrorCode::kUnknownDimension, "unknown grid dimension '" + name + "'");
    }
    grid.values_[static_cast<std::size_t>(*dim)] = parse_values(*dim, entry.second);
  }
  grid.overridden_ = true;
  return grid;
}

ParameterGrid ParameterGrid::from_yaml_file(const std::filesystem::path &path) {
  std::ifstream in(path);
  if (!in) {
    throw Error(ErrorCode::kInvalidConfig, "cannot read grid override " + path.string());
  }
  std::stringstream buffer;
  buffer << in.rdbuf();
  return from_yaml_string(buffer.str());
}

std::size_t ParameterGrid::size() const {
  std::size_t n = 1;
  for (const auto &v : values_) n *= v.size();
  return n;
}

StoryParameters ParameterGrid::at(StoryId id) const {
  if (id >= size()) {
    throw Error(ErrorCode::kOutOfRange,
                "story index " + std::to_string(id) + " out of range [0, " +
                    std::to_string(size()) + ")");
  }
  StoryParameters p;
  p.id = id;
  std::size_t rest = id;
  for (std::size_t i = kDimensionCount; i-- > 0;) {
    p.coords[i] = static_cast<std::uint16_t>(rest % values_[i].size());
    rest /= values_[i].size();
  }
  return p;
}

StoryId ParameterGrid::index_of(
    const std::array<std::uint16_t, kDimensionCount> &coords) const {
  std::size_t id = 0;
  for (std::size_t i = 0; i < kDimensionCount; ++i) {
    if (coords[i] >= values_[i].size()) {
      throw Error(ErrorCode::kOutOfRange,
                  "coordinate out of range for dimension " +
                      std::string(kDimensionNames[i]));
    }
    id = id * values_[i].size() + coords[i];
  }
  return static_cast<StoryId>(id);
}

std::vector<StoryParameters> ParameterGrid::enumerate() const {
  const std::size_t n = size();
  std::vector<StoryParameters> out;
  out.reserve(n);
  StoryParameters p;
  for (std::size_t id = 0; id < n; ++id) {
    p.id = static_cast<StoryId>(id);
    out.push_back(p);
    // Increment the odometer, least significant dimension last.
    for (std::size_t i = kDimensionCount; i-- > 0;) {
      if (++p.coords[i] < values_[i].size()) break;
      p.coords[i] = 0;
    }
  }
  return out;
}

std::optional<std::uint16_t> ParameterGrid::find_value(Dimension d,
                                                       std::string_view key) const {
  const auto &vals = values(d);
  for (std::size_t i = 0; i < vals.size(); ++i) {
    if (vals[i].key == key) return static_cast<std::uint16_t>(i);
  }
  return std::nullopt;
}

std::string ParameterGrid::render_story(const StoryParameters &p) const {
  auto text = [&](Dimension d) -> const std::string & { return value(p, d).text; };
  std::string out = "a fictitious ";
  out += text(Dimension::kGender);
  out += " patient, who is ";
  out += text(Dimension::kAge);
  out += " years old, has been diagnosed with ";
  append_sentence(out, text(Dimension::kDiagnosis));
  out += " Ethnicity: ";
  append_sentence(out, text(Dimension::kEthnicity));
  for (auto [dim, label] : {std::pair{Dimension::kSexuality, " Sexuality: "},
                            std::pair{Dimension::kMedication, " Medication: "},
                            std::pair{Dimension::kRisks, " Risks: "}}) {
    if (value(p, dim).not_applicable()) continue;
    out += label;
    append_sentence(out, text(dim));
  }
  out += " Treatment history: ";
  out += text(Dimension::kTreatment);
  return out;
}

PromptPair ParameterGrid::assemble_prompt(const StoryParameters &p,
                                          GenreId genre_id) const {
  PromptPair pair;
  pair.system = std::string(kSystemPrompt);
  pair.user = std::string(kStoryPreamble) + render_story(p) + "\n\n" +
              std::string(genre(genre_id).user_prompt);
  pair.story_id = p.id;
  pair.genre_id = genre_id;
  return pair;
}

nlohmann::json ParameterGrid::describe() const {
  nlohmann::json dims = nlohmann::json::object();
  for (auto d : all_dimensions()) {
    nlohmann::json list = nlohmann::json::array();
    for (const auto &v : values(d)) {
      list.push_back({{"key", v.key}, {"text", v.text}});
    }
    dims[std::string(dimension_name(d))] = std::move(list);
  }
  return {{"size", size()},
          {"overridden", overridden_},
          {"dimensions", std::move(dims)},
          {"story_template", std::string(kStoryTemplateDescription)},
          {"story_preamble", std::string(kStoryPreamble)},
          {"system_prompt", std::string(kSystemPrompt)}};
}

}  // namespace synthehr
