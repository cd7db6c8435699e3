#ifndef SYNTHEHR_GRID_H_
#define SYNTHEHR_GRID_H_

#include <array>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "json.hpp"

namespace synthehr {

// The eight variation dimensions of a patient story, in listing order. The
// first dimension is the most significant digit of a story id.
enum class Dimension : std::uint8_t {
  kAge,
  kGender,
  kSexuality,
  kEthnicity,
  kDiagnosis,
  kMedication,
  kRisks,
  kTreatment,
};

inline constexpr std::size_t kDimensionCount = 8;

std::string_view dimension_name(Dimension d);
std::optional<Dimension> parse_dimension(std::string_view name);
const std::array<Dimension, kDimensionCount> &all_dimensions();

// One value of a dimension. `key` is the stable machine name used in filters
// and records; `text` is the phrase spliced into the story. An empty text
// marks the not-applicable value, which is omitted from rendered stories.
struct DimensionValue {
  std::string key;
  std::string text;

  bool not_applicable() const { return text.empty(); }
  bool operator==(const DimensionValue &) const = default;
};

// Mixed-radix index of a point in the grid.
using StoryId = std::uint32_t;

struct StoryParameters {
  StoryId id = 0;
  std::array<std::uint16_t, kDimensionCount> coords{};

  std::uint16_t operator[](Dimension d) const {
    return coords[static_cast<std::size_t>(d)];
  }
  bool operator==(const StoryParameters &) const = default;
};

enum class GenreId : std::uint8_t { kInit, kGP, kRef, kCare };

struct Genre {
  GenreId id;
  std::string_view code;          // "Init", "GP", "Ref", "Care"
  std::string_view display_name;
  std::string_view user_prompt;
};

const std::array<Genre, 4> &all_genres();
const Genre &genre(GenreId id);
std::string_view genre_code(GenreId id);
std::optional<GenreId> parse_genre(std::string_view code);

// Shared by every request, regardless of story or genre.
extern const std::string_view kSystemPrompt;
// Lead-in placed before the rendered story in every user prompt.
extern const std::string_view kStoryPreamble;

struct PromptPair {
  std::string system;
  std::string user;
  StoryId story_id = 0;
  GenreId genre_id = GenreId::kInit;
};

// The variation grid: value lists for each dimension. The default grid holds
// the standard value lists (12,960 stories); a YAML override may replace any
// subset of dimensions.
class ParameterGrid {
 public:
  static ParameterGrid standard();

  // Each top-level key names a dimension and maps to a list of values. A
  // value is a scalar (its text; null means not applicable) or a map with
  // `key` and `text`. Dimensions that are absent keep their defaults.
  static ParameterGrid from_yaml_string(const std::string &yaml);
  static ParameterGrid from_yaml_file(const std::filesystem::path &path);

  const std::vector<DimensionValue> &values(Dimension d) const {
    return values_[static_cast<std::size_t>(d)];
  }
  std::size_t cardinality(Dimension d) const { return values(d).size(); }
  std::size_t size() const;

  // Throws kOutOfRange when id >= size().
  StoryParameters at(StoryId id) const;
  StoryId index_of(const std::array<std::uint16_t, kDimensionCount> &coords) const;
  std::vector<StoryParameters> enumerate() const;

  const DimensionValue &value(const StoryParameters &p, Dimension d) const {
    return values(d)[p[d]];
  }
  // Index of the value with the given key, if any.
  std::optional<std::uint16_t> find_value(Dimension d, std::string_view key) const;

  std::string render_story(const StoryParameters &p) const;
  PromptPair assemble_prompt(const StoryParameters &p, GenreId genre) const;

  bool overridden() const { return overridden_; }

  // Value lists plus the story template, for the corpus manifest.
  nlohmann::json describe() const;

 private:
  std::array<std::vector<DimensionValue>, kDimensionCount> values_;
  bool overridden_ = false;
};

// Human-readable form of the rendering rule, recorded in manifests.
extern const std::string_view kStoryTemplateDescription;

}  // namespace synthehr

#endif  // SYNTHEHR_GRID_H_
